"""Synthetic intent datasets: base generation, paraphrase augmentation, and
optional menu synthesis, all through a configured provider.

Every record is labeled with the terminal path it targets, so downstream
routing can be scored by exact match. Augmented records inherit their base
record's label; linguistic noise (interjections, fillers, small grammar
slips) is requested from the generator model through the prompt, never
patched in afterwards.
"""

from __future__ import annotations

import json
import logging
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .menu import DtmfPath, MenuFormatError, MenuTree, TerminalPath, parse_menu, validate_menu
from .provider import Provider

log = logging.getLogger(__name__)


class DatagenError(Exception):
    """Generation could not produce a usable result."""


@dataclass(frozen=True)
class IntentRecord:
    id: str
    text: str
    ground_truth: DtmfPath
    origin: str  # "base" | "augmented"
    base_id: str  # the source record's id; self for base records
    variant_index: int  # 0 for base, 1..variants for paraphrases


@dataclass
class Dataset:
    menu_name: str
    records: list[IntentRecord]
    per_node_base: int
    variants_per_base: int


@dataclass(frozen=True)
class NoiseProfile:
    """Chances of asking the generator for each noise kind, per paraphrase.

    The defaults are this artifact's own choice; nothing pins them beyond
    "controlled noise".
    """

    interjection_prob: float = 0.3
    filler_prob: float = 0.3
    grammar_error_prob: float = 0.2


DEFAULT_NOISE = NoiseProfile()

_LISTED_LINE = re.compile(r"^\s*(?:\d+[.)]\s+|[-*]\s+)(.*\S)\s*$")


def _load_template(name: str) -> str:
    return resources.files("ivroute.data").joinpath(name).read_text(encoding="utf-8").rstrip("\n")


def _dedup_key(text: str) -> str:
    return " ".join(text.split()).lower()


def parse_listed_lines(text: str) -> list[str]:
    """Pull the items out of a numbered or bulleted list reply; falls back to
    plain non-empty lines when the model skipped the numbering."""
    items = [m.group(1) for line in text.splitlines() if (m := _LISTED_LINE.match(line))]
    if items:
        return items
    return [line.strip() for line in text.splitlines() if line.strip()]


# --- base intents -------------------------------------------------------------

def generate_base_intents(
    paths: Sequence[TerminalPath],
    provider: Provider,
    per_node: int = 10,
    extra_call_budget: int = 3,
) -> list[IntentRecord]:
    """per_node distinct complaints for every terminal path.

    One provider call per path asks for the whole batch as a numbered list;
    duplicates (case-insensitive, whitespace-collapsed) are dropped and the
    call is repeated until the node is filled or the extra-call budget runs
    out. Output is ordered by path document order, then generation index.
    """
    if per_node < 1:
        raise ValueError("per_node must be at least 1")
    if not paths:
        raise ValueError("no terminal paths to generate for")

    template = _load_template("template_base_intents.txt")

    def prompt_for(tp: TerminalPath) -> str:
        service = "self-service" if tp.service_type.value == "self_service" else "agent handoff"
        return (
            template.replace("{{COUNT}}", str(per_node))
            .replace("{{BREADCRUMB}}", tp.breadcrumb_text())
            .replace("{{SERVICE_TYPE}}", service)
        )

    def generate_node(tp: TerminalPath) -> list[str]:
        texts: list[str] = []
        seen: set[str] = set()
        prompt = prompt_for(tp)
        for _ in range(1 + extra_call_budget):
            reply = provider.complete(prompt).raw_text
            for item in parse_listed_lines(reply):
                key = _dedup_key(item)
                if key and key not in seen:
                    seen.add(key)
                    texts.append(item)
                if len(texts) == per_node:
                    return texts
        raise DatagenError(
            f"path {tp.path.canonical()}: only {len(texts)} distinct text(s) "
            f"after {1 + extra_call_budget} call(s), needed {per_node}"
        )

    with ThreadPoolExecutor(max_workers=provider.config.max_in_flight) as pool:
        per_path_texts = list(pool.map(generate_node, paths))

    records = []
    for tp, texts in zip(paths, per_path_texts):
        for i, text in enumerate(texts):
            canonical = tp.path.canonical()
            records.append(
                IntentRecord(
                    id=f"{canonical}:b{i:02d}",
                    text=text,
                    ground_truth=tp.path,
                    origin="base",
                    base_id=f"{canonical}:b{i:02d}",
                    variant_index=0,
                )
            )
    return records


# --- augmentation -------------------------------------------------------------

_NOISE_LINES = (
    ('interjection_prob', '- Start paraphrase {k} with a natural interjection (for example "ugh", "hey", "honestly").'),
    ('filler_prob', '- Work a casual filler phrase (for example "you know", "I mean", "like") into paraphrase {k}.'),
    ('grammar_error_prob', '- Let paraphrase {k} carry one minor grammatical slip, the kind a hurried caller makes.'),
)


def _noise_directives(rng: random.Random, noise: NoiseProfile, variants: int) -> str:
    lines = []
    for k in range(1, variants + 1):
        for attr, template in _NOISE_LINES:
            if rng.random() < getattr(noise, attr):
                lines.append(template.format(k=k))
    return "\n".join(lines)


def augment_intents(
    base: Sequence[IntentRecord],
    provider: Provider,
    variants: int = 3,
    noise: NoiseProfile = DEFAULT_NOISE,
    seed: int = 0,
) -> list[IntentRecord]:
    """``variants`` paraphrases per base record, labels untouched.

    Noise directives are sampled per paraphrase up front (seeded, so runs
    are reproducible) and passed to the generator inside the prompt. A
    paraphrase that comes back identical to its base text is regenerated
    once, then accepted with a warning. Output groups the variants of each
    base record together, in base order.
    """
    if variants < 0:
        raise ValueError("variants must not be negative")
    for record in base:
        if record.origin != "base":
            raise ValueError(f"record {record.id} is not a base record")
    if variants == 0 or not base:
        return []

    template = _load_template("template_paraphrase.txt")
    rng = random.Random(seed)
    prompts = []
    for record in base:
        directives = _noise_directives(rng, noise, variants)
        prompt = template.replace("{{COUNT}}", str(variants)).replace("{{TEXT}}", record.text)
        if directives:
            prompt = prompt.replace("{{NOISE_DIRECTIVES}}", directives)
        else:
            prompt = prompt.replace("\n{{NOISE_DIRECTIVES}}", "")
        prompts.append(prompt)

    def paraphrase_record(index: int) -> list[str]:
        record = base[index]
        reply = provider.complete(prompts[index]).raw_text
        texts = parse_listed_lines(reply)
        if len(texts) < variants:
            reply = provider.complete(prompts[index]).raw_text
            texts = parse_listed_lines(reply)
        if len(texts) < variants:
            raise DatagenError(
                f"record {record.id}: got {len(texts)} paraphrase(s), needed {variants}"
            )
        texts = texts[:variants]
        base_key = _dedup_key(record.text)
        for k, text in enumerate(texts):
            if _dedup_key(text) == base_key:
                retry_prompt = template.replace("{{COUNT}}", "1").replace("{{TEXT}}", record.text)
                retry_prompt = retry_prompt.replace("\n{{NOISE_DIRECTIVES}}", "")
                retry = parse_listed_lines(provider.complete(retry_prompt).raw_text)
                if retry and _dedup_key(retry[0]) != base_key:
                    texts[k] = retry[0]
                else:
                    log.warning(
                        "record %s: paraphrase %d still identical to its base text, keeping it",
                        record.id, k + 1,
                    )
        return texts

    with ThreadPoolExecutor(max_workers=provider.config.max_in_flight) as pool:
        per_record_texts = list(pool.map(paraphrase_record, range(len(base))))

    augmented = []
    for record, texts in zip(base, per_record_texts):
        for k, text in enumerate(texts, start=1):
            augmented.append(
                IntentRecord(
                    id=f"{record.id}:v{k}",
                    text=text,
                    ground_truth=record.ground_truth,
                    origin="augmented",
                    base_id=record.id,
                    variant_index=k,
                )
            )
    return augmented


def build_dataset(
    tree: MenuTree,
    paths: Sequence[TerminalPath],
    provider: Provider,
    per_node: int = 10,
    variants: int = 3,
    noise: NoiseProfile = DEFAULT_NOISE,
    seed: int = 0,
) -> Dataset:
    """Both generation stages back to back: all base records, then all
    augmented records."""
    base = generate_base_intents(paths, provider, per_node)
    augmented = augment_intents(base, provider, variants, noise, seed)
    return Dataset(
        menu_name=tree.name,
        records=base + augmented,
        per_node_base=per_node,
        variants_per_base=variants,
    )


# --- menu synthesis -----------------------------------------------------------

_FENCE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```\s*$", re.DOTALL)


def _strip_code_fence(text: str) -> str:
    match = _FENCE.match(text.strip())
    return match.group(1) if match else text


def generate_menu(business_brief: str, provider: Provider) -> dict:
    """Ask the provider for a whole menu document and vet it.

    Output that is not JSON gets one reformat retry; a document that parses
    but breaks the menu schema or its invariants is rejected outright with
    the diagnostics, to be fixed by hand rather than by re-rolling.
    """
    if not business_brief.strip():
        raise ValueError("business brief is empty")
    prompt = _load_template("template_menu_gen.txt").replace("{{BRIEF}}", business_brief)
    reply = provider.complete(prompt).raw_text
    try:
        document = json.loads(_strip_code_fence(reply))
    except json.JSONDecodeError as first_error:
        retry_prompt = (
            f"Your previous output was not valid JSON ({first_error}). "
            "Resend the complete corrected JSON document, and nothing else.\n\n"
            f"Previous output:\n{reply}"
        )
        reply = provider.complete(retry_prompt).raw_text
        try:
            document = json.loads(_strip_code_fence(reply))
        except json.JSONDecodeError as exc:
            raise DatagenError(f"model output is not JSON after a reformat retry: {exc}") from exc

    try:
        tree = parse_menu(document)
    except MenuFormatError as exc:
        raise DatagenError(f"generated menu rejected: {exc}") from exc
    problems = validate_menu(tree)
    if problems:
        raise DatagenError("generated menu rejected: " + "; ".join(problems))
    return document


# --- validation and files -------------------------------------------------------

def validate_dataset(ds: Dataset, paths: Sequence[TerminalPath]) -> list[str]:
    """Empty iff the dataset invariants hold and every label is a real path."""
    violations: list[str] = []
    known = {tp.path.canonical() for tp in paths}

    ids_seen: set[str] = set()
    base_by_id: dict[str, IntentRecord] = {}
    for record in ds.records:
        if record.id in ids_seen:
            violations.append(f"record {record.id}: duplicate id")
        ids_seen.add(record.id)
        if record.origin == "base":
            base_by_id[record.id] = record

    base_count = 0
    for record in ds.records:
        truth = record.ground_truth.canonical()
        if truth not in known:
            violations.append(f"record {record.id}: ground truth {truth} is not a terminal path")
        if record.origin == "base":
            base_count += 1
            if record.base_id != record.id:
                violations.append(f"record {record.id}: base record must be its own base_id")
            if record.variant_index != 0:
                violations.append(f"record {record.id}: base record with variant_index != 0")
        elif record.origin == "augmented":
            source = base_by_id.get(record.base_id)
            if source is None:
                violations.append(f"record {record.id}: base_id {record.base_id} not in dataset")
            elif source.ground_truth != record.ground_truth:
                violations.append(
                    f"record {record.id}: ground truth differs from base record {source.id}"
                )
            if not 1 <= record.variant_index <= ds.variants_per_base:
                violations.append(
                    f"record {record.id}: variant_index {record.variant_index} out of range"
                )
        else:
            violations.append(f"record {record.id}: unknown origin {record.origin!r}")

    expected_base = ds.per_node_base * len(paths)
    if base_count != expected_base:
        violations.append(
            f"base record count {base_count} != per_node_base x paths = {expected_base}"
        )
    expected_total = base_count * (1 + ds.variants_per_base)
    if len(ds.records) != expected_total:
        violations.append(
            f"record count {len(ds.records)} != base x (1 + variants) = {expected_total}"
        )
    return violations


def record_to_json(record: IntentRecord) -> dict:
    return {
        "id": record.id,
        "text": record.text,
        "ground_truth": record.ground_truth.canonical(),
        "origin": record.origin,
        "base_id": record.base_id,
        "variant_index": record.variant_index,
    }


def record_from_json(data: dict) -> IntentRecord:
    return IntentRecord(
        id=data["id"],
        text=data["text"],
        ground_truth=DtmfPath.parse(data["ground_truth"]),
        origin=data["origin"],
        base_id=data["base_id"],
        variant_index=int(data["variant_index"]),
    )


def dataset_to_jsonl(ds: Dataset) -> str:
    return "".join(
        json.dumps(record_to_json(r), ensure_ascii=False) + "\n" for r in ds.records
    )


def save_dataset(ds: Dataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_jsonl(ds), encoding="utf-8")


def load_dataset(path: str | Path, menu_name: str = "") -> Dataset:
    """Read a JSONL dataset; per-node and variant counts are re-derived from
    the records (validate_dataset flags files where they do not add up)."""
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(record_from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DatagenError(f"{path}:{line_no}: bad record: {exc}") from exc
    return dataset_from_records(records, menu_name)


def dataset_from_records(records: Iterable[IntentRecord], menu_name: str = "") -> Dataset:
    records = list(records)
    base = [r for r in records if r.origin == "base"]
    distinct_paths = {r.ground_truth.canonical() for r in base}
    per_node = len(base) // len(distinct_paths) if distinct_paths else 0
    variants = (len(records) - len(base)) // len(base) if base else 0
    return Dataset(
        menu_name=menu_name,
        records=records,
        per_node_base=per_node,
        variants_per_base=variants,
    )
