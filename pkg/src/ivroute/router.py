"""Routing: turn one intent plus one rendered context into one prediction.

Model output is held to a strict grammar: after a small, fixed normalization
pipeline the whole reply must be ``digit ("-" digit)*`` or it is scored as
INVALID. Content is never re-requested for being wrong; only the provider's
transport retries apply.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .datagen import Dataset, IntentRecord, dataset_to_jsonl, validate_dataset
from .menu import (
    DtmfPath,
    MenuTree,
    flatten,
    render_descriptive,
    render_flattened,
    tree_to_document,
    validate_menu,
)
from .prompts import PromptText, RoutingCondition, build_prompt
from .provider import Provider, ProviderError

log = logging.getLogger(__name__)

INVALID = "INVALID"

# ASCII digits only; \d would admit unicode digits like fullwidth 3
_PATH_GRAMMAR = re.compile(r"[0-9](?:-[0-9])*\Z")
# a path token not butted against other digits/hyphens, for lenient salvage
_PATH_TOKEN = re.compile(r"(?<![0-9-])[0-9](?:-[0-9])*(?![0-9-])")

_DASH_TRANSLATION = str.maketrans({
    "‐": "-",  # hyphen
    "‑": "-",  # non-breaking hyphen
    "‒": "-",  # figure dash
    "–": "-",  # en dash
    "—": "-",  # em dash
    "―": "-",  # horizontal bar
    "−": "-",  # minus sign
})

_QUOTE_PAIRS = (("'", "'"), ('"', '"'), ("`", "`"))


@dataclass(frozen=True)
class ParsedResponse:
    raw_text: str
    path: DtmfPath | None  # None means INVALID
    normalization_applied: tuple[str, ...]

    @property
    def is_valid(self) -> bool:
        return self.path is not None


@dataclass(frozen=True)
class RoutingResult:
    intent_id: str
    condition: RoutingCondition
    raw_response: str
    parsed: ParsedResponse
    predicted: str  # canonical path or "INVALID"
    ground_truth: str
    correct: bool
    known_path: bool
    latency: float
    model_name: str


def parse_dtmf_response(raw: str, lenient: bool = False) -> ParsedResponse:
    """Normalize a model reply and match it against the path grammar.

    Pipeline, applied once each in order: trim whitespace, strip one layer
    of surrounding quotes or backticks, strip one trailing period, map
    unicode dashes to ASCII hyphens. Rules that changed the text are
    recorded. In lenient mode a reply that still fails the grammar is
    salvaged iff it contains exactly one path-shaped token.
    """
    applied: list[str] = []
    text = raw

    trimmed = text.strip()
    if trimmed != text:
        applied.append("trim")
    text = trimmed

    if len(text) >= 2:
        for open_q, close_q in _QUOTE_PAIRS:
            if text.startswith(open_q) and text.endswith(close_q):
                text = text[1:-1]
                applied.append("unquote")
                break

    if text.endswith("."):
        text = text[:-1]
        applied.append("strip_trailing_period")

    mapped = text.translate(_DASH_TRANSLATION)
    if mapped != text:
        applied.append("map_unicode_dashes")
    text = mapped

    if _PATH_GRAMMAR.match(text):
        return ParsedResponse(raw, DtmfPath.parse(text), tuple(applied))

    if lenient:
        tokens = _PATH_TOKEN.findall(text)
        if len(tokens) == 1:
            applied.append("lenient_extract")
            return ParsedResponse(raw, DtmfPath.parse(tokens[0]), tuple(applied))

    return ParsedResponse(raw, None, tuple(applied))


def route_one(
    intent: IntentRecord,
    condition: RoutingCondition,
    context: str,
    provider: Provider,
    known_paths: frozenset[str] = frozenset(),
    lenient: bool = False,
) -> RoutingResult:
    """One prompt, one completion, one verdict for a single intent."""
    prompt: PromptText = build_prompt(condition, context, intent.text)
    try:
        completion = provider.complete(prompt)
    except ProviderError as exc:
        raise ProviderError(f"intent {intent.id}: {exc}") from exc
    parsed = parse_dtmf_response(completion.raw_text, lenient=lenient)
    truth = intent.ground_truth.canonical()
    if parsed.path is not None:
        predicted = parsed.path.canonical()
        correct = predicted == truth
        known = predicted in known_paths
    else:
        predicted = INVALID
        correct = False
        known = False
    return RoutingResult(
        intent_id=intent.id,
        condition=condition,
        raw_response=completion.raw_text,
        parsed=parsed,
        predicted=predicted,
        ground_truth=truth,
        correct=correct,
        known_path=known,
        latency=completion.latency,
        model_name=completion.model_name,
    )


class RoutingAborted(ProviderError):
    """Provider failures went over budget; completed results are attached."""

    def __init__(self, message: str, completed: list[RoutingResult], failures: list[tuple[str, str]]):
        super().__init__(message)
        self.completed = completed
        self.failures = failures


@dataclass
class RoutingRun:
    results: list[RoutingResult]
    manifest: dict


def select_records(ds: Dataset, record_filter: str) -> list[IntentRecord]:
    if record_filter == "base_only":
        return [r for r in ds.records if r.origin == "base"]
    if record_filter == "all":
        return list(ds.records)
    raise ValueError(f"unknown dataset filter {record_filter!r}")


def render_context(tree: MenuTree, condition: RoutingCondition) -> str:
    if condition is RoutingCondition.DESCRIPTIVE_MENU:
        return render_descriptive(tree)
    return render_flattened(flatten(tree))


def route_all(
    ds: Dataset,
    condition: RoutingCondition,
    tree: MenuTree,
    provider: Provider,
    record_filter: str = "all",
    lenient: bool = False,
    error_budget: float = 0.01,
    extra_manifest: dict | None = None,
) -> RoutingRun:
    """Route every selected record and return results in dataset order.

    The context is rendered once and reused. Work fans out to a thread pool
    sized by the provider's max_in_flight; completion order does not affect
    output order. Provider failures are tolerated up to ``error_budget``
    (a fraction of the selected calls); one failure past the budget aborts
    the run with the completed results attached.
    """
    menu_problems = validate_menu(tree)
    if menu_problems:
        raise ValueError("menu is not valid: " + "; ".join(menu_problems))
    terminal = flatten(tree)
    data_problems = validate_dataset(ds, terminal)
    if data_problems:
        raise ValueError("dataset is not valid: " + "; ".join(data_problems))

    records = select_records(ds, record_filter)
    context = render_context(tree, condition)
    known = frozenset(tp.path.canonical() for tp in terminal)
    allowed_failures = math.floor(error_budget * len(records))

    slots: list[RoutingResult | None] = [None] * len(records)
    failures: list[tuple[str, str]] = []

    def work(index: int) -> RoutingResult:
        record = records[index]
        return route_one(record, condition, context, provider, known, lenient)

    with ThreadPoolExecutor(max_workers=provider.config.max_in_flight) as pool:
        index_of = {pool.submit(work, i): i for i in range(len(records))}
        pending = set(index_of)
        try:
            while pending:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for future in done:
                    index = index_of[future]
                    try:
                        slots[index] = future.result()
                    except ProviderError as exc:
                        failures.append((records[index].id, str(exc)))
                        if len(failures) > allowed_failures:
                            raise RoutingAborted(
                                f"{len(failures)} provider failure(s) exceeded the "
                                f"budget of {allowed_failures}",
                                completed=[r for r in slots if r is not None],
                                failures=failures,
                            ) from exc
        finally:
            for future in pending:
                future.cancel()

    results = [r for r in slots if r is not None]
    manifest = build_manifest(
        ds, tree, condition, record_filter, provider, lenient, len(results), failures
    )
    if extra_manifest:
        manifest.update(extra_manifest)
    return RoutingRun(results=results, manifest=manifest)


# --- manifest and results files ----------------------------------------------

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_manifest(
    ds: Dataset,
    tree: MenuTree,
    condition: RoutingCondition,
    record_filter: str,
    provider: Provider,
    lenient: bool,
    n_results: int,
    failures: list[tuple[str, str]],
) -> dict:
    menu_hash = _sha256(
        json.dumps(tree_to_document(tree), sort_keys=True, ensure_ascii=False).encode("utf-8")
    )
    dataset_hash = _sha256(dataset_to_jsonl(ds).encode("utf-8"))
    core = {
        "menu_name": tree.name,
        "menu_hash": menu_hash,
        "dataset_hash": dataset_hash,
        "condition": condition.value,
        "dataset_filter": record_filter,
        "model_name": provider.config.model_name,
        "parse_mode": "lenient" if lenient else "strict",
    }
    run_id = _sha256(json.dumps(core, sort_keys=True).encode("utf-8"))[:12]
    manifest = dict(core)
    manifest["run_id"] = run_id
    manifest["n_results"] = n_results
    manifest["failures"] = [{"intent_id": i, "error": e} for i, e in failures]
    manifest["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return manifest


def result_to_record(result: RoutingResult) -> dict:
    return {
        "intent_id": result.intent_id,
        "condition": result.condition.value,
        "raw_response": result.raw_response,
        "normalization_applied": list(result.parsed.normalization_applied),
        "predicted": result.predicted,
        "ground_truth": result.ground_truth,
        "correct": result.correct,
        "known_path": result.known_path,
        "latency": result.latency,
        "model_name": result.model_name,
    }


def result_from_record(record: dict) -> RoutingResult:
    predicted = record["predicted"]
    path = None if predicted == INVALID else DtmfPath.parse(predicted)
    parsed = ParsedResponse(
        raw_text=record["raw_response"],
        path=path,
        normalization_applied=tuple(record.get("normalization_applied", ())),
    )
    return RoutingResult(
        intent_id=record["intent_id"],
        condition=RoutingCondition(record["condition"]),
        raw_response=record["raw_response"],
        parsed=parsed,
        predicted=predicted,
        ground_truth=record["ground_truth"],
        correct=record["correct"],
        known_path=record["known_path"],
        latency=record["latency"],
        model_name=record["model_name"],
    )


def save_results(results: Iterable[RoutingResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for result in results:
            handle.write(json.dumps(result_to_record(result), ensure_ascii=False) + "\n")


def load_results(path: str | Path) -> list[RoutingResult]:
    results = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                results.append(result_from_record(json.loads(line)))
    return results
