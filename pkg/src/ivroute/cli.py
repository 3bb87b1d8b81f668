"""Command-line front end.

Subcommands cover the whole pipeline: validate-menu, flatten, gen-intents,
route, eval, demo, check-roles. Settings layer as CLI flags > config file >
environment > built-in defaults. Exit codes: 0 ok, 1 failed work, 2 usage
or missing input file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .datagen import (
    DatagenError,
    IntentRecord,
    NoiseProfile,
    build_dataset,
    load_dataset,
    save_dataset,
    validate_dataset,
)
from .evaluation import accuracy, build_report, emit_report, format_percent
from .menu import (
    MenuFormatError,
    MenuTree,
    flatten,
    parse_menu,
    render_flattened,
    render_paths_tsv,
    validate_menu,
)
from .prompts import RoutingCondition
from .provider import (
    DEFAULT_API_KEY_ENV,
    HttpProvider,
    KeywordProvider,
    OracleProvider,
    PIPELINE_STAGES,
    Provider,
    ProviderConfig,
    ProviderError,
    ScriptedProvider,
    check_role_separation,
)
from .router import (
    RoutingAborted,
    route_all,
    route_one,
    render_context,
    load_results,
    save_results,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_CONDITIONS = {
    "descriptive": RoutingCondition.DESCRIPTIVE_MENU,
    "descriptive_menu": RoutingCondition.DESCRIPTIVE_MENU,
    "flattened": RoutingCondition.FLATTENED_PATHS,
    "flattened_paths": RoutingCondition.FLATTENED_PATHS,
}

_PROVIDER_KINDS = ("http", "oracle", "keyword", "scripted")


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_config_file(path: str | None) -> dict | int:
    """Parsed config mapping, or an exit code on failure."""
    if not path:
        return {}
    file = Path(path)
    if not file.is_file():
        return _fail(f"no such config file: {file}", EXIT_USAGE)
    try:
        data = json.loads(file.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"cannot read config file {file}: {exc}", EXIT_USAGE)
    if not isinstance(data, dict):
        return _fail(f"config file {file} must hold a JSON object", EXIT_USAGE)
    return data


def _read_menu(path_str: str) -> MenuTree | int:
    """Parsed tree, or an exit code: 2 when the file is absent, 1 when the
    content does not parse."""
    path = Path(path_str)
    if not path.is_file():
        return _fail(f"no such menu file: {path}", EXIT_USAGE)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(f"cannot read {path}: {exc}", EXIT_USAGE)
    try:
        return parse_menu(text)
    except MenuFormatError as exc:
        return _fail(f"invalid menu: {exc}", EXIT_FAILURE)


def _stage_settings(config: dict, stage: str) -> dict:
    providers = config.get("providers")
    if not isinstance(providers, dict):
        return {}
    settings = providers.get(stage)
    return settings if isinstance(settings, dict) else {}


def _resolve_provider_config(args: argparse.Namespace, config: dict, stage: str) -> ProviderConfig:
    """Layer CLI flags over the stage's config-file block over defaults."""
    stage_cfg = _stage_settings(config, stage)

    def pick(cli_value, key, default):
        if cli_value is not None:
            return cli_value
        if key in stage_cfg and stage_cfg[key] is not None:
            return stage_cfg[key]
        return default

    kind = pick(getattr(args, "provider", None), "kind", "http")
    default_model = "mock" if kind == "http" else f"{kind}-mock"
    return ProviderConfig(
        endpoint_url=pick(getattr(args, "endpoint", None), "endpoint_url", ""),
        model_name=pick(getattr(args, "model", None), "model_name", default_model),
        api_key_source=pick(getattr(args, "api_key_env", None), "api_key_env", DEFAULT_API_KEY_ENV),
        temperature=pick(getattr(args, "temperature", None), "temperature", None),
        max_retries=pick(getattr(args, "max_retries", None), "max_retries", 3),
        request_timeout=pick(getattr(args, "timeout", None), "request_timeout", 60.0),
        max_in_flight=pick(getattr(args, "max_in_flight", None), "max_in_flight", 4),
        requests_per_second=pick(getattr(args, "rps", None), "requests_per_second", None),
    )


def _provider_kind(args: argparse.Namespace, config: dict, stage: str) -> str:
    stage_cfg = _stage_settings(config, stage)
    kind = getattr(args, "provider", None) or stage_cfg.get("kind") or "http"
    if kind not in _PROVIDER_KINDS:
        raise ValueError(f"unknown provider kind {kind!r}")
    return kind


def _load_script(args: argparse.Namespace, config: dict, stage: str) -> list[str] | int:
    stage_cfg = _stage_settings(config, stage)
    script_path = getattr(args, "script", None) or stage_cfg.get("script")
    if not script_path:
        return _fail("scripted provider needs --script <json array file>", EXIT_USAGE)
    file = Path(script_path)
    if not file.is_file():
        return _fail(f"no such script file: {file}", EXIT_USAGE)
    try:
        replies = json.loads(file.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(f"cannot read script file {file}: {exc}", EXIT_USAGE)
    if not isinstance(replies, list) or not all(isinstance(r, str) for r in replies):
        return _fail(f"script file {file} must hold a JSON array of strings", EXIT_USAGE)
    return replies


def _build_provider(
    kind: str,
    cfg: ProviderConfig,
    args: argparse.Namespace,
    config: dict,
    stage: str,
    dataset=None,
    paths=None,
) -> Provider | int:
    if kind == "http":
        if not cfg.endpoint_url:
            return _fail("http provider needs --endpoint (or an endpoint_url in the config file)", EXIT_USAGE)
        return HttpProvider(cfg)
    if kind == "oracle":
        if dataset is None:
            return _fail("oracle provider needs a dataset to take its answers from", EXIT_USAGE)
        return OracleProvider.for_dataset(dataset, config=cfg)
    if kind == "keyword":
        if paths is None:
            return _fail("keyword provider needs a menu", EXIT_USAGE)
        return KeywordProvider(paths, config=cfg)
    if kind == "scripted":
        replies = _load_script(args, config, stage)
        if isinstance(replies, int):
            return replies
        return ScriptedProvider(replies, config=cfg)
    return _fail(f"unknown provider kind {kind!r}", EXIT_USAGE)


def _out_dir(args: argparse.Namespace, default: str = ".") -> Path:
    return Path(args.out) if getattr(args, "out", None) else Path(default)


# --- subcommands ----------------------------------------------------------------

def cmd_validate_menu(args: argparse.Namespace) -> int:
    tree = _read_menu(args.menu)
    if isinstance(tree, int):
        return tree
    problems = validate_menu(tree)
    if problems:
        for problem in problems:
            print(f"violation: {problem}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"OK: {tree.name}: {len(flatten(tree))} terminal paths")
    return EXIT_OK


def cmd_flatten(args: argparse.Namespace) -> int:
    tree = _read_menu(args.menu)
    if isinstance(tree, int):
        return tree
    paths = flatten(tree)
    if not paths:
        return _fail("menu has no terminal paths", EXIT_FAILURE)
    if args.format == "tsv":
        sys.stdout.write(render_paths_tsv(paths))
    else:
        print(render_flattened(paths))
    return EXIT_OK


def cmd_gen_intents(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    if isinstance(config, int):
        return config
    tree = _read_menu(args.menu)
    if isinstance(tree, int):
        return tree
    paths = flatten(tree)
    try:
        kind = _provider_kind(args, config, "datagen")
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    if kind in ("oracle", "keyword"):
        return _fail(f"{kind} provider cannot synthesize intents; use http or scripted", EXIT_USAGE)
    cfg = _resolve_provider_config(args, config, "datagen")
    provider = _build_provider(kind, cfg, args, config, "datagen", paths=paths)
    if isinstance(provider, int):
        return provider

    noise = NoiseProfile()
    if args.noise is not None:
        noise = NoiseProfile(*args.noise)
    seed = args.seed if args.seed is not None else int(config.get("seed", 0))
    try:
        ds = build_dataset(
            tree,
            paths,
            provider,
            per_node=args.per_node,
            variants=args.variants,
            noise=noise,
            seed=seed,
        )
    except (DatagenError, ProviderError, ValueError) as exc:
        return _fail(str(exc), EXIT_FAILURE)
    problems = validate_dataset(ds, paths)
    if problems:
        for problem in problems:
            print(f"violation: {problem}", file=sys.stderr)
        return _fail("generated dataset failed validation", EXIT_FAILURE)

    out_file = Path(args.dataset_out) if args.dataset_out else _out_dir(args) / "intents.jsonl"
    out_file.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, out_file)
    print(f"wrote {len(ds.records)} records to {out_file}")
    return EXIT_OK


def cmd_route(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    if isinstance(config, int):
        return config
    tree = _read_menu(args.menu)
    if isinstance(tree, int):
        return tree
    dataset_file = Path(args.dataset)
    if not dataset_file.is_file():
        return _fail(f"no such dataset file: {dataset_file}", EXIT_USAGE)
    try:
        ds = load_dataset(dataset_file, menu_name=tree.name)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail(f"cannot load dataset {dataset_file}: {exc}", EXIT_FAILURE)

    condition = _CONDITIONS[args.condition]
    paths = flatten(tree)
    try:
        kind = _provider_kind(args, config, "routing")
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    cfg = _resolve_provider_config(args, config, "routing")
    provider = _build_provider(kind, cfg, args, config, "routing", dataset=ds, paths=paths)
    if isinstance(provider, int):
        return provider

    try:
        run = route_all(
            ds,
            condition,
            tree,
            provider,
            record_filter=args.filter,
            lenient=args.lenient,
            error_budget=args.error_budget,
        )
    except RoutingAborted as exc:
        print(f"error: run aborted: {exc}", file=sys.stderr)
        for intent_id, message in exc.failures[:5]:
            print(f"  failed {intent_id}: {message}", file=sys.stderr)
        if len(exc.failures) > 5:
            print(f"  ... and {len(exc.failures) - 5} more", file=sys.stderr)
        return EXIT_FAILURE
    except (ProviderError, ValueError) as exc:
        return _fail(str(exc), EXIT_FAILURE)

    run_dir = _out_dir(args, "runs") / f"run-{run.manifest['run_id']}"
    if run_dir.exists() and not args.force:
        return _fail(
            f"{run_dir} already exists (same menu/dataset/condition/model); use --force to overwrite",
            EXIT_FAILURE,
        )
    run_dir.mkdir(parents=True, exist_ok=True)
    save_results(run.results, run_dir / "results.jsonl")
    (run_dir / "manifest.json").write_text(
        json.dumps(run.manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    share = accuracy(run.results)
    print(f"routed {len(run.results)} intents, accuracy {format_percent(share)}%")
    print(f"run directory: {run_dir}")
    return EXIT_OK


def _numeric_path_key(label: str) -> tuple[int, ...]:
    return tuple(int(d) for d in label.split("-"))


def cmd_eval(args: argparse.Namespace) -> int:
    results_file = Path(args.results)
    if not results_file.is_file():
        return _fail(f"no such results file: {results_file}", EXIT_USAGE)
    try:
        results = load_results(results_file)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail(f"cannot load results {results_file}: {exc}", EXIT_FAILURE)
    if not results:
        return _fail(f"results file {results_file} is empty", EXIT_FAILURE)

    manifest = {}
    manifest_file = results_file.parent / "manifest.json"
    if manifest_file.is_file():
        try:
            manifest = json.loads(manifest_file.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            manifest = {}

    if args.menu:
        tree = _read_menu(args.menu)
        if isinstance(tree, int):
            return tree
        classes = [tp.path.canonical() for tp in flatten(tree)]
    else:
        # No menu at hand: score over the classes the results actually carry.
        classes = sorted({r.ground_truth for r in results}, key=_numeric_path_key)

    condition = manifest.get("condition", results[0].condition.value)
    dataset_filter = manifest.get(
        "dataset_filter",
        "all" if any(":v" in r.intent_id for r in results) else "base_only",
    )
    model_name = manifest.get("model_name", results[0].model_name)
    run_id = manifest.get("run_id") or hashlib.sha256(results_file.read_bytes()).hexdigest()[:12]

    try:
        report = build_report(results, classes, condition, dataset_filter, model_name)
    except ValueError as exc:
        return _fail(str(exc), EXIT_FAILURE)

    report_dir = _out_dir(args, str(results_file.parent)) / f"eval-{run_id}"
    if report_dir.exists() and not args.force:
        return _fail(f"{report_dir} already exists; use --force to overwrite", EXIT_FAILURE)
    written = emit_report(report, report_dir)
    print(f"accuracy {format_percent(report.accuracy)}% over {report.n} results")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_demo(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    if isinstance(config, int):
        return config
    tree = _read_menu(args.menu)
    if isinstance(tree, int):
        return tree
    paths = flatten(tree)
    if not paths:
        return _fail("menu has no terminal paths", EXIT_FAILURE)

    dataset = None
    if args.dataset:
        dataset_file = Path(args.dataset)
        if not dataset_file.is_file():
            return _fail(f"no such dataset file: {dataset_file}", EXIT_USAGE)
        dataset = load_dataset(dataset_file, menu_name=tree.name)

    try:
        kind = _provider_kind(args, config, "routing")
    except ValueError as exc:
        return _fail(str(exc), EXIT_USAGE)
    cfg = _resolve_provider_config(args, config, "routing")
    provider = _build_provider(kind, cfg, args, config, "routing", dataset=dataset, paths=paths)
    if isinstance(provider, int):
        return provider

    condition = _CONDITIONS[args.condition]
    context = render_context(tree, condition)
    known = frozenset(tp.path.canonical() for tp in paths)
    breadcrumb_of = {tp.path.canonical(): tp.breadcrumb_text() for tp in paths}
    # Demo turns are stateless single-shot routes; the record's truth slot is
    # filler because nothing grades an interactive query.
    placeholder_truth = paths[0].path
    interactive = sys.stdin.isatty()

    while True:
        if interactive:
            print("query> ", end="", file=sys.stderr, flush=True)
        line = sys.stdin.readline()
        if line == "":
            return EXIT_OK
        query = line.strip()
        if not query:
            continue
        record = IntentRecord(
            id="demo",
            text=query,
            ground_truth=placeholder_truth,
            origin="base",
            base_id="demo",
            variant_index=0,
        )
        try:
            result = route_one(
                record, condition, context, provider, known_paths=known, lenient=args.lenient
            )
        except ProviderError as exc:
            print(f"error: {exc}", file=sys.stderr)
            continue
        if result.predicted in breadcrumb_of:
            print(f"{result.predicted}  {breadcrumb_of[result.predicted]}")
        elif result.predicted == "INVALID":
            print(f"INVALID  (reply did not parse: {result.raw_response!r})")
        else:
            print(f"{result.predicted}  (not a terminal path of this menu)")


def cmd_check_roles(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    if isinstance(config, int):
        return config
    flag_models = {
        "menugen": args.menugen_model,
        "datagen": args.datagen_model,
        "routing": args.routing_model,
    }
    stage_configs: dict[str, ProviderConfig] = {}
    for stage in PIPELINE_STAGES:
        model = flag_models.get(stage)
        if model is None:
            model = _stage_settings(config, stage).get("model_name")
        if model is not None:
            stage_configs[stage] = ProviderConfig(model_name=model)
    warnings = check_role_separation(stage_configs)
    for warning in warnings:
        print(f"warning: {warning}")
    if not warnings:
        print(f"ok: {len(stage_configs)} stage(s), no shared models")
    if warnings and args.strict_roles:
        return EXIT_FAILURE
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="seed for randomized choices")


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--provider",
        choices=_PROVIDER_KINDS,
        help="provider kind (default http, or the config file's choice)",
    )
    parser.add_argument("--endpoint", help="chat-completions endpoint URL (http provider)")
    parser.add_argument("--model", help="model name sent with each request")
    parser.add_argument(
        "--api-key-env",
        help=f"environment variable holding the bearer token (default {DEFAULT_API_KEY_ENV})",
    )
    parser.add_argument("--temperature", type=float, help="sampling temperature (default: unset)")
    parser.add_argument("--max-retries", type=int, help="retry budget for transport failures")
    parser.add_argument("--timeout", type=float, help="per-request timeout in seconds")
    parser.add_argument("--max-in-flight", type=int, help="concurrent request cap")
    parser.add_argument("--rps", type=float, help="client-side requests-per-second cap")
    parser.add_argument("--script", help="JSON array of replies for the scripted provider")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivroute",
        description="Route free-form complaints to terminal DTMF paths of an IVR menu.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-menu", help="check a menu file against the schema rules")
    p.add_argument("menu", help="menu JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_validate_menu)

    p = sub.add_parser("flatten", help="list the terminal paths of a menu")
    p.add_argument("menu", help="menu JSON file")
    p.add_argument(
        "--format",
        choices=("tsv", "prompt-lines"),
        default="tsv",
        help="tsv: path/breadcrumb/type columns; prompt-lines: 'path: breadcrumb'",
    )
    _add_common(p)
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("gen-intents", help="synthesize a labeled complaint dataset")
    p.add_argument("menu", help="menu JSON file")
    p.add_argument("--per-node", type=int, default=10, help="base complaints per terminal path")
    p.add_argument("--variants", type=int, default=3, help="paraphrase variants per base complaint")
    p.add_argument(
        "--noise",
        type=float,
        nargs=3,
        metavar=("INTERJECTION", "FILLER", "GRAMMAR"),
        help="noise directive probabilities (defaults 0.3 0.3 0.2)",
    )
    p.add_argument("--dataset-out", help="output JSONL file (default <out>/intents.jsonl)")
    _add_common(p)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_gen_intents)

    p = sub.add_parser("route", help="route a dataset and write results + manifest")
    p.add_argument("--menu", required=True, help="menu JSON file")
    p.add_argument("--dataset", required=True, help="dataset JSONL file")
    p.add_argument("--condition", choices=sorted(_CONDITIONS), default="flattened")
    p.add_argument("--filter", choices=("base_only", "all"), default="all", dest="filter")
    p.add_argument("--lenient", action="store_true", help="salvage one path token from prose replies")
    p.add_argument("--error-budget", type=float, default=0.01, help="tolerated provider failure fraction")
    p.add_argument("--force", action="store_true", help="overwrite an existing run directory")
    _add_common(p)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("eval", help="score a results file into a report directory")
    p.add_argument("results", help="results JSONL file")
    p.add_argument("--menu", help="menu file fixing the class list (else classes come from the results)")
    p.add_argument("--force", action="store_true", help="overwrite an existing report directory")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("demo", help="route queries typed on stdin, one per line")
    p.add_argument("--menu", required=True, help="menu JSON file")
    p.add_argument("--condition", choices=sorted(_CONDITIONS), default="flattened")
    p.add_argument("--dataset", help="dataset JSONL file (required by the oracle provider)")
    p.add_argument("--lenient", action="store_true", help="salvage one path token from prose replies")
    _add_common(p)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("check-roles", help="warn when pipeline stages share a model")
    p.add_argument("--menugen-model", help="model used to synthesize menus")
    p.add_argument("--datagen-model", help="model used to synthesize intents")
    p.add_argument("--routing-model", help="model used to route intents")
    p.add_argument(
        "--strict-roles",
        action="store_true",
        help="exit nonzero when any stages share a model",
    )
    _add_common(p)
    p.set_defaults(func=cmd_check_roles)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
