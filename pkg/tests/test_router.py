"""Response parsing, single-shot routing, batch routing, manifests, and
result files."""

import json

import pytest

from ivroute.datagen import Dataset, IntentRecord
from ivroute.menu import DtmfPath, flatten
from ivroute.prompts import RoutingCondition
from ivroute.provider import (
    OracleProvider,
    Provider,
    ProviderConfig,
    ProviderError,
    ScriptedProvider,
)
from ivroute.router import (
    INVALID,
    RoutingAborted,
    build_manifest,
    load_results,
    parse_dtmf_response,
    render_context,
    route_all,
    route_one,
    save_results,
    select_records,
)

from conftest import make_record, tiny_dataset


# --- parsing: strict ---------------------------------------------------------------

@pytest.mark.parametrize("text", ["1", "1-1", "2-1-9", "0-0-0", "9-8-7-6-5-4-3-2-1-0"])
def test_strict_accepts_canonical(text):
    parsed = parse_dtmf_response(text)
    assert parsed.is_valid
    assert parsed.path.canonical() == text
    assert parsed.normalization_applied == ()


@pytest.mark.parametrize(
    "raw, expected, rules",
    [
        ("  2-1-9  ", "2-1-9", ("trim",)),
        ("'2-1-9'", "2-1-9", ("unquote",)),
        ('"1-4"', "1-4", ("unquote",)),
        ("`3-9`", "3-9", ("unquote",)),
        ("2-1-9.", "2-1-9", ("strip_trailing_period",)),
        ("2–1–9", "2-1-9", ("map_unicode_dashes",)),
        ("2—1—9", "2-1-9", ("map_unicode_dashes",)),
        (" '2-1-9.'  ", "2-1-9.", None),  # inner period survives the outer quote
    ],
)
def test_strict_normalization_rules(raw, expected, rules):
    parsed = parse_dtmf_response(raw)
    if expected == "2-1-9.":
        # The single trailing-period strip happens after unquoting, so a
        # quoted "2-1-9." does resolve; spell the pipeline out.
        assert parsed.is_valid and parsed.path.canonical() == "2-1-9"
        assert parsed.normalization_applied == ("trim", "unquote", "strip_trailing_period")
    else:
        assert parsed.is_valid and parsed.path.canonical() == expected
        assert parsed.normalization_applied == rules


def test_strict_combined_normalization():
    parsed = parse_dtmf_response('  "2–1–9."  ')
    assert parsed.is_valid and parsed.path.canonical() == "2-1-9"
    assert parsed.normalization_applied == (
        "trim", "unquote", "strip_trailing_period", "map_unicode_dashes",
    )


@pytest.mark.parametrize(
    "raw",
    [
        "",
        "   ",
        "12",
        "1-23",
        "1-",
        "-1",
        "1--2",
        "path 1-2",
        "1-2 maybe",
        "one-two",
        "1-2-3. extra",
        "''",
        "2-1-9..",  # only one trailing period is stripped
        "((1-2))",  # parentheses are not quotes
    ],
)
def test_strict_rejects_noise(raw):
    parsed = parse_dtmf_response(raw)
    assert not parsed.is_valid
    assert parsed.path is None


def test_strict_mismatch_keeps_raw_text():
    parsed = parse_dtmf_response("The answer is 1-4.")
    assert parsed.raw_text == "The answer is 1-4."
    assert not parsed.is_valid


# --- parsing: lenient ----------------------------------------------------------------

def test_lenient_salvages_single_token():
    parsed = parse_dtmf_response("The best path is 2-1-9.", lenient=True)
    assert parsed.is_valid and parsed.path.canonical() == "2-1-9"
    assert parsed.normalization_applied[-1] == "lenient_extract"


def test_lenient_refuses_multiple_tokens():
    parsed = parse_dtmf_response("either 1-2 or 3-4", lenient=True)
    assert not parsed.is_valid


def test_lenient_refuses_zero_tokens():
    parsed = parse_dtmf_response("no digits here", lenient=True)
    assert not parsed.is_valid


def test_lenient_ignores_embedded_digit_runs():
    # "12-3" is not a well-formed token and must not yield "2-3".
    parsed = parse_dtmf_response("code 12-3", lenient=True)
    assert not parsed.is_valid


def test_lenient_not_used_when_strict_matches():
    parsed = parse_dtmf_response("2-1-9", lenient=True)
    assert parsed.normalization_applied == ()


# --- route_one -----------------------------------------------------------------------

def known_paths(tree):
    return frozenset(tp.path.canonical() for tp in flatten(tree))


def test_route_one_correct(tiny_tree):
    record = make_record("1-1", "I want to pay my bill.")
    provider = ScriptedProvider(["1-1"])
    context = render_context(tiny_tree, RoutingCondition.FLATTENED_PATHS)
    result = route_one(record, RoutingCondition.FLATTENED_PATHS, context, provider,
                       known_paths=known_paths(tiny_tree))
    assert result.predicted == "1-1"
    assert result.correct and result.known_path
    assert result.ground_truth == "1-1"
    assert result.intent_id == record.id
    assert result.model_name == "scripted-mock"
    assert result.latency >= 0


def test_route_one_wrong_but_known(tiny_tree):
    record = make_record("1-1", "I want to pay my bill.")
    provider = ScriptedProvider(["1-9"])
    context = render_context(tiny_tree, RoutingCondition.FLATTENED_PATHS)
    result = route_one(record, RoutingCondition.FLATTENED_PATHS, context, provider,
                       known_paths=known_paths(tiny_tree))
    assert result.predicted == "1-9"
    assert not result.correct and result.known_path


def test_route_one_valid_but_unknown(tiny_tree):
    record = make_record("1-1", "I want to pay my bill.")
    provider = ScriptedProvider(["7-7-7"])
    context = render_context(tiny_tree, RoutingCondition.FLATTENED_PATHS)
    result = route_one(record, RoutingCondition.FLATTENED_PATHS, context, provider,
                       known_paths=known_paths(tiny_tree))
    assert result.predicted == "7-7-7"
    assert not result.correct and not result.known_path


def test_route_one_invalid_reply(tiny_tree):
    record = make_record("1-1", "I want to pay my bill.")
    provider = ScriptedProvider(["I think you should press one"])
    context = render_context(tiny_tree, RoutingCondition.FLATTENED_PATHS)
    result = route_one(record, RoutingCondition.FLATTENED_PATHS, context, provider,
                       known_paths=known_paths(tiny_tree))
    assert result.predicted == INVALID
    assert not result.correct and not result.known_path
    assert result.raw_response == "I think you should press one"


def test_route_one_wraps_provider_error_with_intent_id(tiny_tree):
    record = make_record("1-1", "text")
    provider = ScriptedProvider([])  # immediately exhausted
    context = render_context(tiny_tree, RoutingCondition.FLATTENED_PATHS)
    with pytest.raises(ProviderError, match="1-1:b00"):
        route_one(record, RoutingCondition.FLATTENED_PATHS, context, provider)


# --- route_all -----------------------------------------------------------------------

def test_select_records(dataset):
    base = select_records(dataset, "base_only")
    everything = select_records(dataset, "all")
    assert len(base) == 230 and len(everything) == 920
    with pytest.raises(ValueError):
        select_records(dataset, "bases")


def test_route_all_oracle_order_preserved_under_concurrency(dataset, tree):
    oracle = OracleProvider.for_dataset(
        dataset, config=ProviderConfig(model_name="oracle-mock", max_in_flight=8)
    )
    run = route_all(dataset, RoutingCondition.FLATTENED_PATHS, tree, oracle,
                    record_filter="base_only")
    assert [r.intent_id for r in run.results] == [
        r.id for r in dataset.records if r.origin == "base"
    ]
    assert all(r.correct for r in run.results)


def test_route_all_scripted_alignment_serial(tiny_tree):
    ds = tiny_dataset()
    replies = ["1-1", "2", "1-9", "1-9", "2", "2"]  # second record misrouted
    provider = ScriptedProvider(replies, config=ProviderConfig(max_in_flight=1))
    run = route_all(ds, RoutingCondition.FLATTENED_PATHS, tiny_tree, provider)
    verdicts = [r.correct for r in run.results]
    assert verdicts == [True, False, True, True, True, True]


def test_route_all_rejects_invalid_dataset(tiny_tree):
    ds = tiny_dataset()
    broken = Dataset(ds.menu_name, ds.records[:-1], ds.per_node_base, ds.variants_per_base)
    with pytest.raises(ValueError, match="dataset is not valid"):
        route_all(broken, RoutingCondition.FLATTENED_PATHS, tiny_tree, ScriptedProvider(["1-1"]))


class FlakyOracle(Provider):
    """Echoes truth, except queries marked to fail."""

    def __init__(self, truth_by_text, fail_texts, max_in_flight=1):
        super().__init__(ProviderConfig(model_name="flaky-mock", max_in_flight=max_in_flight))
        self._truth = truth_by_text
        self._fail = set(fail_texts)

    def _request(self, text, prompt):
        query = prompt.query
        if query in self._fail:
            raise ProviderError("synthetic outage")
        return self._truth[query], 1


def test_route_all_tolerates_failures_within_budget(tiny_tree):
    ds = tiny_dataset()
    truth = {r.text: r.ground_truth.canonical() for r in ds.records}
    provider = FlakyOracle(truth, fail_texts={ds.records[1].text})
    run = route_all(ds, RoutingCondition.FLATTENED_PATHS, tiny_tree, provider,
                    error_budget=0.5)
    assert len(run.results) == 5
    assert run.manifest["failures"] == [
        {"intent_id": ds.records[1].id, "error": f"intent {ds.records[1].id}: synthetic outage"}
    ]
    assert run.manifest["n_results"] == 5


def test_route_all_aborts_past_budget(tiny_tree):
    ds = tiny_dataset()
    truth = {r.text: r.ground_truth.canonical() for r in ds.records}
    provider = FlakyOracle(truth, fail_texts={r.text for r in ds.records[:3]})
    with pytest.raises(RoutingAborted) as excinfo:
        route_all(ds, RoutingCondition.FLATTENED_PATHS, tiny_tree, provider,
                  error_budget=0.0)
    aborted = excinfo.value
    assert len(aborted.failures) == 1
    assert all(r.correct for r in aborted.completed)


# --- manifest ------------------------------------------------------------------------

def manifest_for(ds, tree, **overrides):
    arguments = dict(
        condition=RoutingCondition.FLATTENED_PATHS,
        record_filter="base_only",
        provider=ScriptedProvider(["1-1"]),
        lenient=False,
        n_results=1,
        failures=[],
    )
    arguments.update(overrides)
    return build_manifest(ds, tree, **arguments)


def test_manifest_run_id_ignores_timestamp_and_counts(tiny_tree, monkeypatch):
    ds = tiny_dataset()
    first = manifest_for(ds, tiny_tree)
    second = manifest_for(ds, tiny_tree, n_results=99, failures=[("x", "boom")])
    assert first["run_id"] == second["run_id"]
    assert first["timestamp"]


def test_manifest_run_id_tracks_inputs(tiny_tree):
    ds = tiny_dataset()
    base = manifest_for(ds, tiny_tree)
    reconditioned = manifest_for(ds, tiny_tree, condition=RoutingCondition.DESCRIPTIVE_MENU)
    assert base["run_id"] != reconditioned["run_id"]
    refiltered = manifest_for(ds, tiny_tree, record_filter="all")
    assert base["run_id"] != refiltered["run_id"]
    remodeled = manifest_for(
        ds, tiny_tree, provider=ScriptedProvider(["1-1"], config=ProviderConfig(model_name="other"))
    )
    assert base["run_id"] != remodeled["run_id"]


def test_manifest_core_fields(tiny_tree):
    ds = tiny_dataset()
    manifest = manifest_for(ds, tiny_tree)
    assert manifest["menu_name"] == "Tiny"
    assert manifest["condition"] == "flattened_paths"
    assert manifest["dataset_filter"] == "base_only"
    assert manifest["model_name"] == "scripted-mock"
    assert manifest["parse_mode"] == "strict"
    assert len(manifest["run_id"]) == 12


# --- result files --------------------------------------------------------------------

def test_results_round_trip(tmp_path, tiny_tree):
    ds = tiny_dataset()
    provider = ScriptedProvider(
        ["1-1", "nonsense", "1-9", "7-7", "2", "2"],
        config=ProviderConfig(max_in_flight=1),
    )
    run = route_all(ds, RoutingCondition.FLATTENED_PATHS, tiny_tree, provider)
    file = tmp_path / "results.jsonl"
    save_results(run.results, file)
    loaded = load_results(file)
    assert loaded == run.results
    lines = file.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 6
    second = json.loads(lines[1])
    assert second["predicted"] == INVALID
    assert second["raw_response"] == "nonsense"
