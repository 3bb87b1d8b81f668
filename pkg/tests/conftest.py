"""Shared fixtures: the bundled menu and dataset, small synthetic menus, and
provider doubles wired for deterministic tests."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import pytest

from ivroute.datagen import Dataset, IntentRecord, load_dataset
from ivroute.menu import (
    ActionType,
    DtmfPath,
    MenuNode,
    MenuTree,
    NodeKind,
    flatten,
    parse_menu,
)

DATA = resources.files("ivroute.data")


def data_text(name: str) -> str:
    return DATA.joinpath(name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def fixture_menu_path(tmp_path_factory) -> Path:
    """The bundled menu copied to a real filesystem path for CLI tests."""
    target = tmp_path_factory.mktemp("fixtures") / "agentnet.menu.json"
    target.write_text(data_text("agentnet.menu.json"), encoding="utf-8")
    return target


@pytest.fixture(scope="session")
def fixture_dataset_path(tmp_path_factory) -> Path:
    target = tmp_path_factory.mktemp("fixtures") / "agentnet.intents.jsonl"
    target.write_text(data_text("agentnet.intents.jsonl"), encoding="utf-8")
    return target


@pytest.fixture(scope="session")
def tree() -> MenuTree:
    return parse_menu(data_text("agentnet.menu.json"))


@pytest.fixture(scope="session")
def paths(tree):
    return flatten(tree)


@pytest.fixture(scope="session")
def dataset(fixture_dataset_path, tree) -> Dataset:
    return load_dataset(fixture_dataset_path, menu_name=tree.name)


def action(label: str, digit: int, service: ActionType = ActionType.SELF_SERVICE) -> MenuNode:
    return MenuNode(label=label, digit=digit, kind=NodeKind.ACTION, action_type=service)


def submenu(label: str, digit: int | None, children, prompt_text: str = "") -> MenuNode:
    return MenuNode(
        label=label,
        digit=digit,
        kind=NodeKind.MENU,
        children=tuple(children),
        prompt_text=prompt_text,
    )


def navigation(label: str = "Return to Main Menu") -> MenuNode:
    return MenuNode(label=label, digit=0, kind=NodeKind.NAVIGATION)


@pytest.fixture
def tiny_tree() -> MenuTree:
    """Two branches, three terminals, one navigation node to skip."""
    root = submenu(
        "Root Menu",
        None,
        [
            submenu(
                "Billing",
                1,
                [
                    action("Pay Bill", 1),
                    action("Billing Agent", 9, ActionType.AGENT_HANDOFF),
                    navigation(),
                ],
            ),
            action("Support", 2),
        ],
    )
    return MenuTree(name="Tiny", root=root)


def make_record(
    path: str,
    text: str,
    *,
    suffix: str = "b00",
    origin: str = "base",
    base_suffix: str | None = None,
    variant_index: int = 0,
) -> IntentRecord:
    base_id = f"{path}:{base_suffix or suffix}"
    rid = f"{path}:{suffix}" if origin == "base" else f"{base_id}:v{variant_index}"
    return IntentRecord(
        id=rid,
        text=text,
        ground_truth=DtmfPath.parse(path),
        origin=origin,
        base_id=base_id,
        variant_index=variant_index,
    )


def tiny_dataset() -> Dataset:
    """Two base records per terminal path of tiny_tree; validates cleanly."""
    records = [
        make_record("1-1", "I want to pay my bill."),
        make_record("1-1", "how do I pay what I owe", suffix="b01"),
        make_record("1-9", "get me a billing person"),
        make_record("1-9", "human for my bill please", suffix="b01"),
        make_record("2", "my service is broken"),
        make_record("2", "nothing works at my house", suffix="b01"),
    ]
    return Dataset(menu_name="Tiny", records=records, per_node_base=2, variants_per_base=0)
