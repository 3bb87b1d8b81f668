"""Touch-tone menu trees: parsing, validation, flattening, and rendering.

A menu is a tree of nodes selected by single DTMF digits. Terminal options
("action" nodes) either resolve a request directly (self-service) or hand
the caller to a human (agent handoff). Digit-0 "navigation" options (repeat,
return to previous menu) are modelled explicitly but never appear in
flattened terminal paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

MAX_DEPTH = 10  # DTMF gives ten digits; one level per keypress


class NodeKind(str, Enum):
    MENU = "menu"
    ACTION = "action"
    NAVIGATION = "navigation"


class ActionType(str, Enum):
    SELF_SERVICE = "self_service"
    AGENT_HANDOFF = "agent_handoff"
    NONE = "none"


class MenuFormatError(ValueError):
    """Raised when a menu document does not conform to the file schema."""


@dataclass(frozen=True)
class DtmfPath:
    """A non-empty keypress sequence, e.g. digits (2, 1, 9) for "2-1-9"."""

    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.digits:
            raise ValueError("a DTMF path needs at least one digit")
        for d in self.digits:
            if not isinstance(d, int) or not 0 <= d <= 9:
                raise ValueError(f"not a DTMF digit: {d!r}")

    @classmethod
    def parse(cls, text: str) -> "DtmfPath":
        parts = text.split("-")
        # ASCII 0-9 only; str.isdigit would wave through unicode digits
        if not all(len(p) == 1 and "0" <= p <= "9" for p in parts):
            raise ValueError(f"not a canonical DTMF path: {text!r}")
        return cls(tuple(int(p) for p in parts))

    def canonical(self) -> str:
        return "-".join(str(d) for d in self.digits)

    def __str__(self) -> str:
        return self.canonical()

    def __len__(self) -> int:
        return len(self.digits)


@dataclass(frozen=True)
class MenuNode:
    label: str
    digit: int | None  # None only on the root
    kind: NodeKind
    action_type: ActionType = ActionType.NONE
    children: tuple["MenuNode", ...] = ()
    prompt_text: str = ""


@dataclass(frozen=True)
class MenuTree:
    name: str
    root: MenuNode


@dataclass(frozen=True)
class TerminalPath:
    """A flattened endpoint: keypress sequence plus its human-readable trail."""

    path: DtmfPath
    breadcrumb: tuple[str, ...]
    service_type: ActionType

    def breadcrumb_text(self) -> str:
        return " -> ".join(self.breadcrumb)


# --- parsing ---------------------------------------------------------------

_NODE_FIELDS = {"label", "digit", "kind", "action_type", "prompt_text", "children"}


def parse_menu(document: str | Mapping) -> MenuTree:
    """Parse a menu document (JSON text or an already-decoded mapping).

    Raises MenuFormatError with the offending node's digit path on any
    schema violation; a parsed tree always satisfies the node invariants
    re-checked by validate_menu.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MenuFormatError(f"menu document is not valid JSON: {exc}") from exc
    else:
        data = document
    if not isinstance(data, Mapping):
        raise MenuFormatError("menu document must be a JSON object")

    missing = [key for key in ("name", "root") if key not in data]
    if missing:
        raise MenuFormatError(
            "menu document missing required field(s): " + ", ".join(missing)
        )
    name = data["name"]
    if not isinstance(name, str) or not name:
        raise MenuFormatError("menu name must be a non-empty string")

    root = _parse_node(data["root"], where="root", is_root=True)
    if root.kind is not NodeKind.MENU:
        raise MenuFormatError("root node must have kind 'menu'")
    tree = MenuTree(name=name, root=root)
    violations = validate_menu(tree)
    if violations:
        raise MenuFormatError("; ".join(violations))
    return tree


def load_menu(path: str | Path) -> MenuTree:
    return parse_menu(Path(path).read_text(encoding="utf-8"))


def _parse_node(data, where: str, is_root: bool = False) -> MenuNode:
    if not isinstance(data, Mapping):
        raise MenuFormatError(f"node at {where}: must be a JSON object")
    unknown = set(data) - _NODE_FIELDS
    if unknown:
        raise MenuFormatError(
            f"node at {where}: unknown field(s) {sorted(unknown)}"
        )

    label = data.get("label")
    if not isinstance(label, str) or not label:
        raise MenuFormatError(f"node at {where}: missing label")

    kind_text = data.get("kind")
    try:
        kind = NodeKind(kind_text)
    except ValueError:
        raise MenuFormatError(f"node at {where}: unknown kind {kind_text!r}") from None

    if is_root:
        if "digit" in data:
            raise MenuFormatError("node at root: root carries no digit")
        digit = None
    else:
        digit_text = data.get("digit")
        if not isinstance(digit_text, str) or len(digit_text) != 1 or not digit_text.isdigit():
            raise MenuFormatError(
                f"node at {where}: digit must be a one-character string '0'-'9'"
            )
        digit = int(digit_text)

    if kind is NodeKind.ACTION:
        try:
            action_type = ActionType(data.get("action_type"))
        except ValueError:
            raise MenuFormatError(
                f"node at {where}: action_type must be 'self_service' or 'agent_handoff'"
            ) from None
        if action_type is ActionType.NONE:
            raise MenuFormatError(
                f"node at {where}: action_type must be 'self_service' or 'agent_handoff'"
            )
    else:
        if "action_type" in data:
            raise MenuFormatError(f"node at {where}: action_type is for action nodes only")
        action_type = ActionType.NONE

    if kind is not NodeKind.MENU:
        for key in ("children", "prompt_text"):
            if key in data:
                raise MenuFormatError(
                    f"node at {where}: {key} is allowed on menu nodes only"
                )
        return MenuNode(label=label, digit=digit, kind=kind, action_type=action_type)

    prompt_text = data.get("prompt_text", "")
    if not isinstance(prompt_text, str):
        raise MenuFormatError(f"node at {where}: prompt_text must be a string")
    raw_children = data.get("children", [])
    if not isinstance(raw_children, list) or not raw_children:
        raise MenuFormatError(f"node at {where}: menu nodes need a non-empty children list")

    children = []
    seen_digits: dict[int, str] = {}
    for child_data in raw_children:
        child_digit = "?"
        if isinstance(child_data, Mapping) and isinstance(child_data.get("digit"), str):
            child_digit = child_data["digit"]
        child_where = child_digit if where == "root" else f"{where}-{child_digit}"
        child = _parse_node(child_data, where=child_where)
        assert child.digit is not None
        if child.digit in seen_digits:
            raise MenuFormatError(
                f"node at {where}: duplicate digit {child.digit} among children"
            )
        seen_digits[child.digit] = child_where
        children.append(child)

    return MenuNode(
        label=label,
        digit=digit,
        kind=kind,
        children=tuple(children),
        prompt_text=prompt_text,
    )


def tree_to_document(tree: MenuTree) -> dict:
    """Inverse of parse_menu: a plain dict in the menu file schema."""
    return {"name": tree.name, "root": _node_to_document(tree.root, is_root=True)}


def _node_to_document(node: MenuNode, is_root: bool = False) -> dict:
    doc: dict = {"label": node.label}
    if not is_root:
        doc["digit"] = str(node.digit)
    doc["kind"] = node.kind.value
    if node.kind is NodeKind.ACTION:
        doc["action_type"] = node.action_type.value
    if node.kind is NodeKind.MENU:
        doc["prompt_text"] = node.prompt_text
        doc["children"] = [_node_to_document(c) for c in node.children]
    return doc


# --- validation ------------------------------------------------------------

def validate_menu(tree: MenuTree) -> list[str]:
    """Re-check every tree invariant; each violation names the offending node
    by its digit path. An empty list means the tree is well-formed."""
    violations: list[str] = []
    if tree.root.kind is not NodeKind.MENU:
        violations.append("root: must have kind 'menu'")
    if tree.root.digit is not None:
        violations.append("root: carries a digit but is not selected by a keypress")

    seen_paths: set[str] = set()

    def walk(node: MenuNode, digits: tuple[int, ...]) -> None:
        where = "-".join(str(d) for d in digits) or "root"
        if len(digits) > MAX_DEPTH:
            violations.append(f"{where}: exceeds maximum depth {MAX_DEPTH}")
            return
        if node.kind is NodeKind.ACTION and node.action_type is ActionType.NONE:
            violations.append(f"{where}: action node without an action_type")
        if node.kind is not NodeKind.ACTION and node.action_type is not ActionType.NONE:
            violations.append(f"{where}: action_type set on a non-action node")
        if node.kind is NodeKind.NAVIGATION and node.digit != 0:
            violations.append(f"{where}: navigation nodes use digit 0")
        if node.kind is not NodeKind.MENU:
            if node.children:
                violations.append(f"{where}: {node.kind.value} nodes may not have children")
            return
        if not node.children:
            violations.append(f"{where}: menu node has no children")
            return
        if all(c.kind is NodeKind.NAVIGATION for c in node.children):
            violations.append(f"{where}: menu node needs at least one non-navigation child")
        digits_seen: set[int] = set()
        for child in node.children:
            if child.digit is None:
                violations.append(f"{where}: child {child.label!r} has no digit")
                continue
            if child.digit in digits_seen:
                violations.append(f"{where}: duplicate digit {child.digit} among children")
            digits_seen.add(child.digit)
            child_digits = digits + (child.digit,)
            child_path = "-".join(str(d) for d in child_digits)
            if child_path in seen_paths:
                violations.append(f"{child_path}: digit sequence is not unique")
            seen_paths.add(child_path)
            walk(child, child_digits)

    walk(tree.root, ())
    return violations


# --- flattening and rendering ----------------------------------------------

def flatten(tree: MenuTree) -> list[TerminalPath]:
    """One TerminalPath per action node, in depth-first document order.

    Navigation options contribute nothing; the tree must already be valid.
    """
    paths: list[TerminalPath] = []

    def walk(node: MenuNode, digits: tuple[int, ...], trail: tuple[str, ...]) -> None:
        for child in node.children:
            assert child.digit is not None
            child_digits = digits + (child.digit,)
            child_trail = trail + (child.label,)
            if child.kind is NodeKind.ACTION:
                paths.append(
                    TerminalPath(
                        path=DtmfPath(child_digits),
                        breadcrumb=child_trail,
                        service_type=child.action_type,
                    )
                )
            elif child.kind is NodeKind.MENU:
                walk(child, child_digits, child_trail)

    walk(tree.root, (), ())
    return paths


def resolve_path(tree: MenuTree, path: DtmfPath) -> MenuNode | None:
    """Walk the tree digit by digit; None when the path selects nothing."""
    node = tree.root
    for digit in path.digits:
        if node.kind is not NodeKind.MENU:
            return None
        match = next((c for c in node.children if c.digit == digit), None)
        if match is None:
            return None
        node = match
    return node


def render_descriptive(tree: MenuTree) -> str:
    """The full hierarchical outline: menu name, one section per menu node
    with its spoken message, sub-menus indented beneath their parents.

    Menus whose prompt_text is empty fall back to a mechanical option line
    per child, so minimal trees still render something usable. Output is
    deterministic byte-for-byte.
    """
    lines: list[str] = [f'IVR Menu Name: "{tree.name}"', ""]

    def emit_menu(node: MenuNode, digits: tuple[int, ...]) -> None:
        depth = len(digits)
        if depth == 0:
            header = "--- Root Menu ---"
            header_indent = ""
            message_indent = ""
        elif depth == 1:
            header = f"--- Branch {digits[0]}: {node.label} (DTMF: {digits[0]}) ---"
            header_indent = ""
            message_indent = "  "
        else:
            dtmf = "-".join(str(d) for d in digits)
            header = f"--- Sub-Menu for {node.label} (DTMF: {dtmf}) ---"
            header_indent = "  " * (depth - 1)
            message_indent = "  " * depth
        body_indent = message_indent + "  "

        lines.append(header_indent + header)
        lines.append("")
        if node.prompt_text:
            lines.append(message_indent + "IVR Message:")
            lines.append("")
            for sentence in node.prompt_text.split("\n"):
                lines.append(body_indent + sentence if sentence else "")
                lines.append("")
        else:
            for child in node.children:
                lines.append(body_indent + f"For {child.label}, press {child.digit}.")
                lines.append("")
        for child in node.children:
            if child.kind is NodeKind.MENU:
                assert child.digit is not None
                emit_menu(child, digits + (child.digit,))

    emit_menu(tree.root, ())
    return "\n".join(lines).rstrip("\n") + "\n"


def render_flattened(paths: Iterable[TerminalPath]) -> str:
    """One "<path>: <breadcrumb>" line per terminal path, order preserved."""
    lines = [f"{tp.path.canonical()}: {tp.breadcrumb_text()}" for tp in paths]
    if not lines:
        raise ValueError("no terminal paths to render")
    return "\n".join(lines)


def render_paths_tsv(paths: Iterable[TerminalPath]) -> str:
    """Tab-separated path table: path, breadcrumb, service type."""
    lines = [
        f"{tp.path.canonical()}\t{tp.breadcrumb_text()}\t{tp.service_type.value}"
        for tp in paths
    ]
    return "\n".join(lines) + "\n"
