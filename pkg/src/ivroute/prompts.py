"""Routing prompt construction.

The two prompt templates live as text files under data/ with {{MENU}},
{{PATHS}} and {{QUERY}} placeholders, so the exact wording is reviewable
and pinned by golden tests. Building a prompt is pure string substitution:
equal inputs give equal bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources


class RoutingCondition(str, Enum):
    """Which context representation the routing model sees."""

    DESCRIPTIVE_MENU = "descriptive_menu"
    FLATTENED_PATHS = "flattened_paths"


OUTPUT_CONSTRAINT = "Output only the path."


@dataclass(frozen=True)
class PromptText:
    content: str
    condition: RoutingCondition
    query: str


def _load_template(name: str) -> str:
    text = resources.files("ivroute.data").joinpath(name).read_text(encoding="utf-8")
    return text.rstrip("\n")


def template_descriptive() -> str:
    return _load_template("template_descriptive.txt")


def template_flattened() -> str:
    return _load_template("template_flattened.txt")


def _clean_query(query: str) -> str:
    # Only the trailing newline goes; queries keep their noise on purpose.
    cleaned = query.rstrip("\n")
    if not cleaned.strip():
        raise ValueError("query is empty")
    return cleaned


def build_descriptive_prompt(menu_text: str, query: str) -> PromptText:
    """Fill template 1 with the full hierarchical menu text and the query."""
    if not menu_text:
        raise ValueError("menu_text is empty")
    cleaned = _clean_query(query)
    content = template_descriptive().replace("{{MENU}}", menu_text, 1)
    content = content.replace("{{QUERY}}", cleaned, 1)
    return PromptText(content=content, condition=RoutingCondition.DESCRIPTIVE_MENU, query=cleaned)


def build_flattened_prompt(paths_text: str, query: str) -> PromptText:
    """Fill template 2 with the flattened path list and the query."""
    if not paths_text:
        raise ValueError("paths_text is empty")
    cleaned = _clean_query(query)
    content = template_flattened().replace("{{PATHS}}", paths_text, 1)
    content = content.replace("{{QUERY}}", cleaned, 1)
    return PromptText(content=content, condition=RoutingCondition.FLATTENED_PATHS, query=cleaned)


def build_prompt(condition: RoutingCondition, context_text: str, query: str) -> PromptText:
    if condition is RoutingCondition.DESCRIPTIVE_MENU:
        return build_descriptive_prompt(context_text, query)
    return build_flattened_prompt(context_text, query)
