"""Memo export: one chat call over exactly the selected content.

Selected topics expand to their user statements; question nodes never enter
the memo context. The comprehensive style must come back with its four
section headings; a response missing them is retried once and then returned
flagged rather than rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from . import prompts
from .model import CanvasState, NodeKind, UnknownNodeError
from .providers import ChatProvider, ChatRequest, ResponseFormat, repair_request

REQUIRED_HEADINGS = (
    "Key Themes",
    "Important Insights",
    "Connections & Patterns",
    "Next Steps",
)

HEADINGS_REPAIR_INSTRUCTION = (
    "The memo must contain all four section headings exactly: "
    "Key Themes, Important Insights, Connections & Patterns, Next Steps. "
    "Rewrite the memo with every heading present."
)


class EmptySelectionError(ValueError):
    """The expanded selection holds no user statements to summarize."""


class MemoStyle(Enum):
    COMPREHENSIVE = "comprehensive"
    EXECUTIVE = "executive"
    BULLET = "bullet"


_STYLE_INSTRUCTIONS = {
    MemoStyle.COMPREHENSIVE: prompts.EXPORT_STYLE_COMPREHENSIVE,
    MemoStyle.EXECUTIVE: prompts.EXPORT_STYLE_EXECUTIVE,
    MemoStyle.BULLET: prompts.EXPORT_STYLE_BULLET,
}


@dataclass(frozen=True)
class MemoResult:
    style: MemoStyle
    text: str
    headings_missing: bool = False


def expand_selection(state: CanvasState, selection: Sequence[str],
                     ) -> tuple[list[str], list[str]]:
    """Resolve a mixed node selection to (selected topic ids, entity ids).

    Topics pull in all their user statements. Directly selected question
    nodes are ignored: the memo summarizes the user's words only.
    """
    topic_ids: list[str] = []
    content_ids: list[str] = []
    seen: set[str] = set()
    for node_id in selection:
        if node_id in state.topics:
            if node_id not in topic_ids:
                topic_ids.append(node_id)
                for child in state.children(node_id):
                    if child.kind is NodeKind.USER_CONTENT and child.id not in seen:
                        seen.add(child.id)
                        content_ids.append(child.id)
        elif node_id in state.contents:
            node = state.contents[node_id]
            if node.kind is NodeKind.USER_CONTENT and node.id not in seen:
                seen.add(node.id)
                content_ids.append(node.id)
        else:
            raise UnknownNodeError(node_id)
    if not content_ids:
        raise EmptySelectionError("selection contains no user statements")
    return topic_ids, content_ids


def build_export_prompt(state: CanvasState, selection: Sequence[str],
                        style: MemoStyle) -> ChatRequest:
    """Compose the memo request from the selected subset and nothing else.

    Labels of unselected topics never appear, even when one of their
    statements was selected directly; such statements are listed unlabeled.
    """
    topic_ids, content_ids = expand_selection(state, selection)
    selected_topics = set(topic_ids)
    sections: list[str] = []
    for topic_id in topic_ids:
        lines = [f"Topic: {state.topics[topic_id].label}"]
        lines.extend(
            f"- {state.contents[cid].text}"
            for cid in content_ids
            if state.contents[cid].parent == topic_id
        )
        sections.append("\n".join(lines))
    loose = [
        f"- {state.contents[cid].text}"
        for cid in content_ids
        if state.contents[cid].parent not in selected_topics
    ]
    if loose:
        sections.append("Additional selected content:\n" + "\n".join(loose))
    system = "\n\n".join([
        prompts.EXPORT_PREAMBLE,
        _STYLE_INSTRUCTIONS[style],
        prompts.EXPORT_CLOSING,
    ])
    return ChatRequest(
        system_prompt=system,
        user_message="\n\n".join(sections),
        response_format_hint=ResponseFormat.FREE_TEXT,
    )


def missing_headings(text: str) -> list[str]:
    lowered = text.lower()
    return [h for h in REQUIRED_HEADINGS if h.lower() not in lowered]


def generate_memo(state: CanvasState, selection: Sequence[str], style: MemoStyle,
                  chat: ChatProvider) -> MemoResult:
    """Produce the memo text; read-only over the canvas."""
    request = build_export_prompt(state, selection, style)
    text = chat.chat_complete(request)
    if style is not MemoStyle.COMPREHENSIVE:
        return MemoResult(style=style, text=text)
    if not missing_headings(text):
        return MemoResult(style=style, text=text)
    retry = repair_request(request, HEADINGS_REPAIR_INSTRUCTION)
    text = chat.chat_complete(retry)
    return MemoResult(
        style=style,
        text=text,
        headings_missing=bool(missing_headings(text)),
    )
