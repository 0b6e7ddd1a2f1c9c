"""Verbal restructuring: apply a model-produced outline to the canvas.

A spoken or typed instruction (merge, split, add topics, or a free-form
structure request) is sent to the chat model together with the current
outline and the full dictation transcript. The model answers with a new
outline; this module matches its entities back to canvas nodes by text and
rewrites the in-scope part of the canvas accordingly.

Three rules protect the user's content: statements are never destroyed
(entities missing from the outline are parked under a synthetic "Unsorted"
topic), out-of-scope nodes are never modified, and any failure leaves the
input state untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from . import prompts
from .layout import LayoutParams, layout_update
from .model import (
    CanvasState,
    ContentNode,
    NodeIdGenerator,
    NodeKind,
    TopicNode,
    UnknownNodeError,
    clone_canvas,
)
from .providers import (
    ChatRequest,
    EmbeddingRequest,
    Providers,
    ResponseFormat,
    SchemaViolationError,
    extract_json,
    request_parsed,
)

UNSORTED_LABEL = "Unsorted"


class EmptyCanvasError(RuntimeError):
    """Restructuring needs at least one topic to operate on."""


class Scope(Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class RestructureCommand:
    instruction: str
    selected_topic_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("instruction is empty")

    @property
    def scope(self) -> Scope:
        return Scope.LOCAL if self.selected_topic_ids else Scope.GLOBAL


class EntityOrigin(Enum):
    EXISTING = "existing"
    NEW = "new"


@dataclass(frozen=True)
class OutlineEntity:
    origin: EntityOrigin
    text: str
    node_id: str | None = None  # set iff origin is EXISTING


@dataclass(frozen=True)
class OutlineGroup:
    topic_label: str
    entities: tuple[OutlineEntity, ...]


@dataclass(frozen=True)
class ReorgOutline:
    groups: tuple[OutlineGroup, ...]


def scope_topic_ids(state: CanvasState, cmd: RestructureCommand) -> list[str]:
    """Resolve the command's scope to concrete topic ids, in canvas order."""
    if not state.topics:
        raise EmptyCanvasError("cannot restructure an empty canvas")
    if cmd.scope is Scope.GLOBAL:
        return list(state.topics)
    resolved = []
    for topic_id in cmd.selected_topic_ids:
        if topic_id not in state.topics:
            raise UnknownNodeError(topic_id)
        if topic_id not in resolved:
            resolved.append(topic_id)
    return resolved


def current_outline_json(state: CanvasState, topic_ids: Sequence[str]) -> str:
    """Serialize the in-scope subtrees in the outline exchange format.

    An entity's "type" carries its round so the model can echo it unchanged
    for existing entities, per the template's instruction.
    """
    outline = []
    for topic_id in topic_ids:
        topic = state.topics[topic_id]
        outline.append({
            "topic": topic.label,
            "entities": [
                {"type": c.round, "text": c.text}
                for c in state.children(topic_id)
            ],
        })
    return json.dumps(outline, indent=2, ensure_ascii=False)


def build_reorg_prompt(state: CanvasState, cmd: RestructureCommand) -> ChatRequest:
    topic_ids = scope_topic_ids(state, cmd)
    full_text = "\n\n".join(state.full_transcript)
    user_message = (
        "Current outline:\n"
        f"{current_outline_json(state, topic_ids)}\n\n"
        "User's full text:\n"
        f"{full_text}\n\n"
        "Instructions:\n"
        f"{cmd.instruction.strip()}"
    )
    return ChatRequest(
        system_prompt=prompts.REORGANIZATION_SYSTEM_PROMPT,
        user_message=user_message,
        response_format_hint=ResponseFormat.JSON_EXPECTED,
    )


def parse_reorg_response(raw: str, state: CanvasState,
                         topic_ids: Sequence[str]) -> ReorgOutline:
    """Parse the model's outline and match entities to in-scope nodes by text.

    Matching is textual (case-insensitive, trimmed) because the exchange
    format round-trips entities as plain sentences. Each canvas node is
    consumed at most once; surplus occurrences of the same text become New.
    """
    data = extract_json(raw)
    if not isinstance(data, list):
        raise SchemaViolationError("expected a JSON array of outline groups")

    in_scope = set(topic_ids)
    pool: dict[str, list[str]] = {}  # normalized text -> unclaimed node ids
    for content in state.contents.values():
        if content.parent in in_scope:
            pool.setdefault(content.text.strip().lower(), []).append(content.id)

    groups: list[OutlineGroup] = []
    for item in data:
        if not isinstance(item, dict):
            raise SchemaViolationError("each outline group must be an object")
        label = item.get("topic")
        entities = item.get("entities")
        if not isinstance(label, str) or not label.strip():
            raise SchemaViolationError("outline topic must be a non-empty string")
        if not isinstance(entities, list):
            raise SchemaViolationError(f"outline group {label!r} entities must be a list")
        parsed: list[OutlineEntity] = []
        for entity in entities:
            if not isinstance(entity, dict):
                raise SchemaViolationError(f"group {label!r} has a non-object entity")
            text = entity.get("text")
            if not isinstance(text, str) or not text.strip():
                raise SchemaViolationError(f"group {label!r} has an entity without text")
            if "type" in entity and not isinstance(entity["type"], int):
                raise SchemaViolationError(f"group {label!r} has a non-integer entity type")
            candidates = pool.get(text.strip().lower())
            if candidates:
                parsed.append(OutlineEntity(
                    origin=EntityOrigin.EXISTING,
                    text=text.strip(),
                    node_id=candidates.pop(0),
                ))
            else:
                parsed.append(OutlineEntity(origin=EntityOrigin.NEW, text=text.strip()))
        groups.append(OutlineGroup(topic_label=label.strip(), entities=tuple(parsed)))
    return ReorgOutline(groups=tuple(groups))


@dataclass
class _Rewrite:
    """Planned canvas rewrite, computed before any mutation."""
    reused: dict[str, str] = field(default_factory=dict)   # group index key -> topic id
    new_labels: list[str] = field(default_factory=list)
    new_parent: dict[str, object] = field(default_factory=dict)  # content id -> topic id or label key
    new_entities: list[tuple[object, str]] = field(default_factory=list)  # (target, text)
    orphan_ids: list[str] = field(default_factory=list)
    needs_unsorted: bool = False


def apply_reorganization(state: CanvasState, cmd: RestructureCommand,
                         outline: ReorgOutline, providers: Providers,
                         id_gen: NodeIdGenerator, params: LayoutParams) -> CanvasState:
    """Rewrite the in-scope canvas to the outline; pure with respect to state."""
    topic_ids = scope_topic_ids(state, cmd)
    in_scope = set(topic_ids)
    label_to_topic = {t.label.strip().lower(): t.id for t in state.topics.values()}

    # Plan the rewrite against the input state. Targets are either a concrete
    # topic id or ("new", label_key) for a topic created below.
    plan = _Rewrite()
    claimed: set[str] = set()
    for group in outline.groups:
        key = group.topic_label.strip().lower()
        target: object
        existing = label_to_topic.get(key)
        if existing is not None:
            target = existing
        else:
            if key not in plan.reused:
                plan.reused[key] = ""
                plan.new_labels.append(group.topic_label)
            target = ("new", key)
        for entity in group.entities:
            if entity.origin is EntityOrigin.EXISTING:
                assert entity.node_id is not None
                if entity.node_id in claimed:
                    continue
                claimed.add(entity.node_id)
                plan.new_parent[entity.node_id] = target
            else:
                plan.new_entities.append((target, entity.text))

    for content in state.contents.values():
        if content.parent in in_scope and content.id not in claimed:
            plan.orphan_ids.append(content.id)
    plan.needs_unsorted = bool(plan.orphan_ids)

    unsorted_id = label_to_topic.get(UNSORTED_LABEL.lower())
    unsorted_is_new = plan.needs_unsorted and unsorted_id is None

    # Provider work happens before any ids are allocated or state is cloned,
    # so failures cannot leave partial effects anywhere.
    texts: list[str] = list(plan.new_labels)
    if unsorted_is_new:
        texts.append(UNSORTED_LABEL)
    texts.extend(text for _, text in plan.new_entities)
    embeddings: dict[str, tuple[float, ...]] = {}
    if texts:
        unique = list(dict.fromkeys(texts))
        vectors = providers.embedding.embed(EmbeddingRequest(texts=tuple(unique)))
        embeddings = dict(zip(unique, vectors))

    new_state = clone_canvas(state)
    round_now = new_state.current_round

    new_topic_ids: list[str] = []
    for label in plan.new_labels:
        tid = id_gen.next_topic()
        new_state.topics[tid] = TopicNode(
            id=tid,
            label=label,
            position=(0.0, 0.0),
            embedding=embeddings[label],
            created_round=round_now,
        )
        plan.reused[label.strip().lower()] = tid
        new_topic_ids.append(tid)
    if unsorted_is_new:
        unsorted_id = id_gen.next_topic()
        new_state.topics[unsorted_id] = TopicNode(
            id=unsorted_id,
            label=UNSORTED_LABEL,
            position=(0.0, 0.0),
            embedding=embeddings[UNSORTED_LABEL],
            created_round=round_now,
        )
        new_topic_ids.append(unsorted_id)

    def resolve(target: object) -> str:
        if isinstance(target, tuple):
            return plan.reused[target[1]]
        return target

    moved_content_ids: list[str] = []
    for content_id, target in plan.new_parent.items():
        parent = resolve(target)
        node = new_state.contents[content_id]
        if node.parent != parent:
            node.parent = parent
            moved_content_ids.append(content_id)
    for content_id in plan.orphan_ids:
        node = new_state.contents[content_id]
        if node.parent != unsorted_id:
            assert unsorted_id is not None
            node.parent = unsorted_id
            moved_content_ids.append(content_id)

    new_content_ids: list[str] = []
    for target, text in plan.new_entities:
        cid = id_gen.next_content()
        parent = resolve(target)
        new_state.contents[cid] = ContentNode(
            id=cid,
            text=text,
            parent=parent,
            round=round_now,
            kind=NodeKind.USER_CONTENT,
            position=new_state.topics[parent].position,
            embedding=embeddings[text],
        )
        new_content_ids.append(cid)

    # In-scope topics the outline no longer mentions disappear; their former
    # children have all been re-parented or orphaned above.
    surviving = set(plan.reused.values()) | {
        tid for tid in new_state.topics
        if tid not in in_scope
    }
    for group in outline.groups:
        key = group.topic_label.strip().lower()
        existing = label_to_topic.get(key)
        if existing is not None:
            surviving.add(existing)
    if unsorted_id is not None and plan.needs_unsorted:
        surviving.add(unsorted_id)
    for topic_id in topic_ids:
        if topic_id not in surviving:
            del new_state.topics[topic_id]

    touched = set(moved_content_ids) | set(new_content_ids)
    new_state.conflicts = [
        edge for edge in new_state.conflicts
        if edge.a not in touched and edge.b not in touched
        and edge.a in new_state.contents and edge.b in new_state.contents
    ]

    new_state = layout_update(
        new_state, new_topic_ids, moved_content_ids + new_content_ids, params,
    )
    # Refinement is global, but local commands must leave out-of-scope nodes
    # bit-identical; restore their positions after the layout pass.
    if cmd.scope is Scope.LOCAL:
        for content in state.contents.values():
            if content.parent not in in_scope:
                new_state.contents[content.id].position = content.position
    return new_state


def restructure_canvas(state: CanvasState, cmd: RestructureCommand,
                       providers: Providers, id_gen: NodeIdGenerator,
                       params: LayoutParams) -> CanvasState:
    """Run the full instruction-to-canvas pipeline for one command."""
    topic_ids = scope_topic_ids(state, cmd)
    request = build_reorg_prompt(state, cmd)
    outline = request_parsed(
        providers.chat,
        request,
        lambda raw: parse_reorg_response(raw, state, topic_ids),
    )
    return apply_reorganization(state, cmd, outline, providers, id_gen, params)
