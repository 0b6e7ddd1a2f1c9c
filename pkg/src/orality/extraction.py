"""Transcript ingestion: one dictation turn becomes topics and content nodes.

The model groups a finalized transcript into topics carrying one to three
short-sentence entities each. Groups whose label matches an existing topic
(case-insensitive, trimmed) extend it; everything else becomes a new topic.
The whole operation is atomic: any provider or parse failure leaves the
caller's state untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
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

MAX_ENTITIES_PER_GROUP = 3


class EmptyTranscriptError(ValueError):
    pass


class NothingExtractedError(RuntimeError):
    """The model found nothing new in a non-empty transcript."""


@dataclass(frozen=True)
class ExtractionGroup:
    topic_label: str
    entities: tuple[str, ...]


@dataclass(frozen=True)
class ExtractionResult:
    groups: tuple[ExtractionGroup, ...]


def build_extraction_prompt(transcript: str, existing_topics: Sequence[str] = (),
                            selection: Sequence[str] | None = None) -> ChatRequest:
    """Assemble the extraction request for one dictation turn.

    A non-empty selection constrains output topics to the selected labels;
    otherwise existing labels are offered as extend-or-create candidates.
    """
    if not transcript.strip():
        raise EmptyTranscriptError("transcript is empty")
    system = prompts.EXTRACTION_SYSTEM_PROMPT
    if selection:
        labels = ", ".join(f'"{label}"' for label in selection)
        system += "\n\n" + prompts.EXTRACTION_SELECTION_NOTE.format(labels=labels)
    elif existing_topics:
        labels = ", ".join(f'"{label}"' for label in existing_topics)
        system += "\n\n" + prompts.EXTRACTION_EXISTING_TOPICS_NOTE.format(labels=labels)
    return ChatRequest(
        system_prompt=system,
        user_message=transcript.strip(),
        response_format_hint=ResponseFormat.JSON_EXPECTED,
    )


def parse_extraction_response(raw: str) -> ExtractionResult:
    """Strict parse of the extraction output format."""
    data = extract_json(raw)
    if not isinstance(data, list):
        raise SchemaViolationError("expected a JSON array of topic groups")
    groups: list[ExtractionGroup] = []
    for item in data:
        if not isinstance(item, dict):
            raise SchemaViolationError("each group must be an object")
        label = item.get("topic")
        entities = item.get("entities")
        if not isinstance(label, str) or not label.strip():
            raise SchemaViolationError("group topic must be a non-empty string")
        if not isinstance(entities, list):
            raise SchemaViolationError(f"group {label!r} entities must be a list")
        if not 1 <= len(entities) <= MAX_ENTITIES_PER_GROUP:
            raise SchemaViolationError(
                f"group {label!r} has {len(entities)} entities, expected 1..{MAX_ENTITIES_PER_GROUP}"
            )
        cleaned: list[str] = []
        for entity in entities:
            if not isinstance(entity, str) or not entity.strip():
                raise SchemaViolationError(f"group {label!r} has a non-string or empty entity")
            text = entity.strip()
            if text in cleaned:
                raise SchemaViolationError(f"group {label!r} repeats entity {text!r}")
            cleaned.append(text)
        groups.append(ExtractionGroup(topic_label=label.strip(), entities=tuple(cleaned)))
    return ExtractionResult(groups=tuple(groups))


def _scoped_parse(selection_labels: Sequence[str] | None):
    allowed = None if selection_labels is None else {
        label.strip().lower() for label in selection_labels
    }

    def parse(raw: str) -> ExtractionResult:
        result = parse_extraction_response(raw)
        if allowed is not None:
            for group in result.groups:
                if group.topic_label.strip().lower() not in allowed:
                    raise SchemaViolationError(
                        f"topic {group.topic_label!r} is not one of the selected topics"
                    )
        return result

    return parse


def ingest_transcript(state: CanvasState, transcript: str, providers: Providers,
                      id_gen: NodeIdGenerator, params: LayoutParams,
                      selection: Sequence[str] | None = None,
                      ) -> tuple[CanvasState, list[str]]:
    """Ingest one dictation turn; returns the updated state and created node ids."""
    if not transcript.strip():
        raise EmptyTranscriptError("transcript is empty")

    selection_labels: list[str] | None = None
    if selection:
        selection_labels = []
        for topic_id in selection:
            topic = state.topics.get(topic_id)
            if topic is None:
                raise UnknownNodeError(topic_id)
            selection_labels.append(topic.label)

    request = build_extraction_prompt(
        transcript,
        existing_topics=[t.label for t in state.topics.values()],
        selection=selection_labels,
    )
    result = request_parsed(providers.chat, request, _scoped_parse(selection_labels))
    if not result.groups:
        raise NothingExtractedError("nothing extracted from transcript")

    # Plan node creation against the current state before touching anything,
    # so provider failures below leave the input state untouched.
    existing_label_to_id = {
        t.label.strip().lower(): t.id for t in state.topics.values()
    }
    plan: list[tuple[str | None, str, list[str]]] = []  # (topic_id, label, entities)
    pending_labels: dict[str, int] = {}
    pending_entities: dict[str, set[str]] = {}
    for group in result.groups:
        key = group.topic_label.strip().lower()
        topic_id = existing_label_to_id.get(key)
        if topic_id is None and key in pending_labels:
            topic_id = None  # the earlier group in this call creates it
        seen = pending_entities.setdefault(key, set())
        if topic_id is not None:
            seen |= {
                c.text.strip().lower()
                for c in state.children(topic_id)
            }
        kept = []
        for entity in group.entities:
            norm = entity.strip().lower()
            if norm in seen:
                continue  # duplicates of on-canvas statements are dropped silently
            seen.add(norm)
            kept.append(entity)
        creates_topic = topic_id is None and key not in pending_labels
        if creates_topic:
            pending_labels[key] = 1
        plan.append((topic_id, group.topic_label, kept))

    new_topic_labels = []
    new_entity_texts = []
    for topic_id, label, kept in plan:
        if topic_id is None and label.strip().lower() not in {
            l.strip().lower() for l in new_topic_labels
        }:
            new_topic_labels.append(label)
        new_entity_texts.extend(kept)
    if not new_entity_texts and not new_topic_labels:
        raise NothingExtractedError("every extracted statement is already on the canvas")

    texts = new_topic_labels + new_entity_texts
    vectors = providers.embedding.embed(EmbeddingRequest(texts=tuple(texts)))
    embeddings = dict(zip(texts, vectors))

    new_state = clone_canvas(state)
    new_round = new_state.current_round + 1
    new_state.current_round = new_round
    new_state.full_transcript.append(transcript)

    created_ids: list[str] = []
    new_topic_ids: list[str] = []
    new_content_ids: list[str] = []
    created_by_label: dict[str, str] = {}
    for topic_id, label, kept in plan:
        key = label.strip().lower()
        target = topic_id or created_by_label.get(key)
        if target is None:
            target = id_gen.next_topic()
            new_state.topics[target] = TopicNode(
                id=target,
                label=label,
                position=(0.0, 0.0),
                embedding=embeddings[label],
                created_round=new_round,
            )
            created_by_label[key] = target
            created_ids.append(target)
            new_topic_ids.append(target)
        for entity in kept:
            cid = id_gen.next_content()
            new_state.contents[cid] = ContentNode(
                id=cid,
                text=entity,
                parent=target,
                round=new_round,
                kind=NodeKind.USER_CONTENT,
                position=new_state.topics[target].position,
                embedding=embeddings[entity],
            )
            created_ids.append(cid)
            new_content_ids.append(cid)

    new_state = layout_update(new_state, new_topic_ids, new_content_ids, params)
    return new_state, created_ids
