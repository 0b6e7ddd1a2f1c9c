"""AI stimulation features: guiding questions and conflict detection.

"Ask Me Questions" targets sparse topics (or an explicit selection) and
attaches one or two question nodes per topic. "Show Me Conflicts" sends
semantically close content pairs to the model and turns confident verdicts
into labeled edges. Both leave the input state untouched on failure.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import prompts
from .layout import LayoutParams, layout_update
from .model import (
    CanvasState,
    ConflictEdge,
    ConflictType,
    ContentNode,
    NodeIdGenerator,
    NodeKind,
    UnknownNodeError,
    clone_canvas,
    content_counts,
)
from .providers import (
    ChatRequest,
    EmbeddingRequest,
    MalformedJsonError,
    Providers,
    ResponseFormat,
    SchemaViolationError,
    extract_json,
    request_parsed,
)

CONFLICT_PREFILTER_TAU = 0.35
CONFLICT_MAX_PAIRS = 40
CONFLICT_REPORT_FLOOR = 6


class EmptyCanvasError(RuntimeError):
    pass


class NotEnoughContentError(RuntimeError):
    """Conflict detection needs at least two user statements."""


class QuestionGenerationError(RuntimeError):
    """Every targeted topic failed to produce valid questions."""


def select_question_targets(state: CanvasState,
                            selection: Sequence[str] | None = None) -> list[str]:
    """Pick the topics to ask about.

    An explicit selection wins. Otherwise topics with strictly below-median
    user-content counts are targeted; when no topic is below the median
    (including the all-equal case), the most recently created topic among
    those with the fewest contents is targeted alone.
    """
    if not state.topics:
        raise EmptyCanvasError("no topics to ask about")
    if selection:
        resolved = []
        for topic_id in selection:
            if topic_id not in state.topics:
                raise UnknownNodeError(topic_id)
            if topic_id not in resolved:
                resolved.append(topic_id)
        return resolved
    counts = content_counts(state)
    median = statistics.median(counts.values())
    below = [tid for tid in state.topics if counts[tid] < median]
    if below:
        return below
    fewest = min(counts.values())
    candidates = [tid for tid in state.topics if counts[tid] == fewest]
    return [max(candidates, key=lambda tid: (state.topics[tid].created_round,
                                             list(state.topics).index(tid)))]


def expected_question_count(state: CanvasState, topic_id: str) -> int:
    """Two questions for a sparse topic (at most one statement), else one."""
    user_count = sum(
        1 for c in state.children(topic_id) if c.kind is NodeKind.USER_CONTENT
    )
    return 2 if user_count <= 1 else 1


def build_questions_prompt(state: CanvasState, topic_id: str) -> ChatRequest:
    topic = state.topics[topic_id]
    entities = [
        c.text for c in state.children(topic_id)
        if c.kind is NodeKind.USER_CONTENT
    ]
    listing = "\n".join(f"- {text}" for text in entities) if entities else "(no content yet)"
    user_message = f"Topic: {topic.label}\n\nContent:\n{listing}"
    return ChatRequest(
        system_prompt=prompts.QUESTIONS_SYSTEM_PROMPT,
        user_message=user_message,
        response_format_hint=ResponseFormat.JSON_EXPECTED,
    )


def parse_questions_response(raw: str, expected: int) -> list[str]:
    data = extract_json(raw)
    if not isinstance(data, list):
        raise SchemaViolationError("expected a JSON array of question strings")
    questions = []
    for item in data:
        if not isinstance(item, str) or not item.strip():
            raise SchemaViolationError("each question must be a non-empty string")
        questions.append(item.strip())
    if len(questions) != expected:
        raise SchemaViolationError(
            f"expected {expected} question(s) for this topic, got {len(questions)}"
        )
    return questions


@dataclass
class QuestionsResult:
    state: CanvasState
    question_ids: list[str] = field(default_factory=list)
    skipped_topic_ids: list[str] = field(default_factory=list)


def generate_questions(state: CanvasState, targets: Sequence[str],
                       providers: Providers, id_gen: NodeIdGenerator,
                       params: LayoutParams) -> QuestionsResult:
    """Attach 1-2 AI question nodes to each target topic.

    A topic whose response stays invalid after the repair retry is skipped;
    only when every topic fails does the whole command fail.
    """
    for topic_id in targets:
        if topic_id not in state.topics:
            raise UnknownNodeError(topic_id)
    if not targets:
        raise EmptyCanvasError("no target topics")

    per_topic: list[tuple[str, list[str]]] = []
    skipped: list[str] = []
    for topic_id in targets:
        request = build_questions_prompt(state, topic_id)
        expected = expected_question_count(state, topic_id)
        try:
            questions = request_parsed(
                providers.chat, request,
                lambda raw: parse_questions_response(raw, expected),
            )
        except (MalformedJsonError, SchemaViolationError):
            skipped.append(topic_id)
            continue
        per_topic.append((topic_id, questions))
    if not per_topic:
        raise QuestionGenerationError(
            "question generation failed for every targeted topic"
        )

    texts = [q for _, questions in per_topic for q in questions]
    unique = list(dict.fromkeys(texts))
    vectors = providers.embedding.embed(EmbeddingRequest(texts=tuple(unique)))
    embeddings = dict(zip(unique, vectors))

    new_state = clone_canvas(state)
    round_now = new_state.current_round
    question_ids: list[str] = []
    for topic_id, questions in per_topic:
        for text in questions:
            cid = id_gen.next_content()
            new_state.contents[cid] = ContentNode(
                id=cid,
                text=text,
                parent=topic_id,
                round=round_now,
                kind=NodeKind.AI_QUESTION,
                position=new_state.topics[topic_id].position,
                embedding=embeddings[text],
            )
            question_ids.append(cid)
    new_state = layout_update(new_state, [], question_ids, params)
    return QuestionsResult(state=new_state, question_ids=question_ids,
                           skipped_topic_ids=skipped)


def enumerate_conflict_pairs(state: CanvasState,
                             prefilter_tau: float = CONFLICT_PREFILTER_TAU,
                             max_pairs: int = CONFLICT_MAX_PAIRS,
                             ) -> list[tuple[str, str]]:
    """All user-content pairs above the similarity prefilter, capped.

    Question nodes never participate. Output is ordered by similarity
    (high first) and is deterministic for a given canvas.
    """
    users = state.user_contents()
    if len(users) < 2:
        raise NotEnoughContentError("need at least two statements to compare")
    vectors = np.asarray([c.embedding for c in users], dtype=np.float64)
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    sims = vectors @ vectors.T
    scored = []
    for i in range(len(users)):
        for j in range(i + 1, len(users)):
            if sims[i, j] >= prefilter_tau:
                scored.append((float(sims[i, j]), users[i].id, users[j].id))
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))
    return [(a, b) for _, a, b in scored[:max_pairs]]


def build_conflicts_prompt(state: CanvasState,
                           pairs: Sequence[tuple[str, str]]) -> ChatRequest:
    blocks = []
    for pair_id, (a, b) in enumerate(pairs):
        blocks.append(
            f"Pair {pair_id}:\n"
            f"A: {state.contents[a].text}\n"
            f"B: {state.contents[b].text}"
        )
    return ChatRequest(
        system_prompt=prompts.CONFLICTS_SYSTEM_PROMPT,
        user_message="\n\n".join(blocks),
        response_format_hint=ResponseFormat.JSON_EXPECTED,
    )


def parse_conflicts_response(raw: str, pair_count: int,
                             floor: int = CONFLICT_REPORT_FLOOR,
                             ) -> tuple[list[tuple[int, ConflictType, int, str]], list[str]]:
    """Returns (kept records, warnings). Structural faults raise; out-of-range
    or unrecognized entries are dropped with a warning instead."""
    data = extract_json(raw)
    if not isinstance(data, list):
        raise SchemaViolationError("expected a JSON array of conflict records")
    kept: list[tuple[int, ConflictType, int, str]] = []
    warnings: list[str] = []
    seen_pairs: set[int] = set()
    for record in data:
        if not isinstance(record, dict):
            raise SchemaViolationError("each conflict record must be an object")
        missing = {"pair_id", "has_conflict", "conflict_type", "confidence", "reason"} \
            - set(record)
        if missing:
            raise SchemaViolationError(f"conflict record missing keys: {sorted(missing)}")
        pair_id = record["pair_id"]
        has_conflict = record["has_conflict"]
        confidence = record["confidence"]
        reason = record["reason"]
        if not isinstance(pair_id, int) or isinstance(pair_id, bool):
            raise SchemaViolationError("pair_id must be an integer")
        if not isinstance(has_conflict, bool):
            raise SchemaViolationError("has_conflict must be a boolean")
        if not isinstance(confidence, int) or isinstance(confidence, bool) \
                or not 1 <= confidence <= 10:
            raise SchemaViolationError("confidence must be an integer in 1..10")
        if not isinstance(reason, str):
            raise SchemaViolationError("reason must be a string")
        if not has_conflict:
            continue
        if not 0 <= pair_id < pair_count:
            warnings.append(f"dropped conflict with out-of-range pair_id {pair_id}")
            continue
        kind = ConflictType.parse(str(record["conflict_type"]))
        if kind is None:
            warnings.append(
                f"dropped conflict with unrecognized type {record['conflict_type']!r}"
            )
            continue
        if confidence < floor:
            continue
        if pair_id in seen_pairs:
            warnings.append(f"dropped duplicate conflict for pair {pair_id}")
            continue
        seen_pairs.add(pair_id)
        kept.append((pair_id, kind, confidence, reason))
    return kept, warnings


@dataclass
class ConflictsResult:
    state: CanvasState
    edges: list[ConflictEdge] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def detect_conflicts(state: CanvasState, providers: Providers,
                     prefilter_tau: float = CONFLICT_PREFILTER_TAU,
                     max_pairs: int = CONFLICT_MAX_PAIRS,
                     floor: int = CONFLICT_REPORT_FLOOR) -> ConflictsResult:
    """Replace the canvas's conflict edges with fresh model verdicts."""
    pairs = enumerate_conflict_pairs(state, prefilter_tau, max_pairs)
    if not pairs:
        new_state = clone_canvas(state)
        new_state.conflicts = []
        return ConflictsResult(state=new_state, edges=[])
    request = build_conflicts_prompt(state, pairs)
    kept, warnings = request_parsed(
        providers.chat, request,
        lambda raw: parse_conflicts_response(raw, len(pairs), floor),
    )
    edges = [
        ConflictEdge(a=pairs[pair_id][0], b=pairs[pair_id][1],
                     conflict_type=kind, confidence=confidence, reason=reason)
        for pair_id, kind, confidence, reason in kept
    ]
    new_state = clone_canvas(state)
    new_state.conflicts = edges
    return ConflictsResult(state=new_state, edges=edges, warnings=warnings)
