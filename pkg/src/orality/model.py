"""Domain model for the semantic canvas.

Two node species live on the canvas: topic hubs and short-sentence content
entities attached to exactly one topic. Conflict edges link pairs of content
nodes the assistant judged logically incompatible. ``CanvasState`` bundles
everything a session mutates; it is a plain value that is deep-copied into
snapshots, so nothing in here may hold hidden shared state.

Canvas coordinates are abstract units with the origin at the canvas center;
pixel scaling is a client concern.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

Vector = tuple[float, ...]
Point = tuple[float, float]

UNIT_NORM_TOLERANCE = 1e-6


class UnknownNodeError(KeyError):
    """An operation referenced a node id that is not on the canvas."""


class NodeKind(Enum):
    USER_CONTENT = "user_content"
    AI_QUESTION = "ai_question"


class ConflictType(Enum):
    """The conflict categories the detector is allowed to report."""

    DIRECT_CONTRADICTION = "Direct Contradiction"
    LOGICAL_INCONSISTENCY = "Logical Inconsistency"
    VALUE_CONFLICT = "Value Conflict"
    STRATEGY_CONFLICT = "Strategy Conflict"
    ASSUMPTION_CONFLICT = "Assumption Conflict"

    @classmethod
    def parse(cls, label: str) -> "ConflictType | None":
        """Map a free-form label to a known conflict type, or None."""
        key = re.sub(r"[^a-z]+", " ", label.lower()).strip()
        for member in cls:
            if re.sub(r"[^a-z]+", " ", member.value.lower()).strip() == key:
                return member
        return None


@dataclass
class TopicNode:
    """A topic hub: a labeled anchor that groups extracted statements."""

    id: str
    label: str
    position: Point
    embedding: Vector
    created_round: int


@dataclass
class ContentNode:
    """A short complete sentence attached to one topic.

    ``round`` records the dictation turn that produced the node and drives
    per-round coloring in clients. ``home_position`` is the radial slot the
    layout assigned; the refinement stage springs the node back toward it.
    """

    id: str
    text: str
    parent: str
    round: int
    kind: NodeKind
    position: Point
    embedding: Vector
    home_position: Point = (0.0, 0.0)


@dataclass
class ConflictEdge:
    """A detected contradiction between two user content nodes."""

    a: str
    b: str
    conflict_type: ConflictType
    confidence: int
    reason: str

    def pair(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


@dataclass
class PcaBasis:
    """Frozen 2D projection basis for topic placement.

    ``axis1``/``axis2`` are orthonormal directions in embedding space;
    ``scale`` converts projection lengths to canvas units; ``fitted_on``
    records how many topics existed at fit time (drives the refit policy).
    """

    mean: Vector
    axis1: Vector
    axis2: Vector
    scale: float
    fitted_on: int


@dataclass
class CanvasState:
    """The full mutable state of one canvas session."""

    topics: dict[str, TopicNode] = field(default_factory=dict)
    contents: dict[str, ContentNode] = field(default_factory=dict)
    conflicts: list[ConflictEdge] = field(default_factory=list)
    current_round: int = 0
    layout_basis: PcaBasis | None = None
    full_transcript: list[str] = field(default_factory=list)

    def topic_by_label(self, label: str) -> TopicNode | None:
        """Case-insensitive, trimmed label lookup."""
        wanted = label.strip().lower()
        for topic in self.topics.values():
            if topic.label.strip().lower() == wanted:
                return topic
        return None

    def children(self, topic_id: str) -> list[ContentNode]:
        return [c for c in self.contents.values() if c.parent == topic_id]

    def user_contents(self) -> list[ContentNode]:
        return [c for c in self.contents.values() if c.kind is NodeKind.USER_CONTENT]

    def max_round(self) -> int:
        rounds = [t.created_round for t in self.topics.values()]
        rounds += [c.round for c in self.contents.values()]
        return max(rounds, default=0)


def clone_canvas(state: CanvasState) -> CanvasState:
    return copy.deepcopy(state)


class NodeIdGenerator:
    """Monotonic counter-based ids ("t-3", "c-17"); never reused in a session.

    Counters live outside CanvasState on purpose: restoring an old snapshot
    must not make the session hand out ids that later snapshots already use.
    """

    def __init__(self) -> None:
        self._next_topic = 1
        self._next_content = 1

    def next_topic(self) -> str:
        nid = f"t-{self._next_topic}"
        self._next_topic += 1
        return nid

    def next_content(self) -> str:
        nid = f"c-{self._next_content}"
        self._next_content += 1
        return nid

    def observe(self, ids: Iterable[str]) -> None:
        """Bump counters past any ids already in use (session reload)."""
        for nid in ids:
            match = re.fullmatch(r"([tc])-(\d+)", nid)
            if not match:
                continue
            value = int(match.group(2)) + 1
            if match.group(1) == "t":
                self._next_topic = max(self._next_topic, value)
            else:
                self._next_content = max(self._next_content, value)


def _norm(vector: Vector) -> float:
    return math.sqrt(sum(x * x for x in vector))


def validate_canvas(state: CanvasState) -> list[str]:
    """Structural validation; returns one message per violation, never raises."""
    problems: list[str] = []

    dims = {len(t.embedding) for t in state.topics.values()}
    dims |= {len(c.embedding) for c in state.contents.values()}
    if state.layout_basis is not None:
        dims.add(len(state.layout_basis.mean))
    if len(dims) > 1:
        problems.append(f"mixed embedding dimensions {sorted(dims)}")

    shared = set(state.topics) & set(state.contents)
    for nid in sorted(shared):
        problems.append(f"node id {nid} used by both a topic and a content node")

    for tid, topic in state.topics.items():
        if tid != topic.id:
            problems.append(f"topic {topic.id} stored under key {tid}")
        if not topic.label.strip():
            problems.append(f"topic {topic.id} has an empty label")
        if topic.created_round < 1:
            problems.append(f"topic {topic.id} has created_round {topic.created_round} < 1")
        if abs(_norm(topic.embedding) - 1.0) > UNIT_NORM_TOLERANCE:
            problems.append(f"topic {topic.id} embedding is not unit-norm")

    for cid, content in state.contents.items():
        if cid != content.id:
            problems.append(f"content {content.id} stored under key {cid}")
        if not content.text.strip():
            problems.append(f"content {content.id} has empty text")
        if content.parent not in state.topics:
            problems.append(f"content {content.id} has dangling parent {content.parent}")
        if content.round < 1:
            problems.append(f"content {content.id} has round {content.round} < 1")
        elif content.round > state.current_round:
            problems.append(
                f"content {content.id} round {content.round} exceeds current round "
                f"{state.current_round}"
            )
        if abs(_norm(content.embedding) - 1.0) > UNIT_NORM_TOLERANCE:
            problems.append(f"content {content.id} embedding is not unit-norm")

    seen_pairs: set[tuple[str, str]] = set()
    for edge in state.conflicts:
        if edge.a == edge.b:
            problems.append(f"conflict edge joins {edge.a} to itself")
        for endpoint in (edge.a, edge.b):
            node = state.contents.get(endpoint)
            if node is None:
                problems.append(f"conflict edge endpoint {endpoint} does not resolve")
            elif node.kind is not NodeKind.USER_CONTENT:
                problems.append(f"conflict edge endpoint {endpoint} is not user content")
        if not 1 <= edge.confidence <= 10:
            problems.append(
                f"conflict edge {edge.a}~{edge.b} confidence {edge.confidence} outside [1,10]"
            )
        pair = edge.pair()
        if pair in seen_pairs:
            problems.append(f"duplicate conflict edge for pair {pair[0]}~{pair[1]}")
        seen_pairs.add(pair)

    if state.current_round < 0:
        problems.append(f"current_round {state.current_round} < 0")
    expected = state.max_round()
    if state.current_round != expected:
        problems.append(
            f"current_round {state.current_round} != max node round {expected}"
        )

    return problems


def content_counts(state: CanvasState) -> dict[str, int]:
    """Per-topic count of user content children; AI questions never count."""
    counts = {tid: 0 for tid in state.topics}
    for content in state.contents.values():
        if content.kind is NodeKind.USER_CONTENT:
            counts[content.parent] = counts.get(content.parent, 0) + 1
    return counts


def move_node(state: CanvasState, node_id: str, x: float, y: float) -> CanvasState:
    """Return a copy with one node dragged to (x, y).

    Dragging a content node re-homes it so the refinement spring respects
    the user's placement instead of fighting it.
    """
    new_state = clone_canvas(state)
    if node_id in new_state.topics:
        new_state.topics[node_id].position = (float(x), float(y))
    elif node_id in new_state.contents:
        node = new_state.contents[node_id]
        node.position = (float(x), float(y))
        node.home_position = (float(x), float(y))
    else:
        raise UnknownNodeError(node_id)
    return new_state


def delete_node(state: CanvasState, node_id: str) -> CanvasState:
    """Return a copy with the node removed.

    Topic deletion cascades to its content nodes; conflict edges touching any
    removed content are dropped so no dangling references survive.
    """
    new_state = clone_canvas(state)
    removed_contents: set[str] = set()
    if node_id in new_state.topics:
        del new_state.topics[node_id]
        removed_contents = {c.id for c in new_state.contents.values() if c.parent == node_id}
        for cid in removed_contents:
            del new_state.contents[cid]
    elif node_id in new_state.contents:
        del new_state.contents[node_id]
        removed_contents = {node_id}
    else:
        raise UnknownNodeError(node_id)
    new_state.conflicts = [
        e for e in new_state.conflicts
        if e.a not in removed_contents and e.b not in removed_contents
    ]
    new_state.current_round = new_state.max_round()
    return new_state


# --- serialization -----------------------------------------------------------
# The session file format and the canvas_update wire payload share this shape.

def _point_to_list(p: Point) -> list[float]:
    return [float(p[0]), float(p[1])]


def canvas_to_dict(state: CanvasState) -> dict[str, Any]:
    basis = state.layout_basis
    return {
        "topics": [
            {
                "id": t.id,
                "label": t.label,
                "position": _point_to_list(t.position),
                "embedding": list(t.embedding),
                "created_round": t.created_round,
            }
            for t in state.topics.values()
        ],
        "contents": [
            {
                "id": c.id,
                "text": c.text,
                "parent": c.parent,
                "round": c.round,
                "kind": c.kind.value,
                "position": _point_to_list(c.position),
                "home_position": _point_to_list(c.home_position),
                "embedding": list(c.embedding),
            }
            for c in state.contents.values()
        ],
        "conflicts": [
            {
                "a": e.a,
                "b": e.b,
                "conflict_type": e.conflict_type.value,
                "confidence": e.confidence,
                "reason": e.reason,
            }
            for e in state.conflicts
        ],
        "current_round": state.current_round,
        "layout_basis": None if basis is None else {
            "mean": list(basis.mean),
            "axis1": list(basis.axis1),
            "axis2": list(basis.axis2),
            "scale": basis.scale,
            "fitted_on": basis.fitted_on,
        },
        "full_transcript": list(state.full_transcript),
    }


def canvas_from_dict(data: dict[str, Any]) -> CanvasState:
    basis_data = data.get("layout_basis")
    basis = None
    if basis_data is not None:
        basis = PcaBasis(
            mean=tuple(float(x) for x in basis_data["mean"]),
            axis1=tuple(float(x) for x in basis_data["axis1"]),
            axis2=tuple(float(x) for x in basis_data["axis2"]),
            scale=float(basis_data["scale"]),
            fitted_on=int(basis_data["fitted_on"]),
        )
    state = CanvasState(
        current_round=int(data["current_round"]),
        layout_basis=basis,
        full_transcript=[str(t) for t in data.get("full_transcript", [])],
    )
    for t in data["topics"]:
        state.topics[t["id"]] = TopicNode(
            id=t["id"],
            label=t["label"],
            position=(float(t["position"][0]), float(t["position"][1])),
            embedding=tuple(float(x) for x in t["embedding"]),
            created_round=int(t["created_round"]),
        )
    for c in data["contents"]:
        state.contents[c["id"]] = ContentNode(
            id=c["id"],
            text=c["text"],
            parent=c["parent"],
            round=int(c["round"]),
            kind=NodeKind(c["kind"]),
            position=(float(c["position"][0]), float(c["position"][1])),
            home_position=(float(c["home_position"][0]), float(c["home_position"][1])),
            embedding=tuple(float(x) for x in c["embedding"]),
        )
    for e in data.get("conflicts", []):
        conflict_type = ConflictType.parse(e["conflict_type"])
        if conflict_type is None:
            raise ValueError(f"unknown conflict type {e['conflict_type']!r}")
        state.conflicts.append(
            ConflictEdge(
                a=e["a"],
                b=e["b"],
                conflict_type=conflict_type,
                confidence=int(e["confidence"]),
                reason=e["reason"],
            )
        )
    return state
