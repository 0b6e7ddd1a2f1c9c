"""Two-stage semantic layout.

Stage one places topic hubs by projecting their embeddings onto a 2D PCA
basis, preserving every already-placed topic bit-exactly; content nodes get
radial slots around their parent instead of joining the global projection,
so they never drift away from their cluster. Stage two runs a fixed number
of attractive-force iterations that nudge content toward semantically
related non-parent topics, bounded by a home spring and a per-iteration
step clamp.

The basis is fitted once when topics first appear and then frozen, which is
what makes position preservation exact; it is refitted only after the topic
count has at least doubled, and even then only newly added topics adopt the
refit projection.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import CanvasState, PcaBasis, Point, Vector, clone_canvas

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
TWO_PI = 2.0 * math.pi

_DEGENERATE_EPS = 1e-9


class LayoutError(ValueError):
    pass


@dataclass
class LayoutParams:
    """Tunable layout constants; defaults fit a 4-topic canvas in 2000x1200 units."""

    tau: float = 0.3
    radial_radius: float = 160.0
    step_max: float = 12.0
    iterations: int = 30
    force_gain: float = 0.15
    min_separation: float = 40.0
    canvas_extent: float = 600.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.tau < 1.0:
            raise ValueError(f"tau {self.tau} outside [0, 1)")
        for name in ("radial_radius", "step_max", "force_gain",
                     "min_separation", "canvas_extent"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return sum(a * b for a, b in zip(u, v)) / (nu * nv)


def _sign_normalize(axis: np.ndarray) -> np.ndarray:
    """Flip so the first non-negligible coordinate is positive (reproducibility)."""
    for value in axis:
        if abs(value) > 1e-12:
            return -axis if value < 0 else axis
    return axis


def fit_pca_basis(embeddings: Sequence[Vector], canvas_extent: float) -> PcaBasis:
    """Fit the 2D projection basis for topic placement.

    Axes are the top-2 principal directions of the sample, computed by SVD of
    the centered matrix; scale maps the largest fitted projection to 80% of
    the canvas extent. Degenerate samples (all identical, or fewer than two
    embedding dimensions of spread) fall back to the first two canonical
    directions with every projection at the origin.
    """
    if len(embeddings) == 0:
        raise LayoutError("cannot fit a basis on zero embeddings")
    if canvas_extent <= 0:
        raise LayoutError("canvas_extent must be positive")
    matrix = np.asarray(embeddings, dtype=np.float64)
    n, dim = matrix.shape
    if dim < 2:
        raise LayoutError("embedding dimension must be at least 2")
    mean = matrix.mean(axis=0)
    centered = matrix - mean

    def fallback() -> PcaBasis:
        axis1 = np.zeros(dim)
        axis2 = np.zeros(dim)
        axis1[0] = 1.0
        axis2[1] = 1.0
        return PcaBasis(
            mean=tuple(mean.tolist()),
            axis1=tuple(axis1.tolist()),
            axis2=tuple(axis2.tolist()),
            scale=1.0,
            fitted_on=n,
        )

    if n < 2 or float(np.abs(centered).max()) < _DEGENERATE_EPS:
        return fallback()

    _, singular, vt = np.linalg.svd(centered, full_matrices=True)
    axis1 = _sign_normalize(vt[0])
    axis2 = _sign_normalize(vt[1])
    if singular[0] < _DEGENERATE_EPS:
        return fallback()

    proj1 = centered @ axis1
    proj2 = centered @ axis2
    largest = max(float(np.abs(proj1).max()), float(np.abs(proj2).max()))
    scale = 0.8 * canvas_extent / largest if largest > _DEGENERATE_EPS else 1.0
    return PcaBasis(
        mean=tuple(mean.tolist()),
        axis1=tuple(axis1.tolist()),
        axis2=tuple(axis2.tolist()),
        scale=scale,
        fitted_on=n,
    )


def project_point(basis: PcaBasis, embedding: Vector) -> Point:
    mean = np.asarray(basis.mean)
    offset = np.asarray(embedding, dtype=np.float64) - mean
    return (
        basis.scale * float(offset @ np.asarray(basis.axis1)),
        basis.scale * float(offset @ np.asarray(basis.axis2)),
    )


def angle_offset(node_id: str) -> float:
    """Per-parent golden-angle offset; derived from the id's counter when present."""
    match = re.search(r"(\d+)$", node_id)
    if match:
        index = int(match.group(1))
    else:
        index = int.from_bytes(hashlib.sha256(node_id.encode()).digest()[:4], "big") % 1024
    return (index * GOLDEN_ANGLE) % TWO_PI


def _separate(position: Point, anchors: list[Point], min_separation: float,
              fallback_angle: float) -> Point:
    """Push a fresh position radially away from any anchor closer than min_separation."""
    x, y = position
    for _ in range(32):
        moved = False
        for ax, ay in anchors:
            dx, dy = x - ax, y - ay
            dist = math.hypot(dx, dy)
            if dist >= min_separation:
                continue
            if dist < 1e-9:
                ux, uy = math.cos(fallback_angle), math.sin(fallback_angle)
            else:
                ux, uy = dx / dist, dy / dist
            x, y = ax + ux * min_separation, ay + uy * min_separation
            moved = True
        if not moved:
            break
    return (x, y)


def _project_topics_inplace(state: CanvasState, basis: PcaBasis,
                            new_topic_ids: Iterable[str],
                            min_separation: float) -> None:
    new_ids = set(new_topic_ids)
    unknown = new_ids - set(state.topics)
    if unknown:
        raise LayoutError(f"unknown topic ids {sorted(unknown)}")
    placed = [t.position for t in state.topics.values() if t.id not in new_ids]
    for topic in state.topics.values():
        if topic.id not in new_ids:
            continue
        projected = project_point(basis, topic.embedding)
        topic.position = _separate(projected, placed, min_separation,
                                   angle_offset(topic.id))
        placed.append(topic.position)


def project_topics(state: CanvasState, basis: PcaBasis,
                   new_topic_ids: Iterable[str],
                   min_separation: float = LayoutParams.min_separation) -> CanvasState:
    """Place only the named topics from the basis; every other topic keeps
    its stored position bit-exactly."""
    if basis is None:
        raise LayoutError("no basis fitted")
    new_state = clone_canvas(state)
    _project_topics_inplace(new_state, basis, new_topic_ids, min_separation)
    return new_state


def _place_content_radial_inplace(state: CanvasState, new_content_ids: Iterable[str],
                                  params: LayoutParams) -> None:
    new_ids = set(new_content_ids)
    unknown = new_ids - set(state.contents)
    if unknown:
        raise LayoutError(f"unknown content ids {sorted(unknown)}")
    by_parent: dict[str, list] = {}
    for content in state.contents.values():
        by_parent.setdefault(content.parent, []).append(content)
    for parent_id, children in by_parent.items():
        if not any(c.id in new_ids for c in children):
            continue
        parent = state.topics.get(parent_id)
        if parent is None:
            raise LayoutError(f"content parent {parent_id} missing")
        count = len(children)
        offset = angle_offset(parent_id)
        for index, child in enumerate(children):
            if child.id not in new_ids:
                continue
            theta = TWO_PI * index / count + offset
            position = (
                parent.position[0] + params.radial_radius * math.cos(theta),
                parent.position[1] + params.radial_radius * math.sin(theta),
            )
            child.position = position
            child.home_position = position


def place_content_radial(state: CanvasState, new_content_ids: Iterable[str],
                         params: LayoutParams) -> CanvasState:
    new_state = clone_canvas(state)
    _place_content_radial_inplace(new_state, new_content_ids, params)
    return new_state


def _refine_forces_inplace(state: CanvasState, params: LayoutParams) -> None:
    contents = list(state.contents.values())
    topics = list(state.topics.values())
    if not contents or not topics:
        return

    # Similarities depend only on embeddings, so compute them once per call.
    content_embs = np.asarray([c.embedding for c in contents])
    topic_embs = np.asarray([t.embedding for t in topics])
    content_embs /= np.linalg.norm(content_embs, axis=1, keepdims=True)
    topic_embs /= np.linalg.norm(topic_embs, axis=1, keepdims=True)
    sims = content_embs @ topic_embs.T

    attractors: list[list[tuple[int, float]]] = []
    for ci, content in enumerate(contents):
        pulls = []
        for ti, topic in enumerate(topics):
            if topic.id == content.parent:
                continue
            sim = float(sims[ci, ti])
            if sim > params.tau:
                pulls.append((ti, params.force_gain * (sim - params.tau)))
        attractors.append(pulls)

    spring_gain = 2.0 * params.force_gain
    for _ in range(params.iterations):
        displacements: list[tuple[int, float, float]] = []
        for ci, content in enumerate(contents):
            x, y = content.position
            hx, hy = content.home_position
            fx = spring_gain * (hx - x)
            fy = spring_gain * (hy - y)
            for ti, gain in attractors[ci]:
                tx, ty = topics[ti].position
                fx += gain * (tx - x)
                fy += gain * (ty - y)
            magnitude = math.hypot(fx, fy)
            if magnitude == 0.0:
                continue
            if magnitude > params.step_max:
                ratio = params.step_max / magnitude
                fx *= ratio
                fy *= ratio
            displacements.append((ci, fx, fy))
        if not displacements:
            break
        for ci, fx, fy in displacements:
            x, y = contents[ci].position
            contents[ci].position = (x + fx, y + fy)


def refine_forces(state: CanvasState, params: LayoutParams) -> CanvasState:
    """Attractive-force refinement of content positions; topics never move."""
    new_state = clone_canvas(state)
    _refine_forces_inplace(new_state, params)
    return new_state


def layout_update(state: CanvasState, new_topic_ids: Iterable[str],
                  new_content_ids: Iterable[str], params: LayoutParams) -> CanvasState:
    """Run the full pipeline for an incremental canvas change.

    Fit-or-reuse basis, project the new topics, drop new content onto radial
    slots, then refine. Existing topic positions are never touched.
    """
    new_state = clone_canvas(state)
    if not new_state.topics:
        return new_state

    basis = new_state.layout_basis
    topic_count = len(new_state.topics)
    if basis is None or topic_count >= 2 * basis.fitted_on:
        basis = fit_pca_basis(
            [t.embedding for t in new_state.topics.values()],
            params.canvas_extent,
        )
        new_state.layout_basis = basis

    _project_topics_inplace(new_state, basis, new_topic_ids, params.min_separation)
    _place_content_radial_inplace(new_state, new_content_ids, params)
    _refine_forces_inplace(new_state, params)
    return new_state
