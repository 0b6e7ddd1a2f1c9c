"""Snapshot timeline: automatic checkpoints with preview and restore.

Every committed mutation appends a deep state copy; identical consecutive
states are collapsed. Restoring never rewrites the past: it copies the old
state forward and appends a new snapshot, so any restore can itself be
undone. Manual node edits are batched by a settle window so a drag produces
one snapshot, not one per mouse event.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .model import CanvasState, canvas_from_dict, canvas_to_dict, clone_canvas

MANUAL_EDIT_SETTLE_SECONDS = 2.0


class UnknownSnapshotError(KeyError):
    def __init__(self, snapshot_id: int) -> None:
        super().__init__(snapshot_id)
        self.snapshot_id = snapshot_id

    def __str__(self) -> str:
        return f"unknown snapshot: {self.snapshot_id}"


class Trigger(Enum):
    DICTATION = "Dictation"
    RESTRUCTURE = "Restructure"
    QUESTIONS = "Questions"
    CONFLICTS = "Conflicts"
    MANUAL_EDIT_SETTLED = "ManualEditSettled"
    RESTORE = "Restore"


@dataclass(frozen=True)
class Snapshot:
    id: int
    taken_at: float
    trigger: Trigger
    state: CanvasState  # deep copy; never handed out mutably


def states_equal(a: CanvasState, b: CanvasState) -> bool:
    """Content-and-position equality, the dedup criterion for snapshots."""
    return canvas_to_dict(a) == canvas_to_dict(b)


class Timeline:
    """Append-only snapshot sequence with strictly increasing integer ids."""

    def __init__(self, clock: Callable[[], float] = time.time) -> None:
        self._clock = clock
        self.snapshots: list[Snapshot] = []
        self._next_id = 1

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def head(self) -> Snapshot | None:
        return self.snapshots[-1] if self.snapshots else None

    def _append(self, state: CanvasState, trigger: Trigger) -> Snapshot:
        snapshot = Snapshot(
            id=self._next_id,
            taken_at=self._clock(),
            trigger=trigger,
            state=clone_canvas(state),
        )
        self._next_id += 1
        self.snapshots.append(snapshot)
        return snapshot

    def take_snapshot(self, state: CanvasState, trigger: Trigger) -> Snapshot | None:
        """Append unless the state matches the head exactly."""
        head = self.head
        if head is not None and states_equal(head.state, state):
            return None
        return self._append(state, trigger)

    def get(self, snapshot_id: int) -> Snapshot:
        for snapshot in self.snapshots:
            if snapshot.id == snapshot_id:
                return snapshot
        raise UnknownSnapshotError(snapshot_id)

    def preview_snapshot(self, snapshot_id: int) -> CanvasState:
        """Detached copy for read-only display; the timeline is untouched."""
        return clone_canvas(self.get(snapshot_id).state)

    def restore_snapshot(self, snapshot_id: int) -> tuple[CanvasState, Snapshot]:
        """Bring a past state back as the live one.

        Always appends a Restore snapshot, even when restoring the head, so
        the timeline records the act and stays a full undo/redo trail.
        """
        restored = clone_canvas(self.get(snapshot_id).state)
        appended = self._append(restored, Trigger.RESTORE)
        return clone_canvas(restored), appended

    def to_dict(self) -> dict:
        return {
            "next_id": self._next_id,
            "snapshots": [
                {
                    "id": s.id,
                    "taken_at": s.taken_at,
                    "trigger": s.trigger.value,
                    "state": canvas_to_dict(s.state),
                }
                for s in self.snapshots
            ],
        }

    @classmethod
    def from_dict(cls, data: dict,
                  clock: Callable[[], float] = time.time) -> "Timeline":
        timeline = cls(clock=clock)
        for item in data["snapshots"]:
            timeline.snapshots.append(Snapshot(
                id=int(item["id"]),
                taken_at=float(item["taken_at"]),
                trigger=Trigger(item["trigger"]),
                state=canvas_from_dict(item["state"]),
            ))
        timeline._next_id = int(data.get(
            "next_id",
            (timeline.snapshots[-1].id + 1) if timeline.snapshots else 1,
        ))
        return timeline


@dataclass
class EditDebouncer:
    """Coalesces manual node edits into one snapshot per settle window.

    note_edit() marks activity; settled() reports whether the window has
    elapsed. The owner flushes either when settled or right before the next
    structural command, whichever comes first.
    """

    clock: Callable[[], float] = time.time
    window: float = MANUAL_EDIT_SETTLE_SECONDS
    _pending: bool = field(default=False, init=False)
    _last_edit: float = field(default=0.0, init=False)

    @property
    def pending(self) -> bool:
        return self._pending

    def note_edit(self) -> None:
        self._pending = True
        self._last_edit = self.clock()

    def settled(self) -> bool:
        return self._pending and (self.clock() - self._last_edit) >= self.window

    def clear(self) -> None:
        self._pending = False
