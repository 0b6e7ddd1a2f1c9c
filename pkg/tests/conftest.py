"""Shared fixtures: the walkthrough scenario and deterministic providers.

The scenario models a researcher dictating thoughts about input methods in
VR/AR: four topics in round one, a selection-scoped second round, a merge
instruction, guiding questions, one assumption-conflict pair, and a memo.
Chat responses are scripted; embeddings come from the deterministic mock.

The two conflict sentences were chosen so that, under the default mock
embedding (seed 0, 32 dims), they are the only content pair whose cosine
similarity clears the 0.35 conflict prefilter (theirs is ~0.53). A test in
test_stimulation.py asserts that property so a mock change fails loudly.
"""

from __future__ import annotations

import itertools
import json

import pytest

from orality.extraction import ingest_transcript
from orality.layout import LayoutParams
from orality.model import CanvasState, NodeIdGenerator
from orality.providers import (
    MockEmbeddingProvider,
    MockTranscriptionProvider,
    Providers,
    ScriptedChatProvider,
)
from orality.session import Session

TOPIC_NAVIGATION = "Navigation Methods in Investigation Process"
TOPIC_DEVICES = "Device Capability Discrepancies"
TOPIC_TYPING = "Typing Challenges in VR and AR"
TOPIC_SOLUTIONS = "Proposed Solutions for Input in VR and AR"

SCENARIO_TOPIC_LABELS = (
    TOPIC_NAVIGATION,
    TOPIC_DEVICES,
    TOPIC_TYPING,
    TOPIC_SOLUTIONS,
)

CONFLICT_SENTENCE_A = "Typing in VR assumes users must keep a physical keyboard nearby."
CONFLICT_SENTENCE_B = "Our input plan assumes nobody uses a physical keyboard in VR."

ROUND1_ENTITIES = {
    TOPIC_NAVIGATION: [
        "Participants navigated the investigation space mostly by teleporting.",
        "Walking in place felt safer for users during long sessions.",
    ],
    TOPIC_DEVICES: [
        "Standalone headsets lag behind tethered rigs in tracking fidelity.",
        "Hand tracking quality varies a lot between devices.",
    ],
    TOPIC_TYPING: [
        CONFLICT_SENTENCE_A,
    ],
    TOPIC_SOLUTIONS: [
        CONFLICT_SENTENCE_B,
        "Speech input could replace keyboards for quick annotations.",
        "A radial menu might cover the most common commands.",
    ],
}

ROUND2_ENTITIES = [
    "Gaze plus pinch could select text fields quickly.",
    "Haptic gloves remain too bulky for daily note taking.",
]

ROUND1_TRANSCRIPT = (
    "So for the study I keep thinking about how people moved around, "
    "how the headsets differed, how hard typing was, and what input "
    "methods we could actually propose."
)

ROUND2_TRANSCRIPT = (
    "About the solutions specifically, gaze with pinch seems quick for "
    "text fields, and haptic gloves are still too bulky for daily notes."
)

MERGE_INSTRUCTION = "Merge these topics into one"
MERGED_TOPIC_LABEL = "Input Challenges and Solutions in VR and AR"

QUESTIONS_SPARSE = [
    "What specific typing tasks broke down most often in your sessions?",
    "Can you describe one moment where text entry blocked a participant?",
]
QUESTIONS_DENSE = [
    "How would you compare these input methods for longer writing tasks?",
]

CONFLICT_REASON = (
    "One statement assumes a physical keyboard stays available while the "
    "other assumes it is gone."
)

MEMO_COMPREHENSIVE = (
    "Key Themes\nInput in VR/AR is the central tension in your notes.\n\n"
    "Important Insights\nKeyboard assumptions contradict your own plan.\n\n"
    "Connections & Patterns\nNavigation and input constraints reinforce "
    "each other.\n\nNext Steps\nPrototype the gaze-plus-pinch flow first."
)


def round1_extraction_response() -> str:
    return json.dumps([
        {"topic": label, "entities": ROUND1_ENTITIES[label]}
        for label in SCENARIO_TOPIC_LABELS
    ])


def round2_extraction_response() -> str:
    return json.dumps([
        {"topic": TOPIC_SOLUTIONS, "entities": ROUND2_ENTITIES},
    ])


def merge_outline_response(rounds: dict[str, int]) -> str:
    """Outline merging Typing + Solutions; rounds map entity text -> round."""
    merged = (ROUND1_ENTITIES[TOPIC_TYPING] + ROUND1_ENTITIES[TOPIC_SOLUTIONS]
              + ROUND2_ENTITIES)
    return json.dumps([{
        "topic": MERGED_TOPIC_LABEL,
        "entities": [
            {"type": rounds.get(text, 1), "text": text}
            for text in merged
        ],
    }])


def conflict_response() -> str:
    return json.dumps([{
        "pair_id": 0,
        "has_conflict": True,
        "conflict_type": "Assumption Conflict",
        "confidence": 8,
        "reason": CONFLICT_REASON,
    }])


def build_scenario_chat() -> ScriptedChatProvider:
    chat = ScriptedChatProvider()
    # Selection-scoped extraction must match before the generic rule.
    chat.add("must come from the following selected topics",
             round2_extraction_response())
    chat.add("You are a listener", round1_extraction_response())
    # "\n\nContent:" pins this to the questions prompt; memo prompts also
    # contain "Topic: <label>" section headers.
    chat.add(f"Topic: {TOPIC_TYPING}\n\nContent:", json.dumps(QUESTIONS_SPARSE))
    chat.add("You are a thoughtful conversation facilitator",
             json.dumps(QUESTIONS_DENSE))
    chat.add("You are an expert at identifying logical conflicts",
             conflict_response())
    chat.add("You are a content organizer", merge_outline_response({}))
    chat.add("'comprehensive'", MEMO_COMPREHENSIVE)
    chat.add("'executive'", "You are circling one decision: commit to gaze input.")
    chat.add("'bullet'", "- Input is the bottleneck\n- Gaze+pinch first\n- Retest gloves later")
    return chat


def make_clock(start: float = 1_000_000.0, step: float = 1.0):
    counter = itertools.count(start, step)
    return lambda: next(counter)


def build_round2_state() -> tuple[CanvasState, NodeIdGenerator]:
    """The walkthrough canvas after both dictation rounds, outside a session."""
    providers = Providers(
        chat=build_scenario_chat(),
        embedding=MockEmbeddingProvider(),
        transcription=MockTranscriptionProvider(),
    )
    id_gen = NodeIdGenerator()
    state, _ = ingest_transcript(CanvasState(), ROUND1_TRANSCRIPT, providers,
                                 id_gen, LayoutParams())
    solutions = state.topic_by_label(TOPIC_SOLUTIONS)
    state, _ = ingest_transcript(state, ROUND2_TRANSCRIPT, providers, id_gen,
                                 LayoutParams(), selection=[solutions.id])
    return state, id_gen


@pytest.fixture
def params() -> LayoutParams:
    return LayoutParams()


@pytest.fixture
def embedding() -> MockEmbeddingProvider:
    return MockEmbeddingProvider()


@pytest.fixture
def scenario_chat() -> ScriptedChatProvider:
    return build_scenario_chat()


@pytest.fixture
def scenario_providers(scenario_chat, embedding) -> Providers:
    return Providers(
        chat=scenario_chat,
        embedding=embedding,
        transcription=MockTranscriptionProvider(),
    )


@pytest.fixture
def scenario_session(scenario_providers) -> Session:
    return Session(
        scenario_providers,
        session_id="scenario",
        clock=make_clock(),
    )


def dictate(session: Session, transcript: str,
            selection: list[str] | None = None) -> list[dict]:
    payload: dict = {"transcript": transcript}
    if selection:
        payload["selected_topic_ids"] = selection
    return session.handle_event({"type": "dictate_content", "payload": payload})


def run_scenario_round1(session: Session) -> list[dict]:
    return dictate(session, ROUND1_TRANSCRIPT)


def run_scenario_round2(session: Session) -> list[dict]:
    solutions = session.doc.canvas.topic_by_label(TOPIC_SOLUTIONS)
    assert solutions is not None
    return dictate(session, ROUND2_TRANSCRIPT, selection=[solutions.id])
