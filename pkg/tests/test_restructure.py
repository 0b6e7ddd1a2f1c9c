"""Verbal reorganization: outline parsing, canvas rewrite, invariants."""

from __future__ import annotations

import copy
import json

import pytest

from orality.layout import LayoutParams
from orality.model import (
    CanvasState,
    ConflictEdge,
    ConflictType,
    ContentNode,
    NodeIdGenerator,
    NodeKind,
    TopicNode,
    UnknownNodeError,
    validate_canvas,
)
from orality.providers import (
    EmbeddingRequest,
    MockEmbeddingProvider,
    MockTranscriptionProvider,
    Providers,
    SchemaViolationError,
    ScriptedChatProvider,
    TransportError,
    mock_embedding_vector,
    mock_providers,
)
from orality.restructure import (
    UNSORTED_LABEL,
    EmptyCanvasError,
    EntityOrigin,
    RestructureCommand,
    Scope,
    apply_reorganization,
    build_reorg_prompt,
    current_outline_json,
    parse_reorg_response,
    restructure_canvas,
    scope_topic_ids,
)

from conftest import (
    MERGE_INSTRUCTION,
    MERGED_TOPIC_LABEL,
    ROUND1_ENTITIES,
    ROUND1_TRANSCRIPT,
    ROUND2_ENTITIES,
    ROUND2_TRANSCRIPT,
    TOPIC_DEVICES,
    TOPIC_NAVIGATION,
    TOPIC_SOLUTIONS,
    TOPIC_TYPING,
    build_scenario_chat,
    merge_outline_response,
)
from test_extraction import ingest


def topic(tid, label, pos=(0.0, 0.0), created_round=1):
    return TopicNode(id=tid, label=label, position=pos,
                     embedding=mock_embedding_vector(label), created_round=created_round)


def content(cid, text, parent, round=1, kind=NodeKind.USER_CONTENT, pos=(0.0, 0.0)):
    return ContentNode(id=cid, text=text, parent=parent, round=round, kind=kind,
                       position=pos, embedding=mock_embedding_vector(text),
                       home_position=pos)


def small_state() -> CanvasState:
    """Two topics; Alpha holds two statements, Beta one plus a question."""
    state = CanvasState()
    state.topics = {
        "t-1": topic("t-1", "Alpha", (100.0, 0.0)),
        "t-2": topic("t-2", "Beta", (-100.0, 0.0)),
    }
    state.contents = {
        "c-1": content("c-1", "First point.", "t-1", round=1, pos=(260.0, 0.0)),
        "c-2": content("c-2", "Second point.", "t-1", round=2, pos=(100.0, 160.0)),
        "c-3": content("c-3", "Third point.", "t-2", round=2, pos=(-260.0, 0.0)),
        "c-4": content("c-4", "What about risks?", "t-2", round=2,
                       kind=NodeKind.AI_QUESTION, pos=(-100.0, 160.0)),
    }
    state.current_round = 2
    state.full_transcript = ["First point. Second point.", "Third point."]
    return state


def fresh_id_gen(state: CanvasState) -> NodeIdGenerator:
    gen = NodeIdGenerator()
    gen.observe(state.topics)
    gen.observe(state.contents)
    return gen


def apply(state, outline_raw, instruction="reorganize", selection=None,
          providers=None):
    cmd = RestructureCommand(instruction=instruction,
                             selected_topic_ids=tuple(selection or ()))
    outline = parse_reorg_response(outline_raw, state, scope_topic_ids(state, cmd))
    providers = providers or mock_providers()
    return apply_reorganization(state, cmd, outline, providers,
                                fresh_id_gen(state), LayoutParams())


class TestCommand:
    def test_blank_instruction_rejected(self):
        with pytest.raises(ValueError):
            RestructureCommand(instruction="   ")

    def test_scope_follows_selection(self):
        assert RestructureCommand(instruction="x").scope is Scope.GLOBAL
        assert RestructureCommand(
            instruction="x", selected_topic_ids=("t-1",)).scope is Scope.LOCAL


class TestScope:
    def test_empty_canvas_rejected(self):
        cmd = RestructureCommand(instruction="merge")
        with pytest.raises(EmptyCanvasError):
            scope_topic_ids(CanvasState(), cmd)

    def test_global_scope_is_every_topic(self):
        state = small_state()
        cmd = RestructureCommand(instruction="merge")
        assert scope_topic_ids(state, cmd) == ["t-1", "t-2"]

    def test_local_scope_validates_and_dedupes(self):
        state = small_state()
        cmd = RestructureCommand(instruction="merge",
                                 selected_topic_ids=("t-2", "t-2"))
        assert scope_topic_ids(state, cmd) == ["t-2"]
        bad = RestructureCommand(instruction="merge", selected_topic_ids=("t-9",))
        with pytest.raises(UnknownNodeError):
            scope_topic_ids(state, bad)


class TestOutlineJson:
    def test_round_travels_in_the_type_field(self):
        state = small_state()
        outline = json.loads(current_outline_json(state, ["t-1"]))
        assert outline == [{
            "topic": "Alpha",
            "entities": [
                {"type": 1, "text": "First point."},
                {"type": 2, "text": "Second point."},
            ],
        }]

    def test_prompt_carries_outline_transcript_and_instruction(self):
        state = small_state()
        cmd = RestructureCommand(instruction="Merge these topics into one")
        req = build_reorg_prompt(state, cmd)
        assert current_outline_json(state, ["t-1", "t-2"]) in req.user_message
        assert "First point. Second point." in req.user_message
        assert req.user_message.rstrip().endswith("Merge these topics into one")

    def test_local_prompt_lists_only_selected_subtrees(self):
        state = small_state()
        cmd = RestructureCommand(instruction="split", selected_topic_ids=("t-2",))
        req = build_reorg_prompt(state, cmd)
        outline_part = req.user_message.split("User's full text:")[0]
        assert current_outline_json(state, ["t-2"]) in outline_part
        assert "First point." not in outline_part  # out-of-scope subtree


class TestParse:
    def test_matches_existing_case_insensitively(self):
        state = small_state()
        raw = json.dumps([{"topic": "Merged", "entities": [
            {"type": 1, "text": "  FIRST POINT.  "},
            {"type": 1, "text": "brand new insight"},
        ]}])
        outline = parse_reorg_response(raw, state, ["t-1", "t-2"])
        first, new = outline.groups[0].entities
        assert first.origin is EntityOrigin.EXISTING and first.node_id == "c-1"
        assert new.origin is EntityOrigin.NEW and new.node_id is None

    def test_duplicate_texts_consume_nodes_fifo(self):
        state = small_state()
        state.contents["c-5"] = content("c-5", "First point.", "t-2", round=2)
        raw = json.dumps([{"topic": "Merged", "entities": [
            {"type": 1, "text": "First point."},
            {"type": 1, "text": "First point."},
            {"type": 1, "text": "First point."},
        ]}])
        outline = parse_reorg_response(raw, state, ["t-1", "t-2"])
        origins = [e.origin for e in outline.groups[0].entities]
        ids = [e.node_id for e in outline.groups[0].entities]
        assert origins == [EntityOrigin.EXISTING, EntityOrigin.EXISTING,
                           EntityOrigin.NEW]
        assert set(ids[:2]) == {"c-1", "c-5"}

    def test_out_of_scope_text_is_not_matchable(self):
        state = small_state()
        raw = json.dumps([{"topic": "Beta", "entities": [
            {"type": 1, "text": "First point."},
        ]}])
        outline = parse_reorg_response(raw, state, ["t-2"])
        assert outline.groups[0].entities[0].origin is EntityOrigin.NEW

    @pytest.mark.parametrize("bad", [
        '{"topic": "A"}',
        '["A"]',
        '[{"topic": "", "entities": []}]',
        '[{"topic": "A", "entities": {"text": "x"}}]',
        '[{"topic": "A", "entities": ["plain string"]}]',
        '[{"topic": "A", "entities": [{"type": 1}]}]',
        '[{"topic": "A", "entities": [{"type": "new", "text": "x"}]}]',
    ])
    def test_schema_violations(self, bad):
        state = small_state()
        with pytest.raises(SchemaViolationError):
            parse_reorg_response(bad, state, ["t-1", "t-2"])

    def test_type_field_is_optional(self):
        state = small_state()
        raw = json.dumps([{"topic": "A", "entities": [{"text": "First point."}]}])
        outline = parse_reorg_response(raw, state, ["t-1"])
        assert outline.groups[0].entities[0].origin is EntityOrigin.EXISTING


def merge_all_outline() -> str:
    return json.dumps([{"topic": "Everything", "entities": [
        {"type": 1, "text": "First point."},
        {"type": 1, "text": "Second point."},
        {"type": 1, "text": "Third point."},
        {"type": 1, "text": "What about risks?"},
    ]}])


class TestApply:
    def test_merge_reparents_and_deletes_empty_topics(self):
        state = small_state()
        result = apply(state, merge_all_outline(), instruction=MERGE_INSTRUCTION)
        merged = result.topic_by_label("Everything")
        assert merged is not None
        assert set(result.topics) == {merged.id}
        assert {c.parent for c in result.contents.values()} == {merged.id}
        assert len(result.contents) == 4
        assert validate_canvas(result) == []

    def test_existing_entities_keep_id_round_and_text(self):
        state = small_state()
        result = apply(state, merge_all_outline())
        for cid in ("c-1", "c-2", "c-3", "c-4"):
            assert result.contents[cid].text == state.contents[cid].text
            assert result.contents[cid].round == state.contents[cid].round
            assert result.contents[cid].kind == state.contents[cid].kind

    def test_type_echo_cannot_rewrite_rounds(self):
        state = small_state()
        raw = json.dumps([{"topic": "Alpha", "entities": [
            {"type": 7, "text": "First point."},
            {"type": 7, "text": "Second point."},
        ]}, {"topic": "Beta", "entities": [
            {"type": 7, "text": "Third point."},
            {"type": 7, "text": "What about risks?"},
        ]}])
        result = apply(state, raw)
        assert result.contents["c-1"].round == 1
        assert result.contents["c-2"].round == 2

    def test_reused_label_keeps_topic_in_place(self):
        state = small_state()
        raw = json.dumps([{"topic": "alpha", "entities": [
            {"type": 1, "text": "First point."},
            {"type": 1, "text": "Second point."},
            {"type": 1, "text": "Third point."},
            {"type": 1, "text": "What about risks?"},
        ]}])
        result = apply(state, raw)
        assert set(result.topics) == {"t-1"}
        assert result.topics["t-1"].position == state.topics["t-1"].position
        assert result.topics["t-1"].label == "Alpha"

    def test_split_creates_topics_at_current_round(self):
        state = small_state()
        raw = json.dumps([
            {"topic": "Openers", "entities": [{"type": 1, "text": "First point."}]},
            {"topic": "Closers", "entities": [
                {"type": 1, "text": "Second point."},
                {"type": 1, "text": "Third point."},
                {"type": 1, "text": "What about risks?"},
            ]},
        ])
        result = apply(state, raw)
        labels = {t.label: t for t in result.topics.values()}
        assert set(labels) == {"Openers", "Closers"}
        assert all(t.created_round == 2 for t in labels.values())
        assert result.contents["c-1"].parent == labels["Openers"].id

    def test_omitted_entities_park_under_unsorted(self):
        state = small_state()
        raw = json.dumps([{"topic": "Alpha", "entities": [
            {"type": 1, "text": "First point."},
        ]}])
        result = apply(state, raw)
        unsorted = result.topic_by_label(UNSORTED_LABEL)
        assert unsorted is not None
        parked = {c.text for c in result.children(unsorted.id)}
        assert parked == {"Second point.", "Third point.", "What about risks?"}
        assert len(result.contents) == 4  # nothing deleted

    def test_existing_unsorted_topic_is_reused(self):
        state = small_state()
        state.topics["t-3"] = topic("t-3", "Unsorted", (0.0, 300.0))
        raw = json.dumps([{"topic": "Alpha", "entities": [
            {"type": 1, "text": "First point."},
        ]}])
        result = apply(state, raw)
        unsorted = [t for t in result.topics.values() if t.label == UNSORTED_LABEL]
        assert len(unsorted) == 1
        assert unsorted[0].id == "t-3"
        assert unsorted[0].position == (0.0, 300.0)

    def test_new_entities_join_at_current_round(self):
        state = small_state()
        raw = json.dumps([{"topic": "Alpha", "entities": [
            {"type": 1, "text": "First point."},
            {"type": 1, "text": "Second point."},
            {"type": 1, "text": "Third point."},
            {"type": 1, "text": "What about risks?"},
            {"type": 1, "text": "A thought mined from the transcript."},
        ]}])
        result = apply(state, raw)
        added = [c for c in result.contents.values()
                 if c.text == "A thought mined from the transcript."]
        assert len(added) == 1
        assert added[0].round == 2
        assert added[0].kind is NodeKind.USER_CONTENT

    def test_local_scope_leaves_outside_nodes_bit_identical(self):
        state = small_state()
        raw = json.dumps([{"topic": "Beta Prime", "entities": [
            {"type": 1, "text": "Third point."},
            {"type": 1, "text": "What about risks?"},
        ]}])
        before_topic = copy.deepcopy(state.topics["t-1"])
        before_contents = {cid: copy.deepcopy(state.contents[cid])
                           for cid in ("c-1", "c-2")}
        result = apply(state, raw, selection=["t-2"])
        assert result.topics["t-1"] == before_topic
        for cid, node in before_contents.items():
            assert result.contents[cid] == node
        assert result.topic_by_label("Beta Prime") is not None
        assert result.topic_by_label("Beta") is None

    def test_scope_isolation_holds_even_with_strong_attraction(self):
        # Engineered embeddings: out-of-scope c-1 is strongly similar to the
        # new in-scope topic, so unrestricted refinement would drag it.
        state = small_state()
        pull = (1.0, 0.0, 0.0)
        state.contents["c-1"].embedding = pull
        state.topics["t-1"].embedding = (0.0, 1.0, 0.0)
        state.topics["t-2"].embedding = (0.0, 0.0, 1.0)
        state.contents["c-2"].embedding = (0.0, 1.0, 0.0)
        state.contents["c-3"].embedding = (0.0, 0.0, 1.0)
        state.contents["c-4"].embedding = (0.0, 0.0, 1.0)

        class AlignedEmbedding:
            def embed(self, request):
                return [pull for _ in request.texts]

        providers = Providers(chat=ScriptedChatProvider(strict=False),
                              embedding=AlignedEmbedding(),
                              transcription=MockTranscriptionProvider())
        raw = json.dumps([{"topic": "Beta Prime", "entities": [
            {"type": 1, "text": "Third point."},
            {"type": 1, "text": "What about risks?"},
        ]}])
        result = apply(state, raw, selection=["t-2"], providers=providers)
        assert result.contents["c-1"].position == state.contents["c-1"].position
        assert result.contents["c-2"].position == state.contents["c-2"].position

    def test_conflict_edges_cleared_only_for_touched_endpoints(self):
        state = small_state()
        stays = ConflictEdge(a="c-1", b="c-2",
                             conflict_type=ConflictType.VALUE_CONFLICT,
                             confidence=7, reason="both stay put")
        cleared = ConflictEdge(a="c-2", b="c-3",
                               conflict_type=ConflictType.STRATEGY_CONFLICT,
                               confidence=8, reason="one endpoint moves")
        state.conflicts = [stays, cleared]
        raw = json.dumps([
            {"topic": "Alpha", "entities": [
                {"type": 1, "text": "First point."},
                {"type": 1, "text": "Second point."},
                {"type": 1, "text": "What about risks?"},
            ]},
            {"topic": "Gamma", "entities": [{"type": 1, "text": "Third point."}]},
        ])
        result = apply(state, raw)
        assert [e.pair() for e in result.conflicts] == [stays.pair()]

    def test_atomicity_on_embedding_failure(self):
        state = small_state()
        before = copy.deepcopy(state)

        class FailingEmbedding:
            def embed(self, request):
                raise TransportError("embedding service down")

        providers = Providers(chat=ScriptedChatProvider(strict=False),
                              embedding=FailingEmbedding(),
                              transcription=MockTranscriptionProvider())
        id_gen = fresh_id_gen(state)
        raw = json.dumps([{"topic": "Fresh Label", "entities": [
            {"type": 1, "text": "First point."},
        ]}])
        cmd = RestructureCommand(instruction="split")
        outline = parse_reorg_response(raw, state, scope_topic_ids(state, cmd))
        with pytest.raises(TransportError):
            apply_reorganization(state, cmd, outline, providers, id_gen,
                                 LayoutParams())
        assert state == before
        assert id_gen.next_topic() == "t-3"  # no ids were burned


class TestEndToEnd:
    def build_round2_state(self):
        providers = Providers(chat=build_scenario_chat(),
                              embedding=MockEmbeddingProvider(),
                              transcription=MockTranscriptionProvider())
        state, _ = ingest(CanvasState(), ROUND1_TRANSCRIPT, providers)
        solutions = state.topic_by_label(TOPIC_SOLUTIONS)
        state, _ = ingest(state, ROUND2_TRANSCRIPT, providers,
                          selection=[solutions.id])
        return state

    def test_scenario_merge(self):
        state = self.build_round2_state()
        typing = state.topic_by_label(TOPIC_TYPING)
        solutions = state.topic_by_label(TOPIC_SOLUTIONS)
        chat = ScriptedChatProvider().add(
            "content organizer",
            merge_outline_response({text: 2 for text in ROUND2_ENTITIES}),
        )
        providers = mock_providers(chat=chat)
        cmd = RestructureCommand(instruction=MERGE_INSTRUCTION,
                                 selected_topic_ids=(typing.id, solutions.id))
        result = restructure_canvas(state, cmd, providers, fresh_id_gen(state),
                                    LayoutParams())

        merged = result.topic_by_label(MERGED_TOPIC_LABEL)
        assert merged is not None
        assert result.topic_by_label(TOPIC_TYPING) is None
        assert result.topic_by_label(TOPIC_SOLUTIONS) is None
        assert len(result.topics) == len(state.topics) - 1
        children = result.children(merged.id)
        assert {c.text for c in children} == set(
            ROUND1_ENTITIES[TOPIC_TYPING] + ROUND1_ENTITIES[TOPIC_SOLUTIONS]
            + ROUND2_ENTITIES
        )
        rounds = {c.text: c.round for c in children}
        assert all(rounds[t] == 2 for t in ROUND2_ENTITIES)
        assert all(rounds[t] == 1 for t in ROUND1_ENTITIES[TOPIC_TYPING])
        # Out-of-scope topics are untouched.
        for label in (TOPIC_NAVIGATION, TOPIC_DEVICES):
            old = state.topic_by_label(label)
            assert result.topics[old.id] == old
        assert len(result.contents) == len(state.contents)
        assert validate_canvas(result) == []
        assert len(chat.calls) == 1

    def test_malformed_outline_is_retried_once(self):
        state = self.build_round2_state()
        chat = ScriptedChatProvider().add(
            "content organizer", "not json",
            merge_outline_response({text: 2 for text in ROUND2_ENTITIES}),
        )
        providers = mock_providers(chat=chat)
        cmd = RestructureCommand(instruction=MERGE_INSTRUCTION)
        result = restructure_canvas(state, cmd, providers, fresh_id_gen(state),
                                    LayoutParams())
        assert result.topic_by_label(MERGED_TOPIC_LABEL) is not None
        assert len(chat.calls) == 2
