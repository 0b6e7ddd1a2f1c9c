import { describe, expect, it } from "vitest";
import Ajv2020 from "ajv/dist/2020";
import protocolSchema from "../../src/orality/protocol.schema.json";
import {
  MUTATING_TYPES,
  askQuestions,
  audioChunk,
  deleteNode,
  dictateContent,
  encode,
  exportMemo,
  getPreview,
  moveNode,
  restoreSnapshot,
  restructure,
  showConflicts,
  startRecording,
  stopRecording,
  type WireMessage,
} from "../src/protocol";

const ajv = new Ajv2020({ strict: false });
ajv.addSchema(protocolSchema as object);
const validateInbound = ajv.compile({
  $ref: "https://orality.dev/protocol.schema.json#/$defs/inbound",
});

/** Every message shape this client can put on the wire. */
const samples: WireMessage[] = [
  dictateContent("We should rethink onboarding for the night shift."),
  dictateContent("Scoped follow-up", ["t-1", "t-2"]),
  restructure("merge navigation into devices"),
  restructure("split this topic by workflow", ["t-3"]),
  askQuestions(),
  askQuestions(["t-1"]),
  showConflicts(),
  moveNode("t-1", 12.25, -40),
  deleteNode("c-9"),
  restoreSnapshot(2),
  getPreview(7),
  exportMemo("comprehensive", ["t-1", "c-2"]),
  exportMemo("executive", ["t-1"]),
  exportMemo("bullet", ["c-3"]),
  startRecording(),
  startRecording(["t-4"]),
  audioChunk("aGVsbG8gd29ybGQ="),
  stopRecording(),
];

describe("client messages against the server schema", () => {
  it("covers every inbound message type", () => {
    const types = new Set(samples.map((m) => m.type));
    expect([...types].sort()).toEqual([
      "ask_questions",
      "audio_chunk",
      "delete_node",
      "dictate_content",
      "export",
      "get_preview",
      "move_node",
      "restore_snapshot",
      "restructure",
      "show_conflicts",
      "start_recording",
      "stop_recording",
    ]);
  });

  it("validates every sample against the schema shipped by the server", () => {
    for (const message of samples) {
      const ok = validateInbound(message);
      expect(validateInbound.errors ?? [], `rejected: ${encode(message)}`).toEqual([]);
      expect(ok).toBe(true);
    }
  });

  it("encodes without newlines so one frame stays one line", () => {
    for (const message of samples) {
      expect(encode(message)).not.toContain("\n");
    }
    const sneaky = dictateContent("line one\nline two");
    expect(encode(sneaky)).not.toContain("\n");
    expect(JSON.parse(encode(sneaky)).payload.transcript).toBe("line one\nline two");
  });

  it("rejects tampered messages, proving the check has teeth", () => {
    const extraKey = { type: "move_node", payload: { id: "t-1", x: 0, y: 0, z: 1 } };
    expect(validateInbound(extraKey)).toBe(false);
    expect(validateInbound(restoreSnapshot(0))).toBe(false);
    expect(validateInbound(exportMemo("bullet", []))).toBe(false);
    expect(validateInbound({ type: "wat", payload: {} })).toBe(false);
  });

  it("classifies exactly the state-changing types as mutating", () => {
    const allTypes = new Set(samples.map((m) => m.type));
    const readOnly = new Set(["get_preview", "export"]);
    for (const type of allTypes) {
      expect(MUTATING_TYPES.has(type)).toBe(!readOnly.has(type));
    }
    expect(MUTATING_TYPES.size).toBe(allTypes.size - readOnly.size);
  });
});
