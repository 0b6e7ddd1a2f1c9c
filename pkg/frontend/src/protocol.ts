/** Wire protocol: message shapes and builders for everything this client
 * can send. Keeping construction behind these functions lets one contract
 * test enumerate every outbound form and check it against the server's
 * schema. */

export type MemoStyle = "comprehensive" | "executive" | "bullet";

export interface TopicPayload {
  id: string;
  label: string;
  position: [number, number];
  embedding: number[];
  created_round: number;
}

export interface ContentPayload {
  id: string;
  text: string;
  parent: string;
  round: number;
  kind: "user_content" | "ai_question";
  position: [number, number];
  home_position: [number, number];
  embedding: number[];
}

export interface ConflictPayload {
  a: string;
  b: string;
  conflict_type: string;
  confidence: number;
  reason: string;
}

export interface CanvasPayload {
  topics: TopicPayload[];
  contents: ContentPayload[];
  conflicts: ConflictPayload[];
  current_round: number;
  full_transcript: string[];
  layout_basis?: unknown;
}

export interface SnapshotPayload {
  id: number;
  trigger: string;
  taken_at: number;
}

export interface WireMessage {
  type: string;
  payload: Record<string, unknown>;
}

/** Message types that change canvas state when the server handles them.
 * None of these may be sent while a preview is active. */
export const MUTATING_TYPES: ReadonlySet<string> = new Set([
  "dictate_content",
  "restructure",
  "ask_questions",
  "show_conflicts",
  "move_node",
  "delete_node",
  "restore_snapshot",
  "start_recording",
  "audio_chunk",
  "stop_recording",
]);

function withSelection(
  payload: Record<string, unknown>,
  selection?: readonly string[],
): Record<string, unknown> {
  if (selection && selection.length > 0) {
    return { ...payload, selected_topic_ids: [...selection] };
  }
  return payload;
}

export function dictateContent(
  transcript: string,
  selection?: readonly string[],
): WireMessage {
  return { type: "dictate_content", payload: withSelection({ transcript }, selection) };
}

export function restructure(
  instruction: string,
  selection?: readonly string[],
): WireMessage {
  return { type: "restructure", payload: withSelection({ instruction }, selection) };
}

export function askQuestions(selection?: readonly string[]): WireMessage {
  return { type: "ask_questions", payload: withSelection({}, selection) };
}

export function showConflicts(): WireMessage {
  return { type: "show_conflicts", payload: {} };
}

export function moveNode(id: string, x: number, y: number): WireMessage {
  return { type: "move_node", payload: { id, x, y } };
}

export function deleteNode(id: string): WireMessage {
  return { type: "delete_node", payload: { id } };
}

export function restoreSnapshot(snapshotId: number): WireMessage {
  return { type: "restore_snapshot", payload: { snapshot_id: snapshotId } };
}

export function getPreview(snapshotId: number): WireMessage {
  return { type: "get_preview", payload: { snapshot_id: snapshotId } };
}

export function exportMemo(style: MemoStyle, nodeIds: readonly string[]): WireMessage {
  return { type: "export", payload: { style, node_ids: [...nodeIds] } };
}

export function startRecording(selection?: readonly string[]): WireMessage {
  return { type: "start_recording", payload: withSelection({}, selection) };
}

export function audioChunk(base64: string): WireMessage {
  return { type: "audio_chunk", payload: { base64 } };
}

export function stopRecording(): WireMessage {
  return { type: "stop_recording", payload: {} };
}

export function encode(message: WireMessage): string {
  return JSON.stringify(message);
}

/** Structural check for server events. The scene must never be replaced by
 * a frame that does not carry what the renderer needs; a failed check keeps
 * the last good scene and surfaces a banner instead. */
export function decodeEvent(raw: string): WireMessage {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    throw new Error("frame is not valid JSON");
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new Error("frame is not an object");
  }
  const message = parsed as Record<string, unknown>;
  if (typeof message.type !== "string") {
    throw new Error("frame has no type");
  }
  if (typeof message.payload !== "object" || message.payload === null) {
    throw new Error("frame has no payload");
  }
  const wire = { type: message.type, payload: message.payload as Record<string, unknown> };
  if (wire.type === "canvas_update" || wire.type === "preview") {
    const canvas =
      wire.type === "preview"
        ? (wire.payload.state as Record<string, unknown> | undefined)
        : wire.payload;
    if (!canvas || !isCanvasShaped(canvas)) {
      throw new Error(`${wire.type} payload is not a canvas`);
    }
  }
  return wire;
}

function isCanvasShaped(candidate: Record<string, unknown>): boolean {
  return (
    Array.isArray(candidate.topics) &&
    Array.isArray(candidate.contents) &&
    Array.isArray(candidate.conflicts) &&
    typeof candidate.current_round === "number"
  );
}
