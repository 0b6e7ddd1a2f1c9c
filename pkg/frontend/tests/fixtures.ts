import type { CanvasPayload, ContentPayload, TopicPayload } from "../src/protocol";

function topic(id: string, label: string, x: number, y: number): TopicPayload {
  return { id, label, position: [x, y], embedding: [1, 0, 0], created_round: 1 };
}

function content(
  id: string,
  parent: string,
  text: string,
  round: number,
  x: number,
  y: number,
  kind: "user_content" | "ai_question" = "user_content",
): ContentPayload {
  return {
    id,
    text,
    parent,
    round,
    kind,
    position: [x, y],
    home_position: [x, y],
    embedding: [0, 1, 0],
  };
}

/** A small brainstorming canvas: four labeled hubs, statements from two
 * rounds, one machine question, one conflict edge. */
export function makeCanvas(): CanvasPayload {
  return {
    topics: [
      topic("t-1", "Navigation", -300, -120),
      topic("t-2", "Devices", 250, -180),
      topic("t-3", "Typing", -200, 240),
      topic("t-4", "Solutions", 320, 200),
    ],
    contents: [
      content("c-1", "t-1", "Users get lost in deep menu trees.", 1, -340, -40),
      content("c-2", "t-2", "The old scanner only works when docked.", 1, 180, -110),
      content("c-3", "t-3", "Gloves make the touch keyboard unusable.", 1, -150, 320),
      content("c-4", "t-4", "Voice input could replace most typing.", 2, 280, 290),
      content("c-5", "t-4", "A wrist mount keeps the scanner usable anywhere.", 2, 390, 260),
      content("c-90", "t-1", "What would a flat menu look like?", 1, -380, -190, "ai_question"),
    ],
    conflicts: [
      {
        a: "c-2",
        b: "c-5",
        conflict_type: "Assumption Conflict",
        confidence: 7,
        reason: "One assumes docking, the other assumes wearing the scanner.",
      },
    ],
    current_round: 2,
    full_transcript: ["round one text", "round two text"],
  };
}

export function frame(type: string, payload: unknown): string {
  return JSON.stringify({ type, payload });
}
