/** Round colors. Content dots are tinted by the dictation round that
 * produced them so a glance shows how the canvas grew over time. */

export const ROUND_PALETTE: readonly string[] = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#ff9da7",
];

export const QUESTION_COLOR = "#8a8a8a";
export const TOPIC_COLOR = "#2b2b2b";
export const CONFLICT_COLOR = "#c0392b";

export function colorForRound(round: number): string {
  const index = ((round % ROUND_PALETTE.length) + ROUND_PALETTE.length) % ROUND_PALETTE.length;
  return ROUND_PALETTE[index];
}
