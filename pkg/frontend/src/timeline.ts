import type { SnapshotPayload } from "./protocol";
import { getPreview, restoreSnapshot } from "./protocol";
import type { PreviewGate } from "./gate";

export interface TimelineHooks {
  /** Fired after a preview ends so the live scene can be put back. */
  onPreviewEnd?: () => void;
}

/** Snapshot strip under the canvas. Hovering a chip asks the server for a
 * preview of that snapshot; leaving puts the live scene back; clicking ends
 * the preview and then asks for a restore, so the restore is never swallowed
 * by the preview guard. */
export class Timeline {
  private readonly chips = new Map<number, HTMLButtonElement>();
  private hovered: number | null = null;

  constructor(
    private readonly container: HTMLElement,
    private readonly gate: PreviewGate,
    private readonly hooks: TimelineHooks = {},
  ) {}

  has(snapshotId: number): boolean {
    return this.chips.has(snapshotId);
  }

  addSnapshot(snapshot: SnapshotPayload): void {
    if (this.chips.has(snapshot.id)) {
      return;
    }
    const chip = document.createElement("button");
    chip.type = "button";
    chip.className = "snapshot-chip";
    chip.dataset.snapshotId = String(snapshot.id);
    chip.title = snapshot.trigger;
    chip.textContent = String(snapshot.id);
    chip.addEventListener("mouseenter", () => this.hoverStart(snapshot.id));
    chip.addEventListener("mouseleave", () => this.hoverEnd());
    chip.addEventListener("click", () => this.restore(snapshot.id));
    this.container.appendChild(chip);
    this.chips.set(snapshot.id, chip);
  }

  private hoverStart(snapshotId: number): void {
    if (this.hovered === snapshotId) {
      return;
    }
    this.hovered = snapshotId;
    this.gate.beginPreview();
    this.gate.send(getPreview(snapshotId));
  }

  private hoverEnd(): void {
    if (this.hovered === null) {
      return;
    }
    this.hovered = null;
    this.gate.endPreview();
    this.hooks.onPreviewEnd?.();
  }

  private restore(snapshotId: number): void {
    this.hovered = null;
    this.gate.endPreview();
    this.gate.send(restoreSnapshot(snapshotId));
  }
}
