import type { Scene } from "./scene";
import { moveNode } from "./protocol";
import type { PreviewGate } from "./gate";

export interface DragCallbacks {
  /** Called when a drag is refused because a preview is active. */
  onSuppressed?: () => void;
}

type DragState =
  | { kind: "node"; id: string; startX: number; startY: number; px: number; py: number }
  | { kind: "pan"; px: number; py: number };

/** Mouse-driven node dragging and canvas panning. A node follows the cursor
 * optimistically while the button is down; exactly one move_node with the
 * final canvas coordinates is sent on release. Pressing empty space pans the
 * viewport instead and never emits anything. Node drags never start during a
 * preview; pans are view-only and stay allowed. */
export class DragController {
  private active: DragState | null = null;
  private moved = false;
  private suppressClick = false;

  constructor(
    svg: SVGSVGElement,
    private readonly scene: Scene,
    private readonly gate: PreviewGate,
    private readonly callbacks: DragCallbacks = {},
  ) {
    svg.addEventListener("mousedown", this.onMouseDown);
    svg.addEventListener("mousemove", this.onMouseMove);
    svg.addEventListener("mouseup", this.onMouseUp);
    svg.addEventListener("mouseleave", this.onMouseUp);
  }

  isDragging(): boolean {
    return this.active?.kind === "node";
  }

  isPanning(): boolean {
    return this.active?.kind === "pan";
  }

  /** True once after a drag that actually moved, so the click fired by the
   * browser on release is not mistaken for a selection toggle. */
  consumeClickSuppression(): boolean {
    const suppress = this.suppressClick;
    this.suppressClick = false;
    return suppress;
  }

  private readonly onMouseDown = (event: MouseEvent): void => {
    const target = event.target as Element | null;
    const group = target?.closest?.("[data-node-id]");
    const id = group?.getAttribute("data-node-id");
    if (!id) {
      this.active = { kind: "pan", px: event.clientX, py: event.clientY };
      this.moved = false;
      return;
    }
    if (this.gate.isPreviewing()) {
      this.callbacks.onSuppressed?.();
      return;
    }
    const position = this.scene.positionOf(id);
    if (!position) {
      return;
    }
    this.active = {
      kind: "node",
      id,
      startX: position[0],
      startY: position[1],
      px: event.clientX,
      py: event.clientY,
    };
    this.moved = false;
    event.preventDefault();
  };

  private readonly onMouseMove = (event: MouseEvent): void => {
    if (!this.active) {
      return;
    }
    if (this.active.kind === "pan") {
      const dx = event.clientX - this.active.px;
      const dy = event.clientY - this.active.py;
      if (dx !== 0 || dy !== 0) {
        this.moved = true;
        this.scene.panBy(dx, dy);
        this.active.px = event.clientX;
        this.active.py = event.clientY;
      }
      return;
    }
    const unitsPerPixel = this.scene.canvasUnitsPerPixel();
    const dx = (event.clientX - this.active.px) * unitsPerPixel;
    const dy = (event.clientY - this.active.py) * unitsPerPixel;
    if (dx !== 0 || dy !== 0) {
      this.moved = true;
    }
    this.scene.moveNode(this.active.id, this.active.startX + dx, this.active.startY + dy);
  };

  private readonly onMouseUp = (): void => {
    if (!this.active) {
      return;
    }
    const state = this.active;
    this.active = null;
    if (!this.moved) {
      return;
    }
    this.suppressClick = true;
    if (state.kind === "pan") {
      return;
    }
    const position = this.scene.positionOf(state.id);
    if (position) {
      this.gate.send(moveNode(state.id, position[0], position[1]));
    }
  };
}
