import { beforeEach, describe, expect, it } from "vitest";
import { DragController } from "../src/drag";
import { PreviewGate } from "../src/gate";
import { Scene } from "../src/scene";
import type { WireMessage } from "../src/protocol";
import { makeCanvas } from "./fixtures";

const SVG_NS = "http://www.w3.org/2000/svg";

interface Rig {
  svg: SVGSVGElement;
  scene: Scene;
  gate: PreviewGate;
  sent: WireMessage[];
  suppressed: number;
  drag: DragController;
}

function makeRig(): Rig {
  const svg = document.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  document.body.appendChild(svg);
  const scene = new Scene(svg, { width: 1200, height: 900 });
  const sent: WireMessage[] = [];
  const gate = new PreviewGate((message) => sent.push(message));
  const rig: Rig = { svg, scene, gate, sent, suppressed: 0, drag: null as never };
  rig.drag = new DragController(svg, scene, gate, {
    onSuppressed: () => {
      rig.suppressed += 1;
    },
  });
  scene.render(makeCanvas());
  return rig;
}

function mouse(target: Element, type: string, x: number, y: number): void {
  target.dispatchEvent(
    new MouseEvent(type, { bubbles: true, clientX: x, clientY: y }),
  );
}

describe("node dragging", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("sends exactly one move with final canvas coordinates on release", () => {
    const rig = makeRig();
    const start = rig.scene.positionOf("t-1");
    expect(start).not.toBeNull();
    const circle = rig.svg.querySelector('[data-node-id="t-1"] circle');
    expect(circle).not.toBeNull();

    mouse(circle as Element, "mousedown", 100, 100);
    expect(rig.drag.isDragging()).toBe(true);
    mouse(rig.svg, "mousemove", 130, 90);
    mouse(rig.svg, "mousemove", 160, 120);
    mouse(rig.svg, "mouseup", 160, 120);

    expect(rig.sent.length).toBe(1);
    const message = rig.sent[0];
    expect(message.type).toBe("move_node");
    const payload = message.payload as { id: string; x: number; y: number };
    const unitsPerPixel = rig.scene.canvasUnitsPerPixel();
    expect(payload.id).toBe("t-1");
    expect(payload.x).toBeCloseTo((start as number[])[0] + 60 * unitsPerPixel, 9);
    expect(payload.y).toBeCloseTo((start as number[])[1] + 20 * unitsPerPixel, 9);
    expect(rig.scene.positionOf("t-1")).toEqual([payload.x, payload.y]);
  });

  it("follows the cursor optimistically while the button is down", () => {
    const rig = makeRig();
    const circle = rig.svg.querySelector('[data-node-id="c-1"] circle') as Element;
    const before = rig.scene.positionOf("c-1") as [number, number];
    mouse(circle, "mousedown", 0, 0);
    mouse(rig.svg, "mousemove", 44, 0);
    const mid = rig.scene.positionOf("c-1") as [number, number];
    expect(mid[0]).toBeGreaterThan(before[0]);
    expect(rig.sent.length).toBe(0);
    mouse(rig.svg, "mouseup", 44, 0);
    expect(rig.sent.length).toBe(1);
  });

  it("treats a press without movement as no move at all", () => {
    const rig = makeRig();
    const circle = rig.svg.querySelector('[data-node-id="t-2"] circle') as Element;
    mouse(circle, "mousedown", 50, 50);
    mouse(rig.svg, "mouseup", 50, 50);
    expect(rig.sent.length).toBe(0);
    expect(rig.drag.consumeClickSuppression()).toBe(false);
  });

  it("refuses to start a drag while a preview is on screen", () => {
    const rig = makeRig();
    rig.gate.beginPreview();
    const circle = rig.svg.querySelector('[data-node-id="t-1"] circle') as Element;
    const before = rig.scene.positionOf("t-1");
    mouse(circle, "mousedown", 100, 100);
    expect(rig.drag.isDragging()).toBe(false);
    expect(rig.suppressed).toBe(1);
    mouse(rig.svg, "mousemove", 200, 200);
    mouse(rig.svg, "mouseup", 200, 200);
    expect(rig.sent.length).toBe(0);
    expect(rig.scene.positionOf("t-1")).toEqual(before);
  });

  it("pans the viewport from empty canvas space without emitting anything", () => {
    const rig = makeRig();
    const before = rig.scene.toScreen(0, 0);
    mouse(rig.svg, "mousedown", 5, 5);
    expect(rig.drag.isDragging()).toBe(false);
    expect(rig.drag.isPanning()).toBe(true);
    mouse(rig.svg, "mousemove", 50, 35);
    mouse(rig.svg, "mouseup", 50, 35);
    expect(rig.sent.length).toBe(0);
    const after = rig.scene.toScreen(0, 0);
    expect(after[0]).toBeCloseTo(before[0] + 45, 9);
    expect(after[1]).toBeCloseTo(before[1] + 30, 9);
  });

  it("still pans while a preview is on screen, since the view is local", () => {
    const rig = makeRig();
    rig.gate.beginPreview();
    mouse(rig.svg, "mousedown", 5, 5);
    expect(rig.drag.isPanning()).toBe(true);
    mouse(rig.svg, "mousemove", 25, 5);
    mouse(rig.svg, "mouseup", 25, 5);
    expect(rig.sent.length).toBe(0);
    expect(rig.suppressed).toBe(0);
  });

  it("flags the click that follows a real drag so selection stays put", () => {
    const rig = makeRig();
    const circle = rig.svg.querySelector('[data-node-id="t-3"] circle') as Element;
    mouse(circle, "mousedown", 10, 10);
    mouse(rig.svg, "mousemove", 60, 60);
    mouse(rig.svg, "mouseup", 60, 60);
    expect(rig.drag.consumeClickSuppression()).toBe(true);
    expect(rig.drag.consumeClickSuppression()).toBe(false);
  });
});
