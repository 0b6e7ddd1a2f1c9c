import type { CanvasPayload, ContentPayload, TopicPayload } from "./protocol";
import { CONFLICT_COLOR, QUESTION_COLOR, TOPIC_COLOR, colorForRound } from "./palette";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface SceneOptions {
  width?: number;
  height?: number;
  /** Half-width of the canvas coordinate square being displayed. */
  extent?: number;
}

interface NodeEntry {
  group: SVGGElement;
  x: number;
  y: number;
  links: SVGLineElement[];
  linkEnds: ("a" | "b")[];
}

function snippet(text: string, limit = 42): string {
  const flat = text.replace(/\s+/g, " ").trim();
  return flat.length <= limit ? flat : flat.slice(0, limit - 1) + "…";
}

/** Draws the canvas into an SVG element. Topics are labeled hubs, contents
 * are satellites tinted by round, parent links are solid, conflict edges are
 * dashed and labeled. Positions are kept in canvas units; the scene owns the
 * mapping to pixels so drags can be converted back without layout queries. */
export class Scene {
  private readonly svg: SVGSVGElement;
  private readonly width: number;
  private readonly height: number;
  private readonly scale: number;
  private nodes = new Map<string, NodeEntry>();
  private lastCanvas: CanvasPayload | null = null;
  private animationToken = 0;
  private zoom = 1;
  private panX = 0;
  private panY = 0;

  constructor(svg: SVGSVGElement, options: SceneOptions = {}) {
    this.svg = svg;
    this.width = options.width ?? 1200;
    this.height = options.height ?? 900;
    const extent = options.extent ?? 600;
    this.scale = Math.min(this.width, this.height) / (2 * extent + 120);
    svg.setAttribute("width", String(this.width));
    svg.setAttribute("height", String(this.height));
    svg.setAttribute("viewBox", `0 0 ${this.width} ${this.height}`);
  }

  canvas(): CanvasPayload | null {
    return this.lastCanvas;
  }

  toScreen(x: number, y: number): [number, number] {
    const k = this.scale * this.zoom;
    return [this.width / 2 + this.panX + x * k, this.height / 2 + this.panY + y * k];
  }

  toCanvas(px: number, py: number): [number, number] {
    const k = this.scale * this.zoom;
    return [(px - this.width / 2 - this.panX) / k, (py - this.height / 2 - this.panY) / k];
  }

  /** Canvas units moved per screen pixel, for converting drag deltas. */
  canvasUnitsPerPixel(): number {
    return 1 / (this.scale * this.zoom);
  }

  currentZoom(): number {
    return this.zoom;
  }

  /** Shifts the viewport by a screen-pixel delta. */
  panBy(dxPixels: number, dyPixels: number): void {
    this.panX += dxPixels;
    this.panY += dyPixels;
    this.refreshView();
  }

  /** Scales the viewport, keeping the screen point (px, py) stationary. */
  zoomAt(factor: number, px: number, py: number): void {
    const [anchorX, anchorY] = this.toCanvas(px, py);
    this.zoom = Math.min(4, Math.max(0.25, this.zoom * factor));
    const k = this.scale * this.zoom;
    this.panX = px - this.width / 2 - anchorX * k;
    this.panY = py - this.height / 2 - anchorY * k;
    this.refreshView();
  }

  resetView(): void {
    this.zoom = 1;
    this.panX = 0;
    this.panY = 0;
    this.refreshView();
  }

  private refreshView(): void {
    if (this.lastCanvas) {
      this.render(this.lastCanvas);
    }
  }

  nodeElement(id: string): SVGGElement | null {
    return this.nodes.get(id)?.group ?? null;
  }

  positionOf(id: string): [number, number] | null {
    const entry = this.nodes.get(id);
    return entry ? [entry.x, entry.y] : null;
  }

  render(canvas: CanvasPayload): void {
    // Work on a copy: optimistic drags and tweens write positions back into
    // the scene state and must not corrupt the caller's snapshot of it.
    this.lastCanvas = structuredClone(canvas);
    this.animationToken += 1;
    this.nodes = new Map();
    while (this.svg.firstChild) {
      this.svg.removeChild(this.svg.firstChild);
    }

    const linkLayer = this.layer("links");
    const conflictLayer = this.layer("conflicts");
    const nodeLayer = this.layer("nodes");

    const topicsById = new Map(canvas.topics.map((t) => [t.id, t]));
    for (const topic of canvas.topics) {
      this.addTopic(nodeLayer, topic);
    }
    for (const content of canvas.contents) {
      const link = this.addParentLink(linkLayer, content, topicsById.get(content.parent));
      this.addContent(nodeLayer, content, link);
    }
    for (const conflict of canvas.conflicts) {
      this.addConflictEdge(conflictLayer, conflict.a, conflict.b, conflict.conflict_type);
    }
  }

  /** Re-renders, then eases nodes that survived from their old spots to the
   * new ones. Falls back to an instant jump where frame timing is missing. */
  renderAnimated(canvas: CanvasPayload, durationMs = 300): void {
    const before = new Map<string, [number, number]>();
    for (const [id, entry] of this.nodes) {
      before.set(id, [entry.x, entry.y]);
    }
    this.render(canvas);
    if (durationMs <= 0 || typeof requestAnimationFrame !== "function") {
      return;
    }
    const moves: { id: string; from: [number, number]; to: [number, number] }[] = [];
    for (const [id, entry] of this.nodes) {
      const old = before.get(id);
      if (old && (old[0] !== entry.x || old[1] !== entry.y)) {
        moves.push({ id, from: old, to: [entry.x, entry.y] });
        this.moveNode(id, old[0], old[1]);
      }
    }
    if (moves.length === 0) {
      return;
    }
    const token = this.animationToken;
    const started = performance.now();
    const step = (now: number): void => {
      if (token !== this.animationToken) {
        return;
      }
      const t = Math.min(1, (now - started) / durationMs);
      const eased = t * (2 - t);
      for (const move of moves) {
        this.moveNode(
          move.id,
          move.from[0] + (move.to[0] - move.from[0]) * eased,
          move.from[1] + (move.to[1] - move.from[1]) * eased,
        );
      }
      if (t < 1) {
        requestAnimationFrame(step);
      }
    };
    requestAnimationFrame(step);
  }

  /** Optimistic position update in canvas units; no full re-render. */
  moveNode(id: string, x: number, y: number): void {
    const entry = this.nodes.get(id);
    if (!entry) {
      return;
    }
    entry.x = x;
    entry.y = y;
    const [px, py] = this.toScreen(x, y);
    entry.group.setAttribute("transform", `translate(${px} ${py})`);
    entry.links.forEach((line, i) => {
      const end = entry.linkEnds[i];
      line.setAttribute(end === "a" ? "x1" : "x2", String(px));
      line.setAttribute(end === "a" ? "y1" : "y2", String(py));
    });
    if (this.lastCanvas) {
      const topic = this.lastCanvas.topics.find((t) => t.id === id);
      if (topic) {
        topic.position = [x, y];
      }
      const content = this.lastCanvas.contents.find((c) => c.id === id);
      if (content) {
        content.position = [x, y];
      }
    }
  }

  private layer(name: string): SVGGElement {
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("class", name);
    this.svg.appendChild(group);
    return group;
  }

  private registerNode(id: string, group: SVGGElement, x: number, y: number): NodeEntry {
    const entry: NodeEntry = { group, x, y, links: [], linkEnds: [] };
    this.nodes.set(id, entry);
    return entry;
  }

  private addTopic(layer: SVGGElement, topic: TopicPayload): void {
    const [x, y] = topic.position;
    const [px, py] = this.toScreen(x, y);
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("class", "node topic");
    group.setAttribute("data-node-id", topic.id);
    group.setAttribute("transform", `translate(${px} ${py})`);

    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("r", "26");
    circle.setAttribute("fill", "#ffffff");
    circle.setAttribute("stroke", TOPIC_COLOR);
    circle.setAttribute("stroke-width", "2.5");
    group.appendChild(circle);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("class", "topic-label");
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("y", "-34");
    label.setAttribute("fill", TOPIC_COLOR);
    label.textContent = topic.label;
    group.appendChild(label);

    layer.appendChild(group);
    this.registerNode(topic.id, group, x, y);
  }

  private addContent(
    layer: SVGGElement,
    content: ContentPayload,
    link: SVGLineElement | null,
  ): void {
    const [x, y] = content.position;
    const [px, py] = this.toScreen(x, y);
    const group = document.createElementNS(SVG_NS, "g");
    const isQuestion = content.kind === "ai_question";
    group.setAttribute("class", isQuestion ? "node content question" : "node content");
    group.setAttribute("data-node-id", content.id);
    group.setAttribute("data-round", String(content.round));
    group.setAttribute("transform", `translate(${px} ${py})`);

    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("r", "10");
    circle.setAttribute("fill", isQuestion ? "#ffffff" : colorForRound(content.round));
    circle.setAttribute("stroke", isQuestion ? QUESTION_COLOR : "#ffffff");
    if (isQuestion) {
      circle.setAttribute("stroke-dasharray", "3 2");
    }
    group.appendChild(circle);

    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("class", "content-text");
    text.setAttribute("x", "14");
    text.setAttribute("y", "4");
    text.textContent = snippet(content.text);
    group.appendChild(text);

    layer.appendChild(group);
    const entry = this.registerNode(content.id, group, x, y);
    if (link) {
      entry.links.push(link);
      entry.linkEnds.push("b");
    }
  }

  private addParentLink(
    layer: SVGGElement,
    content: ContentPayload,
    parent: TopicPayload | undefined,
  ): SVGLineElement | null {
    if (!parent) {
      return null;
    }
    const [x1, y1] = this.toScreen(parent.position[0], parent.position[1]);
    const [x2, y2] = this.toScreen(content.position[0], content.position[1]);
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("class", "parent-link");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    line.setAttribute("stroke", "#c8c8c8");
    line.setAttribute("stroke-width", "1.5");
    layer.appendChild(line);
    const parentEntry = this.nodes.get(parent.id);
    if (parentEntry) {
      parentEntry.links.push(line);
      parentEntry.linkEnds.push("a");
    }
    return line;
  }

  private addConflictEdge(layer: SVGGElement, a: string, b: string, kind: string): void {
    const from = this.nodes.get(a);
    const to = this.nodes.get(b);
    if (!from || !to) {
      return;
    }
    const [x1, y1] = this.toScreen(from.x, from.y);
    const [x2, y2] = this.toScreen(to.x, to.y);
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("class", "conflict-edge");
    line.setAttribute("x1", String(x1));
    line.setAttribute("y1", String(y1));
    line.setAttribute("x2", String(x2));
    line.setAttribute("y2", String(y2));
    line.setAttribute("stroke", CONFLICT_COLOR);
    line.setAttribute("stroke-width", "2");
    line.setAttribute("stroke-dasharray", "6 4");
    layer.appendChild(line);

    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("class", "conflict-label");
    label.setAttribute("x", String((x1 + x2) / 2));
    label.setAttribute("y", String((y1 + y2) / 2 - 6));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("fill", CONFLICT_COLOR);
    label.textContent = kind;
    layer.appendChild(label);
  }
}
