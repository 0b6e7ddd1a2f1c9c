import { Connection, type SocketFactory } from "./connection";
import { DragController } from "./drag";
import { PreviewGate } from "./gate";
import { Scene } from "./scene";
import { Timeline } from "./timeline";
import { MicCapture, utf8ToBase64 } from "./audio";
import {
  askQuestions,
  audioChunk,
  deleteNode,
  dictateContent,
  exportMemo,
  restructure,
  showConflicts,
  startRecording,
  stopRecording,
  type CanvasPayload,
  type MemoStyle,
  type SnapshotPayload,
  type WireMessage,
} from "./protocol";

export interface AppOptions {
  socketFactory?: SocketFactory;
  sceneWidth?: number;
  sceneHeight?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

/** Wires the canvas, toolbar, timeline and socket into one working surface.
 * All outbound traffic funnels through the preview gate; all inbound frames
 * are structurally checked before they can replace what is on screen. */
export class App {
  readonly scene: Scene;
  readonly gate: PreviewGate;
  readonly timeline: Timeline;
  readonly drag: DragController;
  readonly connection: Connection;
  readonly selection = new Set<string>();

  private lastGood: CanvasPayload | null = null;
  private recording = false;
  private mic: MicCapture | null = null;

  private readonly banner: HTMLElement;
  private readonly svg: SVGSVGElement;
  private readonly timelineStrip: HTMLElement;
  private readonly transcriptLine: HTMLElement;
  private readonly memoOutput: HTMLElement;
  private readonly dictateInput: HTMLTextAreaElement;
  private readonly restructureInput: HTMLInputElement;
  private readonly recordButton: HTMLButtonElement;
  private readonly fallbackInput: HTMLInputElement;
  private readonly selectionReadout: HTMLElement;
  private readonly exportDialog: HTMLElement;
  private readonly exportStyle: HTMLSelectElement;

  constructor(root: HTMLElement, url: string, options: AppOptions = {}) {
    this.banner = el("div", "banner hidden");
    root.appendChild(this.banner);

    const toolbar = el("div", "toolbar");
    this.dictateInput = el("textarea", "dictate-input");
    this.dictateInput.placeholder = "Type or dictate what you want on the canvas";
    const dictateButton = el("button", "dictate-send", "Add to canvas");
    dictateButton.addEventListener("click", () => this.sendDictation());
    this.restructureInput = el("input", "restructure-input");
    this.restructureInput.placeholder = "Tell the canvas how to reorganize";
    const restructureButton = el("button", "restructure-send", "Restructure");
    restructureButton.addEventListener("click", () => this.sendRestructure());
    const questionsButton = el("button", "ask-questions", "Ask questions");
    questionsButton.addEventListener("click", () =>
      this.gate.send(askQuestions(this.topicSelection())),
    );
    const conflictsButton = el("button", "show-conflicts", "Show conflicts");
    conflictsButton.addEventListener("click", () => this.gate.send(showConflicts()));
    const deleteButton = el("button", "delete-selected", "Delete selected");
    deleteButton.addEventListener("click", () => this.deleteSelection());
    const exportButton = el("button", "export-open", "Export memo");
    exportButton.addEventListener("click", () => this.exportDialog.classList.toggle("hidden"));
    this.recordButton = el("button", "record-toggle", "Start recording");
    this.recordButton.addEventListener("click", () => void this.toggleRecording());
    this.fallbackInput = el("input", "record-fallback");
    this.fallbackInput.placeholder = "No microphone: type speech here, Enter sends";
    this.fallbackInput.classList.add("hidden");
    this.fallbackInput.addEventListener("keydown", (event) => {
      if (event.key === "Enter") {
        this.sendTypedRecording();
      }
    });
    this.selectionReadout = el("span", "selection-readout", "no topics selected");
    toolbar.append(
      this.dictateInput,
      dictateButton,
      this.restructureInput,
      restructureButton,
      questionsButton,
      conflictsButton,
      deleteButton,
      exportButton,
      this.recordButton,
      this.fallbackInput,
      this.selectionReadout,
    );
    root.appendChild(toolbar);

    this.exportDialog = el("div", "export-dialog hidden");
    this.exportStyle = document.createElement("select");
    this.exportStyle.className = "export-style";
    for (const style of ["comprehensive", "executive", "bullet"]) {
      const option = document.createElement("option");
      option.value = style;
      option.textContent = style;
      this.exportStyle.appendChild(option);
    }
    const exportGo = el("button", "export-go", "Generate");
    exportGo.addEventListener("click", () => this.sendExport());
    this.exportDialog.append(this.exportStyle, exportGo);
    root.appendChild(this.exportDialog);

    this.svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.svg.setAttribute("class", "canvas");
    root.appendChild(this.svg);

    this.timelineStrip = el("div", "timeline");
    root.appendChild(this.timelineStrip);
    this.transcriptLine = el("div", "transcript");
    root.appendChild(this.transcriptLine);
    this.memoOutput = el("pre", "memo-output");
    root.appendChild(this.memoOutput);

    this.connection = new Connection(
      url,
      {
        onEvent: (message) => this.handleEvent(message),
        onDecodeError: (reason) => this.showBanner(`dropped a malformed event: ${reason}`),
        onStatus: (status) => root.setAttribute("data-connection", status),
      },
      options.socketFactory,
    );
    this.gate = new PreviewGate((message) => this.connection.send(message));
    this.gate.onBlocked(() =>
      this.showBanner("previewing history; leave the timeline to edit again"),
    );
    this.scene = new Scene(this.svg, {
      width: options.sceneWidth,
      height: options.sceneHeight,
    });
    this.drag = new DragController(this.svg, this.scene, this.gate, {
      onSuppressed: () =>
        this.showBanner("previewing history; leave the timeline to move nodes"),
    });
    this.timeline = new Timeline(this.timelineStrip, this.gate, {
      onPreviewEnd: () => {
        if (this.lastGood) {
          this.scene.renderAnimated(this.lastGood);
        }
      },
    });
    this.svg.addEventListener("click", (event) => this.onCanvasClick(event));
    this.svg.addEventListener("wheel", (event) => {
      event.preventDefault();
      const factor = event.deltaY < 0 ? 1.15 : 1 / 1.15;
      this.scene.zoomAt(factor, event.clientX, event.clientY);
    });
  }

  connect(): void {
    this.connection.connect();
  }

  /** Test seam: feed a raw frame as if it came off the socket. */
  receive(raw: string): void {
    this.connection.receive(raw);
  }

  lastGoodCanvas(): CanvasPayload | null {
    return this.lastGood;
  }

  handleEvent(message: WireMessage): void {
    switch (message.type) {
      case "canvas_update": {
        const canvas = message.payload as unknown as CanvasPayload;
        this.lastGood = canvas;
        this.scene.renderAnimated(canvas);
        this.pruneSelection(canvas);
        this.applySelectionMarks();
        break;
      }
      case "snapshot_added":
        this.timeline.addSnapshot(message.payload as unknown as SnapshotPayload);
        break;
      case "preview": {
        const state = message.payload.state as unknown as CanvasPayload;
        this.scene.renderAnimated(state);
        break;
      }
      case "export_ready": {
        const text = String(message.payload.text ?? "");
        this.memoOutput.textContent = text;
        const warning = message.payload.warning;
        if (typeof warning === "string") {
          this.showBanner(warning);
        }
        break;
      }
      case "transcript_partial":
        this.transcriptLine.textContent = `listening: ${String(message.payload.text ?? "")}`;
        break;
      case "transcript_final":
        this.transcriptLine.textContent = String(message.payload.text ?? "");
        break;
      case "error": {
        const code = String(message.payload.code ?? "error");
        const detail = String(message.payload.message ?? "");
        this.showBanner(`${code}: ${detail}`);
        if (code === "transcription_disconnected" || code === "empty_transcript") {
          this.setRecording(false);
        }
        break;
      }
      default:
        this.showBanner(`server sent an unknown event type ${message.type}`);
    }
  }

  showBanner(text: string): void {
    this.banner.textContent = text;
    this.banner.classList.remove("hidden");
  }

  clearBanner(): void {
    this.banner.textContent = "";
    this.banner.classList.add("hidden");
  }

  topicSelection(): string[] | undefined {
    if (!this.lastGood || this.selection.size === 0) {
      return undefined;
    }
    const topicIds = new Set(this.lastGood.topics.map((t) => t.id));
    const picked = [...this.selection].filter((id) => topicIds.has(id));
    return picked.length > 0 ? picked : undefined;
  }

  private sendDictation(): void {
    const transcript = this.dictateInput.value;
    if (!transcript.trim()) {
      this.showBanner("nothing to add yet; say or type something first");
      return;
    }
    if (this.gate.send(dictateContent(transcript, this.topicSelection()))) {
      this.dictateInput.value = "";
    }
  }

  private sendRestructure(): void {
    const instruction = this.restructureInput.value;
    if (!instruction.trim()) {
      this.showBanner("describe the reorganization you want");
      return;
    }
    if (this.gate.send(restructure(instruction, this.topicSelection()))) {
      this.restructureInput.value = "";
    }
  }

  private sendExport(): void {
    if (!this.lastGood) {
      this.showBanner("the canvas is empty; nothing to export");
      return;
    }
    const ids =
      this.selection.size > 0
        ? [...this.selection]
        : [
            ...this.lastGood.topics.map((t) => t.id),
            ...this.lastGood.contents.map((c) => c.id),
          ];
    if (ids.length === 0) {
      this.showBanner("the canvas is empty; nothing to export");
      return;
    }
    this.gate.send(exportMemo(this.exportStyle.value as MemoStyle, ids));
    this.exportDialog.classList.add("hidden");
  }

  private async toggleRecording(): Promise<void> {
    if (this.recording) {
      this.mic?.stop();
      this.mic = null;
      this.gate.send(stopRecording());
      this.setRecording(false);
      return;
    }
    if (!this.gate.send(startRecording(this.topicSelection()))) {
      return;
    }
    this.setRecording(true);
    if (MicCapture.isSupported()) {
      this.mic = new MicCapture();
      try {
        await this.mic.start((chunk) => this.gate.send(audioChunk(chunk)));
      } catch (error) {
        this.mic = null;
        this.showBanner(
          `microphone unavailable (${error instanceof Error ? error.message : String(error)}); type instead`,
        );
        this.fallbackInput.classList.remove("hidden");
      }
    } else {
      this.fallbackInput.classList.remove("hidden");
    }
  }

  private deleteSelection(): void {
    if (this.selection.size === 0) {
      this.showBanner("select nodes to delete first");
      return;
    }
    for (const id of [...this.selection]) {
      this.gate.send(deleteNode(id));
    }
  }

  private sendTypedRecording(): void {
    const text = this.fallbackInput.value;
    if (!text.trim() || !this.recording) {
      return;
    }
    this.gate.send(audioChunk(utf8ToBase64(text)));
    this.fallbackInput.value = "";
  }

  private setRecording(recording: boolean): void {
    this.recording = recording;
    this.recordButton.textContent = recording ? "Stop recording" : "Start recording";
    this.recordButton.classList.toggle("recording", recording);
    if (!recording) {
      this.fallbackInput.classList.add("hidden");
      if (this.mic) {
        this.mic.stop();
        this.mic = null;
      }
    }
  }

  private onCanvasClick(event: MouseEvent): void {
    if (this.drag.consumeClickSuppression()) {
      return;
    }
    const target = event.target as Element | null;
    const group = target?.closest?.("[data-node-id]");
    const id = group?.getAttribute("data-node-id");
    if (!id) {
      return;
    }
    if (this.selection.has(id)) {
      this.selection.delete(id);
    } else {
      this.selection.add(id);
    }
    this.applySelectionMarks();
  }

  private pruneSelection(canvas: CanvasPayload): void {
    const alive = new Set([
      ...canvas.topics.map((t) => t.id),
      ...canvas.contents.map((c) => c.id),
    ]);
    for (const id of [...this.selection]) {
      if (!alive.has(id)) {
        this.selection.delete(id);
      }
    }
  }

  private applySelectionMarks(): void {
    this.svg.querySelectorAll("[data-node-id]").forEach((node) => {
      const id = node.getAttribute("data-node-id");
      node.classList.toggle("selected", id !== null && this.selection.has(id));
    });
    const topics = this.topicSelection();
    this.selectionReadout.textContent = topics
      ? `${topics.length} topic${topics.length === 1 ? "" : "s"} selected`
      : "no topics selected";
  }
}
