import { MUTATING_TYPES, type WireMessage } from "./protocol";

export type SendFn = (message: WireMessage) => void;

/** Guards the outbound channel while a history preview is on screen. Reads
 * (get_preview, export) pass through; anything that would mutate the canvas
 * is blocked until the preview ends. Ending the preview before a restore is
 * what lets the timeline click go through. */
export class PreviewGate {
  private previewing = false;
  private blockedListener: ((type: string) => void) | null = null;

  constructor(private readonly rawSend: SendFn) {}

  isPreviewing(): boolean {
    return this.previewing;
  }

  beginPreview(): void {
    this.previewing = true;
  }

  endPreview(): void {
    this.previewing = false;
  }

  onBlocked(listener: (type: string) => void): void {
    this.blockedListener = listener;
  }

  /** Returns true if the message went out. */
  send(message: WireMessage): boolean {
    if (this.previewing && MUTATING_TYPES.has(message.type)) {
      this.blockedListener?.(message.type);
      return false;
    }
    this.rawSend(message);
    return true;
  }
}
