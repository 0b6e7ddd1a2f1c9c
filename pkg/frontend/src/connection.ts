import { decodeEvent, encode, type WireMessage } from "./protocol";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ConnectionHandlers {
  onEvent?: (message: WireMessage) => void;
  onDecodeError?: (reason: string, raw: string) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

const defaultFactory: SocketFactory = (url) => new WebSocket(url) as unknown as SocketLike;

/** One session socket. Outbound frames are single-line JSON; inbound frames
 * are checked before anyone renders them, so a malformed event can be shown
 * as an error without tearing down the last good scene. */
export class Connection {
  private socket: SocketLike | null = null;
  private status: ConnectionStatus = "closed";

  constructor(
    private readonly url: string,
    private readonly handlers: ConnectionHandlers = {},
    private readonly factory: SocketFactory = defaultFactory,
  ) {}

  currentStatus(): ConnectionStatus {
    return this.status;
  }

  connect(): void {
    this.setStatus("connecting");
    this.socket = this.factory(this.url);
    this.socket.onopen = () => this.setStatus("open");
    this.socket.onclose = () => this.setStatus("closed");
    this.socket.onmessage = (event) => this.receive(String(event.data));
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
    this.setStatus("closed");
  }

  send(message: WireMessage): void {
    if (!this.socket) {
      throw new Error("not connected");
    }
    this.socket.send(encode(message));
  }

  receive(raw: string): void {
    let message: WireMessage;
    try {
      message = decodeEvent(raw);
    } catch (error) {
      this.handlers.onDecodeError?.(error instanceof Error ? error.message : String(error), raw);
      return;
    }
    this.handlers.onEvent?.(message);
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.handlers.onStatus?.(status);
  }
}
