/**
 * Socket client: one connection to the gateway's message endpoint, with a
 * pluggable socket factory so tests can substitute a fake transport.
 */
import { decodeFrame, encodeFrame, Frame } from "./protocol";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: ((event: { code: number }) => void) | null;
  onopen: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export const CLOSE_SESSION_CONFLICT = 4001;
export const CLOSE_INVALID_MESSAGE = 4002;

export interface ClientHandlers {
  onFrame: (frame: Frame) => void;
  onClose?: (code: number) => void;
  onError?: (error: Error) => void;
}

export class ConsoleClient {
  private socket: SocketLike | null = null;
  readonly sent: Frame[] = [];

  constructor(
    private readonly url: string,
    private readonly handlers: ClientHandlers,
    private readonly factory: SocketFactory,
  ) {}

  connect(actor: string): void {
    const socket = this.factory(`${this.url}/hatcl?actor=${encodeURIComponent(actor)}`);
    socket.onmessage = (event) => {
      try {
        this.handlers.onFrame(decodeFrame(event.data));
      } catch (error) {
        this.handlers.onError?.(error as Error);
      }
    };
    socket.onclose = (event) => {
      this.socket = null;
      this.handlers.onClose?.(event.code);
    };
    this.socket = socket;
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  /** Validates before transmission; malformed frames never leave the client. */
  send(frame: Frame): void {
    if (this.socket === null) throw new Error("not connected");
    const encoded = encodeFrame(frame);
    this.socket.send(encoded);
    this.sent.push(frame);
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }
}
