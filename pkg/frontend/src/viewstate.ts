/**
 * Console view model: conversation balloons, management-by-exception tiles,
 * the work-agreement panel, and the calm flag.
 *
 * A pure reducer over two input streams — frames from the socket and
 * decision/agreement records from a trace — so the same code drives both the
 * live console and trace replay.
 */
import { Frame } from "./protocol";

export type TileKind = "map" | "camera-still" | "alert";

export interface Tile {
  topicId: string;
  kind: TileKind;
  openedAt: number;
  assertion: Record<string, unknown>;
}

export interface Balloon {
  from: string;
  text: string;
  tick: number;
  outgoing: boolean;
}

export interface WaRow {
  waId: string;
  state: string;
  lastTick: number;
  lastReason: string;
}

export interface ViewState {
  balloons: Balloon[];
  tiles: Tile[];
  agreements: WaRow[];
  /** Deliveries received but not yet rendered/acknowledged. */
  pendingNotifications: number;
  calm: boolean;
}

export interface TileEvent {
  action: "open" | "close";
  topicId: string;
  tick: number;
}

export function initialViewState(): ViewState {
  return {
    balloons: [],
    tiles: [],
    agreements: [],
    pendingNotifications: 0,
    calm: true,
  };
}

function recomputeCalm(state: ViewState): ViewState {
  return {
    ...state,
    calm: state.tiles.length === 0 && state.pendingNotifications === 0,
  };
}

function tileKindFor(assertion: Record<string, unknown>): TileKind {
  const type = assertion["type"];
  if (type === "HostileContact") return "camera-still";
  if (type === "WaViolation" || type === "LowBattery") return "alert";
  return "map";
}

function summarize(content: unknown): string {
  if (typeof content === "string") return content;
  return JSON.stringify(content);
}

/** A trace decision record, as recorded by the runtime. */
export interface DecisionRecord {
  record: "decision";
  kind: "deliver" | "defer" | "suppress" | "retract";
  topic_id: string;
  tick: number;
  modality: string[];
  assertion: Record<string, unknown> | null;
}

export interface WaRecord {
  record: "wa";
  wa_id: string;
  from: string;
  to: string;
  tick: number;
  reason: string;
}

export type TraceRecord =
  | DecisionRecord
  | WaRecord
  | { record: string; [key: string]: unknown };

/** Apply one trace record; returns the new state plus any tile lifecycle
 * events it caused (used for conformance checks and animations). */
export function applyTraceRecord(
  state: ViewState,
  record: TraceRecord,
): { state: ViewState; events: TileEvent[] } {
  if (record.record === "decision") {
    const decision = record as DecisionRecord;
    if (decision.kind === "deliver") {
      const events: TileEvent[] = [];
      let next = { ...state };
      if (decision.modality.includes("text")) {
        next.balloons = [
          ...next.balloons,
          {
            from: "team",
            text: summarize(decision.assertion),
            tick: decision.tick,
            outgoing: false,
          },
        ];
      }
      if (
        decision.modality.includes("tile") &&
        !next.tiles.some((t) => t.topicId === decision.topic_id)
      ) {
        next.tiles = [
          ...next.tiles,
          {
            topicId: decision.topic_id,
            kind: tileKindFor(decision.assertion ?? {}),
            openedAt: decision.tick,
            assertion: decision.assertion ?? {},
          },
        ];
        events.push({ action: "open", topicId: decision.topic_id, tick: decision.tick });
      }
      return { state: recomputeCalm(next), events };
    }
    if (decision.kind === "retract") {
      const had = state.tiles.some((t) => t.topicId === decision.topic_id);
      const next = {
        ...state,
        tiles: state.tiles.filter((t) => t.topicId !== decision.topic_id),
      };
      return {
        state: recomputeCalm(next),
        events: had
          ? [{ action: "close", topicId: decision.topic_id, tick: decision.tick }]
          : [],
      };
    }
    return { state, events: [] }; // defer/suppress never touch the view
  }
  if (record.record === "wa") {
    const wa = record as WaRecord;
    const rows = state.agreements.filter((r) => r.waId !== wa.wa_id);
    rows.push({
      waId: wa.wa_id,
      state: wa.to,
      lastTick: wa.tick,
      lastReason: wa.reason,
    });
    rows.sort((a, b) => a.waId.localeCompare(b.waId));
    return { state: { ...state, agreements: rows }, events: [] };
  }
  return { state, events: [] };
}

/** An inbound frame becomes a balloon; an outbound one a local echo. */
export function applyFrame(
  state: ViewState,
  frame: Frame,
  tick: number,
  outgoing: boolean,
): ViewState {
  const next = {
    ...state,
    balloons: [
      ...state.balloons,
      {
        from: outgoing ? frame.Sender : frame.Sender,
        text: `${frame.Performative}: ${summarize(frame.Content)}`,
        tick,
        outgoing,
      },
    ],
  };
  return recomputeCalm(next);
}

/** Replay a full JSONL trace; returns the final state and every tile event. */
export function replayTrace(lines: string[]): {
  state: ViewState;
  events: TileEvent[];
} {
  let state = initialViewState();
  const events: TileEvent[] = [];
  for (const line of lines) {
    if (!line.trim()) continue;
    const record = JSON.parse(line) as TraceRecord;
    const result = applyTraceRecord(state, record);
    state = result.state;
    events.push(...result.events);
  }
  return { state, events };
}
