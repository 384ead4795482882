// Pure view-state reducer. Every render model here derives from received
// protocol messages only; the console never recomputes localization or
// pathfinding on its own. apply() is deterministic, so replaying a captured
// message log always reproduces the identical view state.

import type { Envelope, ErrorPayload, PoseState, RoomSnapshot, StrokeState } from "./protocol";

export interface ScenarioElement {
  id: string;
  kind: string;
  model: string;
  node: string;
  shelf: string | null;
  slot: number | null;
}

export interface ScenarioAlarm {
  element_id: string;
  text: string;
  severity: string;
  timestamp_ms: number;
}

export interface ScenarioDoc {
  name: string;
  topology: {
    elements: ScenarioElement[];
    edges: [string, string][];
    paths: { id: string; route: string[]; line_rate_gbps: number }[];
    fiber_lengths_km: Record<string, number>;
  };
  alarms: ScenarioAlarm[];
  points: Record<string, [number, number]>;
  frames: Record<string, string>;
  shelves: Record<string, [number, string, string][]>;
  nav?: {
    resolution_m: number;
    dims: [number, number];
    origin_m: [number, number];
    blocked: [number, number][];
  };
}

export type Badge = "RED" | "BLUE" | "NONE";

export interface NavModel {
  cells: [number, number][];
  arrows: { position_m: [number, number]; heading_rad: number }[];
  flag: { position_m: [number, number]; height_m: number };
  cost: number;
}

export interface OverlayModel {
  frame: string;
  shelf: string;
  items: {
    element_id: string;
    slot: number;
    label: string;
    confidence: number;
    color: Badge;
  }[];
  root_cause_visible: boolean;
}

export interface CollabModel {
  room: string | null;
  participants: string[];
  poses: Record<string, PoseState>;
  strokes: StrokeState[];
  // object ids whose local write was rejected and snapped to the
  // authoritative pose; render highlights them until the next update
  snappedBack: string[];
}

export interface ViewState {
  sessionId: string;
  connected: boolean;
  banner: string | null;
  scenarioName: string | null;
  elements: Record<string, ScenarioElement>;
  edges: [string, string][];
  paths: { id: string; route: string[]; line_rate_gbps: number }[];
  alarms: ScenarioAlarm[];
  badges: Record<string, Badge>;
  ranking: [string, number][] | null;
  rankingAlgo: string | null;
  nav: NavModel | null;
  navGrid: NonNullable<ScenarioDoc["nav"]> | null;
  overlay: OverlayModel | null;
  collab: CollabModel;
  chat: { from: string; text: string }[];
  log: string[];
}

export type ConsoleEvent =
  | { type: "connected" }
  | { type: "disconnected" }
  | { type: "retrying"; kind: string }
  | { type: "scenario"; doc: ScenarioDoc }
  | { type: "frame"; frame: Envelope };

export function initialState(sessionId: string): ViewState {
  return {
    sessionId,
    connected: false,
    banner: null,
    scenarioName: null,
    elements: {},
    edges: [],
    paths: [],
    alarms: [],
    badges: {},
    ranking: null,
    rankingAlgo: null,
    nav: null,
    navGrid: null,
    overlay: null,
    collab: { room: null, participants: [], poses: {}, strokes: [], snappedBack: [] },
    chat: [],
    log: [],
  };
}

function withLog(state: ViewState, line: string): ViewState {
  return { ...state, log: [...state.log, line] };
}

function applyScenario(state: ViewState, doc: ScenarioDoc): ViewState {
  const elements: Record<string, ScenarioElement> = {};
  const badges: Record<string, Badge> = {};
  for (const el of doc.topology.elements) {
    elements[el.id] = el;
    badges[el.id] = "NONE";
  }
  return {
    ...state,
    scenarioName: doc.name,
    elements,
    edges: doc.topology.edges,
    paths: doc.topology.paths,
    alarms: doc.alarms,
    badges,
    navGrid: doc.nav ?? null,
  };
}

function applyLocalization(state: ViewState, payload: Record<string, unknown>): ViewState {
  // badge colors come straight off the response: the server names the
  // root cause and the alarmed set, the client only paints them
  const root = payload.root_cause_id as string;
  const alarmed = (payload.alarmed as string[]) ?? [];
  const badges: Record<string, Badge> = {};
  for (const id of Object.keys(state.elements)) badges[id] = "NONE";
  for (const id of alarmed) badges[id] = "BLUE";
  badges[root] = "RED";
  return {
    ...state,
    badges,
    ranking: payload.ranking as [string, number][],
    rankingAlgo: (payload.algo as string) ?? null,
    banner: null,
  };
}

function adoptPose(collab: CollabModel, incoming: PoseState, snapped: boolean): CollabModel {
  const current = collab.poses[incoming.object_id];
  if (current && incoming.seq < current.seq) return collab;
  return {
    ...collab,
    poses: { ...collab.poses, [incoming.object_id]: incoming },
    snappedBack: snapped
      ? [...collab.snappedBack.filter((o) => o !== incoming.object_id), incoming.object_id]
      : collab.snappedBack.filter((o) => o !== incoming.object_id),
  };
}

function applyFrame(state: ViewState, frame: Envelope): ViewState {
  const payload = frame.payload ?? {};
  switch (frame.kind) {
    case "error": {
      const err = payload as unknown as ErrorPayload;
      // error frames render verbatim and never touch the domain models
      return withLog(
        { ...state, banner: `${err.code}: ${err.message}` },
        `error in_reply_to=${err.in_reply_to}: ${err.code}`,
      );
    }
    case "pong":
      return state;
    case "hello_response":
      return withLog(state, `connected to ${payload.server} (${payload.scenario})`);
    case "alarm_batch_response":
      return withLog(state, `alarm feed replaced, ${payload.count} alarms`);
    case "localize_request_response":
      return applyLocalization(state, payload);
    case "nav_request_response":
      return { ...state, nav: payload as unknown as NavModel, banner: null };
    case "card_id_request_response":
      return { ...state, overlay: payload as unknown as OverlayModel, banner: null };
    case "collab_join_response": {
      const snap = payload as unknown as RoomSnapshot;
      return {
        ...state,
        collab: {
          room: snap.room,
          participants: snap.participants,
          poses: { ...snap.poses },
          strokes: [...snap.strokes],
          snappedBack: [],
        },
      };
    }
    case "pose_update_response": {
      const accepted = payload.accepted as boolean;
      const authoritative = payload.state as unknown as PoseState;
      const collab = adoptPose(state.collab, authoritative, !accepted);
      const next = { ...state, collab };
      return accepted
        ? next
        : withLog(next, `pose for ${authoritative.object_id} snapped back to seq ${authoritative.seq}`);
    }
    case "pose_broadcast": {
      const incoming = payload.state as unknown as PoseState;
      return { ...state, collab: adoptPose(state.collab, incoming, false) };
    }
    case "stroke_add_response":
    case "stroke_broadcast": {
      const stroke = payload.stroke as unknown as StrokeState;
      if (state.collab.strokes.some((s) => s.stroke_id === stroke.stroke_id)) return state;
      return {
        ...state,
        collab: { ...state.collab, strokes: [...state.collab.strokes, stroke] },
      };
    }
    case "chat_text_response":
      return state;
    case "chat_broadcast":
      return {
        ...state,
        chat: [...state.chat, { from: payload.from as string, text: payload.text as string }],
      };
    default:
      return withLog(state, `unhandled frame kind ${frame.kind}`);
  }
}

export function apply(state: ViewState, event: ConsoleEvent): ViewState {
  switch (event.type) {
    case "connected":
      return { ...state, connected: true, banner: null };
    case "disconnected":
      return { ...state, connected: false, banner: "connection lost, reconnecting" };
    case "retrying":
      return withLog(state, `retrying ${event.kind} after reconnect`);
    case "scenario":
      return applyScenario(state, event.doc);
    case "frame":
      return applyFrame(state, event.frame);
  }
}

export function replay(sessionId: string, events: ConsoleEvent[]): ViewState {
  return events.reduce(apply, initialState(sessionId));
}
