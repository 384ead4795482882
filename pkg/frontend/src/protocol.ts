// Wire types for the edge service's JSON protocol. The WebSocket endpoint
// carries the same bodies as the TCP stream, minus the length prefix.

export interface Envelope {
  msg_id: number | null;
  session_id: string | null;
  kind: string;
  payload: Record<string, unknown>;
  client_send_ts_ms?: number;
  server_recv_ts_ms?: number;
  server_send_ts_ms?: number;
}

export interface ErrorPayload {
  code: string;
  message: string;
  in_reply_to: number | null;
}

export interface PoseState {
  object_id: string;
  position: [number, number, number];
  orientation: [number, number, number, number];
  seq: number;
  owner: string;
}

export interface StrokeState {
  stroke_id: string;
  author: string;
  points: number[][];
  color: string;
}

export interface RoomSnapshot {
  room: string;
  participants: string[];
  poses: Record<string, PoseState>;
  strokes: StrokeState[];
}

// Server-initiated kinds; they carry no msg_id and expect no reply.
export const PUSH_KINDS = new Set(["pose_broadcast", "stroke_broadcast", "chat_broadcast"]);

export function isPush(frame: Envelope): boolean {
  return PUSH_KINDS.has(frame.kind);
}

export function responseKind(requestKind: string): string {
  return requestKind === "ping" ? "pong" : `${requestKind}_response`;
}

export function buildRequest(
  msgId: number,
  sessionId: string,
  kind: string,
  payload: Record<string, unknown>,
): Envelope {
  return {
    msg_id: msgId,
    session_id: sessionId,
    kind,
    payload,
    client_send_ts_ms: Date.now(),
  };
}

export function parseFrame(data: string): Envelope {
  const obj = JSON.parse(data);
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("frame body must be a JSON object");
  }
  return obj as Envelope;
}
