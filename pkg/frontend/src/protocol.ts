// Wire protocol types shared with the bridge: one JSON object per frame,
// fields exactly op/topic/type/msg/id.

export type Op =
  | "advertise"
  | "unadvertise"
  | "publish"
  | "subscribe"
  | "unsubscribe"
  | "status";

export interface BusFrame {
  op: Op;
  topic?: string;
  type?: string;
  msg?: unknown;
  id?: string;
}

export interface StatusPayload {
  level: "error" | "warning" | "info";
  code: string;
  detail: string;
}

export interface PoseDto {
  x: number;
  y: number;
  theta: number;
}

export interface OdomPayload {
  stamp: number;
  pose: PoseDto;
  twist: { linear: number; angular: number };
}

export interface ScanPayload {
  stamp: number;
  angle_min: number;
  angle_increment: number;
  ranges: number[];
}

export interface WorldPayload {
  areas: { index: number; x0: number; y0: number; cols: number; rows: number; cell: number }[];
  obstacles: (
    | { kind: "rect"; cx: number; cy: number; hx: number; hy: number; rot: number }
    | { kind: "circle"; cx: number; cy: number; r: number }
  )[];
  balls: { id: number; color: string; x: number; y: number; carried_by: number | null; radius: number }[];
  zones: { id: number; color: string; cx: number; cy: number; r: number }[];
  agents: { id: number; x: number; y: number; theta: number; radius: number }[];
  walls: [number, number, number, number][];
}

export interface CallBadge {
  name: string;
  phase: string; // pending | exploring | navigating | acting | done | failed
}

export interface TracePayload {
  event: string;
  tick?: number;
  t?: number;
  agents?: { id: number; x: number; y: number; theta: number }[];
  events?: Record<string, unknown>[];
  plans?: Record<string, { call_index: number; call: string; phase: string; calls: CallBadge[] }>;
  reasoning?: string;
  answer?: string;
  calls?: unknown;
  detail?: string;
}

export function parseFrame(data: string): BusFrame | null {
  try {
    const frame = JSON.parse(data) as BusFrame;
    return typeof frame.op === "string" ? frame : null;
  } catch {
    return null;
  }
}

export function serializeFrame(frame: BusFrame): string {
  return JSON.stringify(frame);
}
