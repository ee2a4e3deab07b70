// The view model is a pure reduction of bus frames: no client-side
// simulation, no DOM. Everything the canvas and panels render comes
// through applyFrame, so a reconnect rebuilds the exact same view from
// latched and streamed data.

import type {
  BusFrame, CallBadge, OdomPayload, ScanPayload, StatusPayload, TracePayload,
  WorldPayload,
} from "./protocol.js";

export type Connection = "connecting" | "connected" | "disconnected";

export interface FeedEntry {
  kind: "info" | "error" | "warning" | "event" | "agent";
  text: string;
}

export interface ViewModel {
  connection: Connection;
  description: string | null;
  world: WorldPayload | null;
  odom: Map<number, OdomPayload>;
  scans: Map<number, ScanPayload>;
  trails: Map<number, [number, number][]>;
  planCalls: CallBadge[];
  feed: FeedEntry[];
  tick: number;
}

const TRAIL_LIMIT = 800;
const FEED_LIMIT = 200;

export function emptyViewModel(): ViewModel {
  return {
    connection: "connecting",
    description: null,
    world: null,
    odom: new Map(),
    scans: new Map(),
    trails: new Map(),
    planCalls: [],
    feed: [],
    tick: 0,
  };
}

export function pushFeed(vm: ViewModel, entry: FeedEntry): void {
  vm.feed.push(entry);
  if (vm.feed.length > FEED_LIMIT) {
    vm.feed.splice(0, vm.feed.length - FEED_LIMIT);
  }
}

export function setConnection(vm: ViewModel, connection: Connection): void {
  if (vm.connection !== connection) {
    vm.connection = connection;
    pushFeed(vm, { kind: "info", text: `bridge ${connection}` });
  }
}

const AGENT_TOPIC = /^\/agent(\d+)\/(odom|scan)$/;

export function applyFrame(vm: ViewModel, frame: BusFrame): void {
  if (frame.op === "status") {
    const status = frame.msg as StatusPayload;
    pushFeed(vm, {
      kind: status.level === "error" ? "error" : "warning",
      text: `${status.code}: ${status.detail}`,
    });
    return;
  }
  if (frame.op !== "publish" || !frame.topic) {
    return;
  }
  const agentTopic = AGENT_TOPIC.exec(frame.topic);
  if (agentTopic) {
    const id = Number(agentTopic[1]);
    if (agentTopic[2] === "odom") {
      const odom = frame.msg as OdomPayload;
      vm.odom.set(id, odom);
      const trail = vm.trails.get(id) ?? [];
      trail.push([odom.pose.x, odom.pose.y]);
      if (trail.length > TRAIL_LIMIT) {
        trail.splice(0, trail.length - TRAIL_LIMIT);
      }
      vm.trails.set(id, trail);
    } else {
      vm.scans.set(id, frame.msg as ScanPayload);
    }
    return;
  }
  switch (frame.topic) {
    case "/areas_description": {
      const text = (frame.msg as { data: string }).data;
      if (text !== vm.description) {
        vm.description = text;
        pushFeed(vm, { kind: "info", text });
      }
      break;
    }
    case "/env/world":
      vm.world = frame.msg as WorldPayload;
      break;
    case "/trace":
      applyTrace(vm, frame.msg as TracePayload);
      break;
    default:
      break;
  }
}

function applyTrace(vm: ViewModel, trace: TracePayload): void {
  switch (trace.event) {
    case "tick": {
      vm.tick = trace.tick ?? vm.tick;
      const plan = trace.plans?.["0"] ?? Object.values(trace.plans ?? {})[0];
      if (plan) {
        vm.planCalls = plan.calls;
      }
      for (const event of trace.events ?? []) {
        const kind = event["kind"];
        if (kind === "pickup" || kind === "drop" || kind === "collision") {
          pushFeed(vm, { kind: "event", text: describeEvent(event) });
        }
      }
      break;
    }
    case "plan_accepted":
      vm.planCalls = ((trace.calls as { name: string }[]) ?? []).map((c) => ({
        name: c.name,
        phase: "pending",
      }));
      pushFeed(vm, { kind: "info", text: "plan accepted" });
      break;
    case "planner_response":
      if (trace.reasoning) {
        pushFeed(vm, { kind: "agent", text: `Reasoning:\n${trace.reasoning}` });
      }
      if (trace.answer) {
        pushFeed(vm, { kind: "agent", text: `Response: "${trace.answer}"` });
      }
      pushFeed(vm, { kind: "agent", text: `Tasks to be executed: ${trace.calls}` });
      break;
    case "planner_failed":
      pushFeed(vm, { kind: "error", text: `planner failed: ${trace.detail}` });
      break;
    case "regenerated":
      vm.trails.clear();
      vm.planCalls = [];
      pushFeed(vm, { kind: "info", text: "environment regenerated" });
      break;
    default:
      break;
  }
}

function describeEvent(event: Record<string, unknown>): string {
  const kind = event["kind"];
  if (kind === "pickup") {
    return `agent ${event["agent"]} picked up the ${event["color"]} ball`;
  }
  if (kind === "drop") {
    const where = event["in_zone"]
      ? `in the ${event["in_zone"]} zone`
      : "outside any zone";
    return `agent ${event["agent"]} dropped the ${event["color"]} ball ${where}`;
  }
  return `agent ${event["agent"]} hit a ${event["with"]}`;
}

export function allCallsDone(vm: ViewModel): boolean {
  return vm.planCalls.length > 0 && vm.planCalls.every((c) => c.phase === "done");
}
