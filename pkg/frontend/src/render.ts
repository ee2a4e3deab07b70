// Canvas drawing of the view model: walls, obstacles, zones, balls, agent
// discs with heading ticks, pose trails, and an optional LiDAR overlay.

import type { ViewModel } from "./state.js";
import type { Viewport } from "./transform.js";
import { fitViewport, lengthToScreen, worldToScreen } from "./transform.js";

const COLOR_MAP: Record<string, string> = {
  Red: "#d62728",
  Green: "#2ca02c",
  Blue: "#1f77b4",
  Orange: "#ff7f0e",
  Yellow: "#e6c700",
  Purple: "#9467bd",
};

export interface RenderOptions {
  showScan: boolean;
}

export interface PoseLike {
  x: number;
  y: number;
  theta: number;
}

// one endpoint per range: the overlay draws every beam in the frame
export function scanBeamEndpoints(
  pose: PoseLike,
  scan: { angle_min: number; angle_increment: number; ranges: number[] },
): [number, number][] {
  return scan.ranges.map((range, i) => {
    const angle = pose.theta + scan.angle_min + i * scan.angle_increment;
    return [pose.x + range * Math.cos(angle), pose.y + range * Math.sin(angle)];
  });
}

export function worldExtent(vm: ViewModel): [number, number] {
  if (!vm.world || vm.world.areas.length === 0) {
    return [10, 10];
  }
  let width = 0;
  let height = 0;
  for (const area of vm.world.areas) {
    width = Math.max(width, area.x0 + area.cols * area.cell);
    height = Math.max(height, area.y0 + area.rows * area.cell);
  }
  return [width, height];
}

export function renderTopDown(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  canvasWidth: number,
  canvasHeight: number,
  options: RenderOptions = { showScan: true },
): Viewport {
  const [worldW, worldH] = worldExtent(vm);
  const vp = fitViewport(worldW, worldH, canvasWidth, canvasHeight);
  ctx.clearRect(0, 0, canvasWidth, canvasHeight);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, canvasWidth, canvasHeight);
  if (!vm.world) {
    return vp;
  }

  for (const zone of vm.world.zones) {
    const [sx, sy] = worldToScreen(vp, zone.cx, zone.cy);
    ctx.beginPath();
    ctx.arc(sx, sy, lengthToScreen(vp, zone.r), 0, 2 * Math.PI);
    ctx.fillStyle = (COLOR_MAP[zone.color] ?? "#999") + "55";
    ctx.fill();
  }

  ctx.fillStyle = "#555";
  for (const ob of vm.world.obstacles) {
    if (ob.kind === "rect") {
      const [sx, sy] = worldToScreen(vp, ob.cx, ob.cy);
      ctx.save();
      ctx.translate(sx, sy);
      ctx.rotate(-ob.rot); // canvas y is flipped, so rotation flips too
      ctx.fillRect(
        -lengthToScreen(vp, ob.hx), -lengthToScreen(vp, ob.hy),
        lengthToScreen(vp, 2 * ob.hx), lengthToScreen(vp, 2 * ob.hy),
      );
      ctx.restore();
    } else {
      const [sx, sy] = worldToScreen(vp, ob.cx, ob.cy);
      ctx.beginPath();
      ctx.arc(sx, sy, lengthToScreen(vp, ob.r), 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  if (options.showScan) {
    ctx.strokeStyle = "rgba(70, 160, 240, 0.25)";
    ctx.lineWidth = 1;
    for (const [agentId, scan] of vm.scans) {
      const odom = vm.odom.get(agentId);
      const agent = vm.world.agents.find((a) => a.id === agentId);
      const pose = odom?.pose ?? agent;
      if (!pose) {
        continue;
      }
      const [ox, oy] = worldToScreen(vp, pose.x, pose.y);
      for (const [wx, wy] of scanBeamEndpoints(pose, scan)) {
        const [ex, ey] = worldToScreen(vp, wx, wy);
        ctx.beginPath();
        ctx.moveTo(ox, oy);
        ctx.lineTo(ex, ey);
        ctx.stroke();
      }
    }
  }

  ctx.lineWidth = 1.5;
  for (const [, trail] of vm.trails) {
    if (trail.length < 2) {
      continue;
    }
    ctx.strokeStyle = "rgba(30, 120, 60, 0.6)";
    ctx.beginPath();
    const [tx, ty] = worldToScreen(vp, trail[0][0], trail[0][1]);
    ctx.moveTo(tx, ty);
    for (const [wx, wy] of trail.slice(1)) {
      const [sx, sy] = worldToScreen(vp, wx, wy);
      ctx.lineTo(sx, sy);
    }
    ctx.stroke();
  }

  for (const ball of vm.world.balls) {
    const [sx, sy] = worldToScreen(vp, ball.x, ball.y);
    ctx.beginPath();
    ctx.arc(sx, sy, Math.max(3, lengthToScreen(vp, ball.radius)), 0, 2 * Math.PI);
    ctx.fillStyle = COLOR_MAP[ball.color] ?? "#999";
    ctx.fill();
    ctx.strokeStyle = "#222";
    ctx.stroke();
  }

  for (const agent of vm.world.agents) {
    const odom = vm.odom.get(agent.id);
    const pose = odom?.pose ?? agent;
    const [sx, sy] = worldToScreen(vp, pose.x, pose.y);
    const radius = lengthToScreen(vp, agent.radius);
    ctx.beginPath();
    ctx.arc(sx, sy, radius, 0, 2 * Math.PI);
    ctx.fillStyle = "#4cc3d9";
    ctx.fill();
    ctx.strokeStyle = "#13404a";
    ctx.stroke();
    const [hx, hy] = worldToScreen(
      vp,
      pose.x + agent.radius * 1.4 * Math.cos(pose.theta),
      pose.y + agent.radius * 1.4 * Math.sin(pose.theta),
    );
    ctx.beginPath();
    ctx.moveTo(sx, sy);
    ctx.lineTo(hx, hy);
    ctx.stroke();
  }

  ctx.strokeStyle = "#111";
  ctx.lineWidth = 3;
  for (const [ax, ay, bx, by] of vm.world.walls) {
    const [sx1, sy1] = worldToScreen(vp, ax, ay);
    const [sx2, sy2] = worldToScreen(vp, bx, by);
    ctx.beginPath();
    ctx.moveTo(sx1, sy1);
    ctx.lineTo(sx2, sy2);
    ctx.stroke();
  }
  return vp;
}
