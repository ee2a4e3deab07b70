// World-to-screen mapping for the top-down canvas. World y points up,
// canvas y points down; the scale preserves aspect ratio and centers the
// world rectangle inside the canvas with a margin.

export interface Viewport {
  scale: number; // pixels per meter, same on both axes
  offsetX: number;
  offsetY: number;
  worldHeight: number;
}

export function fitViewport(
  worldWidth: number,
  worldHeight: number,
  canvasWidth: number,
  canvasHeight: number,
  margin = 20,
): Viewport {
  const usableW = Math.max(1, canvasWidth - 2 * margin);
  const usableH = Math.max(1, canvasHeight - 2 * margin);
  const scale = Math.min(usableW / worldWidth, usableH / worldHeight);
  const offsetX = (canvasWidth - scale * worldWidth) / 2;
  const offsetY = (canvasHeight - scale * worldHeight) / 2;
  return { scale, offsetX, offsetY, worldHeight };
}

export function worldToScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offsetX + vp.scale * x, vp.offsetY + vp.scale * (vp.worldHeight - y)];
}

export function lengthToScreen(vp: Viewport, meters: number): number {
  return vp.scale * meters;
}
