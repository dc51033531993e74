/**
 * Top-down 2D projection of the scene: pure layout math from a snapshot to
 * drawable boxes. Screen x maps to the scene's y axis (left/right from the
 * robot's viewpoint), screen y maps to the scene's x axis (depth, nearer at
 * the bottom). Height shows as a stacking badge, prismatic joints as
 * extension bars.
 */

import type { SceneSnapshot, SceneObject } from "./types.js";

export interface Box {
  name: string;
  color: string;
  kind: string;
  x: number;
  y: number;
  w: number;
  h: number;
  level: number; // support-chain depth: 0 = on the table
  held: boolean;
}

export interface ExtensionBar {
  name: string;
  fraction: number; // 0 closed .. 1 fully open
  x: number;
  y: number;
  w: number;
}

export interface GripperMark {
  x: number;
  y: number;
  closed: boolean;
  held: string | null;
}

export interface SceneLayout {
  width: number;
  height: number;
  boxes: Box[];
  bars: ExtensionBar[];
  gripper: GripperMark;
}

export function supportLevel(scene: SceneSnapshot, obj: SceneObject): number {
  let level = 0;
  let current: SceneObject | undefined = obj;
  const byId = new Map(scene.objects.map((o) => [o.id, o]));
  while (current && current.support != null) {
    level += 1;
    current = byId.get(current.support);
    if (level > scene.objects.length) break; // defensive: malformed data
  }
  return level;
}

export function layoutScene(scene: SceneSnapshot, width = 640, height = 480): SceneLayout {
  const [, [ylo, yhi]] = [scene.bounds[0], scene.bounds[1]];
  const [xlo, xhi] = scene.bounds[0];
  const sx = (y: number) => ((y - ylo) / (yhi - ylo)) * width;
  const sy = (x: number) => height - ((x - xlo) / (xhi - xlo)) * height;
  const scaleW = (d: number) => (d / (yhi - ylo)) * width;
  const scaleH = (d: number) => (d / (xhi - xlo)) * height;

  const boxes: Box[] = [];
  const bars: ExtensionBar[] = [];
  for (const obj of scene.objects) {
    const w = scaleW(obj.dimensions[1]);
    const h = scaleH(obj.dimensions[0]);
    const cx = sx(obj.position[1]);
    const cy = sy(obj.position[0]);
    boxes.push({
      name: obj.name,
      color: obj.color,
      kind: obj.kind,
      x: cx - w / 2,
      y: cy - h / 2,
      w,
      h,
      level: supportLevel(scene, obj),
      held: scene.gripper.held === obj.id,
    });
    if (obj.articulation) {
      bars.push({
        name: obj.name,
        fraction: obj.articulation.max_extension
          ? obj.articulation.extension / obj.articulation.max_extension
          : 0,
        x: cx - w / 2,
        y: cy + h / 2 + 4,
        w,
      });
    }
  }
  // Stacked objects draw above their supports.
  boxes.sort((a, b) => a.level - b.level);
  return {
    width,
    height,
    boxes,
    bars,
    gripper: {
      x: sx(scene.gripper.position[1]),
      y: sy(scene.gripper.position[0]),
      closed: scene.gripper.closed,
      held: scene.gripper.held,
    },
  };
}
