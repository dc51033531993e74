import { describe, expect, it } from "vitest";

import { layoutScene, supportLevel } from "../src/sceneview.js";
import type { SceneSnapshot } from "../src/types.js";

function snapshot(): SceneSnapshot {
  return {
    scenario_id: "t",
    seed: 0,
    bounds: [
      [0.25, 0.75],
      [-0.5, 0.5],
      [0.0, 0.28],
    ],
    home: [0.5, 0, 0.26],
    step_count: 0,
    gripper: { position: [0.5, 0.0, 0.26], closed: false, held: null },
    objects: [
      {
        id: "blue block",
        name: "blue block",
        color: "blue",
        kind: "block",
        position: [0.35, -0.15, 0.02],
        dimensions: [0.04, 0.04, 0.04],
        support: null,
      },
      {
        id: "red block",
        name: "red block",
        color: "red",
        kind: "block",
        position: [0.35, -0.15, 0.06],
        dimensions: [0.04, 0.04, 0.04],
        support: "blue block",
      },
      {
        id: "bottom drawer",
        name: "bottom drawer",
        color: "brown",
        kind: "drawer_unit",
        position: [0.62, 0.3, 0.06],
        dimensions: [0.18, 0.2, 0.1],
        support: null,
        articulation: {
          axis: [-1, 0, 0],
          extension: 0.06,
          max_extension: 0.12,
          handle_offset: [-0.09, 0, 0],
        },
      },
    ],
  };
}

describe("projection", () => {
  it("maps scene y to screen x and scene x to depth", () => {
    const layout = layoutScene(snapshot(), 640, 480);
    const blue = layout.boxes.find((b) => b.name === "blue block")!;
    // y = -0.15 sits left of center; x = 0.35 is near the front (bottom).
    expect(blue.x + blue.w / 2).toBeCloseTo(((-0.15 + 0.5) / 1.0) * 640, 5);
    expect(blue.y + blue.h / 2).toBeGreaterThan(240);
    expect(blue.w).toBeCloseTo((0.04 / 1.0) * 640, 5);
  });

  it("assigns stacking levels from support chains", () => {
    const scene = snapshot();
    expect(supportLevel(scene, scene.objects[0])).toBe(0);
    expect(supportLevel(scene, scene.objects[1])).toBe(1);
    const layout = layoutScene(scene);
    const red = layout.boxes.find((b) => b.name === "red block")!;
    expect(red.level).toBe(1);
    // Stacked boxes sort after their supports so they draw on top.
    const names = layout.boxes.map((b) => b.name);
    expect(names.indexOf("red block")).toBeGreaterThan(names.indexOf("blue block"));
  });

  it("exposes drawer extension as a fraction bar", () => {
    const layout = layoutScene(snapshot());
    expect(layout.bars).toHaveLength(1);
    expect(layout.bars[0].fraction).toBeCloseTo(0.5);
  });

  it("places the gripper marker", () => {
    const layout = layoutScene(snapshot(), 640, 480);
    expect(layout.gripper.x).toBeCloseTo(320, 0);
    expect(layout.gripper.held).toBeNull();
  });

  it("flags the held object", () => {
    const scene = snapshot();
    scene.gripper.held = "red block";
    const layout = layoutScene(scene);
    expect(layout.boxes.find((b) => b.name === "red block")!.held).toBe(true);
  });
});
