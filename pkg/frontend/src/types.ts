/** Server payload shapes, mirrored from the episode service. */

export interface SceneObject {
  id: string;
  name: string;
  color: string;
  kind: string;
  position: [number, number, number];
  dimensions: [number, number, number];
  support: string | null;
  articulation?: {
    axis: [number, number, number];
    extension: number;
    max_extension: number;
    handle_offset: [number, number, number];
  };
  binary_state?: boolean;
}

export interface SceneSnapshot {
  scenario_id: string;
  seed: number;
  bounds: [[number, number], [number, number], [number, number]];
  home: [number, number, number];
  step_count: number;
  gripper: {
    position: [number, number, number];
    closed: boolean;
    held: string | null;
  };
  objects: SceneObject[];
}

export interface SkillEntry {
  Type: string;
  Description: string;
  Input: string;
  Output: string;
  "Related functions": string;
  Example: string;
  Code: string;
}

export type SkillLibraryDoc = Record<string, SkillEntry>;

export interface TraceEvent {
  seq: number;
  event:
    | "user_message"
    | "controller_turn"
    | "observation"
    | "precondition_checked"
    | "step_executed"
    | "backtracked"
    | "task_result"
    | "finished";
  t: number;
  [key: string]: unknown;
}

export interface EpisodeInfo {
  id: string;
  instruction: string;
  status: "running" | "finished";
  success: boolean | null;
  events: number;
}
