/**
 * Pure console state. Every mutation is a plain function of server-provided
 * data (scene snapshots, skill documents, trace events), so replaying the
 * same event stream always reproduces the identical state. No simulation
 * happens on the client.
 */

import type { SceneSnapshot, SkillLibraryDoc, TraceEvent } from "./types.js";

export type Connection = "idle" | "connecting" | "connected" | "error";

export interface ConversationItem {
  kind: "user" | "thought" | "action" | "observation" | "result" | "final";
  text: string;
  seq: number;
}

export interface BacktrackArrow {
  from: number;
  to: number;
  seq: number;
}

export interface PreconditionBadge {
  stepIndex: number;
  text: string;
  verdict: boolean;
  seq: number;
}

export interface SkillInfo {
  signature: string;
  name: string;
  description: string;
  related: string[];
}

export interface ViewState {
  connection: Connection;
  banner: string | null;
  scene: SceneSnapshot | null;
  skills: SkillInfo[];
  events: TraceEvent[];
  conversation: ConversationItem[];
  arrows: BacktrackArrow[];
  badges: PreconditionBadge[];
  episodeId: string | null;
  episodeStatus: "idle" | "running" | "finished";
  episodeSuccess: boolean | null;
  finalMessage: string | null;
  /** Set when a step executed; the app refetches the scene and clears it. */
  sceneStale: boolean;
}

export function initialState(): ViewState {
  return {
    connection: "idle",
    banner: null,
    scene: null,
    skills: [],
    events: [],
    conversation: [],
    arrows: [],
    badges: [],
    episodeId: null,
    episodeStatus: "idle",
    episodeSuccess: null,
    finalMessage: null,
    sceneStale: false,
  };
}

export function withConnection(state: ViewState, connection: Connection, banner: string | null = null): ViewState {
  return { ...state, connection, banner };
}

export function withServerData(state: ViewState, scene: SceneSnapshot, skills: SkillLibraryDoc): ViewState {
  return {
    ...state,
    connection: "connected",
    banner: null,
    scene,
    skills: parseSkills(skills),
    sceneStale: false,
  };
}

export function withScene(state: ViewState, scene: SceneSnapshot): ViewState {
  return { ...state, scene, sceneStale: false };
}

export function startEpisode(state: ViewState, episodeId: string): ViewState {
  return {
    ...state,
    episodeId,
    episodeStatus: "running",
    episodeSuccess: null,
    finalMessage: null,
    events: [],
    conversation: [],
    arrows: [],
    badges: [],
  };
}

export function parseSkills(doc: SkillLibraryDoc): SkillInfo[] {
  return Object.entries(doc).map(([signature, entry]) => ({
    signature,
    name: signature.split("(")[0],
    description: entry.Description ?? "",
    related: (entry["Related functions"] ?? "")
      .split(",")
      .map((s) => s.trim().replace(/\(\)$/, ""))
      .filter(Boolean),
  }));
}

/** Fold one trace event into the state; pure. */
export function applyEvent(state: ViewState, event: TraceEvent): ViewState {
  const next: ViewState = { ...state, events: [...state.events, event] };
  switch (event.event) {
    case "user_message":
      next.conversation = push(next.conversation, {
        kind: "user",
        text: String(event.text ?? ""),
        seq: event.seq,
      });
      break;
    case "controller_turn": {
      const thought = String(event.thought ?? "");
      const action = String(event.action ?? "");
      const items = [...next.conversation];
      if (thought) items.push({ kind: "thought", text: thought, seq: event.seq });
      items.push({
        kind: "action",
        text: `${action}(${summarizeInput(event.input)})`,
        seq: event.seq,
      });
      next.conversation = items;
      break;
    }
    case "observation":
      next.conversation = push(next.conversation, {
        kind: "observation",
        text: `${event.query}: ${event.answer}`,
        seq: event.seq,
      });
      break;
    case "precondition_checked":
      next.badges = [
        ...next.badges,
        {
          stepIndex: Number(event.step_index ?? -1),
          text: String(event.text ?? ""),
          verdict: Boolean(event.verdict),
          seq: event.seq,
        },
      ];
      break;
    case "step_executed":
      next.sceneStale = true;
      break;
    case "backtracked":
      next.arrows = [
        ...next.arrows,
        { from: Number(event.from ?? 0), to: Number(event.to ?? 0), seq: event.seq },
      ];
      break;
    case "task_result":
      next.conversation = push(next.conversation, {
        kind: "result",
        text: `task ${event.success ? "succeeded" : "failed"}`,
        seq: event.seq,
      });
      break;
    case "finished":
      next.episodeStatus = "finished";
      next.episodeSuccess = Boolean(event.success);
      next.finalMessage = String(event.message ?? "");
      next.conversation = push(next.conversation, {
        kind: "final",
        text: String(event.message ?? ""),
        seq: event.seq,
      });
      break;
  }
  return next;
}

export function applyEvents(state: ViewState, events: TraceEvent[]): ViewState {
  return events.reduce(applyEvent, state);
}

function push(items: ConversationItem[], item: ConversationItem): ConversationItem[] {
  return [...items, item];
}

function summarizeInput(input: unknown): string {
  if (input == null) return "";
  if (typeof input === "object") {
    const obj = input as Record<string, unknown>;
    if (typeof obj["query"] === "string") return JSON.stringify(obj["query"]);
    if (typeof obj["message"] === "string") return JSON.stringify(obj["message"]);
    if (typeof obj["Task Name"] === "string") return JSON.stringify(obj["Task Name"]);
  }
  return "";
}

/** Which object (if any) the named object rests on, from server data only. */
export function stackedOn(scene: SceneSnapshot | null, name: string): string | null {
  const obj = scene?.objects.find((o) => o.name === name);
  return obj?.support ?? null;
}

/** Bounded window over the raw feed so huge traces stay renderable. */
export function windowedEvents(state: ViewState, limit = 200): { hidden: number; visible: TraceEvent[] } {
  const total = state.events.length;
  if (total <= limit) return { hidden: 0, visible: state.events };
  return { hidden: total - limit, visible: state.events.slice(total - limit) };
}

/** Client-side validation for the instruction box. */
export function validInstruction(text: string): boolean {
  return text.trim().length > 0;
}
