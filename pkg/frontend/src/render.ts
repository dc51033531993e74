/** DOM rendering: a straight projection of ViewState onto the page. */

import { layoutScene } from "./sceneview.js";
import type { ViewState } from "./viewmodel.js";
import { windowedEvents } from "./viewmodel.js";

export interface Panes {
  banner: HTMLElement;
  canvas: HTMLCanvasElement;
  conversation: HTMLElement;
  skills: HTMLElement;
  events: HTMLElement;
  status: HTMLElement;
}

export function renderAll(state: ViewState, panes: Panes): void {
  renderBanner(state, panes.banner, panes.status);
  renderScene(state, panes.canvas);
  renderConversation(state, panes.conversation);
  renderSkills(state, panes.skills);
  renderEvents(state, panes.events);
}

function renderBanner(state: ViewState, banner: HTMLElement, status: HTMLElement): void {
  if (state.banner) {
    banner.textContent = state.banner;
    banner.className = "banner error";
  } else if (state.episodeStatus === "finished") {
    banner.textContent = state.episodeSuccess
      ? `Episode finished: ${state.finalMessage}`
      : `Episode failed: ${state.finalMessage}`;
    banner.className = state.episodeSuccess ? "banner ok" : "banner error";
  } else {
    banner.textContent = "";
    banner.className = "banner";
  }
  status.textContent = `${state.connection} | episode: ${state.episodeStatus}`;
}

function renderScene(state: ViewState, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#f7f3ea";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!state.scene) return;
  const layout = layoutScene(state.scene, canvas.width, canvas.height);
  for (const box of layout.boxes) {
    ctx.fillStyle = cssColor(box.color);
    ctx.globalAlpha = box.kind === "container" || box.kind === "shelf" ? 0.5 : 1.0;
    ctx.fillRect(box.x, box.y, box.w, box.h);
    ctx.globalAlpha = 1.0;
    ctx.strokeStyle = box.held ? "#d4380d" : "#333";
    ctx.lineWidth = box.held ? 3 : 1;
    ctx.strokeRect(box.x, box.y, box.w, box.h);
    ctx.fillStyle = "#111";
    ctx.font = "11px sans-serif";
    ctx.fillText(box.name, box.x, box.y - 3);
    if (box.level > 0) {
      ctx.fillStyle = "#fff";
      ctx.beginPath();
      ctx.arc(box.x + box.w - 7, box.y + 8, 8, 0, Math.PI * 2);
      ctx.fill();
      ctx.strokeStyle = "#333";
      ctx.lineWidth = 1;
      ctx.stroke();
      ctx.fillStyle = "#111";
      ctx.fillText(String(box.level + 1), box.x + box.w - 10, 12 + box.y);
    }
  }
  for (const bar of layout.bars) {
    ctx.fillStyle = "#ddd";
    ctx.fillRect(bar.x, bar.y, bar.w, 5);
    ctx.fillStyle = "#1677ff";
    ctx.fillRect(bar.x, bar.y, bar.w * bar.fraction, 5);
  }
  const g = layout.gripper;
  ctx.strokeStyle = "#d4380d";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(g.x - 7, g.y);
  ctx.lineTo(g.x + 7, g.y);
  ctx.moveTo(g.x, g.y - 7);
  ctx.lineTo(g.x, g.y + 7);
  ctx.stroke();
  if (!g.closed) {
    ctx.beginPath();
    ctx.arc(g.x, g.y, 8, 0, Math.PI * 2);
    ctx.stroke();
  }
}

function cssColor(name: string): string {
  const known = new Set([
    "purple", "blue", "green", "yellow", "orange", "red", "brown",
    "white", "gray", "silver", "black",
  ]);
  return known.has(name.toLowerCase()) ? name.toLowerCase() : "#b8b2a7";
}

function renderConversation(state: ViewState, pane: HTMLElement): void {
  pane.replaceChildren(
    ...state.conversation.map((item) => {
      const div = document.createElement("div");
      div.className = `turn ${item.kind}`;
      const who = { user: "you", thought: "thought", action: "action", observation: "observer", result: "executor", final: "robot" }[item.kind];
      div.textContent = `${who}: ${item.text}`;
      return div;
    }),
  );
  pane.scrollTop = pane.scrollHeight;
}

function renderSkills(state: ViewState, pane: HTMLElement): void {
  pane.replaceChildren(
    ...state.skills.map((skill) => {
      const div = document.createElement("div");
      div.className = "skill";
      const head = document.createElement("strong");
      head.textContent = skill.signature;
      const desc = document.createElement("div");
      desc.textContent = skill.description;
      const deps = document.createElement("small");
      deps.textContent = skill.related.length ? `uses: ${skill.related.join(", ")}` : "";
      div.append(head, desc, deps);
      return div;
    }),
  );
}

function renderEvents(state: ViewState, pane: HTMLElement): void {
  const { hidden, visible } = windowedEvents(state);
  const rows: HTMLElement[] = [];
  if (hidden > 0) {
    const summary = document.createElement("div");
    summary.className = "event summary";
    summary.textContent = `... ${hidden} earlier events`;
    rows.push(summary);
  }
  for (const event of visible) {
    const div = document.createElement("div");
    div.className = `event ${event.event}`;
    if (event.event === "backtracked") {
      div.textContent = `#${event.seq} ↩ backtracked from step ${event.from} to step ${event.to}`;
      div.classList.add("arrow");
    } else if (event.event === "precondition_checked") {
      const badge = event.verdict ? "✓" : "✗";
      div.textContent = `#${event.seq} [${badge}] precondition step ${event.step_index}: ${event.text}`;
      div.classList.add(event.verdict ? "pass" : "fail");
    } else if (event.event === "step_executed") {
      div.textContent = `#${event.seq} step ${event.step_index}: ${event.name}${event.nullified ? " (disturbed)" : ""}`;
    } else if (event.event === "finished") {
      div.textContent = `#${event.seq} finished: ${event.success ? "success" : "failure"} - ${event.message}`;
    } else {
      div.textContent = `#${event.seq} ${event.event}`;
    }
    rows.push(div);
  }
  pane.replaceChildren(...rows);
  pane.scrollTop = pane.scrollHeight;
}
