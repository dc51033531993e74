/** Console wiring: connect, send instructions, fold the live stream. */

import { ServerClient } from "./api.js";
import { renderAll, type Panes } from "./render.js";
import {
  applyEvent,
  initialState,
  startEpisode,
  validInstruction,
  withConnection,
  withScene,
  withServerData,
  type ViewState,
} from "./viewmodel.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const panes: Panes = {
  banner: el("banner"),
  canvas: el<HTMLCanvasElement>("scene"),
  conversation: el("conversation"),
  skills: el("skills"),
  events: el("events"),
  status: el("status"),
};

let state: ViewState = initialState();
let client: ServerClient | null = null;

function setState(next: ViewState): void {
  state = next;
  renderAll(state, panes);
}

async function refreshScene(): Promise<void> {
  if (!client) return;
  try {
    setState(withScene(state, await client.fetchScene()));
  } catch {
    /* transient; next event will retry */
  }
}

async function connect(): Promise<void> {
  const url = el<HTMLInputElement>("server-url").value;
  client = new ServerClient(url, (wsUrl) => new WebSocket(wsUrl) as never);
  setState(withConnection(state, "connecting"));
  try {
    const [scene, skills] = await Promise.all([client.fetchScene(), client.fetchSkills()]);
    setState(withServerData(state, scene, skills));
  } catch (err) {
    setState(withConnection(state, "error", `cannot reach ${url}: ${err}; retry when the server is up`));
  }
}

async function submitInstruction(): Promise<void> {
  if (!client) return;
  const box = el<HTMLInputElement>("instruction");
  if (!validInstruction(box.value)) {
    setState({ ...state, banner: "type an instruction first" });
    return;
  }
  try {
    const episodeId = await client.startEpisode(box.value);
    setState(startEpisode(state, episodeId));
    box.value = "";
    client
      .streamEvents(episodeId, (event) => {
        setState(applyEvent(state, event));
        if (state.sceneStale) void refreshScene();
      })
      .catch((err) => setState({ ...state, banner: `stream error: ${err}` }));
  } catch (err: unknown) {
    const status = (err as { status?: number }).status;
    setState({
      ...state,
      banner: status === 409 ? "an episode is already running" : `request failed: ${err}`,
    });
  }
}

async function sendTurn(): Promise<void> {
  if (!client || !state.episodeId) return;
  const box = el<HTMLInputElement>("user-turn");
  if (!validInstruction(box.value)) return;
  try {
    await client.sendUserTurn(state.episodeId, box.value);
    box.value = "";
  } catch (err) {
    setState({ ...state, banner: `could not send message: ${err}` });
  }
}

el("connect").addEventListener("click", () => void connect());
el("send").addEventListener("click", () => void submitInstruction());
el("send-turn").addEventListener("click", () => void sendTurn());
el<HTMLInputElement>("instruction").addEventListener("keydown", (e) => {
  if ((e as KeyboardEvent).key === "Enter") void submitInstruction();
});

renderAll(state, panes);
