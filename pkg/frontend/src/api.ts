/**
 * Thin client for the episode service. The WebSocket constructor is
 * injectable so the same code runs in the browser (native WebSocket) and
 * under node-based tests (the `ws` package).
 */

import type { EpisodeInfo, SceneSnapshot, SkillLibraryDoc, TraceEvent } from "./types.js";

export interface WebSocketLike {
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export class HttpError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function expectJson(response: Response): Promise<any> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new HttpError(response.status, body?.error ?? `HTTP ${response.status}`);
  }
  return body;
}

export class ServerClient {
  constructor(
    private baseUrl: string,
    private makeSocket: WebSocketFactory,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  get wsBase(): string {
    return this.baseUrl.replace(/^http/, "ws");
  }

  async fetchScene(): Promise<SceneSnapshot> {
    return expectJson(await fetch(`${this.baseUrl}/scene`));
  }

  async fetchSkills(): Promise<SkillLibraryDoc> {
    return expectJson(await fetch(`${this.baseUrl}/skills`));
  }

  async startEpisode(instruction: string): Promise<string> {
    const body = await expectJson(
      await fetch(`${this.baseUrl}/episodes`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ instruction }),
      }),
    );
    return body.id;
  }

  async sendUserTurn(episodeId: string, text: string): Promise<void> {
    await expectJson(
      await fetch(`${this.baseUrl}/episodes/${episodeId}/message`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text }),
      }),
    );
  }

  async episodeInfo(episodeId: string): Promise<EpisodeInfo> {
    return expectJson(await fetch(`${this.baseUrl}/episodes/${episodeId}`));
  }

  /**
   * Subscribe to the episode's event stream; `onEvent` fires per event in
   * order. Resolves once the stream ends (after the finished event).
   */
  streamEvents(episodeId: string, onEvent: (event: TraceEvent) => void): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = this.makeSocket(`${this.wsBase}/episodes/${episodeId}/events`);
      let done = false;
      socket.onmessage = (message) => {
        const event = JSON.parse(String(message.data)) as TraceEvent;
        onEvent(event);
        if (event.event === "finished") {
          done = true;
          socket.close();
          resolve();
        }
      };
      socket.onclose = () => {
        if (!done) resolve();
      };
      socket.onerror = (err) => {
        if (!done) reject(err);
      };
    });
  }
}
