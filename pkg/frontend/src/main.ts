// App wiring: session lifecycle, round flow, scoreboard sync, retry.

import { ApiError, GameApi, type GameApiLike } from "./api.js";
import {
  applyReveal,
  beginGuess,
  canGuess,
  clearSessionId,
  newRound,
  restoreSessionId,
  saveSessionId,
  scoreboardFromServer,
  type RoundState,
} from "./state.js";
import {
  clearError,
  grabElements,
  renderError,
  renderReveal,
  renderRound,
  renderScoreboard,
  type Elements,
} from "./ui.js";

export class GameApp {
  private els: Elements;
  private sessionId: string | null = null;
  private round: RoundState | null = null;

  constructor(doc: Document, private api: GameApiLike, private storage: Storage) {
    this.els = grabElements(doc);
    this.els.nextButton.addEventListener("click", () => void this.nextRound());
  }

  /** Recover the stored session (scoreboard refetched) or start a new one. */
  async start(): Promise<void> {
    const stored = restoreSessionId(this.storage);
    if (stored) {
      try {
        await this.refreshScore(stored);
        this.sessionId = stored;
        await this.nextRound();
        return;
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          clearSessionId(this.storage); // stale id from an older server run
        } else if (!(err instanceof ApiError)) {
          this.showRetry("Cannot reach the game server.", () => this.start());
          return;
        }
      }
    }
    try {
      const { session_id } = await this.api.createSession();
      this.sessionId = session_id;
      saveSessionId(this.storage, session_id);
      await this.nextRound();
    } catch {
      this.showRetry("Cannot reach the game server.", () => this.start());
    }
  }

  async nextRound(): Promise<void> {
    if (!this.sessionId) return;
    try {
      const payload = await this.api.nextRound(this.sessionId);
      this.round = newRound(payload);
      renderRound(this.els, this.round, (index) => void this.guess(index));
      clearError(this.els);
    } catch {
      this.showRetry("Could not fetch the next round.", () => this.nextRound());
    }
  }

  async guess(index: number): Promise<void> {
    if (!this.sessionId || !this.round || !canGuess(this.round)) return;
    if (!beginGuess(this.round, index)) return;
    const round = this.round;
    try {
      const reveal = await this.api.submitGuess(this.sessionId, round.roundId, index);
      applyReveal(round, reveal);
      renderReveal(this.els, round, reveal);
      await this.refreshScore(this.sessionId);
    } catch (err) {
      if (err instanceof ApiError) {
        // 409 double-guess or similar: keep the round locked
        this.showRetry(`Guess rejected (${err.status}).`, () => this.nextRound());
      } else {
        round.guessIndex = null; // network failure: allow the retry to resend
        this.showRetry("Could not submit the guess.", () => this.guess(index));
      }
    }
  }

  private async refreshScore(sessionId: string): Promise<void> {
    const score = await this.api.score(sessionId);
    renderScoreboard(this.els, scoreboardFromServer(score));
  }

  private showRetry(message: string, action: () => Promise<void> | void): void {
    renderError(this.els, message, () => void action());
  }
}

export function initApp(doc: Document, baseUrl = "", storage?: Storage): GameApp {
  const app = new GameApp(doc, new GameApi(baseUrl),
                          storage ?? doc.defaultView!.localStorage);
  void app.start();
  return app;
}

declare global {
  interface Window {
    __gscgAutoInit?: boolean;
  }
}

if (typeof window !== "undefined" && window.__gscgAutoInit !== false) {
  window.addEventListener("DOMContentLoaded", () => initApp(document));
}
