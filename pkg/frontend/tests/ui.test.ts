import { beforeEach, describe, expect, it } from "vitest";

import type { GameApiLike, RevealPayload, RoundPayload, ScorePayload } from "../src/api.js";
import { GameApp } from "../src/main.js";

const PAGE = `
  <main>
    <p id="score"></p>
    <p id="riddle"></p>
    <div id="choices"></div>
    <p id="reveal"></p>
    <div id="error"></div>
    <button id="next-round" disabled></button>
  </main>`;

const TRUTH = "mug";

class FakeApi implements GameApiLike {
  rounds = 0;
  guesses: Array<{ roundId: string; choice: number }> = [];
  sessionsCreated = 0;
  failNextRound = false;
  human = 0;
  ai = 0;

  async createSession() {
    this.sessionsCreated += 1;
    return { session_id: `s${this.sessionsCreated}` };
  }

  async nextRound(_: string): Promise<RoundPayload> {
    if (this.failNextRound) {
      this.failNextRound = false;
      throw new TypeError("network down");
    }
    this.rounds += 1;
    return {
      round_id: `r${this.rounds}`,
      riddle_text: "Guess the object. It touches a table (strength 0.4).",
      choices: [TRUTH, "lamp", "chair", "monitor", "book"],
    };
  }

  async submitGuess(_: string, roundId: string, choice: number): Promise<RevealPayload> {
    this.guesses.push({ roundId, choice });
    const correct = choice === 0;
    this.human += correct ? 1 : 0;
    this.ai += 1; // fake AI always right
    return { correct, truth: TRUTH, ai_pick: TRUTH, ai_correct: true };
  }

  async score(_: string): Promise<ScorePayload> {
    const n = this.guesses.length;
    return {
      rounds: n,
      human_accuracy: n ? this.human / n : null,
      ai_accuracy: n ? this.ai / n : null,
    };
  }
}

function choiceButtons(): HTMLButtonElement[] {
  return Array.from(document.querySelectorAll("#choices button"));
}

async function startApp(api: FakeApi): Promise<GameApp> {
  const app = new GameApp(document, api, localStorage);
  await app.start();
  return app;
}

beforeEach(() => {
  document.body.innerHTML = PAGE;
  localStorage.clear();
});

describe("round rendering", () => {
  it("shows the riddle and five enabled choices", async () => {
    await startApp(new FakeApi());
    expect(document.getElementById("riddle")!.textContent).toContain("Guess the object");
    const buttons = choiceButtons();
    expect(buttons).toHaveLength(5);
    expect(buttons.every((b) => !b.disabled)).toBe(true);
  });

  it("keeps the truth unmarked before the guess", async () => {
    await startApp(new FakeApi());
    expect(document.querySelector(".truth")).toBeNull();
    expect(document.getElementById("reveal")!.textContent).toBe("");
    const outside = document.body.cloneNode(true) as HTMLElement;
    outside.querySelector("#choices")!.remove();
    expect(outside.innerHTML).not.toContain(TRUTH);
  });
});

describe("guessing", () => {
  it("reveals the result and disables further guesses", async () => {
    const api = new FakeApi();
    await startApp(api);
    choiceButtons()[1].click();
    await new Promise((r) => setTimeout(r));
    expect(api.guesses).toEqual([{ roundId: "r1", choice: 1 }]);
    expect(document.getElementById("reveal")!.textContent).toContain("it was mug");
    expect(choiceButtons().every((b) => b.disabled)).toBe(true);
    // truth highlighted after reveal only
    expect(document.querySelector("button.truth")!.textContent).toBe(TRUTH);
  });

  it("transmits exactly one guess per round", async () => {
    const api = new FakeApi();
    await startApp(api);
    const buttons = choiceButtons();
    buttons[0].click();
    buttons[2].click();
    buttons[3].click();
    await new Promise((r) => setTimeout(r));
    expect(api.guesses).toHaveLength(1);
  });

  it("updates the scoreboard to match the server", async () => {
    const api = new FakeApi();
    await startApp(api);
    choiceButtons()[0].click();
    await new Promise((r) => setTimeout(r));
    const expected = await api.score("s1");
    const text = document.getElementById("score")!.textContent!;
    expect(text).toContain(`Rounds: ${expected.rounds}`);
    expect(text).toContain("You: 100.0%");
    expect(text).toContain("AI: 100.0%");
  });

  it("enables the next-round button only after the reveal", async () => {
    await startApp(new FakeApi());
    const next = document.getElementById("next-round") as HTMLButtonElement;
    expect(next.disabled).toBe(true);
    choiceButtons()[0].click();
    await new Promise((r) => setTimeout(r));
    expect(next.disabled).toBe(false);
    next.click();
    await new Promise((r) => setTimeout(r));
    expect(choiceButtons().every((b) => !b.disabled)).toBe(true);
  });
});

describe("session recovery and errors", () => {
  it("reuses the stored session id on reload", async () => {
    const api = new FakeApi();
    await startApp(api);
    expect(localStorage.getItem("gscg.sessionId")).toBe("s1");
    // simulate reload: fresh app, same storage
    document.body.innerHTML = PAGE;
    await startApp(api);
    expect(api.sessionsCreated).toBe(1);
  });

  it("offers retry without losing the session", async () => {
    const api = new FakeApi();
    await startApp(api);
    choiceButtons()[0].click();            // finish round 1 so next is enabled
    await new Promise((r) => setTimeout(r));
    api.failNextRound = true;
    (document.getElementById("next-round") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r));
    const retry = document.getElementById("retry") as HTMLButtonElement;
    expect(retry).not.toBeNull();
    retry.click();
    await new Promise((r) => setTimeout(r));
    expect(document.getElementById("error")!.textContent).toBe("");
    expect(choiceButtons()).toHaveLength(5);
    expect(api.sessionsCreated).toBe(1);
  });
});
