import { describe, expect, it } from "vitest";

import {
  applyReveal,
  beginGuess,
  canGuess,
  clearSessionId,
  formatAccuracy,
  newRound,
  restoreSessionId,
  saveSessionId,
  scoreboardFromServer,
} from "../src/state.js";

const payload = {
  round_id: "r1",
  riddle_text: "Guess the object. It is near a table (strength 0.368).",
  choices: ["mug", "lamp", "chair", "monitor", "book"],
};

describe("round state machine", () => {
  it("starts awaiting a guess", () => {
    const s = newRound(payload);
    expect(s.phase).toBe("awaiting-guess");
    expect(canGuess(s)).toBe(true);
  });

  it("accepts exactly one guess", () => {
    const s = newRound(payload);
    expect(beginGuess(s, 2)).toBe(true);
    expect(beginGuess(s, 3)).toBe(false);
    expect(canGuess(s)).toBe(false);
  });

  it("rejects out-of-range guesses", () => {
    const s = newRound(payload);
    expect(beginGuess(s, -1)).toBe(false);
    expect(beginGuess(s, 5)).toBe(false);
    expect(canGuess(s)).toBe(true);
  });

  it("phase transition is one-way", () => {
    const s = newRound(payload);
    beginGuess(s, 0);
    applyReveal(s, { correct: true, truth: "mug", ai_pick: "lamp", ai_correct: false });
    expect(s.phase).toBe("revealed");
    expect(canGuess(s)).toBe(false);
    expect(beginGuess(s, 1)).toBe(false);
  });
});

describe("scoreboard", () => {
  it("mirrors server values", () => {
    const board = scoreboardFromServer({ rounds: 4, human_accuracy: 0.75, ai_accuracy: 0.5 });
    expect(board).toEqual({ rounds: 4, humanAccuracy: 0.75, aiAccuracy: 0.5 });
  });

  it("renders null accuracies as a dash", () => {
    expect(formatAccuracy(null)).toBe("–");
    expect(formatAccuracy(0.6833)).toBe("68.3%");
  });
});

describe("session persistence", () => {
  it("stores and restores the session id", () => {
    saveSessionId(localStorage, "abc123");
    expect(restoreSessionId(localStorage)).toBe("abc123");
    clearSessionId(localStorage);
    expect(restoreSessionId(localStorage)).toBeNull();
  });
});
