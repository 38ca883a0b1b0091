// Round state machine and scoreboard bookkeeping. Pure logic, no DOM.

import type { RevealPayload, RoundPayload, ScorePayload } from "./api.js";

export type Phase = "awaiting-guess" | "revealed";

export interface RoundState {
  roundId: string;
  riddleText: string;
  choices: string[];
  phase: Phase;
  guessIndex: number | null;
  reveal: RevealPayload | null;
}

export interface Scoreboard {
  rounds: number;
  humanAccuracy: number | null;
  aiAccuracy: number | null;
}

export function newRound(payload: RoundPayload): RoundState {
  return {
    roundId: payload.round_id,
    riddleText: payload.riddle_text,
    choices: payload.choices,
    phase: "awaiting-guess",
    guessIndex: null,
    reveal: null,
  };
}

export function canGuess(state: RoundState): boolean {
  return state.phase === "awaiting-guess" && state.guessIndex === null;
}

/** Mark the guess as sent. Returns false when a guess was already made:
 * phase transitions are one-way and a round accepts one guess only. */
export function beginGuess(state: RoundState, choiceIndex: number): boolean {
  if (!canGuess(state) || choiceIndex < 0 || choiceIndex >= state.choices.length) {
    return false;
  }
  state.guessIndex = choiceIndex;
  return true;
}

export function applyReveal(state: RoundState, reveal: RevealPayload): void {
  state.phase = "revealed";
  state.reveal = reveal;
}

export function scoreboardFromServer(score: ScorePayload): Scoreboard {
  return {
    rounds: score.rounds,
    humanAccuracy: score.human_accuracy,
    aiAccuracy: score.ai_accuracy,
  };
}

export function formatAccuracy(value: number | null): string {
  return value === null ? "–" : `${(value * 100).toFixed(1)}%`;
}

const SESSION_KEY = "gscg.sessionId";

export function saveSessionId(storage: Storage, sessionId: string): void {
  storage.setItem(SESSION_KEY, sessionId);
}

export function restoreSessionId(storage: Storage): string | null {
  return storage.getItem(SESSION_KEY);
}

export function clearSessionId(storage: Storage): void {
  storage.removeItem(SESSION_KEY);
}
