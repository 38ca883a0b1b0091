// DOM rendering. The reveal panel is created only after the guess round-trip,
// so the truth never exists in the DOM before submission.

import type { RevealPayload } from "./api.js";
import { formatAccuracy, type RoundState, type Scoreboard } from "./state.js";

export interface Elements {
  riddle: HTMLElement;
  choices: HTMLElement;
  reveal: HTMLElement;
  score: HTMLElement;
  nextButton: HTMLButtonElement;
  error: HTMLElement;
}

export function grabElements(doc: Document): Elements {
  const get = (id: string) => {
    const el = doc.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    riddle: get("riddle"),
    choices: get("choices"),
    reveal: get("reveal"),
    score: get("score"),
    nextButton: get("next-round") as HTMLButtonElement,
    error: get("error"),
  };
}

export function renderRound(els: Elements, state: RoundState,
                            onGuess: (index: number) => void): void {
  els.riddle.textContent = state.riddleText;
  els.reveal.textContent = "";
  els.reveal.className = "";
  els.choices.replaceChildren();
  state.choices.forEach((label, index) => {
    const button = els.choices.ownerDocument.createElement("button");
    button.type = "button";
    button.className = "choice";
    button.dataset.index = String(index);
    button.textContent = label;
    button.addEventListener("click", () => onGuess(index));
    els.choices.appendChild(button);
  });
  els.nextButton.disabled = true;
}

export function disableChoices(els: Elements): void {
  for (const button of els.choices.querySelectorAll("button")) {
    (button as HTMLButtonElement).disabled = true;
  }
}

export function renderReveal(els: Elements, state: RoundState,
                             reveal: RevealPayload): void {
  disableChoices(els);
  const chosen = els.choices.querySelector(`button[data-index="${state.guessIndex}"]`);
  if (chosen) chosen.classList.add(reveal.correct ? "picked-right" : "picked-wrong");
  for (const button of els.choices.querySelectorAll("button")) {
    if (button.textContent === reveal.truth) button.classList.add("truth");
  }
  const human = reveal.correct ? "You got it!" : `Not quite — it was ${reveal.truth}.`;
  const ai = `AI guessed ${reveal.ai_pick} (${reveal.ai_correct ? "right" : "wrong"}).`;
  els.reveal.textContent = `${human} ${ai}`;
  els.reveal.className = reveal.correct ? "good" : "bad";
  els.nextButton.disabled = false;
}

export function renderScoreboard(els: Elements, board: Scoreboard): void {
  els.score.textContent =
    `Rounds: ${board.rounds} · You: ${formatAccuracy(board.humanAccuracy)}` +
    ` · AI: ${formatAccuracy(board.aiAccuracy)}`;
}

export function renderError(els: Elements, message: string, onRetry: () => void): void {
  els.error.replaceChildren();
  const span = els.error.ownerDocument.createElement("span");
  span.textContent = message;
  const retry = els.error.ownerDocument.createElement("button");
  retry.type = "button";
  retry.id = "retry";
  retry.textContent = "Retry";
  retry.addEventListener("click", () => {
    clearError(els);
    onRetry();
  });
  els.error.append(span, retry);
}

export function clearError(els: Elements): void {
  els.error.replaceChildren();
}
