// Thin typed wrappers over the game server's JSON API.

export type RoundPayload = {
  round_id: string;
  riddle_text: string;
  choices: string[];
};

export type RevealPayload = {
  correct: boolean;
  truth: string;
  ai_pick: string;
  ai_correct: boolean;
};

export type ScorePayload = {
  rounds: number;
  human_accuracy: number | null;
  ai_accuracy: number | null;
};

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  if (!res.ok) {
    throw new ApiError(res.status, `${init?.method ?? "GET"} ${url} -> ${res.status}`);
  }
  return (await res.json()) as T;
}

export interface GameApiLike {
  createSession(): Promise<{ session_id: string }>;
  nextRound(sessionId: string): Promise<RoundPayload>;
  submitGuess(sessionId: string, roundId: string, choiceIndex: number): Promise<RevealPayload>;
  score(sessionId: string): Promise<ScorePayload>;
}

export class GameApi implements GameApiLike {
  constructor(private baseUrl: string = "") {}

  createSession(): Promise<{ session_id: string }> {
    return request(`${this.baseUrl}/sessions`, { method: "POST" });
  }

  nextRound(sessionId: string): Promise<RoundPayload> {
    return request(`${this.baseUrl}/sessions/${sessionId}/rounds`, { method: "POST" });
  }

  submitGuess(sessionId: string, roundId: string, choiceIndex: number): Promise<RevealPayload> {
    return request(`${this.baseUrl}/sessions/${sessionId}/rounds/${roundId}/guess`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ choice_index: choiceIndex }),
    });
  }

  score(sessionId: string): Promise<ScorePayload> {
    return request(`${this.baseUrl}/sessions/${sessionId}/score`);
  }
}
