/** Wire types mirroring the generation service's JSON payloads. */

export type Dimension =
  | "faithfulness"
  | "conciseness"
  | "readability"
  | "aesthetics";

export const DIMENSIONS: Dimension[] = [
  "faithfulness",
  "conciseness",
  "readability",
  "aesthetics",
];

/** Primary pair decides first; secondary only consulted on a primary tie. */
export const PRIMARY_DIMENSIONS: Dimension[] = ["faithfulness", "readability"];
export const SECONDARY_DIMENSIONS: Dimension[] = ["conciseness", "aesthetics"];

/** Per-dimension outcome vocabulary (server-side closed set). */
export type Outcome = "model" | "human" | "both_good" | "both_bad";

/** Winner tokens accepted by the verdict endpoint. */
export type WinnerToken = "Model" | "Human" | "Both are good" | "Both are bad";

export const OUTCOME_TO_WINNER: Record<Outcome, WinnerToken> = {
  model: "Model",
  human: "Human",
  both_good: "Both are good",
  both_bad: "Both are bad",
};

export interface RunSummary {
  id: string;
  task_id: string;
  state: "pending" | "running" | "done" | "failed";
  created_at: number;
  parent_id: string | null;
  selected_iteration: number | null;
}

export interface IterationView {
  index: number;
  stage: string;
  description: string;
  status: "image" | "failure";
  generator: string;
  image_url: string | null;
  failure_notice: string | null;
  code: string | null;
  critique: {
    suggestions: string;
    revised_description: string;
    no_change: boolean;
  } | null;
}

export interface RunDetail extends RunSummary {
  config: Record<string, unknown>;
  error: string | null;
  feedback: string | null;
  trace: {
    task_id: string;
    mode: string;
    final_index: number;
    failed: boolean;
    seed: number;
    retrieved_ids: string[];
    guideline_id: string | null;
    warnings: string[];
    iterations: IterationView[];
  } | null;
}

/** Blind annotation payload; deliberately free of identity fields. */
export interface EvalCasePayload {
  id: string;
  blind: boolean;
  intent: string;
  source_context: string;
  image_a_url: string;
  image_b_url: string;
  dimensions: Dimension[];
}

export interface VerdictSubmission {
  annotator: string;
  dimension: Dimension;
  winner?: WinnerToken;
  choice?: "a" | "b" | "both_good" | "both_bad";
  reasoning?: string;
}

export interface ExportEntry {
  case_id: string;
  annotator: string;
  verdicts: Record<string, Outcome>;
  complete: boolean;
  card?: {
    case_id: string;
    per_dimension: Record<
      string,
      { outcome: Outcome; score: number; reasoning: string }
    >;
    overall_outcome: "model" | "human" | "tie";
    overall_score: number;
  };
}

export interface FixtureCombination {
  outcomes: Record<Dimension, Outcome>;
  primary_winner: "model" | "human" | null;
  secondary_consulted: boolean;
  secondary_winner: "model" | "human" | null;
  overall: "model" | "human" | "tie";
  overall_score: number;
}
