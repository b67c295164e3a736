/**
 * Hierarchical annotation gating.
 *
 * Scoring stays server-side; the client only needs enough of the decision
 * rule to order the workflow: the primary pair (faithfulness + readability)
 * is always annotated first, and the secondary pair (conciseness +
 * aesthetics) unlocks only while the primary pair is still undecided. The
 * rule below is validated against the server's GET /eval/fixture table
 * rather than trusted on its own.
 */

import {
  Dimension,
  FixtureCombination,
  Outcome,
  PRIMARY_DIMENSIONS,
  SECONDARY_DIMENSIONS,
} from "./types.js";

export type PairWinner = "model" | "human" | null;

/**
 * Winner of a two-dimension pair: a side wins by taking both dimensions, or
 * by taking one while the other is shared ("both good"/"both bad"). A 1-1
 * split or a double tie leaves the pair undecided.
 */
export function pairWinner(first: Outcome, second: Outcome): PairWinner {
  const wins = (side: "model" | "human") =>
    [first, second].filter((o) => o === side).length;
  const ties = [first, second].filter(
    (o) => o === "both_good" || o === "both_bad",
  ).length;
  for (const side of ["model", "human"] as const) {
    if (wins(side) === 2 || (wins(side) === 1 && ties === 1)) return side;
  }
  return null;
}

export interface StagedDecision {
  primary_winner: PairWinner;
  secondary_consulted: boolean;
  secondary_winner: PairWinner;
  overall: "model" | "human" | "tie";
  overall_score: number;
}

/** Full staged decision for a complete four-dimension outcome map. */
export function stagedDecision(
  outcomes: Record<Dimension, Outcome>,
): StagedDecision {
  const primary = pairWinner(outcomes.faithfulness, outcomes.readability);
  if (primary !== null) {
    return {
      primary_winner: primary,
      secondary_consulted: false,
      secondary_winner: null,
      overall: primary,
      overall_score: primary === "model" ? 100 : 0,
    };
  }
  const secondary = pairWinner(outcomes.conciseness, outcomes.aesthetics);
  return {
    primary_winner: null,
    secondary_consulted: true,
    secondary_winner: secondary,
    overall: secondary ?? "tie",
    overall_score: secondary === "model" ? 100 : secondary === "human" ? 0 : 50,
  };
}

export type ControlState = "enabled" | "disabled" | "done";

/**
 * Per-dimension control states for a partially filled annotation form.
 *
 * Primary dimensions are always available until answered. Secondary
 * dimensions stay disabled until both primary answers are in, and remain
 * disabled when the primary pair already decided the case.
 */
export function controlStates(
  partial: Partial<Record<Dimension, Outcome>>,
): Record<Dimension, ControlState> {
  const states = {} as Record<Dimension, ControlState>;
  for (const dim of PRIMARY_DIMENSIONS) {
    states[dim] = partial[dim] !== undefined ? "done" : "enabled";
  }
  const primaryComplete = PRIMARY_DIMENSIONS.every(
    (dim) => partial[dim] !== undefined,
  );
  const primaryUndecided =
    primaryComplete &&
    pairWinner(partial.faithfulness!, partial.readability!) === null;
  for (const dim of SECONDARY_DIMENSIONS) {
    if (partial[dim] !== undefined) {
      states[dim] = "done";
    } else {
      states[dim] = primaryUndecided ? "enabled" : "disabled";
    }
  }
  return states;
}

/** Dimensions the annotator still has to answer before the form can submit. */
export function requiredDimensions(
  partial: Partial<Record<Dimension, Outcome>>,
): Dimension[] {
  const states = controlStates(partial);
  return (Object.keys(states) as Dimension[]).filter(
    (dim) => states[dim] === "enabled",
  );
}

/**
 * Compare this client's staged decision against one served fixture row.
 * Returns a list of human-readable mismatches (empty means conformant).
 */
export function checkFixtureRow(row: FixtureCombination): string[] {
  const mine = stagedDecision(row.outcomes);
  const mismatches: string[] = [];
  const fields: (keyof StagedDecision)[] = [
    "primary_winner",
    "secondary_consulted",
    "secondary_winner",
    "overall",
    "overall_score",
  ];
  for (const field of fields) {
    if (mine[field] !== row[field]) {
      mismatches.push(
        `${field}: client=${String(mine[field])} server=${String(row[field])}`,
      );
    }
  }
  return mismatches;
}
