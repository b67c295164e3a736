/**
 * Referenced annotation form.
 *
 * One form per (case, annotator): four pairwise dimensions answered in the
 * staged order enforced by the gating rules. The form blocks incomplete or
 * out-of-order submissions client-side; the final verdicts go to the server
 * one dimension at a time, and the overall score is computed server-side.
 */

import { ApiClient } from "./api.js";
import { ControlState, controlStates, requiredDimensions } from "./gating.js";
import { DIMENSIONS, Dimension, Outcome, OUTCOME_TO_WINNER } from "./types.js";

export class AnnotationForm {
  private answers: Partial<Record<Dimension, Outcome>> = {};
  private reasonings: Partial<Record<Dimension, string>> = {};

  constructor(
    readonly caseId: string,
    readonly annotator: string,
  ) {}

  states(): Record<Dimension, ControlState> {
    return controlStates(this.answers);
  }

  /** Record an answer; rejects writes to disabled or already-answered controls. */
  setAnswer(dimension: Dimension, outcome: Outcome, reasoning = ""): void {
    const state = this.states()[dimension];
    if (state === "disabled") {
      throw new Error(
        `${dimension} is gated until the primary pair is undecided`,
      );
    }
    if (state === "done") {
      throw new Error(`${dimension} is already answered`);
    }
    this.answers[dimension] = outcome;
    this.reasonings[dimension] = reasoning;
  }

  /** Dimensions still blocking submission. */
  missing(): Dimension[] {
    return requiredDimensions(this.answers);
  }

  isComplete(): boolean {
    return this.missing().length === 0;
  }

  answered(): Partial<Record<Dimension, Outcome>> {
    return { ...this.answers };
  }

  /**
   * Submit every answered dimension as a verdict. Ungated dimensions that
   * were never consulted (the primary pair already decided) are submitted as
   * "both_good" placeholders so the server can aggregate a complete card;
   * their score contribution (50) never affects the staged decision.
   */
  async submit(client: ApiClient): Promise<Dimension[]> {
    if (!this.isComplete()) {
      throw new Error(
        `form incomplete: ${this.missing().join(", ")} still required`,
      );
    }
    const submitted: Dimension[] = [];
    for (const dimension of DIMENSIONS) {
      const outcome = this.answers[dimension] ?? "both_good";
      await client.submitVerdict(this.caseId, {
        annotator: this.annotator,
        dimension,
        winner: OUTCOME_TO_WINNER[outcome],
        reasoning: this.reasonings[dimension] ?? "",
      });
      submitted.push(dimension);
    }
    return submitted;
  }
}
