/**
 * Blind A/B comparison session.
 *
 * The server assigns each case's A/B order from its own seed; the client
 * never learns which slot holds the machine output. Choices are submitted as
 * slot letters and resolved server-side, so nothing in this module (or in
 * the payloads it sees) can deanonymize a pair.
 */

import { ApiClient } from "./api.js";
import { Dimension, EvalCasePayload } from "./types.js";

export type BlindChoice = "a" | "b" | "both_good" | "both_bad";

/** Fields a blind payload may carry; anything else is treated as a leak. */
const ALLOWED_PAYLOAD_FIELDS = new Set([
  "id",
  "blind",
  "intent",
  "source_context",
  "image_a_url",
  "image_b_url",
  "dimensions",
]);

/** Substrings that would reveal slot identity if they appeared in a value. */
const IDENTITY_MARKERS = ["candidate", "reference", "model", "human"];

/**
 * Audit a blind payload for identity leaks. Returns a list of findings
 * (empty means the payload is safe to show an annotator).
 */
export function auditBlindPayload(payload: EvalCasePayload): string[] {
  const findings: string[] = [];
  for (const key of Object.keys(payload)) {
    if (!ALLOWED_PAYLOAD_FIELDS.has(key)) {
      findings.push(`unexpected field: ${key}`);
    }
  }
  if (payload.blind !== true) {
    findings.push("payload not marked blind");
  }
  for (const url of [payload.image_a_url, payload.image_b_url]) {
    for (const marker of IDENTITY_MARKERS) {
      if (url.toLowerCase().includes(marker)) {
        findings.push(`image url leaks identity: ${url}`);
      }
    }
  }
  return findings;
}

export interface BlindVote {
  caseId: string;
  dimension: Dimension;
  choice: BlindChoice;
}

/** Walks an annotator through the blind queue one dimension at a time. */
export class BlindSession {
  private votes: BlindVote[] = [];

  constructor(
    private readonly client: ApiClient,
    private readonly annotator: string,
  ) {}

  async loadCase(caseId: string): Promise<EvalCasePayload> {
    const payload = await this.client.getEvalCase(caseId);
    const findings = auditBlindPayload(payload);
    if (findings.length > 0) {
      throw new Error(`blind payload rejected: ${findings.join("; ")}`);
    }
    return payload;
  }

  async vote(
    caseId: string,
    dimension: Dimension,
    choice: BlindChoice,
    reasoning = "",
  ): Promise<void> {
    await this.client.submitVerdict(caseId, {
      annotator: this.annotator,
      dimension,
      choice,
      reasoning,
    });
    this.votes.push({ caseId, dimension, choice });
  }

  history(): readonly BlindVote[] {
    return this.votes;
  }
}
