/** Thin typed client for the generation service's HTTP API. */

import {
  EvalCasePayload,
  ExportEntry,
  FixtureCombination,
  RunDetail,
  RunSummary,
  VerdictSubmission,
} from "./types.js";

/** Non-2xx responses surface as ApiError with the server's detail text. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // Non-JSON error body; keep the status text.
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return new URL(path, this.baseUrl).toString();
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.url(path));
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, payload: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  async listRuns(): Promise<RunSummary[]> {
    const body = await this.getJson<{ runs: RunSummary[] }>("/runs");
    return body.runs;
  }

  async createRun(
    task: Record<string, unknown>,
    config: Record<string, unknown> = {},
  ): Promise<{ id: string; state: string }> {
    return this.postJson("/runs", { task, config });
  }

  async getRun(runId: string): Promise<RunDetail> {
    return this.getJson(`/runs/${runId}`);
  }

  async getIterationImage(runId: string, index: number): Promise<Uint8Array> {
    const response = await fetch(
      this.url(`/runs/${runId}/iterations/${index}/image`),
    );
    await raiseForStatus(response);
    return new Uint8Array(await response.arrayBuffer());
  }

  async submitFeedback(
    runId: string,
    text: string,
  ): Promise<{ id: string; parent_id: string; state: string }> {
    return this.postJson(`/runs/${runId}/feedback`, { text });
  }

  async selectIteration(
    runId: string,
    iteration: number,
  ): Promise<{ id: string; selected_iteration: number }> {
    return this.postJson(`/runs/${runId}/select`, { iteration });
  }

  async listEvalCases(): Promise<{ id: string; intent: string }[]> {
    const body = await this.getJson<{
      cases: { id: string; intent: string }[];
    }>("/eval/cases");
    return body.cases;
  }

  async getEvalCase(caseId: string): Promise<EvalCasePayload> {
    return this.getJson(`/eval/cases/${caseId}`);
  }

  async getEvalImage(caseId: string, slot: "a" | "b"): Promise<Uint8Array> {
    const response = await fetch(this.url(`/eval/cases/${caseId}/image/${slot}`));
    await raiseForStatus(response);
    return new Uint8Array(await response.arrayBuffer());
  }

  async submitVerdict(
    caseId: string,
    verdict: VerdictSubmission,
  ): Promise<{ case_id: string; dimension: string; outcome: string }> {
    return this.postJson(`/eval/cases/${caseId}/verdict`, verdict);
  }

  async exportVerdicts(): Promise<ExportEntry[]> {
    const body = await this.getJson<{ cards: ExportEntry[] }>("/eval/export");
    return body.cards;
  }

  async getAggregationFixture(): Promise<FixtureCombination[]> {
    const body = await this.getJson<{ combinations: FixtureCombination[] }>(
      "/eval/fixture",
    );
    return body.combinations;
  }
}
