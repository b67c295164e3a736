/**
 * Run board: browse pipeline runs, pick a final iteration, and steer a run
 * with operator feedback (which spawns a child run server-side). Service
 * errors are captured per-action and rendered inline instead of thrown.
 */

import { ApiClient, ApiError } from "./api.js";
import { RunDetail, RunSummary } from "./types.js";

export interface ActionResult {
  ok: boolean;
  /** Inline message for the UI: confirmation on success, detail on failure. */
  message: string;
  /** Id of the child run when the action created one. */
  childRunId?: string;
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) return error.message;
  return error instanceof Error ? error.message : String(error);
}

export class RunBoard {
  private detail: RunDetail | null = null;

  constructor(private readonly client: ApiClient) {}

  async listRuns(): Promise<RunSummary[]> {
    return this.client.listRuns();
  }

  async open(runId: string): Promise<RunDetail> {
    this.detail = await this.client.getRun(runId);
    return this.detail;
  }

  current(): RunDetail | null {
    return this.detail;
  }

  /** Iteration indices that rendered an image and can be selected. */
  selectableIterations(): number[] {
    const trace = this.detail?.trace;
    if (!trace) return [];
    return trace.iterations
      .filter((it) => it.status === "image")
      .map((it) => it.index);
  }

  async selectIteration(iteration: number): Promise<ActionResult> {
    if (this.detail === null) {
      return { ok: false, message: "no run open" };
    }
    if (!this.selectableIterations().includes(iteration)) {
      return {
        ok: false,
        message: `iteration ${iteration} has no image to select`,
      };
    }
    try {
      await this.client.selectIteration(this.detail.id, iteration);
      this.detail = await this.client.getRun(this.detail.id);
      return { ok: true, message: `iteration ${iteration} selected` };
    } catch (error) {
      return { ok: false, message: describeError(error) };
    }
  }

  async sendFeedback(text: string): Promise<ActionResult> {
    if (this.detail === null) {
      return { ok: false, message: "no run open" };
    }
    if (text.trim().length === 0) {
      return { ok: false, message: "feedback text is empty" };
    }
    try {
      const child = await this.client.submitFeedback(this.detail.id, text);
      return {
        ok: true,
        message: `feedback spawned run ${child.id}`,
        childRunId: child.id,
      };
    } catch (error) {
      return { ok: false, message: describeError(error) };
    }
  }
}
