/** Typed client for the annotation service's JSON API. */

export type Choice = "Yes" | "No" | "CannotAnswer";

export interface TaskRecord {
  task_id: string;
  text: string;
  level: "room" | "object";
  datapoint_id: string;
  unit_id: string;
  states: [string, string][];
  relations: [string, string, string][];
  image_refs: string[];
  votes_so_far: number;
}

export interface Progress {
  total_tasks: number;
  completed_tasks: number;
  votes_required: number;
  annotations_collected: number;
  annotations_remaining: number;
}

export interface SubmitResult {
  status: string;
  task_id: string;
  votes: number;
  complete: boolean;
}

/** Non-2xx response other than a duplicate vote. */
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

/** 409: this worker already voted on the task; the caller should skip ahead. */
export class DuplicateAnnotationError extends Error {
  constructor(readonly taskId: string) {
    super(`already annotated ${taskId}`);
    this.name = "DuplicateAnnotationError";
  }
}

export class AnnotationApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  /** Next open task for the worker, or null when the study is finished. */
  async nextTask(worker: string): Promise<TaskRecord | null> {
    const url = `${this.baseUrl}/api/tasks/next?worker=${encodeURIComponent(worker)}`;
    const body = await this.getJson(url);
    return (body as { task: TaskRecord | null }).task;
  }

  async submit(worker: string, taskId: string, answer: Choice): Promise<SubmitResult> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ worker, task_id: taskId, answer }),
    });
    if (resp.status === 409) {
      throw new DuplicateAnnotationError(taskId);
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, await describeFailure(resp));
    }
    return (await resp.json()) as SubmitResult;
  }

  async progress(): Promise<Progress> {
    return (await this.getJson(`${this.baseUrl}/api/progress`)) as Progress;
  }

  private async getJson(url: string): Promise<unknown> {
    const resp = await this.fetchFn(url);
    if (!resp.ok) {
      throw new ApiError(resp.status, await describeFailure(resp));
    }
    return resp.json();
  }
}

async function describeFailure(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${resp.status}`;
}
