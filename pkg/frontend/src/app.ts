/** Session flow: fetch a task, collect exactly one explicit choice, submit,
 * advance. The server is the source of truth — reloading resumes wherever
 * the log says this worker stopped. */

import {
  AnnotationApi,
  Choice,
  DuplicateAnnotationError,
  TaskRecord,
} from "./api.js";
import {
  CHOICES,
  enableSubmit,
  renderComplete,
  renderError,
  renderTask,
} from "./view.js";

export function workerFromUrl(search: string): string | null {
  const worker = new URLSearchParams(search).get("worker");
  return worker && worker.trim() ? worker.trim() : null;
}

/** Global Y/N/C shortcuts; keystrokes inside inputs are left alone. */
export function attachKeyboard(controller: SessionController, doc: Document): void {
  doc.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    void controller.handleKey(event.key);
  });
}

export class SessionController {
  private currentTask: TaskRecord | null = null;
  private selected: Choice | null = null;
  private tally = 0;
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: AnnotationApi,
    private readonly worker: string,
  ) {}

  get answered(): number {
    return this.tally;
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  /** Route keyboard shortcuts: y/n/c select and submit in one action. */
  async handleKey(key: string): Promise<void> {
    if (!this.currentTask || this.busy) return;
    const choice = CHOICES.find((c) => c.key === key.toLowerCase());
    if (!choice) return;
    this.select(choice.value);
    await this.submit();
  }

  /** A click or keypress picked a choice; submitting becomes possible. */
  select(choice: Choice): void {
    if (!this.currentTask) return;
    this.selected = choice;
    enableSubmit(this.root);
  }

  async submit(): Promise<void> {
    const task = this.currentTask;
    const choice = this.selected;
    if (!task || !choice || this.busy) return;
    this.busy = true;
    try {
      await this.api.submit(this.worker, task.task_id, choice);
      this.tally += 1;
    } catch (err) {
      if (!(err instanceof DuplicateAnnotationError)) {
        // Keep the task and the selection; the worker retries explicitly.
        renderError(this.root, describe(err), () => void this.submit());
        this.busy = false;
        return;
      }
      // Someone (perhaps this worker, before a reload) already voted:
      // skip forward without recording anything.
    }
    this.busy = false;
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    this.selected = null;
    let task: TaskRecord | null;
    try {
      task = await this.api.nextTask(this.worker);
    } catch (err) {
      this.currentTask = null;
      renderError(this.root, describe(err), () => void this.loadNext());
      return;
    }
    this.currentTask = task;
    if (!task) {
      renderComplete(this.root, this.worker, this.tally);
      return;
    }
    let done = this.tally;
    let total = done + 1;
    try {
      const progress = await this.api.progress();
      total = progress.total_tasks;
      done = Math.min(this.tally, total);
    } catch {
      // Progress is decoration; the task still renders without it.
    }
    renderTask(this.root, task, done, total, {
      onSelect: (choice) => this.select(choice),
      onSubmit: () => void this.submit(),
    });
  }
}

function describe(err: unknown): string {
  if (err instanceof Error && err.message) {
    return `Request failed: ${err.message}`;
  }
  return "Request failed: network error";
}
