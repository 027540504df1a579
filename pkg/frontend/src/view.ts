/** DOM rendering for one task at a time, plus completion and error screens. */

import type { Choice, TaskRecord } from "./api.js";

/** Room-level tasks ask about a whole situation; object-level tasks ask
 * about one templated consensus state. */
export function modeOf(task: TaskRecord): "situational" | "consensus" {
  return task.level === "room" ? "situational" : "consensus";
}

export const CHOICES: { value: Choice; label: string; key: string }[] = [
  { value: "Yes", label: "Yes", key: "y" },
  { value: "No", label: "No", key: "n" },
  { value: "CannotAnswer", label: "Cannot Answer", key: "c" },
];

export interface TaskViewHandlers {
  onSelect: (choice: Choice) => void;
  onSubmit: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderTask(
  root: HTMLElement,
  task: TaskRecord,
  done: number,
  total: number,
  handlers: TaskViewHandlers,
): void {
  root.textContent = "";
  const card = el("div", "task-card");

  const header = el("div", "task-header");
  const mode = modeOf(task);
  const badge = el("span", `badge badge-${mode}`, mode);
  header.appendChild(badge);
  header.appendChild(el("span", "progress", `${done} / ${total} answered`));
  card.appendChild(header);

  card.appendChild(el("p", "query-text", task.text));

  if (task.states.length > 0 || task.relations.length > 0) {
    const table = el("table", "context-table");
    const tbody = el("tbody");
    for (const [className, state] of task.states) {
      const row = el("tr", "state-row");
      row.appendChild(el("td", "context-cell", `${className}: ${state}`));
      tbody.appendChild(row);
    }
    for (const [subject, relation, target] of task.relations) {
      const row = el("tr", "relation-row");
      row.appendChild(el("td", "context-cell", `${subject} ${relation} ${target}`));
      tbody.appendChild(row);
    }
    table.appendChild(tbody);
    card.appendChild(table);
  }

  if (task.image_refs.length > 0) {
    const strip = el("div", "image-strip");
    for (const ref of task.image_refs) {
      const img = el("img", "task-image");
      img.src = ref;
      img.alt = ref;
      strip.appendChild(img);
    }
    card.appendChild(strip);
  }

  const choiceRow = el("div", "choice-row");
  for (const choice of CHOICES) {
    const button = el("button", "choice", `${choice.label} (${choice.key.toUpperCase()})`);
    button.dataset.choice = choice.value;
    button.addEventListener("click", () => {
      for (const sibling of Array.from(choiceRow.children)) {
        sibling.classList.remove("selected");
      }
      button.classList.add("selected");
      handlers.onSelect(choice.value);
    });
    choiceRow.appendChild(button);
  }
  card.appendChild(choiceRow);

  const submit = el("button", "submit", "Submit");
  submit.disabled = true;
  submit.addEventListener("click", () => handlers.onSubmit());
  card.appendChild(submit);

  root.appendChild(card);
}

/** Flip the submit button on once a choice exists. */
export function enableSubmit(root: HTMLElement): void {
  const submit = root.querySelector<HTMLButtonElement>("button.submit");
  if (submit) submit.disabled = false;
}

export function renderComplete(root: HTMLElement, worker: string, tally: number): void {
  root.textContent = "";
  const card = el("div", "complete-card");
  card.appendChild(el("h2", undefined, "All done!"));
  card.appendChild(
    el("p", "tally", `${worker}, you answered ${tally} task${tally === 1 ? "" : "s"}.`),
  );
  root.appendChild(card);
}

export function renderError(root: HTMLElement, message: string, onRetry: () => void): void {
  const existing = root.querySelector(".error-banner");
  if (existing) existing.remove();
  const banner = el("div", "error-banner");
  banner.appendChild(el("span", "error-message", message));
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", () => {
    banner.remove();
    onRetry();
  });
  banner.appendChild(retry);
  root.prepend(banner);
}

export function renderWorkerPrompt(root: HTMLElement, onStart: (worker: string) => void): void {
  root.textContent = "";
  const card = el("div", "worker-card");
  card.appendChild(el("h2", undefined, "Who is annotating?"));
  const input = el("input", "worker-input");
  input.placeholder = "worker id";
  const start = el("button", "start", "Start");
  start.addEventListener("click", () => {
    const worker = input.value.trim();
    if (worker) onStart(worker);
  });
  card.appendChild(input);
  card.appendChild(start);
  root.appendChild(card);
}
