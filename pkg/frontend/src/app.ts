// Page wiring: API base field, compose form, client-side task list, and
// the monitor panel. The service has no task-listing endpoint, so the list
// only holds tasks created (or looked up by id) in this browser session.

import { ApiError, DashboardApi } from "./api.js";
import { Monitor } from "./monitor.js";
import { ActionQueue } from "./poll.js";
import type { LayerKind, TaskMode } from "./api.js";
import type { LayerRow, TaskForm } from "./validation.js";
import { EVENT_CLASSES, NORMAL_CLASS_ID, toCreateRequest, validateTaskForm } from "./validation.js";

const THRESHOLD_HINTS: Record<LayerKind, string> = {
  TIME: "seconds",
  POSITION: "km",
  VISUAL: "min matches",
};

const DEFAULT_THRESHOLDS: Record<LayerKind, number> = {
  TIME: 300,
  POSITION: 0.5,
  VISUAL: 10,
};

function browserDownload(bytes: Uint8Array, filename: string): void {
  // copy into a plain ArrayBuffer so the Blob ctor accepts it
  const copy = new Uint8Array(bytes);
  const blob = new Blob([copy], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  document.body.append(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}

function toEpochSeconds(value: string): number | null {
  if (!value) return null;
  const ms = new Date(value).getTime();
  return Number.isNaN(ms) ? null : Math.floor(ms / 1000);
}

function toLocalInputValue(date: Date): string {
  const pad = (n: number) => String(n).padStart(2, "0");
  return (
    `${date.getFullYear()}-${pad(date.getMonth() + 1)}-${pad(date.getDate())}` +
    `T${pad(date.getHours())}:${pad(date.getMinutes())}`
  );
}

export function initApp(doc: Document): void {
  const $ = (id: string) => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  };

  const apiBase = $("api-base") as HTMLInputElement;
  const form = $("compose-form");
  const nameInput = $("task-name") as HTMLInputElement;
  const modeSelect = $("task-mode") as HTMLSelectElement;
  const layerRows = $("layer-rows");
  const addLayer = $("add-layer") as HTMLButtonElement;
  const openedInput = $("opened-at") as HTMLInputElement;
  const deadlineInput = $("deadline") as HTMLInputElement;
  const classSelect = $("expected-class") as HTMLSelectElement;
  const createButton = $("create-button") as HTMLButtonElement;
  const violationsList = $("form-violations");
  const warningNote = $("create-warning");
  const taskList = $("task-list");

  const queue = new ActionQueue();
  const api = () => new DashboardApi(apiBase.value.trim() || "http://127.0.0.1:8000");
  const monitor = new Monitor(api, $("monitor"), queue, browserDownload);

  for (const cls of EVENT_CLASSES) {
    const option = doc.createElement("option");
    option.value = String(cls.id);
    option.textContent = cls.label;
    if (cls.id === NORMAL_CLASS_ID) option.disabled = true;
    classSelect.append(option);
  }

  // sensible prefill: window opens now and runs an hour
  const now = new Date();
  openedInput.value = toLocalInputValue(now);
  deadlineInput.value = toLocalInputValue(new Date(now.getTime() + 3600_000));

  function addLayerRow(kind: LayerKind, threshold: number): void {
    const row = doc.createElement("div");
    row.className = "layer-row";

    const kindSelect = doc.createElement("select");
    kindSelect.className = "layer-kind";
    for (const k of ["TIME", "POSITION", "VISUAL"] as LayerKind[]) {
      const option = doc.createElement("option");
      option.value = k;
      option.textContent = k;
      kindSelect.append(option);
    }
    kindSelect.value = kind;

    const thresholdInput = doc.createElement("input");
    thresholdInput.className = "layer-threshold";
    thresholdInput.type = "number";
    thresholdInput.step = "any";
    thresholdInput.value = String(threshold);
    thresholdInput.placeholder = THRESHOLD_HINTS[kind];

    kindSelect.addEventListener("change", () => {
      const k = kindSelect.value as LayerKind;
      thresholdInput.placeholder = THRESHOLD_HINTS[k];
      thresholdInput.value = String(DEFAULT_THRESHOLDS[k]);
    });

    const remove = doc.createElement("button");
    remove.type = "button";
    remove.className = "layer-remove";
    remove.textContent = "×";
    remove.addEventListener("click", () => {
      row.remove();
      refreshValidation();
    });

    row.append(kindSelect, thresholdInput, remove);
    layerRows.append(row);
  }

  function readLayers(): LayerRow[] {
    const rows: LayerRow[] = [];
    for (const row of Array.from(layerRows.querySelectorAll(".layer-row"))) {
      const kind = (row.querySelector(".layer-kind") as HTMLSelectElement).value as LayerKind;
      const raw = (row.querySelector(".layer-threshold") as HTMLInputElement).value;
      rows.push({ kind, threshold: raw === "" ? null : Number(raw) });
    }
    return rows;
  }

  function readForm(): TaskForm {
    const mode = modeSelect.value as TaskMode;
    return {
      name: nameInput.value.trim(),
      mode,
      layers: readLayers(),
      openedAt: toEpochSeconds(openedInput.value),
      deadline: toEpochSeconds(deadlineInput.value),
      expectedClass: classSelect.value === "" ? null : Number(classSelect.value),
    };
  }

  function renderViolations(problems: string[]): void {
    violationsList.textContent = "";
    for (const problem of problems) {
      const item = doc.createElement("li");
      item.textContent = problem;
      violationsList.append(item);
    }
  }

  // The create button only arms once the local mirror of the server's
  // checks is satisfied; a form with, say, two TIME layers never produces
  // a request at all.
  function refreshValidation(): void {
    const problems = validateTaskForm(readForm());
    renderViolations(problems);
    createButton.disabled = problems.length > 0;
    classSelect.disabled = modeSelect.value === "OFFLINE";
  }

  function addTaskEntry(taskId: string, label: string): void {
    const item = doc.createElement("li");
    const button = doc.createElement("button");
    button.type = "button";
    button.className = "task-link";
    button.dataset.taskId = taskId;
    button.textContent = label;
    button.addEventListener("click", () => monitor.show(taskId));
    item.append(button);
    taskList.append(item);
  }

  function createTask(): void {
    const formModel = readForm();
    const problems = validateTaskForm(formModel);
    if (problems.length > 0) {
      renderViolations(problems);
      return;
    }
    createButton.disabled = true;
    void queue
      .run(() => api().createTask(toCreateRequest(formModel)))
      .then((result) => {
        warningNote.textContent = result.warning ?? "";
        addTaskEntry(result.task_id, `${result.task.name || "unnamed"} (${result.task_id})`);
        monitor.show(result.task_id);
      })
      .catch((err) => {
        if (err instanceof ApiError) {
          renderViolations(
            err.violations.length > 0 ? err.violations.map((v) => `server: ${v}`) : [err.message],
          );
        } else {
          renderViolations(["server unreachable"]);
        }
      })
      .finally(() => refreshValidation());
  }

  addLayerRow("TIME", DEFAULT_THRESHOLDS.TIME);
  addLayer.addEventListener("click", () => {
    // offer the first kind the form does not use yet
    const used = new Set(readLayers().map((l) => l.kind));
    const next = (["TIME", "POSITION", "VISUAL"] as LayerKind[]).find((k) => !used.has(k)) ?? "TIME";
    addLayerRow(next, DEFAULT_THRESHOLDS[next]);
    refreshValidation();
  });

  form.addEventListener("input", refreshValidation);
  form.addEventListener("change", refreshValidation);
  createButton.addEventListener("click", createTask);

  const lookupInput = $("lookup-id") as HTMLInputElement;
  $("lookup-button").addEventListener("click", () => {
    const taskId = lookupInput.value.trim();
    if (taskId) monitor.show(taskId);
  });

  refreshValidation();
}

if (typeof document !== "undefined") {
  const boot = () => {
    if (document.getElementById("compose-form")) initApp(document);
  };
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", boot);
  } else {
    boot();
  }
}
