// Typed client for the crowdreport HTTP API.
//
// Only the documented requester endpoints appear here: create, status,
// close, report. Worker uploads are out of scope for the dashboard.
// Non-2xx responses become ApiError carrying the server's structured body
// ({"error": code, "detail": ...} or {"error": "invalid_task",
// "violations": [...]}); anything else that fetch throws is treated by
// callers as a connection problem.

export type LayerKind = "TIME" | "POSITION" | "VISUAL";
export type TaskMode = "ONLINE" | "OFFLINE";
export type RepresentativePolicy = "FIRST" | "LAST";

export interface LayerSpec {
  kind: LayerKind;
  threshold: number;
}

export interface TaskDoc {
  task_id: string;
  name: string;
  mode: TaskMode;
  expected_class: number | null;
  layers: LayerSpec[];
  opened_at: number;
  deadline: number;
  representative_policy: RepresentativePolicy;
  state: "OPEN" | "CLOSED";
}

export interface Counters {
  received: number;
  accepted: number;
  rejected_false: number;
  deferred: number;
}

export interface VerdictDoc {
  submission_id: string;
  predicted_class: number;
  confidence: number;
  decision: "ACCEPTED" | "REJECTED_FALSE" | "DEFERRED";
  reason?: string;
}

export interface GroupNode {
  layer_index: number;
  members: string[];
}

export interface BranchNode {
  layer_index: number;
  anchor: string | null;
  children: SnapshotNode[];
}

export type SnapshotNode = BranchNode | GroupNode;

export interface TreeSnapshot {
  task_id: string;
  depth: number;
  size: number;
  group_count: number;
  root: BranchNode;
}

export interface TaskStatus {
  task: TaskDoc;
  counters: Counters;
  tree: TreeSnapshot;
  verdicts: VerdictDoc[];
  report_ready: boolean;
}

export interface ReportDoc {
  task_id: string;
  determined_class: number;
  representatives: string[];
  group_sizes: number[];
  redundancy_ratio: number;
  total_accepted: number;
  rejected_false: number;
  no_event: boolean;
}

export interface CreateTaskResult {
  task_id: string;
  task: TaskDoc;
  warning?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string | null,
    readonly violations: string[],
  ) {
    super(detail ?? code);
    this.name = "ApiError";
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = "http_error";
  let detail: string | null = null;
  let violations: string[] = [];
  try {
    const body = await response.json();
    if (body && typeof body === "object") {
      if (typeof body.error === "string") code = body.error;
      if (typeof body.detail === "string") detail = body.detail;
      if (Array.isArray(body.violations)) violations = body.violations.map(String);
    }
  } catch {
    // non-JSON error body, keep the fallback code
  }
  return new ApiError(response.status, code, detail, violations);
}

export class DashboardApi {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/+$/, "") + path;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await fetch(this.url(path), init);
    if (!response.ok) throw await toApiError(response);
    return response;
  }

  async createTask(body: Record<string, unknown>): Promise<CreateTaskResult> {
    const response = await this.request("/tasks", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return response.json();
  }

  async getStatus(taskId: string): Promise<TaskStatus> {
    const response = await this.request(`/tasks/${encodeURIComponent(taskId)}`);
    return response.json();
  }

  async closeTask(taskId: string): Promise<ReportDoc> {
    const response = await this.request(`/tasks/${encodeURIComponent(taskId)}/close`, {
      method: "POST",
    });
    return response.json();
  }

  // Raw bytes plus the parsed document. The download affordance must write
  // exactly what the server served, so the bytes are kept as received and
  // the parse is only for display.
  async fetchReportFile(taskId: string): Promise<{ bytes: Uint8Array; report: ReportDoc }> {
    const response = await this.request(`/tasks/${encodeURIComponent(taskId)}/report`);
    const buffer = await response.arrayBuffer();
    const bytes = new Uint8Array(buffer);
    const report: ReportDoc = JSON.parse(new TextDecoder().decode(bytes));
    return { bytes, report };
  }
}
