// Typed client for the crowdreport HTTP API.
//
// Only the documented requester endpoints appear here: create, status,
// close, report. Worker uploads are out of scope for the dashboard.
// Non-2xx responses become ApiError carrying the server's structured body
// ({"error": code, "detail": ...} or {"error": "invalid_task",
// "violations": [...]}); anything else that fetch throws is treated by
// callers as a connection problem.
export class ApiError extends Error {
    constructor(status, code, detail, violations) {
        super(detail ?? code);
        this.status = status;
        this.code = code;
        this.detail = detail;
        this.violations = violations;
        this.name = "ApiError";
    }
}
async function toApiError(response) {
    let code = "http_error";
    let detail = null;
    let violations = [];
    try {
        const body = await response.json();
        if (body && typeof body === "object") {
            if (typeof body.error === "string")
                code = body.error;
            if (typeof body.detail === "string")
                detail = body.detail;
            if (Array.isArray(body.violations))
                violations = body.violations.map(String);
        }
    }
    catch {
        // non-JSON error body, keep the fallback code
    }
    return new ApiError(response.status, code, detail, violations);
}
export class DashboardApi {
    constructor(baseUrl) {
        this.baseUrl = baseUrl;
    }
    url(path) {
        return this.baseUrl.replace(/\/+$/, "") + path;
    }
    async request(path, init) {
        const response = await fetch(this.url(path), init);
        if (!response.ok)
            throw await toApiError(response);
        return response;
    }
    async createTask(body) {
        const response = await this.request("/tasks", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        return response.json();
    }
    async getStatus(taskId) {
        const response = await this.request(`/tasks/${encodeURIComponent(taskId)}`);
        return response.json();
    }
    async closeTask(taskId) {
        const response = await this.request(`/tasks/${encodeURIComponent(taskId)}/close`, {
            method: "POST",
        });
        return response.json();
    }
    // Raw bytes plus the parsed document. The download affordance must write
    // exactly what the server served, so the bytes are kept as received and
    // the parse is only for display.
    async fetchReportFile(taskId) {
        const response = await this.request(`/tasks/${encodeURIComponent(taskId)}/report`);
        const buffer = await response.arrayBuffer();
        const bytes = new Uint8Array(buffer);
        const report = JSON.parse(new TextDecoder().decode(bytes));
        return { bytes, report };
    }
}
