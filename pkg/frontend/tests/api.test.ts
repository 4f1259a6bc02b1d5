import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, DashboardApi } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("DashboardApi", () => {
  it("posts the create body and parses the result", async () => {
    const fetchMock = vi.fn(async (url: string | URL | Request, init?: RequestInit) => {
      expect(String(url)).toBe("http://host:1/tasks");
      expect(init?.method).toBe("POST");
      expect(JSON.parse(String(init?.body))).toEqual({ name: "n", mode: "OFFLINE" });
      return jsonResponse(201, { task_id: "t9", task: { task_id: "t9" }, warning: "w" });
    });
    vi.stubGlobal("fetch", fetchMock);
    const api = new DashboardApi("http://host:1/");
    const result = await api.createTask({ name: "n", mode: "OFFLINE" });
    expect(result.task_id).toBe("t9");
    expect(result.warning).toBe("w");
  });

  it("turns invalid_task bodies into ApiError with violations", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () =>
        jsonResponse(400, { error: "invalid_task", violations: ["missing expected_class", "x"] }),
      ),
    );
    const api = new DashboardApi("http://host:1");
    const err = await api.createTask({}).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.code).toBe("invalid_task");
    expect(err.violations).toEqual(["missing expected_class", "x"]);
  });

  it("maps 404 status bodies onto code and detail", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => jsonResponse(404, { error: "unknown_task", detail: "no task nope" })),
    );
    const api = new DashboardApi("http://host:1");
    const err = await api.getStatus("nope").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("unknown_task");
    expect(err.detail).toBe("no task nope");
    expect(err.message).toBe("no task nope");
  });

  it("keeps a fallback code for non-JSON error bodies", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => new Response("gateway exploded", { status: 503 })));
    const api = new DashboardApi("http://host:1");
    const err = await api.getStatus("t").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("http_error");
    expect(err.status).toBe(503);
  });

  it("lets network failures escape untouched", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => {
        throw new TypeError("fetch failed");
      }),
    );
    const api = new DashboardApi("http://host:1");
    await expect(api.getStatus("t")).rejects.toBeInstanceOf(TypeError);
  });

  it("encodes task ids in paths", async () => {
    const seen: string[] = [];
    vi.stubGlobal(
      "fetch",
      vi.fn(async (url: string | URL | Request) => {
        seen.push(String(url));
        return jsonResponse(200, {});
      }),
    );
    const api = new DashboardApi("http://host:1");
    await api.getStatus("a/b c");
    expect(seen[0]).toBe("http://host:1/tasks/a%2Fb%20c");
  });

  it("fetchReportFile returns the exact bytes alongside the parse", async () => {
    const raw = '{"task_id":"t1","determined_class":2,"representatives":["s4"],"group_sizes":[3],"redundancy_ratio":0.5,"total_accepted":3,"rejected_false":1,"no_event":false}';
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => new Response(raw, { status: 200 })),
    );
    const api = new DashboardApi("http://host:1");
    const { bytes, report } = await api.fetchReportFile("t1");
    expect(new TextDecoder().decode(bytes)).toBe(raw);
    expect(report.determined_class).toBe(2);
    expect(report.redundancy_ratio).toBe(0.5);
  });

  it("closeTask posts and parses the report", async () => {
    const fetchMock = vi.fn(async (url: string | URL | Request, init?: RequestInit) => {
      expect(String(url)).toBe("http://host:1/tasks/t1/close");
      expect(init?.method).toBe("POST");
      return jsonResponse(200, {
        task_id: "t1",
        determined_class: 0,
        representatives: [],
        group_sizes: [],
        redundancy_ratio: 0.0,
        total_accepted: 0,
        rejected_false: 0,
        no_event: false,
      });
    });
    vi.stubGlobal("fetch", fetchMock);
    const api = new DashboardApi("http://host:1");
    const report = await api.closeTask("t1");
    expect(report.total_accepted).toBe(0);
  });
});
