// Live view of one task: counters, verdict feed, grouping outline, and the
// close-and-download flow. All numbers shown here come straight from the
// API; the panel holds no screening or grouping logic of its own.
import { ApiError } from "./api.js";
import { DEFAULT_POLL_MS, Poller } from "./poll.js";
import { countNodes, renderTree } from "./tree.js";
import { classLabel } from "./validation.js";
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
export class Monitor {
    constructor(api, root, queue, download, intervalMs = DEFAULT_POLL_MS) {
        this.api = api;
        this.root = root;
        this.queue = queue;
        this.download = download;
        this.lastStatus = null;
        this.lastReport = null;
        this.taskId = null;
        this.collapsedByTask = new Map();
        this.fetchingReport = false;
        this.poller = new Poller(() => this.refresh(), intervalMs, (stale) => {
            this.staleNote.hidden = !stale;
        });
        this.buildSkeleton();
    }
    buildSkeleton() {
        this.root.textContent = "";
        const header = el("div", "monitor-header");
        this.title = el("h2", "monitor-title", "no task selected");
        this.state = el("span", "monitor-state");
        this.staleNote = el("span", "stale-indicator", "connection lost, retrying…");
        this.staleNote.hidden = true;
        this.closeButton = el("button", "close-button", "close & download report");
        this.closeButton.type = "button";
        this.closeButton.hidden = true;
        this.closeButton.addEventListener("click", () => void this.closeAndDownload());
        header.append(this.title, this.state, this.staleNote, this.closeButton);
        this.errorBanner = el("div", "error-banner");
        this.errorBanner.hidden = true;
        this.notFound = el("p", "not-found", "task not found");
        this.notFound.hidden = true;
        this.body = el("div", "monitor-body");
        this.body.hidden = true;
        this.countersEl = el("dl", "counters");
        this.feedEl = el("div", "verdict-feed");
        this.treeEl = el("div", "tree-panel");
        this.reportEl = el("div", "report-panel");
        this.reportEl.hidden = true;
        this.body.append(this.countersEl, this.treeEl, this.feedEl, this.reportEl);
        this.root.append(header, this.errorBanner, this.notFound, this.body);
    }
    get currentTask() {
        return this.taskId;
    }
    show(taskId) {
        this.poller.stop();
        this.taskId = taskId;
        this.lastStatus = null;
        this.lastReport = null;
        this.notFound.hidden = true;
        this.errorBanner.hidden = true;
        this.body.hidden = true;
        this.reportEl.hidden = true;
        this.closeButton.hidden = true;
        this.title.textContent = taskId;
        this.state.textContent = "";
        this.poller.start();
    }
    hide() {
        this.poller.stop();
    }
    // One poll cycle. A 404 means the task id is unknown on this server:
    // that is a terminal answer, not a connection problem, so the loop stops
    // instead of flagging stale data.
    async refresh() {
        const taskId = this.taskId;
        if (taskId === null)
            return;
        try {
            const status = await this.api().getStatus(taskId);
            if (this.taskId !== taskId)
                return; // user switched tasks mid-flight
            this.render(status);
        }
        catch (err) {
            if (err instanceof ApiError && err.code === "unknown_task") {
                this.poller.stop();
                this.renderNotFound();
                return;
            }
            throw err;
        }
    }
    render(status) {
        this.lastStatus = status;
        this.notFound.hidden = true;
        this.body.hidden = false;
        this.closeButton.hidden = false;
        const task = status.task;
        this.title.textContent = task.name ? `${task.name} (${task.task_id})` : task.task_id;
        const expected = task.expected_class === null ? "" : ` · expecting ${classLabel(task.expected_class)}`;
        this.state.textContent = `${task.mode} · ${task.state}${expected}`;
        this.closeButton.disabled = false;
        this.renderCounters(status);
        this.renderFeed(status);
        this.renderTreePanel(status);
        // A task closed elsewhere (or in an earlier session) already has its
        // report; pull it once so reselecting a finished task shows the result.
        if (status.report_ready && this.lastReport === null && !this.fetchingReport) {
            this.fetchingReport = true;
            this.api()
                .fetchReportFile(status.task.task_id)
                .then(({ report }) => {
                if (this.taskId === report.task_id)
                    this.renderReport(report);
            })
                .catch(() => undefined)
                .finally(() => {
                this.fetchingReport = false;
            });
        }
    }
    renderCounters(status) {
        this.countersEl.textContent = "";
        const counters = status.counters;
        const rows = [
            ["received", "counter-received", counters.received],
            ["accepted", "counter-accepted", counters.accepted],
            ["rejected as false", "counter-rejected", counters.rejected_false],
            ["deferred", "counter-deferred", counters.deferred],
            ["groups", "counter-groups", status.tree.group_count],
        ];
        for (const [label, cls, value] of rows) {
            this.countersEl.append(el("dt", undefined, label));
            this.countersEl.append(el("dd", cls, String(value)));
        }
    }
    renderFeed(status) {
        this.feedEl.textContent = "";
        this.feedEl.append(el("h3", undefined, `verdicts (${status.verdicts.length})`));
        const list = el("ul", "feed-list");
        for (const v of status.verdicts) {
            const line = el("li", `feed-item feed-${v.decision.toLowerCase()}`);
            const reason = v.reason ? ` · ${v.reason}` : "";
            line.textContent =
                `${v.submission_id} · ${v.decision} · ` +
                    `${classLabel(v.predicted_class)} @ ${v.confidence.toFixed(3)}${reason}`;
            list.append(line);
        }
        this.feedEl.append(list);
    }
    renderTreePanel(status) {
        this.treeEl.textContent = "";
        const snapshot = status.tree;
        this.treeEl.append(el("h3", undefined, `grouping (${snapshot.group_count} groups, ${snapshot.size} photos)`));
        let collapsed = this.collapsedByTask.get(status.task.task_id);
        if (!collapsed) {
            collapsed = new Set();
            this.collapsedByTask.set(status.task.task_id, collapsed);
        }
        const kinds = status.task.layers.map((l) => l.kind);
        const view = renderTree(snapshot, status.task.representative_policy, kinds, collapsed);
        if (view.nodeCount !== countNodes(snapshot)) {
            // should be impossible by construction; surface loudly if it ever is
            this.treeEl.append(el("p", "error-banner", "tree render out of sync with snapshot"));
        }
        this.treeEl.append(view.element);
    }
    renderReport(report) {
        this.lastReport = report;
        this.reportEl.hidden = false;
        this.reportEl.textContent = "";
        this.reportEl.append(el("h3", undefined, "report"));
        if (report.no_event) {
            this.reportEl.append(el("p", "no-event-banner", "no event: the offline vote decided nothing happened"));
        }
        const dl = el("dl", "report-fields");
        const add = (label, cls, value) => {
            dl.append(el("dt", undefined, label));
            dl.append(el("dd", cls, value));
        };
        add("determined class", "report-class", `${classLabel(report.determined_class)} (${report.determined_class})`);
        add("representatives", "report-reps", report.representatives.join(", "));
        add("group sizes", "report-groups", report.group_sizes.join(", "));
        add("redundancy ratio", "report-redundancy", String(report.redundancy_ratio));
        add("accepted", "report-accepted", String(report.total_accepted));
        add("rejected as false", "report-rejected", String(report.rejected_false));
        this.reportEl.append(dl);
    }
    // POST close, render the result, then hand the exact report bytes to the
    // download sink. Safe to click again: close is idempotent server-side and
    // the second download carries the same bytes.
    closeAndDownload() {
        const taskId = this.taskId;
        if (taskId === null)
            return Promise.resolve();
        this.closeButton.disabled = true;
        return this.queue
            .run(async () => {
            const report = await this.api().closeTask(taskId);
            this.renderReport(report);
            const { bytes } = await this.api().fetchReportFile(taskId);
            this.download(bytes, `${taskId}-report.json`);
            this.errorBanner.hidden = true;
        })
            .catch((err) => {
            this.showError(err);
        })
            .finally(() => {
            this.closeButton.disabled = false;
            void this.poller.pollOnce();
        });
    }
    showError(err) {
        this.errorBanner.hidden = false;
        if (err instanceof ApiError) {
            const extra = err.violations.length > 0 ? `: ${err.violations.join("; ")}` : "";
            this.errorBanner.textContent = `${err.code}${err.detail ? ` · ${err.detail}` : ""}${extra}`;
        }
        else {
            this.errorBanner.textContent = "request failed, server unreachable";
        }
    }
    renderNotFound() {
        this.body.hidden = true;
        this.closeButton.hidden = true;
        this.notFound.hidden = false;
    }
}
