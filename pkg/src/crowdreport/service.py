"""Platform core: task lifecycle, submission screening, grouping, durable
logging, and crash recovery.

All mutations of one task are serialized under that task's lock and written
to the append-only log before the caller sees a response. Recovery replays
the log: verdicts are applied as recorded (never re-predicted, so an
unreachable or since-retrained external classifier cannot change history)
while trees and reports are recomputed, which is safe because insertion and
handover are deterministic.
"""

from __future__ import annotations

import dataclasses
import threading
import time
import uuid
from typing import Any, Mapping

from .config import ServiceConfig
from .model import (
    AggregationReport,
    ClassRegistry,
    Decision,
    Submission,
    Task,
    TaskMode,
    TaskStatus,
    TaskValidationError,
    Verdict,
    validate_task,
)
from .predictor import PredictorUnavailableError
from .screening import (
    REASON_PREDICTOR_UNAVAILABLE,
    judge_offline_defer,
    judge_online,
    resolve_offline,
)
from .store import EventLog, read_records
from .tree import ConstraintTree


class UnknownTaskError(KeyError):
    pass


class DuplicateTaskError(ValueError):
    pass


class TaskClosedError(RuntimeError):
    pass


class ReportNotReadyError(RuntimeError):
    pass


class SubmissionError(ValueError):
    """Malformed payload, duplicate id, or capture time outside the window."""


class _TaskRuntime:
    """Mutable per-task state; every access goes through self.lock."""

    __slots__ = (
        "task",
        "tree",
        "deferred",
        "deferred_count",
        "verdicts",
        "received",
        "accepted",
        "rejected_false",
        "report",
        "seen",
        "accepted_stream",
        "lock",
    )

    def __init__(self, task: Task, tree: ConstraintTree | None):
        self.task = task
        self.tree = tree  # None for OFFLINE until close
        self.deferred: list[tuple[Submission, Verdict]] = []
        self.deferred_count = 0
        self.verdicts: list[Verdict] = []
        self.received = 0
        self.accepted = 0
        self.rejected_false = 0
        self.report: AggregationReport | None = None
        self.seen: set[str] = set()
        self.accepted_stream: list[Submission] = []  # arrival order, for oracle scoring
        self.lock = threading.Lock()


class Platform:
    """One deployment's in-memory state plus its event log."""

    def __init__(
        self,
        config: ServiceConfig,
        registry: ClassRegistry,
        predictor: Any,
        log: EventLog | None,
    ):
        self.config = config
        self.registry = registry
        self.predictor = predictor
        self.log = log
        self._runtimes: dict[str, _TaskRuntime] = {}
        self._directory_lock = threading.Lock()

    @classmethod
    def recover(
        cls,
        config: ServiceConfig,
        registry: ClassRegistry,
        predictor: Any,
        attach_log: bool = True,
    ) -> tuple["Platform", str | None]:
        """Rebuild a platform from its store directory.

        Returns the platform and a warning when the log had a corrupt or
        truncated tail (state is complete up to the last intact record).
        Past-deadline tasks are NOT closed here; the deadline sweeper does
        that once serving resumes, so recovered state matches the pre-crash
        snapshot exactly.
        """
        records, warning = read_records(config.store_dir)
        platform = cls(config, registry, predictor, log=None)
        for record in records:
            platform._apply(record)
        if attach_log:
            platform.log = EventLog(config.store_dir)
        return platform, warning

    # ------------------------------------------------------------------
    # live API

    def create_task(
        self,
        raw: Mapping[str, Any],
        now: float | None = None,
    ) -> tuple[Task, str | None]:
        request = dict(raw)
        if not request.get("task_id"):
            request["task_id"] = uuid.uuid4().hex[:12]
        task = validate_task(request, self.registry)
        warning = None
        if task.mode is TaskMode.OFFLINE and request.get("expected_class") is not None:
            warning = "expected_class is ignored for OFFLINE tasks; the vote at close determines the class"
        now = time.time() if now is None else now
        if task.deadline <= now:
            raise TaskValidationError(["deadline is in the past"])
        runtime = _TaskRuntime(task, self._new_tree(task) if task.mode is TaskMode.ONLINE else None)
        with self._directory_lock:
            if task.task_id in self._runtimes:
                raise DuplicateTaskError(f"task {task.task_id} already exists")
            self._runtimes[task.task_id] = runtime
        self._append({"type": "create_task", "task": task.to_dict()})
        return task, warning

    def submit(
        self,
        task_id: str,
        raw: Mapping[str, Any],
    ) -> tuple[Verdict, tuple[int, ...] | None]:
        """Screen one upload; returns its verdict and, when it entered the
        tree, the per-layer path it took."""
        runtime = self._get(task_id)
        with runtime.lock:
            task = runtime.task
            if task.state is not TaskStatus.OPEN:
                raise TaskClosedError(f"task {task_id} is closed")
            sub = self._parse_submission(task, raw, runtime)

            try:
                class_id, confidence = self.predictor.predict(
                    task.task_id, sub.submission_id, sub.global_feature
                )
            except PredictorUnavailableError:
                # Degrade to rejection: a submission nobody classified must
                # not reach the report, in either mode.
                verdict = Verdict(
                    submission_id=sub.submission_id,
                    predicted_class=self.registry.normal.id,
                    confidence=0.0,
                    decision=Decision.REJECTED_FALSE,
                    reason=REASON_PREDICTOR_UNAVAILABLE,
                )
            except ValueError as exc:
                raise SubmissionError(str(exc)) from exc
            else:
                if task.mode is TaskMode.ONLINE:
                    verdict = judge_online(task, sub.submission_id, class_id, confidence)
                else:
                    verdict = judge_offline_defer(task, sub.submission_id, class_id, confidence)

            path: tuple[int, ...] | None = None
            if verdict.decision is Decision.ACCEPTED:
                path = runtime.tree.insert(sub)
                runtime.accepted_stream.append(sub)
            elif verdict.decision is Decision.DEFERRED:
                runtime.deferred.append((sub, verdict))

            self._commit_submission(runtime, sub, verdict)
            self._append(
                {
                    "type": "submission",
                    "task_id": task.task_id,
                    "submission": sub.to_dict(),
                    "verdict": verdict.to_dict(),
                }
            )
            return verdict, path

    def close_task(self, task_id: str) -> AggregationReport:
        """Settle the task and produce its report; idempotent once closed."""
        runtime = self._get(task_id)
        with runtime.lock:
            if runtime.task.state is TaskStatus.CLOSED:
                return runtime.report
            report = self._close_locked(runtime)
        self._append({"type": "close_task", "task_id": task_id})
        return report

    def status(self, task_id: str) -> dict[str, Any]:
        """Consistent snapshot: counters, tree, verdict feed, report flag."""
        runtime = self._get(task_id)
        with runtime.lock:
            task = runtime.task
            tree = runtime.tree
            if tree is None:
                # OFFLINE before close: grouping has not run, show the bare root.
                tree = self._new_tree(task)
            return {
                "task": task.to_dict(),
                "counters": {
                    "received": runtime.received,
                    "accepted": runtime.accepted,
                    "rejected_false": runtime.rejected_false,
                    "deferred": runtime.deferred_count,
                },
                "tree": tree.snapshot(),
                "verdicts": [v.to_dict() for v in runtime.verdicts],
                "report_ready": runtime.report is not None,
            }

    def report(self, task_id: str) -> AggregationReport:
        runtime = self._get(task_id)
        with runtime.lock:
            if runtime.report is None:
                raise ReportNotReadyError(f"task {task_id} is still open")
            return runtime.report

    def task_ids(self) -> list[str]:
        with self._directory_lock:
            return list(self._runtimes)

    def get_task(self, task_id: str) -> Task:
        return self._get(task_id).task

    def accepted_submissions(self, task_id: str) -> list[Submission]:
        """Accepted stream in arrival order (empty for an open OFFLINE task,
        whose acceptances only exist after the close-time vote)."""
        runtime = self._get(task_id)
        with runtime.lock:
            return list(runtime.accepted_stream)

    def tree_group_count(self, task_id: str) -> int:
        runtime = self._get(task_id)
        with runtime.lock:
            return runtime.tree.group_count if runtime.tree is not None else 0

    def close_due(self, now: float | None = None) -> list[str]:
        """Close every open task whose deadline has passed; returns their ids."""
        now = time.time() if now is None else now
        closed: list[str] = []
        for task_id in self.task_ids():
            runtime = self._runtimes[task_id]
            if runtime.task.state is TaskStatus.OPEN and runtime.task.deadline <= now:
                self.close_task(task_id)
                closed.append(task_id)
        return closed

    def shutdown(self) -> None:
        if self.log is not None:
            self.log.close()

    # ------------------------------------------------------------------
    # internals

    def _new_tree(self, task: Task) -> ConstraintTree:
        return ConstraintTree(task.task_id, task.layers, ratio=self.config.ratio)

    def _get(self, task_id: str) -> _TaskRuntime:
        with self._directory_lock:
            runtime = self._runtimes.get(task_id)
        if runtime is None:
            raise UnknownTaskError(f"unknown task {task_id}")
        return runtime

    def _append(self, record: dict[str, Any]) -> None:
        if self.log is not None:
            self.log.append(record)

    def _parse_submission(
        self,
        task: Task,
        raw: Mapping[str, Any],
        runtime: _TaskRuntime,
    ) -> Submission:
        data = dict(raw)
        data.setdefault("task_id", task.task_id)
        if data["task_id"] != task.task_id:
            raise SubmissionError(
                f"submission task_id {data['task_id']!r} does not match task {task.task_id!r}"
            )
        if not data.get("submission_id"):
            data["submission_id"] = uuid.uuid4().hex[:12]
        try:
            sub = Submission.from_dict(data)
        except (KeyError, ValueError, TypeError) as exc:
            raise SubmissionError(f"malformed submission: {exc}") from exc
        if sub.submission_id in runtime.seen:
            raise SubmissionError(f"duplicate submission_id {sub.submission_id}")
        if not (task.opened_at <= sub.captured_at <= task.deadline):
            raise SubmissionError(
                f"captured_at {sub.captured_at} outside the task window "
                f"[{task.opened_at}, {task.deadline}]"
            )
        return sub

    def _commit_submission(self, runtime: _TaskRuntime, sub: Submission, verdict: Verdict) -> None:
        runtime.received += 1
        if verdict.decision is Decision.ACCEPTED:
            runtime.accepted += 1
        elif verdict.decision is Decision.REJECTED_FALSE:
            runtime.rejected_false += 1
        else:
            runtime.deferred_count += 1
        runtime.verdicts.append(verdict)
        runtime.seen.add(sub.submission_id)

    def _close_locked(self, runtime: _TaskRuntime) -> AggregationReport:
        task = runtime.task
        if task.mode is TaskMode.ONLINE:
            determined = task.expected_class
            no_event = False
            tree = runtime.tree
        else:
            outcome = resolve_offline([v for _, v in runtime.deferred], self.registry)
            determined = outcome.determined_class
            no_event = outcome.no_event
            final_by_id = {v.submission_id: v for v in outcome.verdicts}
            runtime.verdicts = [final_by_id.get(v.submission_id, v) for v in runtime.verdicts]
            tree = self._new_tree(task)
            # Survivors replay through the tree in original arrival order;
            # runtime.deferred preserved that order.
            for sub, _ in runtime.deferred:
                final = final_by_id[sub.submission_id]
                if final.decision is Decision.ACCEPTED:
                    tree.insert(sub)
                    runtime.accepted_stream.append(sub)
            runtime.tree = tree
            runtime.accepted = tree.accepted_count
            runtime.rejected_false = runtime.received - runtime.accepted
            runtime.deferred_count = 0

        handover = tree.handover(task.representative_policy.value)
        report = AggregationReport.assemble(
            task_id=task.task_id,
            determined_class=determined,
            representatives=handover.representatives,
            group_sizes=handover.group_sizes,
            rejected_false=runtime.rejected_false,
            no_event=no_event,
        )
        tree.close()
        runtime.task = dataclasses.replace(task, state=TaskStatus.CLOSED)
        runtime.report = report
        return report

    def _apply(self, record: dict[str, Any]) -> None:
        """Replay one log record; trusts recorded verdicts, recomputes trees."""
        kind = record["type"]
        if kind == "create_task":
            task = Task.from_dict(record["task"])
            runtime = _TaskRuntime(task, self._new_tree(task) if task.mode is TaskMode.ONLINE else None)
            with self._directory_lock:
                if task.task_id in self._runtimes:
                    raise RuntimeError(f"log replays task {task.task_id} twice")
                self._runtimes[task.task_id] = runtime
        elif kind == "submission":
            runtime = self._get(record["task_id"])
            sub = Submission.from_dict(record["submission"])
            verdict = Verdict.from_dict(record["verdict"])
            with runtime.lock:
                if verdict.decision is Decision.ACCEPTED:
                    runtime.tree.insert(sub)
                    runtime.accepted_stream.append(sub)
                elif verdict.decision is Decision.DEFERRED:
                    runtime.deferred.append((sub, verdict))
                self._commit_submission(runtime, sub, verdict)
        elif kind == "close_task":
            runtime = self._get(record["task_id"])
            with runtime.lock:
                if runtime.task.state is not TaskStatus.CLOSED:
                    self._close_locked(runtime)
        else:
            raise RuntimeError(f"unknown log record type {kind!r}")


class DeadlineSweeper:
    """Background thread that closes overdue tasks on a coarse tick."""

    def __init__(self, platform: Platform, tick_seconds: float | None = None):
        self.platform = platform
        self.tick_seconds = tick_seconds if tick_seconds is not None else platform.config.tick_seconds
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def start(self) -> "DeadlineSweeper":
        self._thread = threading.Thread(target=self._run, name="deadline-sweeper", daemon=True)
        self._thread.start()
        return self

    def _run(self) -> None:
        while not self._stop.wait(self.tick_seconds):
            self.platform.close_due()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
