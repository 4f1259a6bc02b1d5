import json

import numpy as np
import pytest

from crowdreport.config import ServiceConfig
from crowdreport.model import Decision, TaskStatus, TaskValidationError
from crowdreport.predictor import (
    PredictorProtocolError,
    PredictorUnavailableError,
    ReferencePredictor,
)
from crowdreport.screening import (
    REASON_CLASS_MISMATCH,
    REASON_MINORITY_CLASS,
    REASON_NO_EVENT,
    REASON_PREDICTOR_UNAVAILABLE,
    synthetic_model,
)
from crowdreport.service import (
    DuplicateTaskError,
    Platform,
    ReportNotReadyError,
    SubmissionError,
    TaskClosedError,
    UnknownTaskError,
)
from crowdreport.store import EventLog, encode_record, read_records

from helpers import make_submission

T0 = 1_000_000
DIM = 8


def feat(class_id: int) -> np.ndarray:
    v = np.zeros(DIM)
    v[class_id] = 10.0
    return v


def task_request(task_id="t1", mode="ONLINE", expected=0, deadline=T0 + 1000, **extra):
    request = {
        "task_id": task_id,
        "name": "unit",
        "mode": mode,
        "layers": [{"kind": "TIME", "threshold": 300.0}],
        "opened_at": T0,
        "deadline": deadline,
    }
    if mode == "ONLINE":
        request["expected_class"] = expected
    request.update(extra)
    return request


def payload(sid, t, class_id, task_id="t1", **kw):
    return make_submission(sid, task_id=task_id, t=t, feature=feat(class_id), **kw).to_dict()


def make_platform(registry, store_dir=None, predictor=None):
    config = ServiceConfig(store_dir=str(store_dir) if store_dir else "./unused")
    if predictor is None:
        predictor = ReferencePredictor(synthetic_model(registry, DIM), registry)
    log = EventLog(store_dir) if store_dir else None
    return Platform(config, registry, predictor, log)


class RaisingPredictor:
    def __init__(self, exc):
        self.exc = exc
        self.calls = 0

    def predict(self, task_id, submission_id, feature):
        self.calls += 1
        raise self.exc


class TestEventLog:
    def test_round_trip(self, tmp_path):
        with EventLog(tmp_path) as log:
            log.append({"type": "a", "n": 1})
            log.append({"type": "b", "nested": {"z": 1, "a": 2}})
        records, warning = read_records(tmp_path)
        assert warning is None
        assert records == [{"type": "a", "n": 1}, {"type": "b", "nested": {"z": 1, "a": 2}}]

    def test_encoding_is_canonical(self):
        line = encode_record({"b": 1, "a": {"y": 2, "x": 3}})
        assert line == '{"a":{"x":3,"y":2},"b":1}'

    def test_missing_store_reads_empty(self, tmp_path):
        records, warning = read_records(tmp_path / "nowhere")
        assert records == [] and warning is None

    def test_truncated_tail(self, tmp_path):
        with EventLog(tmp_path) as log:
            log.append({"type": "a"})
            log.append({"type": "b"})
        path = tmp_path / "events.jsonl"
        raw = path.read_bytes()
        path.write_bytes(raw[:-5])  # cut into the final record
        records, warning = read_records(tmp_path)
        assert records == [{"type": "a"}]
        assert "truncated record at line 2" in warning

    def test_corrupt_line(self, tmp_path):
        with EventLog(tmp_path) as log:
            log.append({"type": "a"})
        with open(tmp_path / "events.jsonl", "a", encoding="utf-8") as fh:
            fh.write("{not json}\n")
        records, warning = read_records(tmp_path)
        assert records == [{"type": "a"}]
        assert "corrupt record at line 2" in warning

    def test_malformed_record(self, tmp_path):
        with open(EventLog(tmp_path).path, "w", encoding="utf-8") as fh:
            fh.write('{"no_type_key":1}\n')
        records, warning = read_records(tmp_path)
        assert records == []
        assert "malformed record at line 1" in warning


class TestCreateTask:
    def test_generates_id_when_absent(self, registry):
        platform = make_platform(registry)
        request = task_request()
        del request["task_id"]
        task, warning = platform.create_task(request, now=T0)
        assert len(task.task_id) == 12
        assert warning is None

    def test_duplicate_id_rejected(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        with pytest.raises(DuplicateTaskError):
            platform.create_task(task_request(), now=T0)

    def test_past_deadline_rejected(self, registry):
        platform = make_platform(registry)
        with pytest.raises(TaskValidationError) as err:
            platform.create_task(task_request(), now=T0 + 1000)
        assert "deadline is in the past" in err.value.violations

    def test_offline_expected_class_warns_and_drops(self, registry):
        platform = make_platform(registry)
        task, warning = platform.create_task(
            task_request(mode="OFFLINE", expected_class=1), now=T0
        )
        assert task.expected_class is None
        assert "expected_class" in warning

    def test_create_is_logged(self, registry, tmp_path):
        platform = make_platform(registry, store_dir=tmp_path)
        task, _ = platform.create_task(task_request(), now=T0)
        platform.shutdown()
        records, _ = read_records(tmp_path)
        assert records == [{"type": "create_task", "task": task.to_dict()}]


class TestSubmitOnline:
    def test_accept_and_group(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        verdict, path = platform.submit("t1", payload("s1", T0 + 10, 0))
        assert verdict.decision is Decision.ACCEPTED
        assert verdict.predicted_class == 0
        assert path == (0,)
        status = platform.status("t1")
        assert status["counters"] == {
            "received": 1,
            "accepted": 1,
            "rejected_false": 0,
            "deferred": 0,
        }
        assert status["tree"]["group_count"] == 1

    def test_wrong_class_rejected(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(expected=0), now=T0)
        verdict, path = platform.submit("t1", payload("s1", T0 + 10, 1))
        assert verdict.decision is Decision.REJECTED_FALSE
        assert verdict.reason == REASON_CLASS_MISMATCH
        assert path is None
        assert platform.tree_group_count("t1") == 0

    def test_duplicate_submission_id(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        platform.submit("t1", payload("s1", T0 + 10, 0))
        with pytest.raises(SubmissionError, match="duplicate"):
            platform.submit("t1", payload("s1", T0 + 20, 0))

    def test_capture_outside_window(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        with pytest.raises(SubmissionError, match="window"):
            platform.submit("t1", payload("s1", T0 - 1, 0))
        with pytest.raises(SubmissionError, match="window"):
            platform.submit("t1", payload("s2", T0 + 1001, 0))
        # boundaries themselves are inside
        assert platform.submit("t1", payload("s3", T0, 0))[0].decision is Decision.ACCEPTED
        assert platform.submit("t1", payload("s4", T0 + 1000, 0))[0].decision is Decision.ACCEPTED

    def test_task_id_mismatch(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        with pytest.raises(SubmissionError, match="does not match"):
            platform.submit("t1", payload("s1", T0 + 10, 0, task_id="other"))

    def test_unknown_task(self, registry):
        platform = make_platform(registry)
        with pytest.raises(UnknownTaskError):
            platform.submit("ghost", payload("s1", T0, 0, task_id="ghost"))

    def test_generates_submission_id(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        body = payload("x", T0 + 10, 0)
        del body["submission_id"]
        verdict, _ = platform.submit("t1", body)
        assert len(verdict.submission_id) == 12

    def test_submit_after_close(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        platform.close_task("t1")
        with pytest.raises(TaskClosedError):
            platform.submit("t1", payload("s1", T0 + 10, 0))

    def test_counters_stay_consistent(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        for i, class_id in enumerate([0, 1, 0, 2, 0, 3, 1, 0]):
            platform.submit("t1", payload(f"s{i}", T0 + 10 * i, class_id))
            c = platform.status("t1")["counters"]
            assert c["received"] == c["accepted"] + c["rejected_false"] + c["deferred"]
        c = platform.status("t1")["counters"]
        assert c == {"received": 8, "accepted": 4, "rejected_false": 4, "deferred": 0}


class TestPredictorFailures:
    def test_unavailable_degrades_to_rejection(self, registry, tmp_path):
        predictor = RaisingPredictor(PredictorUnavailableError("down"))
        platform = make_platform(registry, store_dir=tmp_path, predictor=predictor)
        platform.create_task(task_request(), now=T0)
        verdict, path = platform.submit("t1", payload("s1", T0 + 10, 0))
        assert verdict.decision is Decision.REJECTED_FALSE
        assert verdict.reason == REASON_PREDICTOR_UNAVAILABLE
        assert verdict.predicted_class == registry.normal.id
        assert verdict.confidence == 0.0
        assert path is None
        platform.shutdown()
        records, _ = read_records(tmp_path)
        kinds = [r["type"] for r in records]
        assert kinds == ["create_task", "submission"]
        assert records[1]["verdict"]["reason"] == REASON_PREDICTOR_UNAVAILABLE

    def test_protocol_error_propagates_unlogged(self, registry, tmp_path):
        predictor = RaisingPredictor(PredictorProtocolError("bad echo"))
        platform = make_platform(registry, store_dir=tmp_path, predictor=predictor)
        platform.create_task(task_request(), now=T0)
        with pytest.raises(PredictorProtocolError):
            platform.submit("t1", payload("s1", T0 + 10, 0))
        counters = platform.status("t1")["counters"]
        assert counters["received"] == 0
        platform.shutdown()
        records, _ = read_records(tmp_path)
        assert [r["type"] for r in records] == ["create_task"]
        # the id was never burned, so the retry goes through
        platform.predictor = ReferencePredictor(synthetic_model(registry, DIM), registry)


class TestCloseOnline:
    def test_close_groups_and_report(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        # two time clusters: {s1, s2} and {s3}
        platform.submit("t1", payload("s1", T0 + 10, 0))
        platform.submit("t1", payload("s2", T0 + 40, 0))
        platform.submit("t1", payload("s3", T0 + 900, 0))
        report = platform.close_task("t1")
        assert report.determined_class == 0
        assert report.group_sizes == (2, 1)
        assert report.representatives == ("s2", "s3")  # LAST policy default
        assert report.total_accepted == 3
        assert report.redundancy_ratio == pytest.approx(1 / 3)
        assert platform.get_task("t1").state is TaskStatus.CLOSED

    def test_close_idempotent(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        platform.submit("t1", payload("s1", T0 + 10, 0))
        first = platform.close_task("t1")
        second = platform.close_task("t1")
        assert first is second

    def test_close_empty_task(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        report = platform.close_task("t1")
        assert report.representatives == ()
        assert report.group_sizes == ()
        assert report.redundancy_ratio == 0.0

    def test_report_gate(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        with pytest.raises(ReportNotReadyError):
            platform.report("t1")
        assert platform.status("t1")["report_ready"] is False
        report = platform.close_task("t1")
        assert platform.report("t1") is report
        assert platform.status("t1")["report_ready"] is True

    def test_close_is_logged_minimal(self, registry, tmp_path):
        platform = make_platform(registry, store_dir=tmp_path)
        platform.create_task(task_request(), now=T0)
        platform.close_task("t1")
        platform.shutdown()
        records, _ = read_records(tmp_path)
        assert records[-1] == {"type": "close_task", "task_id": "t1"}

    def test_first_policy(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(representative_policy="FIRST"), now=T0)
        platform.submit("t1", payload("s1", T0 + 10, 0))
        platform.submit("t1", payload("s2", T0 + 40, 0))
        report = platform.close_task("t1")
        assert report.representatives == ("s1",)


class TestOfflineFlow:
    def test_defer_then_majority_vote(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(mode="OFFLINE"), now=T0)
        stream = [("s1", 1), ("s2", 1), ("s3", 0), ("s4", 1), ("s5", 3)]
        for i, (sid, class_id) in enumerate(stream):
            verdict, path = platform.submit("t1", payload(sid, T0 + 10 * i, class_id))
            assert verdict.decision is Decision.DEFERRED
            assert path is None
        counters = platform.status("t1")["counters"]
        assert counters["deferred"] == 5
        assert platform.status("t1")["tree"]["group_count"] == 0
        assert platform.accepted_submissions("t1") == []

        report = platform.close_task("t1")
        assert report.determined_class == 1
        assert report.no_event is False
        assert report.total_accepted == 3
        assert report.rejected_false == 2
        # all five arrived within one 300s window, so one group of survivors
        assert report.group_sizes == (3,)
        assert report.representatives == ("s4",)

        status = platform.status("t1")
        assert status["counters"] == {
            "received": 5,
            "accepted": 3,
            "rejected_false": 2,
            "deferred": 0,
        }
        by_id = {v["submission_id"]: v for v in status["verdicts"]}
        assert by_id["s3"]["reason"] == REASON_MINORITY_CLASS
        assert by_id["s5"]["reason"] == REASON_MINORITY_CLASS
        assert by_id["s1"]["decision"] == "ACCEPTED"
        # verdict feed keeps arrival order
        assert [v["submission_id"] for v in status["verdicts"]] == [s for s, _ in stream]

    def test_normal_majority_means_no_event(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(mode="OFFLINE"), now=T0)
        for i, class_id in enumerate([3, 3, 1]):
            platform.submit("t1", payload(f"s{i}", T0 + 10 * i, class_id))
        report = platform.close_task("t1")
        assert report.no_event is True
        assert report.determined_class == registry.normal.id
        assert report.representatives == ()
        assert report.total_accepted == 0
        assert report.rejected_false == 3
        reasons = {v["reason"] for v in platform.status("t1")["verdicts"]}
        assert reasons == {REASON_NO_EVENT}

    def test_empty_offline_close(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(mode="OFFLINE"), now=T0)
        report = platform.close_task("t1")
        assert report.no_event is True
        assert report.determined_class == registry.normal.id

    def test_survivors_replay_in_arrival_order(self, registry):
        # Two survivors 400s apart joined by a middle one: arrival order
        # B(200), A(0), C(400) chains into a single group, so a close that
        # replayed any other order would split it.
        platform = make_platform(registry)
        platform.create_task(task_request(mode="OFFLINE"), now=T0)
        platform.submit("t1", payload("b", T0 + 200, 1))
        platform.submit("t1", payload("a", T0 + 0, 1))
        platform.submit("t1", payload("c", T0 + 400, 1))
        report = platform.close_task("t1")
        assert report.group_sizes == (3,)
        assert [s.submission_id for s in platform.accepted_submissions("t1")] == ["b", "a", "c"]


class TestCloseDue:
    def test_only_due_tasks_close(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(task_id="early", deadline=T0 + 100), now=T0)
        platform.create_task(task_request(task_id="late", deadline=T0 + 500), now=T0)
        closed = platform.close_due(now=T0 + 100)  # deadline reached exactly
        assert closed == ["early"]
        assert platform.get_task("early").state is TaskStatus.CLOSED
        assert platform.get_task("late").state is TaskStatus.OPEN
        assert platform.close_due(now=T0 + 99) == []
        assert platform.close_due(now=T0 + 1000) == ["late"]


def snapshot(platform):
    state = {}
    for task_id in sorted(platform.task_ids()):
        state[task_id] = encode_record(platform.status(task_id))
        if platform.status(task_id)["report_ready"]:
            state[task_id + "/report"] = encode_record(platform.report(task_id).to_dict())
    return state


class TestRecovery:
    def drive(self, registry, store_dir):
        platform = make_platform(registry, store_dir=store_dir)
        platform.create_task(task_request(task_id="on"), now=T0)
        platform.create_task(task_request(task_id="off", mode="OFFLINE"), now=T0)
        for i, class_id in enumerate([0, 1, 0, 0, 2]):
            platform.submit("on", payload(f"a{i}", T0 + 50 * i, class_id, task_id="on"))
        for i, class_id in enumerate([1, 1, 3]):
            platform.submit("off", payload(f"b{i}", T0 + 40 * i, class_id, task_id="off"))
        platform.close_task("off")
        return platform

    def test_state_identical_after_recover(self, registry, tmp_path):
        original = self.drive(registry, tmp_path)
        want = snapshot(original)
        original.shutdown()

        config = ServiceConfig(store_dir=str(tmp_path))
        predictor = RaisingPredictor(AssertionError("replay must not classify"))
        recovered, warning = Platform.recover(config, registry, predictor)
        assert warning is None
        assert predictor.calls == 0
        assert snapshot(recovered) == want
        recovered.shutdown()

    def test_recover_keeps_open_past_deadline_tasks_open(self, registry, tmp_path):
        original = self.drive(registry, tmp_path)
        original.shutdown()
        config = ServiceConfig(store_dir=str(tmp_path))
        recovered, _ = Platform.recover(config, registry, predictor=None, attach_log=False)
        # "on" has deadline T0+1000, long past by wall clock; still OPEN
        assert recovered.get_task("on").state is TaskStatus.OPEN

    def test_truncated_tail_recovers_prefix(self, registry, tmp_path):
        original = self.drive(registry, tmp_path)
        original.shutdown()
        path = tmp_path / "events.jsonl"
        lines = path.read_bytes().splitlines(keepends=True)
        path.write_bytes(b"".join(lines[:-1]) + lines[-1][:-10])
        config = ServiceConfig(store_dir=str(tmp_path))
        recovered, warning = Platform.recover(config, registry, predictor=None, attach_log=False)
        assert "truncated" in warning
        # the cut line was the close; the offline task is open again
        assert recovered.get_task("off").state is TaskStatus.OPEN
        assert recovered.status("off")["counters"]["deferred"] == 3

    def test_recovered_log_keeps_appending(self, registry, tmp_path):
        original = self.drive(registry, tmp_path)
        original.shutdown()
        config = ServiceConfig(store_dir=str(tmp_path))
        predictor = ReferencePredictor(synthetic_model(registry, DIM), registry)
        recovered, _ = Platform.recover(config, registry, predictor)
        recovered.submit("on", payload("a9", T0 + 400, 0, task_id="on"))
        recovered.shutdown()
        records, warning = read_records(tmp_path)
        assert warning is None
        assert records[-1]["submission"]["submission_id"] == "a9"

    def test_unknown_record_type_fails_loud(self, registry, tmp_path):
        with EventLog(tmp_path) as log:
            log.append({"type": "mystery"})
        config = ServiceConfig(store_dir=str(tmp_path))
        with pytest.raises(RuntimeError, match="mystery"):
            Platform.recover(config, registry, predictor=None, attach_log=False)


class TestStatusSerializable:
    def test_status_is_json_clean(self, registry):
        platform = make_platform(registry)
        platform.create_task(task_request(), now=T0)
        platform.submit("t1", payload("s1", T0 + 10, 0))
        platform.close_task("t1")
        # round-trips through strict JSON without custom encoders
        parsed = json.loads(encode_record(platform.status("t1")))
        assert parsed["task"]["state"] == "CLOSED"
        assert parsed["tree"]["root"]["children"]
