import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdreport.model import ConstraintLayerSpec, LayerKind
from crowdreport.tree import ConstraintTree, TreeClosedError

from helpers import block, chain_sets, descriptor_set, make_submission

TIME300 = ConstraintLayerSpec(LayerKind.TIME, 300)
POS500M = ConstraintLayerSpec(LayerKind.POSITION, 0.5)
VIS10 = ConstraintLayerSpec(LayerKind.VISUAL, 10)


def visual_tree(task_id="t1"):
    return ConstraintTree(task_id, (VIS10,))


def triple():
    """Submissions with A~B, B~C, A!~C on the visual layer."""
    a_kp, b_kp, c_kp = chain_sets(3)
    a = make_submission("A", keypoints=a_kp)
    b = make_submission("B", keypoints=b_kp)
    c = make_submission("C", keypoints=c_kp)
    return a, b, c


class TestInsert:
    def test_first_submission_grows_full_path(self):
        tree = ConstraintTree("t1", (TIME300, POS500M, VIS10))
        sub = make_submission("s1", keypoints=descriptor_set(block(0.0)))
        path = tree.insert(sub)
        assert path == (0, 0, 0)
        assert tree.group_count == 1
        assert tree.leaf_groups()[0].members == ["s1"]
        node = tree.root
        for depth in (1, 2, 3):
            assert len(node.children) == 1
            node = node.children[0]
            assert node.layer_index == depth
            assert node.anchor.submission_id == "s1"

    def test_stream_order_changes_grouping(self):
        a, b, c = triple()

        forward = visual_tree()
        for sub in (a, b, c):
            forward.insert(sub)
        assert [g.members for g in forward.leaf_groups()] == [["A", "B"], ["C"]]

        reordered = visual_tree()
        for sub in (b, a, c):
            reordered.insert(sub)
        assert [g.members for g in reordered.leaf_groups()] == [["B", "A", "C"]]

    def test_time_redundancy_kept_across_window(self):
        # Same place, matching descriptors, 400 s apart: distinct groups.
        kp = descriptor_set(block(0.0))
        tree = ConstraintTree("t1", (TIME300, POS500M, VIS10))
        tree.insert(make_submission("s1", t=1000, keypoints=kp))
        tree.insert(make_submission("s2", t=1400, keypoints=kp))
        assert tree.group_count == 2

    def test_boundary_timestamp_joins(self):
        tree = ConstraintTree("t1", (TIME300,))
        tree.insert(make_submission("s1", t=1000))
        tree.insert(make_submission("s2", t=1300))
        assert tree.group_count == 1

    def test_best_match_prefers_smaller_distance(self):
        tree = ConstraintTree("t1", (ConstraintLayerSpec(LayerKind.TIME, 100),))
        tree.insert(make_submission("a1", t=0))
        tree.insert(make_submission("a2", t=150))  # separate branch (150 > 100)
        tree.insert(make_submission("s", t=80))  # 80 from a1, 70 from a2
        groups = {tuple(g.members) for g in tree.leaf_groups()}
        assert groups == {("a1",), ("a2", "s")}

    def test_best_match_tie_goes_to_oldest(self):
        tree = ConstraintTree("t1", (ConstraintLayerSpec(LayerKind.TIME, 100),))
        tree.insert(make_submission("a1", t=0))
        tree.insert(make_submission("a2", t=150))
        tree.insert(make_submission("s", t=75))  # exactly 75 from both
        groups = {tuple(g.members) for g in tree.leaf_groups()}
        assert groups == {("a1", "s"), ("a2",)}

    def test_visual_best_match_is_most_matches(self):
        shared_p = block(0.0, 10)
        shared_q = block(2.0e5, 15)
        s = make_submission("s", keypoints=descriptor_set(shared_p + shared_q))
        x = make_submission("x", keypoints=descriptor_set([v + 0.01 for v in shared_p] + block(4.0e5, 5)))
        y = make_submission("y", keypoints=descriptor_set([v + 0.01 for v in shared_q] + block(6.0e5, 5)))
        tree = visual_tree()
        tree.insert(x)
        tree.insert(y)
        tree.insert(s)  # matches x with 10, y with 15
        groups = {tuple(g.members) for g in tree.leaf_groups()}
        assert groups == {("x",), ("y", "s")}

    def test_closed_tree_rejects_insert(self):
        tree = visual_tree()
        tree.close()
        with pytest.raises(TreeClosedError):
            tree.insert(make_submission("s1"))

    def test_foreign_task_rejected(self):
        tree = visual_tree("t1")
        with pytest.raises(ValueError, match="belongs"):
            tree.insert(make_submission("s1", task_id="other"))

    def test_needs_at_least_one_layer(self):
        with pytest.raises(ValueError):
            ConstraintTree("t1", ())


class TestHandover:
    def test_empty_tree(self):
        result = visual_tree().handover("LAST")
        assert result.representatives == ()
        assert result.redundancy_ratio == 0.0

    def test_last_policy(self):
        a, b, c = triple()
        tree = visual_tree()
        for sub in (a, b, c):
            tree.insert(sub)
        result = tree.handover("LAST")
        assert result.representatives == ("B", "C")
        assert result.group_sizes == (2, 1)
        assert result.redundancy_ratio == (3 - 2) / 3

    def test_first_policy_keeps_only_b(self):
        a, b, c = triple()
        tree = visual_tree()
        for sub in (b, a, c):
            tree.insert(sub)
        result = tree.handover("FIRST")
        assert result.representatives == ("B",)
        assert result.redundancy_ratio == 2 / 3


class TestSnapshot:
    def test_structure(self):
        a, b, c = triple()
        tree = visual_tree()
        for sub in (a, b, c):
            tree.insert(sub)
        snap = tree.snapshot()
        assert snap["task_id"] == "t1"
        assert snap["depth"] == 1 and snap["size"] == 3 and snap["group_count"] == 2
        root = snap["root"]
        assert root["layer_index"] == 0 and root["anchor"] is None
        anchors = [child["anchor"] for child in root["children"]]
        assert anchors == ["A", "C"]
        leaf = root["children"][0]["children"][0]
        assert leaf == {"layer_index": 2, "members": ["A", "B"]}

    def test_replay_is_identical(self):
        a, b, c = triple()
        one, two = visual_tree(), visual_tree()
        for tree in (one, two):
            for sub in (a, b, c):
                tree.insert(sub)
        assert json.dumps(one.snapshot(), sort_keys=True) == json.dumps(two.snapshot(), sort_keys=True)
        assert one.insertion_log == two.insertion_log


times = st.lists(st.integers(min_value=0, max_value=5000), min_size=1, max_size=30)


class TestProperties:
    @given(times, st.integers(min_value=1, max_value=1000))
    @settings(max_examples=80)
    def test_completeness(self, stamps, tau):
        tree = ConstraintTree("t1", (ConstraintLayerSpec(LayerKind.TIME, tau),))
        for i, t in enumerate(stamps):
            tree.insert(make_submission(f"s{i}", t=t))
        groups = tree.leaf_groups()
        assert sum(len(g) for g in groups) == len(stamps)
        assert len(tree.insertion_log) == len(stamps)
        all_ids = [m for g in groups for m in g.members]
        assert sorted(all_ids) == sorted(f"s{i}" for i in range(len(stamps)))

    @given(times, st.integers(min_value=1, max_value=1000))
    @settings(max_examples=80)
    def test_anchor_independence_single_layer(self, stamps, tau):
        tree = ConstraintTree("t1", (ConstraintLayerSpec(LayerKind.TIME, tau),))
        for i, t in enumerate(stamps):
            tree.insert(make_submission(f"s{i}", t=t))
        anchors = [child.anchor.captured_at for child in tree.root.children]
        for i in range(len(anchors)):
            for j in range(i + 1, len(anchors)):
                assert abs(anchors[i] - anchors[j]) > tau
