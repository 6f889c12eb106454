import json
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radarfuse.boxes import CLASSES
from radarfuse.detector import Detection
from radarfuse.metrics import AREA_EDGES, GroundTruthBox, evaluate, iou, match_detections


def res(fid, dets):
    return SimpleNamespace(frame_id=fid, detections=tuple(dets), n_rois=0)


def test_iou_examples():
    a = GroundTruthBox(0, 0, 10, 10, "car")
    assert iou(a, a) == 1.0
    assert iou(a, GroundTruthBox(20, 20, 30, 30, "car")) == 0.0
    assert iou(a, GroundTruthBox(5, 0, 15, 10, "car")) == pytest.approx(50 / 150)
    assert iou(a, GroundTruthBox(10, 0, 20, 10, "car")) == 0.0  # touching edges


def test_perfect_single_match():
    gt = GroundTruthBox(10, 10, 50, 50, "car")
    det = Detection(10, 10, 50, 50, "car", 0.9)
    assert match_detections([det], [gt], 0.4) == [(0, 0)]
    m = evaluate([res(0, [det])], {0: [gt]})
    assert (m.true_positives, m.false_positives, m.false_negatives) == (1, 0, 0)


def test_class_mismatch():
    gt = GroundTruthBox(10, 10, 50, 50, "car")
    det = Detection(10, 10, 50, 50, "bus", 0.9)
    assert match_detections([det], [gt], 0.4) == [(0, None)]
    m = evaluate([res(0, [det])], {0: [gt]})
    assert (m.true_positives, m.false_positives, m.false_negatives) == (0, 1, 1)


def test_duplicate_detection_counts_as_false_positive():
    gt = GroundTruthBox(10, 10, 50, 50, "car")
    dets = [Detection(10, 10, 50, 50, "car", 0.9), Detection(11, 10, 50, 50, "car", 0.8)]
    m = evaluate([res(0, dets)], {0: [gt]})
    assert (m.true_positives, m.false_positives, m.false_negatives) == (1, 1, 0)


def test_occluded_excluded_from_tp_and_fn():
    gts = [GroundTruthBox(10, 10, 50, 50, "car", occluded=True), GroundTruthBox(100, 10, 150, 50, "car")]
    det = Detection(10, 10, 50, 50, "car", 0.9)
    assert match_detections([det], gts, 0.4) == [(0, None)]
    m = evaluate([res(0, [det])], {0: gts})
    assert (m.true_positives, m.false_positives, m.false_negatives) == (0, 1, 1)


def _oracle_match(dets, gts, thr):
    """Step-by-step greedy: at each step pick the highest-scoring unvisited det
    (lowest index on ties), enumerate its admissible ground truths, take the
    best IoU (lowest index on ties)."""
    def inter_union(d, g):
        w = max(0.0, min(d.x1, g.x1) - max(d.x0, g.x0))
        h = max(0.0, min(d.y1, g.y1) - max(d.y0, g.y0))
        i = w * h
        return i / ((d.x1 - d.x0) * (d.y1 - d.y0) + (g.x1 - g.x0) * (g.y1 - g.y0) - i)

    unvisited = set(range(len(dets)))
    used = {j for j, g in enumerate(gts) if g.occluded}
    result = {}
    while unvisited:
        top = max(dets[i].score for i in unvisited)
        i = min(k for k in unvisited if dets[k].score == top)
        unvisited.remove(i)
        cands = [(inter_union(dets[i], g), j) for j, g in enumerate(gts)
                 if j not in used and g.class_id == dets[i].class_id]
        cands = [(v, j) for v, j in cands if v >= thr]
        if cands:
            best_v = max(v for v, _ in cands)
            j = min(j for v, j in cands if v == best_v)
            used.add(j)
            result[i] = j
        else:
            result[i] = None
    return [(i, result[i]) for i in range(len(dets))]


def random_instance(rng, n_det=8, n_gt=6, n_classes=2):
    gts, dets = [], []
    for _ in range(n_gt):
        x0, y0 = rng.uniform(0, 50, 2)
        w, h = rng.uniform(10, 40, 2)
        gts.append(GroundTruthBox(x0, y0, x0 + w, y0 + h, CLASSES[int(rng.integers(n_classes))],
                                  bool(rng.random() < 0.15)))
    for _ in range(n_det):
        if gts and rng.random() < 0.7:
            g = gts[int(rng.integers(len(gts)))]
            jit = rng.normal(0, 4, 4)
            x0, y0 = g.x0 + jit[0], g.y0 + jit[1]
            x1, y1 = max(x0 + 1, g.x1 + jit[2]), max(y0 + 1, g.y1 + jit[3])
        else:
            x0, y0 = rng.uniform(0, 50, 2)
            x1, y1 = x0 + rng.uniform(5, 40), y0 + rng.uniform(5, 40)
        dets.append(Detection(x0, y0, x1, y1, CLASSES[int(rng.integers(n_classes))],
                              float(rng.choice([0.3, 0.6, 0.9])) if rng.random() < 0.5 else float(rng.random())))
    return dets, gts


@pytest.mark.parametrize("seed", range(25))
def test_matching_equals_oracle(seed):
    rng = np.random.default_rng(seed)
    dets, gts = random_instance(rng)
    for thr in (0.1, 0.4, 0.7):
        assert match_detections(dets, gts, thr) == _oracle_match(dets, gts, thr)


def test_perfect_and_null_detector():
    gts = {0: [GroundTruthBox(0, 0, 10, 10, "car"), GroundTruthBox(20, 20, 40, 40, "bus")],
           1: [GroundTruthBox(5, 5, 50, 50, "pedestrian")]}
    perfect = [res(f, [Detection(g.x0, g.y0, g.x1, g.y1, g.class_id, 0.9) for g in gs]) for f, gs in gts.items()]
    m = evaluate(perfect, gts)
    assert (m.recall, m.precision, m.false_negatives) == (1.0, 1.0, 0)
    null = evaluate([res(0, []), res(1, [])], gts)
    assert null.recall == 0.0 and null.false_negatives == 3
    assert null.per_frame_recall == [0.0, 0.0]


def test_mismatched_frames_raise():
    with pytest.raises(ValueError):
        evaluate([res(0, [])], {1: []})
    with pytest.raises(ValueError):
        evaluate([res(0, []), res(0, [])], {0: []})


def test_recount_oracle_over_random_run():
    rng = np.random.default_rng(7)
    results, gts = [], {}
    for fid in range(20):
        dets, g = random_instance(rng)
        results.append(res(fid, dets))
        gts[fid] = g
    m = evaluate(results, gts, 0.4)
    tp = fn = fp = 0
    for r in results:
        pairs = match_detections(r.detections, gts[r.frame_id], 0.4)
        hit = sum(1 for _, j in pairs if j is not None)
        tp += hit
        fp += len(pairs) - hit
        fn += sum(1 for x in gts[r.frame_id] if not x.occluded) - hit
    assert (m.true_positives, m.false_positives, m.false_negatives) == (tp, fp, fn)
    assert m.recall == tp / (tp + fn)
    assert m.precision == tp / (tp + fp)


def test_area_buckets():
    assert len(AREA_EDGES) == 9
    assert AREA_EDGES[0] == pytest.approx(10 ** 1.5) and AREA_EDGES[-1] == pytest.approx(1e5)
    gts = {0: [GroundTruthBox(0, 0, 10, 10, "car"),  # 100
               GroundTruthBox(0, 0, 30, 30, "car"),  # 900
               GroundTruthBox(0, 0, 400, 300, "bus")]}  # 120000
    dets = [Detection(0, 0, 10, 10, "car", 0.9), Detection(0, 0, 400, 300, "bus", 0.9)]
    m = evaluate([res(0, dets)], gts)
    assert (m.small_tp, m.small_gt, m.large_tp, m.large_gt) == (1, 2, 1, 1)
    assert sum(b.ground_truth for b in m.tp_by_area_bucket) == 3
    assert sum(b.true_positives for b in m.tp_by_area_bucket) == 2
    assert m.tp_by_area_bucket[-1].hi is None
    json.loads(m.to_json())


instances = st.integers(0, 2**32 - 1).map(lambda s: random_instance(np.random.default_rng(s)))


@settings(max_examples=200)
@given(instances, st.floats(0.05, 1.0))
def test_tp_plus_fn_is_visible_gt(inst, thr):
    dets, gts = inst
    m = evaluate([res(0, dets)], {0: gts}, thr)
    assert m.true_positives + m.false_negatives == sum(1 for g in gts if not g.occluded)
    assert 0 <= m.recall <= 1 and 0 <= m.precision <= 1


@settings(max_examples=300)
@given(instances, st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_raising_threshold_never_increases_tp(inst, t1, t2):
    dets, gts = inst
    lo, hi = sorted((t1, t2))
    a = evaluate([res(0, dets)], {0: gts}, lo).true_positives
    b = evaluate([res(0, dets)], {0: gts}, hi).true_positives
    assert b <= a


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.permutations(range(6)))
def test_frame_permutation_invariance(seed, perm):
    rng = np.random.default_rng(seed)
    results, gts = [], {}
    for fid in range(6):
        dets, g = random_instance(rng)
        results.append(res(fid, dets))
        gts[fid] = g
    m = evaluate(results, gts)
    mp = evaluate([results[i] for i in perm], gts)
    assert (m.recall, m.precision) == (mp.recall, mp.precision)
    assert mp.per_frame_recall == [m.per_frame_recall[i] for i in perm]
