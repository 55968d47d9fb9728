import numpy as np
import pytest

from bruteforce import brute_clear, brute_hota, brute_idf1
from helpers import random_tables
from zsmat.errors import ValidationError
from zsmat.geometry import BBox
from zsmat.metrics import ALPHAS, SequenceEval, aggregate, evaluate


def perfect_tables(n_objects=3, n_frames=10):
    gt = {}
    for f in range(n_frames):
        gt[f] = [(o, BBox(5 + 10 * o + f, 5 + 3 * o, 8, 8)) for o in range(n_objects)]
    pred = {f: [(o + 50, b) for o, b in rows] for f, rows in gt.items()}
    return gt, pred


class TestLimits:
    def test_perfect_tracking(self):
        gt, pred = perfect_tables()
        r = evaluate(gt, pred)
        assert r.hota == 1.0
        assert r.deta == 1.0
        assert r.assa == 1.0
        assert r.loca == 1.0
        assert r.idf1 == 1.0
        assert r.mota == 1.0
        assert r.idsw == 0

    def test_empty_prediction(self):
        gt, _ = perfect_tables()
        r = evaluate(gt, {})
        assert r.deta == 0.0
        assert r.hota == 0.0
        assert r.idf1 == 0.0
        assert r.idsw == 0

    def test_duplicate_pred_id_rejected(self):
        gt, pred = perfect_tables()
        pred[0] = pred[0] + [pred[0][0]]
        with pytest.raises(ValidationError):
            evaluate(gt, pred)

    def test_hota_is_geometric_mean(self):
        rng = np.random.default_rng(0)
        gt, pred = random_tables(rng)
        from zsmat.metrics import _dense_ids, _evaluate_hota  # white box

        # recompute per-alpha arrays and check the definitional identity
        frames = sorted(set(gt) | set(pred))
        gm, pm = _dense_ids(gt), _dense_ids(pred)
        per_frame = []
        from zsmat.association import iou

        for f in frames:
            g_rows, p_rows = list(gt.get(f, ())), list(pred.get(f, ()))
            g_ids = np.array([gm[t] for t, _ in g_rows], dtype=int)
            p_ids = np.array([pm[t] for t, _ in p_rows], dtype=int)
            sim = np.array([[iou(gb, pb) for _, pb in p_rows] for _, gb in g_rows]).reshape(
                len(g_rows), len(p_rows)
            )
            per_frame.append((g_ids, p_ids, sim))
        res = _evaluate_hota(per_frame, len(gm), len(pm), np.asarray(ALPHAS))
        assert np.allclose(res["hota"], np.sqrt(res["deta"] * res["assa"]), atol=1e-9)


class TestOracleEquivalence:
    def test_identity_swap_scenario(self):
        rng = np.random.default_rng(50)
        gt, pred = random_tables(rng, n_objects=2, n_frames=100, drop=0.0, swap_frame=50)
        r = evaluate(gt, pred)
        oracle = brute_hota(gt, pred, ALPHAS)
        assert r.assa == pytest.approx(oracle["assa"], abs=1e-6)
        _, idsw = brute_clear(gt, pred)
        assert r.idsw == idsw
        assert r.idsw >= 2  # both identities flip at the swap point

    def test_mini_scenarios_match_bruteforce(self):
        rng = np.random.default_rng(123)
        for trial in range(50):
            n_objects = int(rng.integers(1, 5))
            n_frames = int(rng.integers(2, 31))
            gt, pred = random_tables(
                rng,
                n_objects=n_objects,
                n_frames=n_frames,
                drop=float(rng.uniform(0.0, 0.3)),
                swap_frame=int(rng.integers(1, n_frames)) if rng.random() < 0.3 else None,
            )
            r = evaluate(gt, pred)
            oracle = brute_hota(gt, pred, ALPHAS)
            assert r.hota == pytest.approx(oracle["hota"], abs=1e-6), f"trial {trial}"
            assert r.deta == pytest.approx(oracle["deta"], abs=1e-6)
            assert r.assa == pytest.approx(oracle["assa"], abs=1e-6)
            assert r.detre == pytest.approx(oracle["detre"], abs=1e-6)
            assert r.loca == pytest.approx(oracle["loca"], abs=1e-6)
            mota, idsw = brute_clear(gt, pred)
            assert r.mota == pytest.approx(mota, abs=1e-6)
            assert r.idsw == idsw
            assert r.idf1 == pytest.approx(brute_idf1(gt, pred), abs=1e-6)


class TestProperties:
    def test_metric_ranges(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            gt, pred = random_tables(rng, n_objects=3, n_frames=15, drop=0.2)
            r = evaluate(gt, pred)
            for name in ("hota", "deta", "assa", "detre", "loca", "idf1"):
                v = getattr(r, name)
                assert 0.0 <= v <= 1.0, name
            assert r.idsw >= 0

    def test_removing_fp_only_track_never_decreases_deta(self):
        rng = np.random.default_rng(88)
        gt, pred = random_tables(rng, n_objects=3, n_frames=15, drop=0.1)
        # add a pure false-positive track far away from everything
        for f in gt:
            pred[f] = list(pred[f]) + [(555, BBox(200 + f, 200, 5, 5))]
        with_fp = evaluate(gt, pred)
        without = evaluate(gt, {f: [r for r in rows if r[0] != 555] for f, rows in pred.items()})
        assert without.deta >= with_fp.deta

    def test_alpha_consistency(self):
        rng = np.random.default_rng(99)
        gt, pred = random_tables(rng)
        low = evaluate(gt, pred, alphas=[0.05])
        high = evaluate(gt, pred, alphas=[0.95])
        assert low.deta >= high.deta


class TestAggregate:
    def seq(self, **kw):
        base = dict(hota=0.5, deta=0.5, assa=0.5, detre=0.5, loca=0.5, mota=0.5, idf1=0.5, idsw=1)
        base.update(kw)
        return SequenceEval(**base)

    def test_single_sequence_identity(self):
        s = self.seq(hota=0.7, idsw=3)
        assert aggregate([s], [100]) == s

    def test_equal_weights_is_mean(self):
        a, b = self.seq(hota=0.4), self.seq(hota=0.8)
        pooled = aggregate([a, b], [50, 50])
        assert pooled.hota == pytest.approx(0.6)
        assert pooled.idsw == 2

    def test_weighting_pulls_toward_larger_sequence(self):
        a, b = self.seq(hota=0.4), self.seq(hota=0.8)
        pooled = aggregate([a, b], [10, 100])
        # pooled-count arithmetic: (10*0.4 + 100*0.8) / 110
        assert pooled.hota == pytest.approx((10 * 0.4 + 100 * 0.8) / 110)
        assert abs(pooled.hota - 0.8) < abs(pooled.hota - 0.4)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([], [])
