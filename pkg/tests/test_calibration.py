import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoposterior.calibration import (
    CalibrationTable,
    MonotoneMap,
    build_calibration_table,
    evaluate_map,
    isotonic_fit,
)
from isoposterior.classifiers import Trainer
from isoposterior.errors import DomainError
from isoposterior.isocurves import IsoCurveSet, sweep_isocurves
from isoposterior.posterior import ReweightingPath, estimate_posterior

# hand-traced pool-adjacent-violators fixtures: (scores, probabilities, weights, fitted)
PAV_FIXTURES = [
    # already monotone: fixed point
    ([1, 2, 3], [0.1, 0.4, 0.9], None, [0.1, 0.4, 0.9]),
    # one violating pair pools to its mean
    ([1, 2], [0.8, 0.6], None, [0.7, 0.7]),
    # weighted pool: (3*0.9 + 1*0.1) / 4 = 0.7
    ([1, 2, 3], [0.2, 0.9, 0.1], [1, 3, 1], [0.2, 0.7, 0.7]),
    # cascading pools: 0.5 | 0.4 -> 0.45, then 0.3 -> 0.4 over three
    ([1, 2, 3, 4], [0.5, 0.4, 0.3, 0.8], None, [0.4, 0.4, 0.4, 0.8]),
    # tied scores merged first: (0.2 + 0.6) / 2 = 0.4 at score 2, then 0.5 > 0.4 pools
    ([1, 2, 2, 3], [0.5, 0.2, 0.6, 0.9], None, [13 / 30, 13 / 30, 0.9]),
]


class TestIsotonicFit:
    @pytest.mark.parametrize("s, p, w, fitted", PAV_FIXTURES)
    def test_hand_traced(self, s, p, w, fitted):
        m = isotonic_fit(s, p, w)
        np.testing.assert_allclose(m.values, fitted, atol=1e-15)
        np.testing.assert_array_equal(m.breakpoints, np.unique(s))

    def test_unsorted_input(self):
        m = isotonic_fit([2, 1], [0.6, 0.8])
        np.testing.assert_allclose(m.values, [0.7, 0.7])

    def test_single_pair_constant(self):
        m = isotonic_fit([0.3], [0.42])
        assert evaluate_map(m, -5) == evaluate_map(m, 5) == 0.42

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            isotonic_fit([], [])

    def test_bad_weights(self):
        with pytest.raises(DomainError):
            isotonic_fit([1, 2], [0.1, 0.2], [1, 0])

    @given(st.lists(st.tuples(st.integers(-20, 20), st.floats(0, 1), st.floats(0.1, 10)), min_size=1, max_size=40))
    def test_properties(self, rows):
        s = np.array([r[0] for r in rows], float)
        p = np.array([r[1] for r in rows])
        w = np.array([r[2] for r in rows])
        m = isotonic_fit(s, p, w)
        assert np.all(np.diff(m.values) >= 0)
        # weighted mean is conserved
        assert float(m.weights @ m.values) == pytest.approx(float(w @ p), rel=1e-12, abs=1e-12)
        # idempotent
        again = isotonic_fit(m.breakpoints, m.values, m.weights)
        np.testing.assert_allclose(again.values, m.values, atol=1e-12)

    @given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0, 1)), min_size=2, max_size=25))
    def test_no_better_monotone_fit_nearby(self, rows):
        s = np.array([r[0] for r in rows])
        p = np.array([r[1] for r in rows])
        m = isotonic_fit(s, p)
        fitted = evaluate_map(m, s)
        sse = np.sum((fitted - p) ** 2)
        # nudging one block in either direction while staying monotone never helps
        for k in range(len(m.values)):
            for d in (-1e-3, 1e-3):
                v = m.values.copy()
                v[k] += d
                if np.all(np.diff(v) >= 0):
                    alt = np.interp(s, m.breakpoints, v)
                    assert np.sum((alt - p) ** 2) >= sse - 1e-12


class TestEvaluateMap:
    m = MonotoneMap(np.array([0.0, 1.0]), np.array([0.2, 0.4]))

    def test_clamp(self):
        assert evaluate_map(self.m, -3) == 0.2 and evaluate_map(self.m, 9) == 0.4

    def test_breakpoint_exact(self):
        assert evaluate_map(self.m, 1.0) == 0.4

    def test_midpoint(self):
        assert evaluate_map(self.m, 0.5) == pytest.approx(0.3, abs=1e-15)

    @given(st.floats(-10, 10), st.floats(0, 5))
    def test_nondecreasing(self, a, d):
        m = isotonic_fit([0, 1, 2, 3], [0.1, 0.5, 0.3, 0.9])
        assert evaluate_map(m, a + d) >= evaluate_map(m, a)

    def test_invalid_maps(self):
        with pytest.raises(DomainError):
            MonotoneMap(np.array([1.0, 0.0]), np.array([0.1, 0.2]))
        with pytest.raises(DomainError):
            MonotoneMap(np.array([0.0, 1.0]), np.array([0.3, 0.2]))


@pytest.fixture(scope="module")
def logreg_table(toy, logreg_path):
    curves = sweep_isocurves(toy, None, path=logreg_path)
    return build_calibration_table(logreg_path.original_model, curves)


class TestCalibrationTable:
    def test_nineteen_rows(self, logreg_table):
        assert len(logreg_table) == 19 and logreg_table.resolution == pytest.approx(0.05)

    def test_half_level_scores_zero(self, logreg_table):
        k = int(np.flatnonzero(np.isclose(logreg_table.probabilities, 0.5))[0])
        # the 0.5 curve is the original linear boundary and interpolation is exact for it
        assert abs(logreg_table.scores[k]) <= 1e-9

    def test_strictly_increasing_for_logreg(self, logreg_table):
        assert np.all(np.diff(logreg_table.scores) > 0)

    def test_csv(self, logreg_table):
        lines = logreg_table.to_csv().splitlines()
        assert lines[0] == "score,probability" and len(lines) == 20

    def test_svg(self, logreg_table):
        import xml.etree.ElementTree as ET

        ET.fromstring(logreg_table.to_svg())

    def test_tree_rejected(self, small_toy):
        model = Trainer("tree")(small_toy)
        with pytest.raises(DomainError):
            build_calibration_table(model, IsoCurveSet([0.5], [[]], [0.5], 0.5, "tree"))

    def test_empty_level_omitted(self, logreg_path):
        m = logreg_path.original_model
        curves = IsoCurveSet([0.4, 0.5], [[], [np.array([[1.0, 0.0], [1.0, 1.0]])]], [0.6, 0.5], 0.5, "logreg")
        t = build_calibration_table(m, curves)
        assert len(t) == 1 and t.omitted == (0.4,)

    def test_finite_entries(self):
        with pytest.raises(DomainError):
            CalibrationTable(np.array([np.nan]), np.array([0.5]), ("theta",), 0.05)


class TestDegeneracyRemedy:
    def test_candidates_calibrate_to_single_value(self, rotating):
        ds, x = rotating
        path = ReweightingPath(ds, Trainer("logreg"))
        est = estimate_posterior(x, None, ds, path=path)
        assert len(est.candidates) >= 2
        s = float(path.original_model.decision_function(np.atleast_2d(x))[0])
        m = isotonic_fit([s] * len(est.candidates), est.candidates)
        assert len(m.breakpoints) == 1
        assert evaluate_map(m, s) == pytest.approx(np.mean(est.candidates))
