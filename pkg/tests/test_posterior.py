import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import four_point_line, make_dataset, mixed_leaf_line
from isoposterior.classifiers import TrainConfig, Trainer, score
from isoposterior.errors import DomainError
from isoposterior.oracle import GaussianOracle
from isoposterior.dataset import GaussianSpec
from isoposterior.posterior import (
    CLAMPED_HIGH,
    CLAMPED_LOW,
    CONVERGED,
    DEGENERATE,
    EstimatorConfig,
    ReweightingPath,
    detect_degeneracy,
    estimate_many,
    estimate_posterior,
    find_boundary_theta,
    posterior_from_theta,
    theta_for_level,
    tree_flip_interval,
)

unit = st.floats(1e-6, 1 - 1e-6)


def _odds_oracle(theta, pi):
    # required weight ratio turned into odds, then odds / (1 + odds)
    r = ((1 - theta) * pi) / (theta * (1 - pi))
    return r / (1 + r)


class TestPosteriorFromTheta:
    @pytest.mark.parametrize("theta, pi, expected", [(0.5, 0.5, 0.5), (0.25, 0.5, 0.75), (0.75, 0.5, 0.25)])
    def test_examples(self, theta, pi, expected):
        assert posterior_from_theta(theta, pi) == pytest.approx(expected, abs=1e-15)
        assert posterior_from_theta(theta, pi) == pytest.approx(_odds_oracle(theta, pi), abs=1e-15)

    @given(unit, unit)
    def test_matches_odds_oracle(self, theta, pi):
        assert posterior_from_theta(theta, pi) == pytest.approx(_odds_oracle(theta, pi), rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("theta, pi", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0), (-1, 0.5)])
    def test_domain(self, theta, pi):
        with pytest.raises(DomainError):
            posterior_from_theta(theta, pi)

    @given(unit)
    def test_half_at_observed_proportion(self, pi):
        assert posterior_from_theta(pi, pi) == 0.5

    @given(unit, st.floats(1e-4, 0.1), unit)
    def test_decreasing_in_theta_increasing_in_pi(self, theta, d, pi):
        if theta + d < 1 - 1e-6:
            assert posterior_from_theta(theta + d, pi) < posterior_from_theta(theta, pi)
            assert posterior_from_theta(pi, theta + d) > posterior_from_theta(pi, theta)

    @given(unit)
    def test_symmetry_at_balance(self, theta):
        assert posterior_from_theta(theta, 0.5) + posterior_from_theta(1 - theta, 0.5) == pytest.approx(1.0, abs=1e-12)

    def test_vectorised(self):
        out = posterior_from_theta(np.array([0.25, 0.5, 0.75]), 0.5)
        np.testing.assert_allclose(out, [0.75, 0.5, 0.25])


class TestThetaForLevel:
    @pytest.mark.parametrize("level, pi, expected", [(0.5, 0.5, 0.5), (0.75, 0.5, 0.25)])
    def test_examples(self, level, pi, expected):
        assert theta_for_level(level, pi) == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("p", [round(0.05 * k, 2) for k in range(1, 20)])
    @pytest.mark.parametrize("pi", [0.3, 0.5, 0.8])
    def test_round_trip(self, p, pi):
        assert posterior_from_theta(theta_for_level(p, pi), pi) == pytest.approx(p, abs=1e-12)

    @given(st.floats(1e-3, 1 - 1e-3), st.floats(1e-3, 1 - 1e-3))
    def test_inverse_property(self, theta, pi):
        # the inverse loses digits as the level approaches 0 or 1
        assert theta_for_level(posterior_from_theta(theta, pi), pi) == pytest.approx(theta, rel=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            theta_for_level(1.0, 0.5)


class TestEstimatorConfig:
    def test_bracket_validated(self):
        with pytest.raises(DomainError):
            EstimatorConfig(theta_bracket=(0.0, 0.9))
        with pytest.raises(DomainError):
            EstimatorConfig(theta_bracket=(0.6, 0.4))

    def test_filtering_only_for_svm(self):
        cfg = EstimatorConfig(filter_support_vectors=True)
        assert cfg.filtering_for("svm") and not cfg.filtering_for("logreg")
        assert not EstimatorConfig().filtering_for("svm")


class TestFindBoundaryTheta:
    # symmetric under x -> -x with labels swapped
    overlap = make_dataset([-1.0, 0.5, 1.0, -0.5], [-1, -1, 1, 1])

    def test_symmetric_midpoint(self):
        res = find_boundary_theta([0.0], "logreg", self.overlap)
        assert res.status == CONVERGED
        assert res.theta_star == pytest.approx(0.5, abs=1e-4)

    def test_point_on_original_boundary(self, toy, logreg_path):
        m = logreg_path.original_model
        x = np.array([-m.intercept / m.coef[0], 0.0])
        res = find_boundary_theta(x, None, toy, path=logreg_path)
        assert res.status == CONVERGED
        assert res.theta_star == pytest.approx(toy.pi_plus, abs=1e-4)

    def test_deep_plus_region_clamps_low(self, toy, logreg_path):
        res = find_boundary_theta([8.0, 0.0], None, toy, path=logreg_path)
        assert res.status == CLAMPED_LOW and res.bracket == (0.0, 0.01)
        est = estimate_posterior([8.0, 0.0], None, toy, path=logreg_path)
        assert est.status == CLAMPED_LOW
        assert est.probability >= posterior_from_theta(0.01, toy.pi_plus)
        assert est.interval == (posterior_from_theta(0.01, toy.pi_plus), 1.0)

    def test_deep_minus_region_clamps_high(self, toy, logreg_path):
        est = estimate_posterior([-6.0, 0.0], None, toy, path=logreg_path)
        assert est.status == CLAMPED_HIGH
        assert est.interval == (0.0, posterior_from_theta(0.99, toy.pi_plus))

    def test_bracket_holds_sign_change(self, toy, logreg_path):
        x = [1.3, 0.4]
        res = find_boundary_theta(x, None, toy, path=logreg_path)
        lo, hi = res.bracket
        assert lo <= res.theta_star <= hi and hi - lo <= 1e-4
        if lo < hi:
            assert logreg_path.score(lo, x) * logreg_path.score(hi, x) <= 0

    def test_tree_rejected(self):
        with pytest.raises(DomainError):
            find_boundary_theta([0.5], "tree", four_point_line())


class TestEstimatePosterior:
    def test_balanced_probability_is_one_minus_theta(self, toy, logreg_path):
        for x in ([0.7, 0.0], [1.2, -1.0], [1.6, 2.0]):
            est = estimate_posterior(x, None, toy, path=logreg_path)
            assert est.status == CONVERGED
            assert est.probability == pytest.approx(1 - est.theta_star, abs=1e-9)

    def test_on_boundary_gives_half(self, toy, logreg_path):
        m = logreg_path.original_model
        x = np.array([-(m.intercept + m.coef[1] * 0.7) / m.coef[0], 0.7])
        assert score(m, x) == pytest.approx(0.0, abs=1e-12)
        est = estimate_posterior(x, None, toy, path=logreg_path)
        assert est.probability == pytest.approx(0.5, abs=1e-3)

    def test_logreg_close_to_bayes_posterior(self, toy, logreg_path):
        est = estimate_posterior([1.5, 0.0], None, toy, path=logreg_path)
        truth = GaussianOracle(GaussianSpec()).true_posterior([1.5, 0.0])
        assert truth == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)
        assert abs(est.probability - truth) <= 0.05

    def test_svm_close_to_bayes_posterior(self, toy, svm_path):
        est = estimate_posterior([1.5, 0.0], None, toy, path=svm_path)
        assert abs(est.probability - 1 / (1 + math.exp(-1))) <= 0.08

    def test_to_dict_is_plain(self, toy, logreg_path):
        d = estimate_posterior([1.0, 0.0], None, toy, path=logreg_path).to_dict()
        assert set(d) >= {"probability", "theta_star", "status", "all_roots", "bracket", "interval"}
        assert isinstance(d["all_roots"], list)

    def test_estimate_many_parallel_matches_serial(self, toy, logreg_path):
        pts = [[0.5, 0.0], [1.0, 1.0], [1.5, -1.0], [2.0, 0.5]]
        serial = estimate_many(pts, None, toy, path=logreg_path)
        parallel = estimate_many(pts, None, toy, path=logreg_path, jobs=3)
        assert [e.probability for e in serial] == [e.probability for e in parallel]

    def test_string_trainer(self, small_toy):
        est = estimate_posterior([1.0, 0.0], "logreg", small_toy)
        assert 0 < est.probability < 1


class TestDegeneracy:
    def test_monotone_case_single_root(self, toy, logreg_path):
        assert len(detect_degeneracy([1.4, 0.3], None, toy, path=logreg_path)) == 1

    def test_deep_point_no_root(self, toy, logreg_path):
        assert detect_degeneracy([9.0, 0.0], None, toy, path=logreg_path) == []

    def test_crossing_boundaries(self, rotating):
        ds, x = rotating
        path = ReweightingPath(ds, Trainer("logreg"))
        roots = detect_degeneracy(x, None, ds, path=path)
        assert len(roots) >= 2
        assert np.all(np.diff(roots) > 0)
        # the construction crosses the theta = 1/3 and theta = 1/2 boundaries at x
        assert min(abs(r - 1 / 3) for r in roots) <= 1e-4
        assert min(abs(r - 0.5) for r in roots) <= 1e-4
        est = estimate_posterior(x, None, ds, path=path)
        assert est.status == DEGENERATE
        assert len(est.all_roots) == len(est.candidates) >= 2
        # primary value uses the root nearest the observed proportion
        assert est.theta_star == pytest.approx(0.5, abs=1e-4)


class TestTreeFlipInterval:
    cfg = TrainConfig(tree_ccp_alpha=0.25)

    def _path(self, ds, cfg):
        return ReweightingPath(ds, Trainer("tree", cfg))

    def test_four_point_left_leaf(self):
        # root split survives pruning while min(theta, 1 - theta) > 0.25;
        # beyond theta = 3/4 the single root leaf predicts "+"
        ds = four_point_line()
        est = tree_flip_interval([0.5], ds, path=self._path(ds, self.cfg))
        lo, hi = est.bracket
        assert est.status == CONVERGED and hi - lo <= 1e-4
        assert lo <= 0.75 <= hi
        p_lo, p_hi = est.interval
        assert p_lo <= posterior_from_theta(0.75, 0.5) == 0.25 <= p_hi

    def test_four_point_right_leaf(self):
        ds = four_point_line()
        est = tree_flip_interval([2.5], ds, path=self._path(ds, self.cfg))
        lo, hi = est.bracket
        assert lo <= 0.25 <= hi and hi - lo <= 1e-4
        assert est.interval[0] <= 0.75 <= est.interval[1]

    def test_mixed_leaf_flip(self):
        ds = mixed_leaf_line()
        cfg = TrainConfig(tree_ccp_alpha=0.0, tree_min_leaf_weight=1e-9)
        est = tree_flip_interval([1.0], ds, path=self._path(ds, cfg))
        lo, hi = est.bracket
        assert lo <= 4 / 7 <= hi and hi - lo <= 1e-4

    def test_constant_label_is_one_sided(self):
        ds = four_point_line()
        cfg = TrainConfig(tree_ccp_alpha=0.0)
        est = tree_flip_interval([3.0], ds, EstimatorConfig(theta_bracket=(0.3, 0.7)), path=None,
                                 trainer=Trainer("tree", cfg))
        assert est.status == CLAMPED_LOW
        assert est.interval == (posterior_from_theta(0.3, 0.5), 1.0)
        assert est.probability >= posterior_from_theta(0.7, 0.5)

    def test_estimate_posterior_delegates(self):
        ds = four_point_line()
        path = self._path(ds, self.cfg)
        a = estimate_posterior([0.5], None, ds, path=path)
        b = tree_flip_interval([0.5], ds, path=path)
        assert a == b


class TestReweightingPath:
    def test_original_model_at_observed_proportion(self, toy, logreg_path):
        m0 = logreg_path.original_model
        m = logreg_path.model(toy.pi_plus)
        np.testing.assert_allclose(m.coef, m0.coef, rtol=1e-12)

    def test_filtered_path_uses_support_vector_proportion(self, small_toy):
        path = ReweightingPath(small_toy, Trainer("svm"), EstimatorConfig(filter_support_vectors=True))
        assert path.filtered and len(path.dataset) < len(small_toy)
        assert path.pi_plus == path.dataset.pi_plus

    def test_memoised(self, small_toy):
        path = ReweightingPath(small_toy, Trainer("logreg"))
        assert path.model(0.3) is path.model(0.3)
