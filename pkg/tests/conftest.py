"""Shared datasets and builders for the test suite."""

import numpy as np
import pytest

from isoposterior.classifiers import Trainer
from isoposterior.dataset import GaussianSpec, LabeledDataset, derive_class_weights, gen_gaussian
from isoposterior.posterior import ReweightingPath


def make_dataset(points, labels, weights=None):
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return LabeledDataset(X, np.asarray(labels, dtype=int), None if weights is None else np.asarray(weights, float))


def four_point_line():
    """x = 0, 1, 2, 3 labelled -, -, +, +."""
    return make_dataset([0, 1, 2, 3], [-1, -1, 1, 1])


def mixed_leaf_line():
    """A 1-D set whose grown tree has one mixed leaf {x=1: -, -, +}.

    Unweighted, the split at 0.5 removes no misclassified mass, so the
    pruned tree keeps only the split at 1.5.
    """
    return make_dataset([0, 1, 1, 1, 2], [-1, -1, -1, 1, 1])


def rotating_boundaries():
    """Two-cluster classes whose weighted logreg boundaries rotate with theta.

    Returns the dataset and the point where the boundaries at theta = 1/2
    and theta = 1/3 (class weights 1/1 and 2/3 : 4/3, i.e. a weight ratio of
    1/2) cross inside the data box.
    """
    rng = np.random.default_rng(42)
    cp = rng.uniform(-2, 2, (2, 2))
    cm = rng.uniform(-2, 2, (2, 2))
    n = 40
    P = np.vstack([rng.normal(0, 0.5, (n, 2)) + cp[0], rng.normal(0, 0.5, (n, 2)) + cp[1]])
    M = np.vstack([rng.normal(0, 0.5, (n, 2)) + cm[0], rng.normal(0, 0.5, (n, 2)) + cm[1]])
    ds = LabeledDataset(np.vstack([P, M]), np.r_[np.ones(2 * n), -np.ones(2 * n)].astype(int))
    tr = Trainer("logreg")
    ms = [tr(ds, derive_class_weights(t, ds.n_plus, ds.n_minus)) for t in (0.5, 1 / 3)]
    A = np.vstack([m.coef for m in ms])
    x = np.linalg.solve(A, -np.array([m.intercept for m in ms]))
    return ds, x


@pytest.fixture(scope="session")
def toy():
    """Default two-Gaussian data, 1000 points per class."""
    return gen_gaussian(GaussianSpec())


@pytest.fixture(scope="session")
def small_toy():
    return gen_gaussian(GaussianSpec(n_per_class=150, seed=3))


@pytest.fixture(scope="session")
def logreg_path(toy):
    return ReweightingPath(toy, Trainer("logreg"))


@pytest.fixture(scope="session")
def svm_path(toy):
    return ReweightingPath(toy, Trainer("svm"))


@pytest.fixture(scope="session")
def rotating():
    return rotating_boundaries()


# acceptance results, filled by test_acceptance and printed after the run:
# criterion number -> list of (part, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}
NOTES: list[str] = []
N_CRITERIA = 10


def note(text: str) -> None:
    """Informational measurement that is not itself a criterion."""
    NOTES.append(text)
    print(f"note: {text}")


def record(criterion: int, part: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in range(1, N_CRITERIA + 1):
        parts = ACCEPTANCE.get(c)
        if not parts:
            terminalreporter.write_line(f"criterion {c:2d}: FAIL (no result recorded)")
            continue
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name} {'ok' if p else 'FAILED'} ({d})" for name, p, d in parts)
        terminalreporter.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    for text in NOTES:
        terminalreporter.write_line(f"note: {text}")
