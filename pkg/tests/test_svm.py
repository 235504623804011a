import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motorpm.data import apply_scaler, fit_scaler
from motorpm.harness import DEFAULT_CONFIGS
from motorpm.svm import (
    PAIRS,
    BinarySvmModel,
    KernelSpec,
    MulticlassSvmModel,
    SupportVectorMachine,
    kernel_eval,
    kernel_matrix,
    smo_fit_binary,
    svm_fit,
    svm_predict,
)

SVM_SPECS = {c.name: KernelSpec(**c.params) for c in DEFAULT_CONFIGS if c.family == "svm"}


def test_kernel_examples():
    assert kernel_eval(KernelSpec("linear"), [1, 2], [3, 4]) == 11
    x = np.array([0.3, -2.0, 5.0])
    assert kernel_eval(KernelSpec("rbf", gamma=0.37), x, x) == 1.0
    assert kernel_eval(KernelSpec("sigmoid", gamma=0.001, coef0=0.0), [1, 0], [0, 1]) == 0.0
    poly = KernelSpec("poly", degree=5, coef0=0.75, gamma=1.0)
    assert kernel_eval(poly, [0.5, 0.0], [0.5, 7.0]) == pytest.approx(1.0)


def test_kernel_dimension_mismatch():
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec("linear"), [1, 2], [1, 2, 3])


@pytest.mark.parametrize("kw", [dict(C=0), dict(kind="rbf", gamma=-1.0), dict(degree=0),
                                dict(kind="cubic")])
def test_bad_spec(kw):
    with pytest.raises(ValueError):
        KernelSpec(**kw)


def test_two_point_analytic_solution():
    m = smo_fit_binary(np.array([[-1.0], [1.0]]), np.array([-1.0, 1.0]), KernelSpec("linear", C=1000))
    np.testing.assert_allclose(m.alpha, [0.5, 0.5], atol=1e-6)
    assert abs(m.bias) < 1e-6
    xs = np.linspace(-3, 3, 7)[:, None]
    np.testing.assert_allclose(m.decision_function(xs), xs[:, 0], atol=1e-6)


def test_identical_points_opposite_labels():
    X = np.array([[1.0, 2.0], [1.0, 2.0]])
    m = smo_fit_binary(X, np.array([1.0, -1.0]), KernelSpec("rbf", C=0.75, gamma=0.1))
    assert all(a in (0.0, 0.75) for a in m.alpha)
    assert m.alpha[0] == m.alpha[1]
    # kernel terms cancel, so the output is the bias alone
    np.testing.assert_allclose(m.decision_function(X), m.bias, atol=1e-12)


def test_single_class_rejected():
    with pytest.raises(ValueError):
        smo_fit_binary(np.zeros((3, 1)), np.ones(3), KernelSpec("linear"))
    with pytest.raises(ValueError):
        svm_fit(np.zeros((4, 1)), np.array([0, 0, 1, 1]), KernelSpec("linear"))


def _stub(bias):
    spec = KernelSpec("linear")
    e = np.zeros(0)
    return BinarySvmModel(np.zeros((0, 1)), e, bias, spec, e, e, 0, True)


def test_vote_counting():
    # H beats B, H beats PM, B beats PM
    m = MulticlassSvmModel(PAIRS, (_stub(1.0), _stub(1.0), _stub(1.0)))
    lab, p = svm_predict(m, [[0.0]])
    assert lab[0] == 0
    assert p[0, 0] == pytest.approx(2 / 3)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_vote_tie_by_margin():
    # H beats B, PM beats H, B beats PM: one vote each, PM has the largest |f| sum
    m = MulticlassSvmModel(PAIRS, (_stub(0.5), _stub(-2.0), _stub(-0.1)))
    assert svm_predict(m, [[0.0]])[0][0] == 2


def three_blobs(rng, n=30):
    centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
    X = np.vstack([c + rng.normal(0, 0.5, (n, 2)) for c in centers])
    return X, np.repeat([0, 1, 2], n)


def test_three_blobs_rbf():
    r = np.random.default_rng(3)
    Xtr, ytr = three_blobs(r)
    Xte, yte = three_blobs(r, 20)
    clf = SupportVectorMachine(KernelSpec("rbf", gamma=0.1, C=0.75)).fit(Xtr, ytr)
    assert np.mean(clf.predict(Xte) == yte) == 1.0


@pytest.fixture(scope="module")
def scaled_split(motors_split):
    Xtr, ytr, Xte, yte = motors_split
    s = fit_scaler(Xtr)
    return apply_scaler(s, Xtr), ytr, apply_scaler(s, Xte), yte


@pytest.fixture(scope="module")
def fitted_svms(scaled_split):
    Xtr, ytr, _, _ = scaled_split
    return {name: svm_fit(Xtr, ytr, spec) for name, spec in SVM_SPECS.items()}


@pytest.mark.parametrize("name", sorted(SVM_SPECS))
def test_dual_feasibility(fitted_svms, name):
    C = SVM_SPECS[name].C
    for bm in fitted_svms[name].models:
        assert np.all(bm.alpha >= 0) and np.all(bm.alpha <= C)
        assert abs(float(bm.alpha @ bm.y)) <= 1e-6


def test_free_vectors_on_margin(fitted_svms, scaled_split):
    Xtr, ytr, _, _ = scaled_split
    checked = 0
    for name, mm in fitted_svms.items():
        for (a, b), bm in zip(mm.pairs, mm.models):
            if not bm.converged:
                continue
            X = Xtr[(ytr == a) | (ytr == b)]
            free = (bm.alpha > 1e-8) & (bm.alpha < bm.spec.C - 1e-8)
            yf = bm.y[free] * bm.decision_function(X[free])
            assert np.all(np.abs(yf - 1) < 1e-2), name
            checked += free.sum()
    assert checked > 0


def test_rbf_beats_sigmoid(fitted_svms, scaled_split):
    _, _, Xte, yte = scaled_split
    acc = {n: np.mean(svm_predict(m, Xte)[0] == yte) for n, m in fitted_svms.items()}
    assert acc["SVM-RBF"] >= acc["SVM-Sigmoid"]


def test_sigmoid_iteration_cap(fitted_svms, scaled_split):
    _, ytr, _, _ = scaled_split
    for (a, b), bm in zip(PAIRS, fitted_svms["SVM-Sigmoid"].models):
        n = int(np.sum((ytr == a) | (ytr == b)))
        assert bm.n_updates <= 45 * n


def test_duplicating_non_support_point():
    r = np.random.default_rng(8)
    Xtr, ytr = three_blobs(r)
    spec = KernelSpec("rbf", gamma=0.1, C=0.75)
    m = svm_fit(Xtr, ytr, spec)
    in_sv = np.zeros(len(ytr), bool)
    for (a, b), bm in zip(m.pairs, m.models):
        rows = np.flatnonzero((ytr == a) | (ytr == b))
        in_sv[rows[bm.alpha > 0]] = True
    probe = np.vstack([three_blobs(r, 10)[0], r.uniform(-3, 9, (40, 2))])
    base = svm_predict(m, probe)[0]
    for i in np.flatnonzero(~in_sv)[:5]:
        m2 = svm_fit(np.vstack([Xtr, Xtr[i]]), np.append(ytr, ytr[i]), spec)
        np.testing.assert_array_equal(svm_predict(m2, probe)[0], base)


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.sampled_from(["linear", "poly", "sigmoid", "rbf"]))
def test_kernel_symmetry(seed, kind):
    r = np.random.default_rng(seed)
    x, z = r.normal(size=5), r.normal(size=5)
    spec = KernelSpec(kind, degree=3, gamma=0.2, coef0=0.5)
    assert kernel_eval(spec, x, z) == kernel_eval(spec, z, x)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.floats(1e-3, 5.0))
def test_rbf_gram_psd(seed, gamma):
    X = np.random.default_rng(seed).normal(size=(20, 4))
    K = kernel_matrix(KernelSpec("rbf", gamma=gamma), X, X)
    assert np.linalg.eigvalsh(K).min() >= -1e-8
