from __future__ import annotations

import numpy as np
import pytest

from chainharvest.anomaly.ocsvm import (
    BadParam,
    DimensionMismatch,
    OcsvmModel,
    ocsvm_fit,
    ocsvm_outliers,
    rbf_kernel,
)
from synth import blob_matrix

EPSILON = 0.02


@pytest.fixture(scope="module")
def gaussian_rows():
    return np.random.default_rng(42).standard_normal((1000, 2))


class TestNuProperty:
    @pytest.mark.parametrize("nu", [0.01, 0.05, 0.1])
    def test_flagged_and_sv_fractions(self, gaussian_rows, nu):
        model = ocsvm_fit(gaussian_rows, nu=nu, gamma=0.5)
        assert model.converged
        flagged = float(model.predict(gaussian_rows).mean())
        sv_fraction = model.n_support / len(gaussian_rows)
        assert flagged <= nu + EPSILON, f"flagged {flagged} > {nu}+{EPSILON}"
        assert sv_fraction >= nu - EPSILON, f"SVs {sv_fraction} < {nu}-{EPSILON}"

    @pytest.mark.parametrize("nu", [0.01, 0.05, 0.1])
    def test_dual_feasibility(self, gaussian_rows, nu):
        model = ocsvm_fit(gaussian_rows, nu=nu, gamma=0.5)
        cap = 1.0 / (nu * len(gaussian_rows))
        alpha = model.dual_coef
        assert alpha.min() >= -1e-12
        assert alpha.max() <= cap + 1e-12
        assert abs(alpha.sum() - 1.0) < 1e-6


class TestDegenerateGeometry:
    def test_identical_points_sit_on_boundary(self):
        rows = np.zeros((80, 3))
        model = ocsvm_fit(rows, nu=0.5, gamma=0.7)
        flags = model.predict(rows)
        assert flags.sum() == 0  # on the boundary, never strictly outside
        assert model.decision_function(rows) == pytest.approx(np.zeros(80), abs=1e-9)


class TestParams:
    def test_nu_zero_rejected(self):
        with pytest.raises(BadParam):
            ocsvm_fit(np.zeros((5, 2)), nu=0.0, gamma=1.0)

    def test_nu_above_one_rejected(self):
        with pytest.raises(BadParam):
            ocsvm_fit(np.zeros((5, 2)), nu=1.5, gamma=1.0)

    def test_nonpositive_gamma_rejected(self):
        with pytest.raises(BadParam):
            ocsvm_fit(np.zeros((5, 2)), nu=0.5, gamma=0.0)

    def test_single_row_rejected(self):
        with pytest.raises(BadParam):
            ocsvm_fit(np.zeros((1, 2)), nu=0.5, gamma=1.0)

    def test_nu_equal_one_allowed(self):
        rows = np.random.default_rng(0).standard_normal((50, 2))
        model = ocsvm_fit(rows, nu=1.0, gamma=0.5)
        assert model.converged
        assert model.n_support == 50  # every point is a support vector


class TestPredict:
    def test_far_point_is_outlier_with_brute_force_value(self, gaussian_rows):
        model = ocsvm_fit(gaussian_rows, nu=0.05, gamma=0.5)
        point = np.array([[10.0, 10.0]])  # ~10 sigma from the mass
        decision = model.decision_function(point)[0]
        assert decision < 0
        # Independent kernel-sum evaluation of f(x).
        brute = sum(
            a * float(np.exp(-0.5 * ((sv - point[0]) ** 2).sum()))
            for a, sv in zip(model.dual_coef, model.support_vectors)
        ) - model.rho
        assert decision == pytest.approx(brute, rel=1e-9)

    def test_dimension_mismatch(self, gaussian_rows):
        model = ocsvm_fit(gaussian_rows, nu=0.1, gamma=0.5)
        with pytest.raises(DimensionMismatch):
            model.predict(np.zeros((3, 5)))

    def test_deterministic_given_model(self, gaussian_rows):
        a = ocsvm_fit(gaussian_rows, nu=0.05, gamma=0.5)
        b = ocsvm_fit(gaussian_rows, nu=0.05, gamma=0.5)
        assert np.array_equal(a.decision_function(gaussian_rows),
                              b.decision_function(gaussian_rows))
        assert a.rho == b.rho

    def test_agrees_with_reference_implementation(self, gaussian_rows):
        # Same dual, independent solver: decisions must coincide except for
        # points sitting on the boundary within solver tolerance.
        sklearn_svm = pytest.importorskip("sklearn.svm")
        ours = ocsvm_fit(gaussian_rows, nu=0.1, gamma=0.5)
        ref = sklearn_svm.OneClassSVM(nu=0.1, gamma=0.5, tol=1e-6).fit(gaussian_rows)
        f_ours = ours.decision_function(gaussian_rows)
        f_ref = ref.decision_function(gaussian_rows)
        assert np.corrcoef(f_ours, f_ref)[0, 1] > 0.9999
        off_boundary = np.abs(f_ref) > 1e-5
        assert np.array_equal((f_ours < 0)[off_boundary], (f_ref < 0)[off_boundary])
        # rho agrees after libsvm's nu*n scaling of the dual.
        assert ours.rho == pytest.approx(float(ref.offset_[0]) / (0.1 * 1000), rel=1e-3)


class TestModelRoundTrip:
    def test_save_load_preserves_decisions(self, gaussian_rows, tmp_path):
        model = ocsvm_fit(gaussian_rows, nu=0.05, gamma=0.5)
        path = tmp_path / "ocsvm.json"
        model.save(path)
        import json

        loaded = OcsvmModel.from_doc(json.loads(path.read_text()))
        assert np.array_equal(loaded.decision_function(gaussian_rows),
                              model.decision_function(gaussian_rows))


def test_outlier_addresses_match_flags():
    rows = np.vstack([np.random.default_rng(3).standard_normal((200, 2)),
                      [[25.0, 25.0]]])
    m = blob_matrix(rows)
    model = ocsvm_fit(m, nu=0.05, gamma=0.5)
    outliers = ocsvm_outliers(model, m)
    assert m.addresses[-1] in outliers


def test_rbf_kernel_basics():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    k = rbf_kernel(a, a, gamma=1.0)
    assert k[0, 0] == pytest.approx(1.0)
    assert k[0, 1] == pytest.approx(np.exp(-1.0))
