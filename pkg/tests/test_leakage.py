"""Unit tests for the min-entropy SDP layer and its exact reductions."""

import math

import numpy as np
import pytest

from piqss import codes, leakage, qcore

PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)


def _aab4():
    return codes.get_code("AAB4")


def test_joint_state_requires_maximally_mixed_reference():
    bad = qcore.DensityOperator((2, 2), np.diag([0.7, 0.0, 0.3, 0.0]))
    with pytest.raises(ValueError, match="reference marginal"):
        leakage.JointState(2, "full", bad, "X", 1)
    good = qcore.DensityOperator((2, 2), np.eye(4) / 4)
    js = leakage.JointState(2, "full", good, "X", 1)
    assert js.exp_dim == 2


def test_leakage_result_validation():
    leakage.LeakageResult(2, 1.0, 0.5, 0.0, 0.0, "x")
    with pytest.raises(ValueError):
        leakage.LeakageResult(2, 1.0, 0.5, 1.5, 0.0, "x")  # h_min out of range
    with pytest.raises(ValueError):
        leakage.LeakageResult(2, 4.0, 2.0, -1.0, 0.0, "x")  # f_max > 1
    with pytest.raises(ValueError):
        leakage.LeakageResult(2, 1.0, 0.5, 0.0, 1e-3, "x")  # uncertified gap


def test_joint_state_shapes_and_errors():
    code = _aab4()
    red = leakage.build_joint_state(code, 2)
    assert red.exp_basis == "dicke-reduced"
    assert red.rho.dims == (2, 3)
    full = leakage.build_joint_state(code, 2, basis="full")
    assert full.exp_basis == "full"
    assert full.rho.dims == (2, 4)
    with pytest.raises(ValueError):
        leakage.build_joint_state(code, 5)
    with pytest.raises(ValueError):
        leakage.build_joint_state(code, 2, basis="weird")
    with pytest.raises(ValueError):
        leakage.build_joint_state(codes.get_code("LNCY4"), 2, basis="dicke")


def test_endpoint_values():
    code = _aab4()
    res = leakage.q_corr_sdp(leakage.build_joint_state(code, 4))
    assert res.h_min == pytest.approx(-1.0, abs=1e-6)
    assert res.f_max == pytest.approx(1.0, abs=1e-6)
    assert res.method == "sdp-dicke"
    res = leakage.q_corr_sdp(leakage.build_joint_state(code, 2))
    assert res.h_min == pytest.approx(0.0, abs=1e-6)
    assert res.f_max == pytest.approx(0.5, abs=1e-6)
    res = leakage.q_corr_sdp(leakage.build_joint_state(code, 0))
    assert res.h_min == pytest.approx(1.0, abs=1e-6)
    assert res.f_max == pytest.approx(0.25, abs=1e-6)


def test_result_fields_are_consistent():
    for n_p in range(5):
        res = leakage.q_corr_sdp(leakage.build_joint_state(_aab4(), n_p))
        assert res.q_corr == pytest.approx(2 * res.f_max, rel=1e-12)
        assert res.h_min == pytest.approx(-math.log2(res.q_corr), rel=1e-12)
        assert abs(res.gap) <= leakage.GAP_TOL
        assert res.n_p == n_p


def test_recovery_channel_is_cptp_and_achieves_f_max():
    for n_p, f_expected in ((1, 0.25), (2, 0.5), (3, 1.0)):
        js = leakage.build_joint_state(_aab4(), n_p)
        res, ch = leakage.q_corr_sdp(js, want_channel=True)
        assert ch.d_in == js.exp_dim and ch.d_out == 2
        # complete positivity and trace preservation, checked directly
        assert np.linalg.eigvalsh(ch.choi).min() >= -1e-9
        marg = np.einsum("arbr->ab",
                         ch.choi.reshape(ch.d_in, 2, ch.d_in, 2))
        assert np.max(np.abs(marg - np.eye(ch.d_in))) < 1e-8
        # the channel really attains the reported overlap
        out = ch.apply_to_second(js.rho.matrix, 2)
        achieved = float(np.real(PHI_PLUS @ out @ PHI_PLUS))
        assert achieved == pytest.approx(res.f_max, abs=1e-6)
        assert res.f_max == pytest.approx(f_expected, abs=1e-6)
        # apply() maps the maximally mixed input to a unit-trace state
        y = ch.apply(np.eye(ch.d_in) / ch.d_in)
        assert np.trace(y).real == pytest.approx(1.0, abs=1e-9)

    ch2 = leakage.extract_recovery(leakage.build_joint_state(_aab4(), 3))
    assert ch2.d_out == 2


def test_recovery_channel_validation():
    bad = -np.eye(4) / 2
    with pytest.raises(ValueError, match="eigenvalue"):
        leakage.RecoveryChannel(bad, 2, 2)
    skew = np.diag([1.5, 0.5, 0.5, 0.5])  # PSD but not trace preserving
    with pytest.raises(ValueError, match="trace preserving"):
        leakage.RecoveryChannel(skew, 2, 2)


def test_stabilizer_closed_form_series():
    code = codes.get_code("LNCY4")
    expect_h = {4: -1.0, 3: -1.0, 2: 0.0, 1: 1.0, 0: 1.0}
    for n_p, h in expect_h.items():
        e = codes.ErasurePattern(range(n_p, 4))
        res = leakage.h_min_stabilizer(code, e)
        assert res.h_min == pytest.approx(h)
        assert res.f_max == pytest.approx(2.0 ** (-h) / 2)
        assert res.gap == 0.0
        assert res.method == "stabilizer-closed-form"
        assert res.n_p == n_p


def test_depolarize_single_qubit():
    plus = np.full((2, 2), 0.5)
    rho = qcore.DensityOperator((2, 2), np.kron(np.diag([1.0, 0.0]), plus))
    out = leakage.depolarize(rho, 0)
    assert np.allclose(out.matrix, np.kron(np.eye(2) / 2, plus))
    # depolarizing the other qubit leaves the first alone
    out2 = leakage.depolarize(rho, 1)
    assert np.allclose(out2.matrix, np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2))
    with pytest.raises(ValueError, match="qubit"):
        leakage.depolarize(qcore.DensityOperator((4,), np.eye(4) / 4), 0)


def test_information_measures():
    code = _aab4()
    js = {n_p: leakage.build_joint_state(code, n_p, basis="full") for n_p in (0, 1, 3, 4)}
    # correctable erasure keeps all reference-side correlations
    assert leakage.mutual_information(js[4], js[3]) == pytest.approx(0.0, abs=1e-9)
    # a single share carries no correlation with the reference at all
    assert leakage.mutual_information(js[4], js[1]) == pytest.approx(-2.0, abs=1e-9)
    assert leakage.coherent_information(js[4]) == pytest.approx(1.0, abs=1e-9)
    assert leakage.coherent_information(js[3]) == pytest.approx(1.0, abs=1e-9)
    assert leakage.coherent_information(js[1]) == pytest.approx(-1.0, abs=1e-9)
    assert leakage.coherent_information(js[0]) == pytest.approx(-1.0, abs=1e-9)


def test_hybrid_state_construction():
    code = _aab4()
    js = leakage.build_hybrid_state(code, code, code, 2)
    assert js.exp_dim == 27
    assert js.code_name == "AAB4-H"
    with pytest.raises(ValueError, match="equal code lengths"):
        leakage.build_hybrid_state(code, code, codes.get_code("PR7"), 2)
    with pytest.raises(ValueError):
        leakage.build_hybrid_state(code, code, code, 7)


# --- the graded (symmetry-blocked) solver ------------------------------------


def test_swap_monomial_detector_contract():
    rng = np.random.default_rng(0)
    d = 6
    delta_true = np.array([1, -1, 1, 1, -1, -1], dtype=float)
    dm = np.diag(delta_true)
    c = rng.normal(size=(d, d))
    c = c + c.T + 10 * np.eye(d)
    a = dm @ c @ dm
    m = rng.normal(size=(d, d))
    b = dm @ (m + m.T)  # B = D M with M symmetric: B = +1 * D B^T D
    delta = leakage._detect_swap_monomial(a, b, c, 1e-12, 1.0)
    assert delta is not None
    pair = delta[:, None] * np.conj(delta)[None, :]
    assert np.max(np.abs(a - pair * c)) < 1e-10
    assert np.max(np.abs(b - pair * b.conj().T)) < 1e-10

    banti = dm @ (m - m.T)  # antisymmetric core: the sign -1 variant
    assert leakage._detect_swap_monomial(a, banti, c, 1e-12, 1.0) is None
    delta2 = leakage._detect_swap_monomial(a, banti, c, 1e-12, -1.0)
    assert delta2 is not None

    # asymmetric magnitudes cannot have this symmetry
    assert leakage._detect_swap_monomial(2 * c, b, c, 1e-12, 1.0) is None


def test_reflect_monomial_detector_contract():
    rng = np.random.default_rng(1)
    d = 4
    delta_true = np.array([1.0, 1.0, -1.0, -1.0])
    even = np.outer(delta_true, delta_true) > 0
    a = rng.normal(size=(d, d))
    a = (a + a.T) * even + 5 * np.eye(d)
    c = rng.normal(size=(d, d))
    c = (c + c.T) * even + 5 * np.eye(d)
    b = rng.normal(size=(d, d)) * (~even)
    delta = leakage._detect_reflect_monomial(a, b, c, 1e-12)
    assert delta is not None
    pair = np.real(np.outer(delta, delta))
    assert np.max(np.abs(b + pair * b)) < 1e-12

    b_bad = b.copy()
    b_bad[0, 1] = 0.5  # now B touches an even-parity entry: no consistent signs
    assert leakage._detect_reflect_monomial(a, b_bad, c, 1e-12) is None


def test_graded_solver_matches_dense():
    code = _aab4()
    js = leakage.build_hybrid_state(code, code, code, 2)
    rho = js.rho.matrix
    d_e = js.exp_dim
    graded, _ = leakage._solve_qcorr(rho, 2, d_e, allow_graded=True)
    dense, _ = leakage._solve_qcorr(rho, 2, d_e, allow_graded=False)
    assert graded == pytest.approx(dense, abs=1e-8)


def test_graded_solver_declines_unstructured_input():
    rng = np.random.default_rng(2)
    d_e = 16
    m = rng.normal(size=(2 * d_e, 2 * d_e))
    rho = m @ m.T
    rho /= np.trace(rho)
    assert leakage._solve_qcorr_graded(rho, d_e) is None
    classes = leakage._graded_classes(rho, d_e, 1e-11 * float(np.abs(rho).max()))
    assert len(classes) == 1 and classes[0].size == d_e
