import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from z2chain import (build_effective, extended_imbalance, fit_gaussian_peak,
                     gauge_correlation_residual, gauge_curve, gauge_generator,
                     gauss_law_residual, occupation_profile, prepare_initial,
                     steady_value, uniform_params, z2_charge, z2_flux)
from z2chain.exact import StateVector, to_dense
from z2chain.observables import (ObservableSeries, gauge_correlator_ops,
                                 gauge_value_from_correlators,
                                 gauss_sign_exponent, imbalance_weights,
                                 meanfield_residual)
from z2chain.params import InitialStateSpec

from conftest import random_state


def basis_state(bits: str) -> StateVector:
    L = len(bits)
    amps = np.zeros(1 << L, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps, L)


def test_occupation_profile_on_basis_states():
    psi = basis_state("101100")
    assert np.allclose(occupation_profile(psi, odd_only=False),
                       [1, 0, 1, 1, 0, 0])
    assert np.allclose(occupation_profile(psi), [1, 1, 0])


def test_imbalance_weights_and_bounds():
    eta = imbalance_weights("00100")
    assert np.allclose(eta, [-0.25, -0.25, 1.0, -0.25, -0.25])
    assert extended_imbalance([0, 0, 1, 0, 0], "00100") == pytest.approx(1.0)
    assert extended_imbalance([1, 1, 0, 1, 1], "00100") == pytest.approx(-1.0)
    # uniform spreading gives zero
    assert extended_imbalance([0.2] * 5, "00100") == pytest.approx(0.0)
    with pytest.raises(ValueError):
        imbalance_weights("000")
    with pytest.raises(ValueError):
        extended_imbalance([0.1, 0.2], "00100")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=0, max_value=1), min_size=5, max_size=5),
       st.integers(min_value=1, max_value=30))
def test_imbalance_bounded_for_physical_profiles(profile, pat):
    pattern = format(pat, "05b")
    if "1" not in pattern or "0" not in pattern:
        return
    val = extended_imbalance(profile, pattern)
    assert -1 - 1e-9 <= val <= 1 + 1e-9


@pytest.mark.parametrize("alpha", [0.0, 0.3, -1.1, math.pi / 2])
def test_gauge_generator_squares_to_identity(alpha):
    G = gauge_generator(2, alpha, 6)
    g2 = to_dense(G @ G)
    assert np.allclose(g2, np.eye(64), atol=1e-12)


def test_gauge_generator_site_bounds():
    with pytest.raises(ValueError):
        gauge_generator(1, 0.0, 6)  # needs a gauge link on each side
    with pytest.raises(ValueError):
        gauge_generator(3, 0.0, 5)  # right link would sit past the chain end
    gauge_generator(2, 0.0, 6)
    gauge_generator(3, 0.0, 6)
    with pytest.raises(ValueError):
        gauge_correlator_ops(1, 6)


def test_gauge_value_from_correlators_identity():
    psi = random_state(6, seed=11)
    ops = gauge_correlator_ops(2, 6)
    vals = {k: float(np.real(psi.expectation(op))) for k, op in ops.items()}
    for alpha in (-0.9, 0.0, 0.42, 1.3):
        want = float(np.real(psi.expectation(gauge_generator(2, alpha, 6))))
        got = gauge_value_from_correlators(alpha, **vals)
        assert got == pytest.approx(want, abs=1e-12)


def synthetic_curve(c, B, C, alphas):
    return c + B * np.cos(2 * alphas) + C * np.sin(2 * alphas)


def test_gauge_curve_closed_form():
    times = np.linspace(0, 1, 51)
    rng = np.random.default_rng(0)
    # constant-in-time correlators with known sinusoid parameters
    xzx, zzz, xzz, zzx = 0.6, -0.2, 0.35, 0.15
    correlators = {k: np.full_like(times, v) + 0.0
                   for k, v in [("xzx", xzx), ("zzz", zzz),
                                ("xzz", xzz), ("zzx", zzx)]}
    alphas = np.linspace(-math.pi / 2 + 0.05, math.pi / 2, 25)
    curve = gauge_curve(times, correlators, alphas, (0.2, 1.0))
    c = 0.5 * (xzx + zzz)
    B = 0.5 * (xzx - zzz)
    C = 0.5 * (xzz + zzx)
    assert curve.offset == pytest.approx(c)
    assert curve.coeff_cos == pytest.approx(B)
    assert curve.coeff_sin == pytest.approx(C)
    assert curve.residual < 1e-14
    assert np.allclose(curve.steady_values, synthetic_curve(c, B, C, alphas),
                       atol=1e-14)
    rng.shuffle(alphas)  # order must not matter for the fit parameters
    again = gauge_curve(times, correlators, alphas, (0.2, 1.0))
    assert again.alpha_star == pytest.approx(curve.alpha_star)


@pytest.mark.parametrize("c,B,C", [
    (0.5, 0.3, -0.2),    # positive curve: extremum is the maximum
    (-0.5, 0.3, -0.2),   # negative curve: extremum is the minimum
    (0.0, -0.4, 0.1),
])
def test_gauge_curve_alpha_star_is_largest_magnitude_extremum(c, B, C):
    times = np.linspace(0, 1, 11)
    correlators = {"xzx": np.full(11, c + B), "zzz": np.full(11, c - B),
                   "xzz": np.full(11, C), "zzx": np.full(11, C)}
    curve = gauge_curve(times, correlators, np.linspace(-1.5, 1.5, 41), (0, 1))
    a = curve.alpha_star
    assert -math.pi / 2 < a <= math.pi / 2
    fine = np.linspace(-math.pi / 2, math.pi / 2, 20001)
    best = fine[np.argmax(np.abs(synthetic_curve(c, B, C, fine)))]
    assert abs(synthetic_curve(c, B, C, np.array([a]))[0]) >= \
        abs(synthetic_curve(c, B, C, np.array([best]))[0]) - 1e-6


def test_gauge_curve_empty_window():
    times = np.linspace(0, 1, 11)
    correlators = {k: np.zeros(11) for k in ("xzx", "zzz", "xzz", "zzx")}
    with pytest.raises(ValueError):
        gauge_curve(times, correlators, [0.1], (2.0, 3.0))


def test_gauss_sign_exponent_integrality_exhaustive():
    for i in range(1, 21):
        for j in range(i, 21):
            f = gauss_sign_exponent(i, j)
            assert f == ((j - i + 1) * (j + i + 2)) / 2
            assert isinstance(f, int)


def test_z2_string_operators():
    op = z2_charge(2, 4, 10)
    assert len(op.terms) == 1
    assert op.terms[0].ops == ((3, "Z"), (5, "Z"), (7, "Z"))
    # boundary links of the interval [2, 4] sit at 1+1/2 and 4+1/2,
    # i.e. physical sites 2 and 8
    flux = z2_flux(2, 4, 10, 0.0)
    assert flux.coeff_of({2: "X", 8: "X"}) == pytest.approx(1.0)
    beta = 0.7
    flux_b = z2_flux(2, 4, 10, beta)
    assert flux_b.coeff_of({2: "X", 8: "X"}) == pytest.approx(math.cos(beta) ** 2)
    assert flux_b.coeff_of({2: "Z", 8: "Z"}) == pytest.approx(math.sin(beta) ** 2)
    assert flux_b.coeff_of({2: "X", 8: "Z"}) == pytest.approx(
        math.sin(beta) * math.cos(beta))
    with pytest.raises(ValueError):
        z2_charge(0, 2, 10)
    with pytest.raises(ValueError):
        z2_charge(2, 6, 10)
    with pytest.raises(ValueError):
        z2_flux(1, 2, 10, 0.0)  # no gauge link left of the first matter site
    with pytest.raises(ValueError):
        z2_flux(2, 5, 9, 0.0)  # right link would sit past the chain end


def test_residuals_vanish_on_generator_eigenstate():
    """Product state: matter in Z eigenstates, every gauge spin along -x.
    It is a simultaneous eigenstate of all gauge generators at beta = 0."""
    psi = prepare_initial(InitialStateSpec("010", math.pi / 2), 6)
    # theta = pi/2 gives <X> = 1 on gauge sites, i.e. tau along +x
    for (i, j) in [(2, 2), (2, 3), (3, 3)]:
        assert gauge_correlation_residual(psi, i, j, 0.0) < 1e-12
        w = float(np.real(psi.expectation(z2_charge(i, j, 6))))
        c = float(np.real(psi.expectation(z2_flux(i, j, 6, 0.0))))
        assert abs(abs(c) - 1) < 1e-12 and abs(abs(w) - 1) < 1e-12
    # a generic state violates the law
    assert gauge_correlation_residual(random_state(6, seed=2), 2, 3, 0.0) > 0.3


def test_gauss_law_residual_free_ground_state():
    """g = lambda = 0, h_z = 0: the ground state is an exact product state
    and the charge/flux pair satisfies the signed law."""
    p = uniform_params(6, g=1e-9, lambda_s=0.0, lambda_tau=0.0,
                       h_x=6.0, h_z=0.0)
    H = build_effective(p)
    evals, evecs = np.linalg.eigh(to_dense(H))
    psi = StateVector(evecs[:, 0], 6)
    for (i, j) in [(2, 2), (2, 3), (3, 3)]:
        assert gauge_correlation_residual(psi, i, j, 0.0) < 1e-6


def test_meanfield_residual_runs():
    p = uniform_params(6, h_x=6.0, h_z=-4.45)
    psi = prepare_initial(InitialStateSpec("010", -math.pi / 3), 6)
    val = meanfield_residual(psi, p)
    assert val >= 0


def test_steady_value():
    times = np.linspace(0, 1, 101)
    values = np.where(times < 0.2, times * 5, 1.0) + 0.01 * np.sin(40 * times)
    series = ObservableSeries("x", times, values)
    mean, std = steady_value(series, (0.2, 1.0))
    assert mean == pytest.approx(1.0, abs=0.02)
    assert std < 0.02
    with pytest.raises(ValueError):
        steady_value(series, (2.0, 3.0))


def test_observable_series_validation():
    with pytest.raises(ValueError):
        ObservableSeries("x", [0, 1], [1.0])
    with pytest.raises(ValueError):
        ObservableSeries("x", [0, 0.5, 0.25], [1, 2, 3])


def test_fit_gaussian_peak_recovers_parameters():
    xs = np.linspace(-3, 3, 25)
    rng = np.random.default_rng(1)
    ys = 0.8 * np.exp(-((xs + 0.35) ** 2) / (2 * 0.5**2)) + 0.1
    ys += 0.005 * rng.standard_normal(len(xs))
    fit = fit_gaussian_peak(xs, ys)
    assert fit.converged and not fit.degenerate
    assert fit.mu == pytest.approx(-0.35, abs=0.02)
    assert fit.amplitude == pytest.approx(0.8, abs=0.05)
    assert fit.offset == pytest.approx(0.1, abs=0.02)


def test_fit_gaussian_peak_degenerate_and_validation():
    xs = np.linspace(0, 1, 10)
    fit = fit_gaussian_peak(xs, np.full(10, 0.3))
    assert fit.degenerate
    assert fit.offset == pytest.approx(0.3)
    with pytest.raises(ValueError):
        fit_gaussian_peak([0, 1, 2], [1, 2, 1])
