import math

import numpy as np
import pytest

from z2chain import prepare_initial
from z2chain.exact import StateVector
from z2chain.measurement import (CrosstalkMatrix, ReadoutModel,
                                 apply_readout_error, correct_marginals,
                                 correct_readout, crosstalk_compensate,
                                 device_crosstalk, device_readout_model,
                                 joint_correlator_from_shots, sample_shots)
from z2chain.params import InitialStateSpec

from conftest import random_state


def test_readout_model_validation():
    ReadoutModel((0.95, 0.9), (0.9, 0.85))
    with pytest.raises(ValueError):
        ReadoutModel((0.95,), (0.9, 0.85))
    with pytest.raises(ValueError):
        ReadoutModel((1.2,), (0.9,))
    with pytest.raises(ValueError):
        ReadoutModel((0.5,), (0.5,))  # singular calibration matrix


def test_calibration_matrix_columns_are_stochastic():
    model = device_readout_model()
    assert model.n_qubits == 10
    for j in range(1, 11):
        m = model.matrix(j)
        assert np.allclose(m.sum(axis=0), 1.0)
        assert np.all(m >= 0)


def test_sample_shots_deterministic_and_unbiased():
    psi = random_state(4, seed=7)
    a = sample_shots(psi, "ZZZZ", 2000, seed=42)
    b = sample_shots(psi, "ZZZZ", 2000, seed=42)
    assert a.counts == b.counts
    c = sample_shots(psi, "ZZZZ", 2000, seed=43)
    assert c.counts != a.counts
    probs = np.abs(psi.amps) ** 2
    # site-1 marginal of reading '1' = sum of probabilities with MSB set
    p1 = probs[8:].sum()
    big = sample_shots(psi, "ZZZZ", 100_000, seed=1)
    assert big.marginal(1) == pytest.approx(p1, abs=0.01)


def test_sample_shots_x_basis():
    # |+x> on both sites: X-basis measurement is deterministic
    amps = np.full(4, 0.5, dtype=complex)
    psi = StateVector(amps, 2)
    shots = sample_shots(psi, "XX", 500, seed=0)
    assert shots.counts == {"11": 500}
    # while Z-basis outcomes are uniform
    z = sample_shots(psi, "ZZ", 8000, seed=0)
    assert z.marginal(1) == pytest.approx(0.5, abs=0.03)


def test_sample_shots_validation():
    psi = random_state(3, seed=0)
    with pytest.raises(ValueError):
        sample_shots(psi, "ZZ", 10, seed=0)
    with pytest.raises(ValueError):
        sample_shots(psi, "ZZQ", 10, seed=0)
    with pytest.raises(ValueError):
        sample_shots(psi, "ZZZ", 0, seed=0)


def test_readout_corruption_and_correction_unbiased():
    """Corrupt 1e5 shots through the device readout channel, then invert the
    calibration: marginals must come back within 0.01."""
    psi = prepare_initial(InitialStateSpec("00100", -math.pi / 3), 10)
    model = device_readout_model()
    exact = np.array([(1 + float(np.real(
        psi.expectation(_z(j, 10))))) / 2 for j in range(1, 11)])
    shots = sample_shots(psi, "Z" * 10, 100_000, seed=5)
    corrupted = apply_readout_error(shots, model, seed=6)
    # corruption moves the marginals first
    raw = np.array([corrupted.marginal(j) for j in range(1, 11)])
    corrected = correct_marginals(corrupted, model)
    assert np.max(np.abs(corrected - exact)) < 0.01
    assert np.max(np.abs(corrected - exact)) < np.max(np.abs(raw - exact))


def _z(j, L):
    from z2chain.pauli import OperatorSum, PauliString
    return OperatorSum([PauliString.make({j: "Z"}, 1.0)], L)


def test_correct_readout_clips_out_of_range():
    model = ReadoutModel((0.9,), (0.9,))
    corrected, clip = correct_readout([(1.0, 0.0)], model)
    assert clip > 0
    p0, p1 = corrected[0]
    assert p0 == pytest.approx(1.0) and p1 == pytest.approx(0.0)


def test_joint_correlator_from_shots():
    psi = prepare_initial(InitialStateSpec("010", 0.7), 6)
    shots = sample_shots(psi, "ZXZXZZ", 200_000, seed=9)
    got = joint_correlator_from_shots(shots, (2, 3, 4), ("X", "Z", "X"))
    from z2chain.observables import gauge_correlator_ops
    want = float(np.real(psi.expectation(gauge_correlator_ops(2, 6)["xzx"])))
    assert got == pytest.approx(want, abs=0.01)
    with pytest.raises(ValueError):
        joint_correlator_from_shots(shots, (2, 3, 4), ("Z", "Z", "X"))


def test_joint_correlator_with_calibration():
    psi = prepare_initial(InitialStateSpec("010", 0.7), 6)
    model = ReadoutModel((0.95,) * 6, (0.92,) * 6)
    shots = sample_shots(psi, "ZXZXZZ", 200_000, seed=10)
    corrupted = apply_readout_error(shots, model, seed=11)
    from z2chain.observables import gauge_correlator_ops
    want = float(np.real(psi.expectation(gauge_correlator_ops(2, 6)["xzx"])))
    raw = joint_correlator_from_shots(corrupted, (2, 3, 4), ("X", "Z", "X"))
    fixed = joint_correlator_from_shots(corrupted, (2, 3, 4), ("X", "Z", "X"),
                                        model=model)
    assert abs(fixed - want) < abs(raw - want)
    assert fixed == pytest.approx(want, abs=0.02)


def test_shot_counts_dumps():
    psi = random_state(2, seed=3)
    shots = sample_shots(psi, "ZZ", 50, seed=4)
    text = shots.dumps()
    assert text.startswith("# shots n_sites=2")
    assert sum(int(line.split()[1]) for line in text.splitlines()[1:]) == 50


def test_device_crosstalk_fills_missing_row():
    warnings_seen = []
    M = device_crosstalk(warn=warnings_seen.append)
    assert M.filled_rows == (9,)
    assert len(warnings_seen) == 1
    assert np.allclose(M.m_z[8], np.eye(10)[8])
    assert np.allclose(np.diag(M.m_z), 1.0)
    assert M.condition_number < 1.2  # nearly diagonal


def test_crosstalk_round_trip():
    M = device_crosstalk()
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = rng.standard_normal(10)
        applied = crosstalk_compensate(z, M)
        assert np.max(np.abs(M.m_z @ applied - z)) < 1e-12
    with pytest.raises(ValueError):
        crosstalk_compensate(np.ones(9), M)


def test_crosstalk_matrix_validation():
    with pytest.raises(ValueError):
        CrosstalkMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        CrosstalkMatrix(2 * np.eye(3))
