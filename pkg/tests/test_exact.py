import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from z2chain import (build_effective, build_full, device_default,
                     diagonalize_dense, evolve_krylov, matter_sector_project,
                     prepare_initial, uniform_params)
from z2chain.exact import (EngineError, StateVector, evolve_dense,
                           matter_sector_indices, to_dense, to_sparse)
from z2chain.params import InitialStateSpec
from z2chain.pauli import OperatorSum, PauliString, matter_number, single

from conftest import random_state, small_device
from test_pauli import dense as kron_dense, strings


@settings(max_examples=30, deadline=None)
@given(st.lists(strings, min_size=1, max_size=5))
def test_to_sparse_matches_kron_oracle(terms):
    op = OperatorSum(terms, 3)
    assert np.allclose(to_sparse(op).toarray(), kron_dense(op), atol=1e-12)


def test_to_dense_limit():
    big = OperatorSum([PauliString.make({1: "X"}, 1.0)], 15)
    with pytest.raises(EngineError):
        to_dense(big)


def test_state_vector_basics():
    psi = random_state(3, seed=1)
    assert psi.norm() == pytest.approx(1.0)
    assert psi.overlap(psi) == pytest.approx(1.0)
    z1 = psi.expectation(single(1, "Z", 3))
    assert isinstance(z1, float) and -1 <= z1 <= 1
    with pytest.raises(ValueError):
        StateVector(np.ones(5), 2)


def test_prepare_initial_pattern_and_angle():
    theta = -math.pi / 3
    psi = prepare_initial(InitialStateSpec("00100", theta), 10)
    assert psi.norm() == pytest.approx(1.0)
    # matter sites carry the bit pattern: <Z> = +1 on '1', -1 on '0'
    for ell, bit in enumerate("00100", start=1):
        z = psi.expectation(single(2 * ell - 1, "Z", 10))
        assert z == pytest.approx(1.0 if bit == "1" else -1.0)
    # every gauge site sits at Bloch angle theta: <Z> = cos, <X> = sin
    for site in range(2, 11, 2):
        assert psi.expectation(single(site, "Z", 10)) == pytest.approx(math.cos(theta))
        assert psi.expectation(single(site, "X", 10)) == pytest.approx(math.sin(theta))


def test_prepare_initial_rejects_bad_pattern():
    with pytest.raises(Exception):
        prepare_initial(InitialStateSpec("001", 0.0), 10)


def test_rabi_period_sets_time_units():
    """One driven qubit: P(t) = sin^2(pi * 2 h_x * t), Rabi period 1/(2 h_x) us
    for h_x in MHz -- the propagator carries the 2*pi."""
    h_x = 6.0
    H = OperatorSum([PauliString.make({2: "X"}, h_x)], 3)
    psi0 = prepare_initial(InitialStateSpec("00", math.pi), 3)  # gauge site at |0>
    period = 1.0 / (2 * h_x)
    times = [period / 4, period / 2, period]
    states = evolve_krylov(H, psi0, times)
    p = [(1 + s.expectation(single(2, "Z", 3))) / 2 for s in states]
    assert p[0] == pytest.approx(0.5, abs=1e-7)
    assert p[1] == pytest.approx(1.0, abs=1e-7)
    assert p[2] == pytest.approx(0.0, abs=1e-7)


def test_krylov_matches_dense_oracle():
    p = small_device(6).with_fields(h_x=6.0, v_even=15.0)
    H = build_full(p)
    psi0 = prepare_initial(InitialStateSpec("010", -math.pi / 3), 6)
    times = np.linspace(0.0, 0.5, 11)
    kry = evolve_krylov(H, psi0, times)
    dns = evolve_dense(H, psi0, times)
    for a, b in zip(kry, dns):
        assert abs(a.overlap(b)) > 1 - 1e-9


def test_krylov_norm_and_energy_conservation():
    H = build_effective(uniform_params(6, h_x=6.0, h_z=-4.45))
    psi0 = prepare_initial(InitialStateSpec("010", 0.8), 6)
    e0 = psi0.expectation(H)
    for psi in evolve_krylov(H, psi0, np.linspace(0, 1.0, 21)):
        assert psi.norm() == pytest.approx(1.0, abs=1e-9)
        assert psi.expectation(H) == pytest.approx(e0, abs=1e-6 * max(1, abs(e0)))


def test_krylov_input_validation():
    H = OperatorSum([PauliString.make({1: "X"}, 1.0)], 2)
    psi0 = prepare_initial(InitialStateSpec("0", 0.0), 2)
    with pytest.raises(EngineError):
        evolve_krylov(H, psi0, [-0.5, 0.0])
    with pytest.raises(EngineError):
        evolve_krylov(H, psi0, [0.2, 0.1])
    with pytest.raises(EngineError):
        evolve_krylov(H, psi0, [0.1], m=1)
    nonherm = OperatorSum([PauliString.make({1: "X"}, 1j)], 2)
    with pytest.raises(EngineError):
        evolve_krylov(nonherm, psi0, [0.1])


def test_diagonalize_dense_matches_numpy():
    H = build_effective(uniform_params(6))
    survey = diagonalize_dense(H)
    want = np.linalg.eigvalsh(to_dense(H))
    assert np.allclose(survey.energies, want, atol=1e-10)
    # eigenvector columns actually diagonalize H
    hd = to_dense(H)
    res = hd @ survey.vectors - survey.vectors * survey.energies
    assert np.max(np.abs(res)) < 1e-8
    col = survey.add_column("n_matter", matter_number(6))
    assert np.all((col > -1e-9) & (col < 3 + 1e-9))


def test_matter_sector_indices_counts():
    L = 8
    n_m, n_g = 4, 4
    total = 0
    for k in range(n_m + 1):
        idx = matter_sector_indices(L, k)
        assert len(idx) == comb(n_m, k, exact=True) * 2**n_g
        total += len(idx)
    assert total == 2**L


def test_matter_sector_project_spectrum():
    p = uniform_params(6, h_x=6.0, h_z=-4.45)
    H = build_effective(p)
    full = np.linalg.eigvalsh(to_dense(H))
    pieces = []
    for k in range(4):
        block, basis = matter_sector_project(H, k)
        pieces.append(np.linalg.eigvalsh(block.toarray()))
        assert block.shape == (len(basis), len(basis))
    assert np.allclose(np.sort(np.concatenate(pieces)), full, atol=1e-9)


def test_matter_sector_project_rejects_nonconserving():
    H = build_full(device_default().with_fields(h_x=6.0))
    with pytest.raises(EngineError):
        matter_sector_project(H, 1)
