"""Dense/sparse state-vector engine: initial states, Lanczos-Krylov time
propagation, full diagonalization, and eigenstate surveys.

Basis ordering is site-major with site 1 as the most significant bit, and
sigma^z = |1><1| - |0><0|.  Hamiltonian coefficients in MHz enter dynamics
as angular frequencies 2*pi*f rad/us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .params import InitialStateSpec, matter_site
from .pauli import OperatorSum, commutator_norm, matter_number

DENSE_LIMIT = 14
TWO_PI = 2.0 * math.pi


class EngineError(RuntimeError):
    pass


def _bit(indices, site, L):
    """Bit value of `site` (1-based, MSB first) for basis indices."""
    return (indices >> (L - site)) & 1


def to_sparse(op: OperatorSum) -> sp.csr_matrix:
    """Materialize an operator sum as a sparse matrix (coefficients as given,
    no 2*pi factor)."""
    L = op.n_sites
    dim = 1 << L
    idx = np.arange(dim, dtype=np.int64)
    rows, cols, vals = [], [], []
    for term in op.terms:
        flip = 0
        amp = np.full(dim, term.coeff, dtype=complex)
        for site, label in term.ops:
            bits = _bit(idx, site, L)
            if label == "X":
                flip |= 1 << (L - site)
            elif label == "Y":
                flip |= 1 << (L - site)
                # sigma^y = i|1><0| - i|0><1|: acting on column bit b,
                # amplitude i*(2b-1) lands on the flipped row
                amp *= 1j * (2.0 * bits - 1.0)
            else:  # Z
                amp *= 2.0 * bits - 1.0
        rows.append(idx ^ flip)
        cols.append(idx)
        vals.append(amp)
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=complex)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    mat.sum_duplicates()
    return mat


def to_dense(op: OperatorSum) -> np.ndarray:
    if op.n_sites > DENSE_LIMIT:
        raise EngineError(f"n_sites={op.n_sites} above dense limit {DENSE_LIMIT}")
    return to_sparse(op).toarray()


@dataclass
class StateVector:
    amps: np.ndarray
    n_sites: int

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (1 << self.n_sites,):
            raise ValueError("amplitude length must be 2^n_sites")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        return StateVector(self.amps / self.norm(), self.n_sites)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def expectation(self, op: OperatorSum):
        val = complex(np.vdot(self.amps, to_sparse(op) @ self.amps))
        if op.is_hermitian():
            return val.real
        return val

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy(), self.n_sites)


def prepare_initial(spec: InitialStateSpec, L: int) -> StateVector:
    """Product state: odd sites set by s_pattern bits, each even site
    |Phi_theta> = cos(theta/2)|1> + sin(theta/2)|0>."""
    spec.validate_for(L)
    c, s = math.cos(spec.theta / 2), math.sin(spec.theta / 2)
    amp = np.array([1.0 + 0j])
    for site in range(1, L + 1):
        if site % 2 == 1:
            bit = spec.s_pattern[(site - 1) // 2]
            local = np.array([1.0, 0.0]) if bit == "0" else np.array([0.0, 1.0])
        else:
            local = np.array([s, c])  # index 0 = |0>, 1 = |1>
        amp = np.kron(amp, local.astype(complex))
    return StateVector(amp, L).normalized()


def _lanczos_step(Hmul, psi, dt, m, tol=1e-9):
    """One exp(-i*dt*H) application via a Lanczos subspace of dimension <= m.
    Returns (new_psi, error_estimate).  H here is already in rad/us."""
    dim = psi.shape[0]
    m = min(m, dim)
    V = np.empty((m, dim), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = psi / np.linalg.norm(psi)
    k = m
    for j in range(m):
        w = Hmul(V[j])
        alpha[j] = np.vdot(V[j], w).real
        w -= alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        # full reorthogonalization keeps the basis clean for large dt*||H||
        coeffs = V[: j + 1].conj() @ w
        w -= V[: j + 1].T @ coeffs
        b = np.linalg.norm(w)
        if j + 1 < m:
            beta[j] = b
            if b < 1e-13:  # Krylov breakdown: subspace is invariant, result exact
                k = j + 1
                break
            V[j + 1] = w / b
    T = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
    evals, evecs = np.linalg.eigh(T)
    small = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
    new = V[:k].T @ small
    err = abs(small[-1]) if k == m else 0.0
    return new, err


def evolve_krylov(H: OperatorSum, psi0: StateVector, times, m: int = 30,
                  tol: float = 1e-9) -> list[StateVector]:
    """Propagate |psi(t)> = exp(-i*2pi*H*t)|psi0> at the requested times
    (ascending, starting at >= 0).  Adaptive substepping keeps the local
    Lanczos error estimate below `tol` per step."""
    if not H.is_hermitian():
        raise EngineError("Hamiltonian must be hermitian")
    times = list(times)
    if times and times[0] < -1e-15:
        raise EngineError("times must start at t >= 0")
    if any(b < a for a, b in zip(times, times[1:])):
        raise EngineError("times must be ascending")
    if m < 2:
        raise EngineError("Krylov dimension must be >= 2")
    Hs = to_sparse(H) * TWO_PI
    Hmul = lambda v: Hs @ v
    # rough spectral width estimate for the initial substep choice
    hnorm = TWO_PI * sum(abs(t.coeff) for t in H.terms) + 1e-30
    dt_sub = min(0.5 * m / hnorm * 10, 1.0)
    out = []
    psi = psi0.amps.copy()
    t_cur = 0.0
    for t in times:
        remaining = t - t_cur
        while remaining > 1e-15:
            step = min(dt_sub, remaining)
            new, err = _lanczos_step(Hmul, psi, step, m, tol)
            while err > tol and step > 1e-12:
                step /= 2
                new, err = _lanczos_step(Hmul, psi, step, m, tol)
            psi = new
            nrm = np.linalg.norm(psi)
            psi /= nrm
            remaining -= step
            if err < tol / 100 and step == dt_sub:
                dt_sub *= 1.5  # cheap growth when comfortably accurate
        t_cur = t
        out.append(StateVector(psi.copy(), psi0.n_sites))
    return out


def evolve_dense(H: OperatorSum, psi0: StateVector, times) -> list[StateVector]:
    """Dense-exponential oracle: exact propagation via eigendecomposition."""
    Hd = to_dense(H) * TWO_PI
    evals, evecs = np.linalg.eigh(Hd)
    coeff = evecs.conj().T @ psi0.amps
    return [
        StateVector(evecs @ (np.exp(-1j * evals * t) * coeff), psi0.n_sites)
        for t in times
    ]


@dataclass
class EigenSurvey:
    """All eigenpairs of a small chain plus per-eigenstate observable columns."""

    energies: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors
    n_sites: int
    columns: dict = field(default_factory=dict)

    def add_column(self, name: str, op: OperatorSum):
        mat = to_sparse(op)
        vals = np.einsum("ij,ij->j", self.vectors.conj(), mat @ self.vectors).real
        self.columns[name] = vals
        return vals

    def add_column_fn(self, name: str, fn):
        vals = np.array([fn(StateVector(self.vectors[:, k], self.n_sites))
                         for k in range(self.vectors.shape[1])])
        self.columns[name] = vals
        return vals


def diagonalize_dense(H: OperatorSum) -> EigenSurvey:
    if H.n_sites > DENSE_LIMIT:
        raise EngineError(f"n_sites={H.n_sites} above dense limit {DENSE_LIMIT}")
    evals, evecs = np.linalg.eigh(to_dense(H))
    return EigenSurvey(energies=evals, vectors=evecs, n_sites=H.n_sites)


def matter_sector_indices(L: int, n_excitations: int) -> np.ndarray:
    """Basis indices whose odd-site (matter) bits sum to n_excitations."""
    dim = 1 << L
    idx = np.arange(dim, dtype=np.int64)
    count = np.zeros(dim, dtype=np.int64)
    for ell in range(1, (L + 1) // 2 + 1):
        count += _bit(idx, matter_site(ell), L)
    return idx[count == n_excitations]


def matter_sector_project(H: OperatorSum, n_excitations: int):
    """Restrict H to the fixed matter-excitation sector.

    Returns (H_block sparse, basis_map) where basis_map[i] is the full-space
    index of sector basis state i.  Errors if H does not conserve the matter
    number (e.g. the full XY Hamiltonian with transverse drive).
    """
    N = matter_number(H.n_sites)
    if commutator_norm(H, N) > 1e-10:
        raise EngineError("Hamiltonian does not conserve matter excitation number")
    basis = matter_sector_indices(H.n_sites, n_excitations)
    full = to_sparse(H).tocsc()
    block = full[basis][:, basis]
    return block.tocsr(), basis
