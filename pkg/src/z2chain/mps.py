"""Matrix-product-state engine: DMRG ground states and TEBD quench dynamics.

Site tensors carry indices (left bond, physical of dim 2, right bond) and a
mixed-canonical center is tracked explicitly.  Operators come in as symbolic
Pauli sums; DMRG compresses them into an MPO, TEBD groups them into
contiguous three-site blocks for a second-order Trotter scheme.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .exact import TWO_PI
from .params import InitialStateSpec, matter_site
from .pauli import OperatorSum, PauliString

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    # basis index 0 = |0>, 1 = |1>, sigma^z = |1><1| - |0><0|; consistency
    # of the algebra (XY = iZ) then fixes sigma^y = i|1><0| - i|0><1|
    "Y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "Z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


class MPSError(RuntimeError):
    pass


class MatrixProductState:
    """Open-boundary MPS with an explicit orthogonality center."""

    def __init__(self, tensors, center=0):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        self.center = center
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise MPSError("boundary bond dimensions must be 1")

    @property
    def n_sites(self):
        return len(self.tensors)

    @property
    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self):
        m = MatrixProductState([t.copy() for t in self.tensors], self.center)
        return m

    @staticmethod
    def from_product(local_states) -> "MatrixProductState":
        tensors = [np.asarray(v, dtype=complex).reshape(1, 2, 1) /
                   np.linalg.norm(v) for v in local_states]
        return MatrixProductState(tensors, center=0)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    def normalize(self):
        self.tensors[self.center] /= self.norm()
        return self

    def move_center(self, new_center: int, chi_max=None, svd_tol=0.0):
        """Shift the orthogonality center by successive QR/SVD moves."""
        while self.center < new_center:
            i = self.center
            t = self.tensors[i]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl * d, dr))
            self.tensors[i] = q.reshape(dl, d, -1)
            self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))
            self.center += 1
        while self.center > new_center:
            i = self.center
            t = self.tensors[i]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl, d * dr).T)
            self.tensors[i] = q.T.reshape(-1, d, dr)
            self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.T, axes=(2, 0))
            self.center -= 1
        return self

    def to_statevector(self) -> np.ndarray:
        amp = self.tensors[0]
        for t in self.tensors[1:]:
            amp = np.tensordot(amp, t, axes=(amp.ndim - 1, 0))
        return amp.reshape(-1)

    def expectation(self, op: OperatorSum):
        """Exact contraction of a Pauli-sum expectation value."""
        if op.n_sites != self.n_sites:
            raise MPSError("operator size mismatch")
        psi = self.copy().move_center(0).normalize()
        total = 0j
        for term in op.terms:
            ops = term.op_map
            env = np.ones((1, 1), dtype=complex)
            for i, t in enumerate(psi.tensors):
                mat = _PAULI_MATS.get(ops.get(i + 1, "I"))
                tt = np.tensordot(mat, t, axes=(1, 1)).transpose(1, 0, 2)
                env = np.tensordot(env, tt, axes=(1, 0))           # (bra, p, r)
                env = np.tensordot(t.conj(), env, axes=([0, 1], [0, 1]))  # (bra, ket)
            total += term.coeff * env[0, 0]
        if op.is_hermitian() and abs(total.imag) < 1e-10:
            return total.real
        return total

    def canonical_check(self, tol=1e-10) -> bool:
        for i, t in enumerate(self.tensors):
            dl, d, dr = t.shape
            if i < self.center:
                m = t.reshape(dl * d, dr)
                if not np.allclose(m.conj().T @ m, np.eye(dr), atol=tol):
                    return False
            elif i > self.center:
                m = t.reshape(dl, d * dr)
                if not np.allclose(m @ m.conj().T, np.eye(dl), atol=tol):
                    return False
        return True

    def save(self, path):
        """Versioned checkpoint: little-endian complex128 tensors."""
        payload = {f"tensor_{i}": t for i, t in enumerate(self.tensors)}
        np.savez(path, format_version=1, n_sites=self.n_sites,
                 center=self.center, **payload)

    @staticmethod
    def load(path) -> "MatrixProductState":
        data = np.load(path)
        if int(data["format_version"]) != 1:
            raise MPSError(f"unsupported checkpoint version {data['format_version']}")
        n = int(data["n_sites"])
        tensors = [data[f"tensor_{i}"] for i in range(n)]
        return MatrixProductState(tensors, center=int(data["center"]))


def product_mps(spec: InitialStateSpec, L: int) -> MatrixProductState:
    """Product MPS matching `exact.prepare_initial` (index 0 = |0>, 1 = |1>)."""
    spec.validate_for(L)
    c, s = math.cos(spec.theta / 2), math.sin(spec.theta / 2)
    locals_ = []
    for site in range(1, L + 1):
        if site % 2 == 1:
            bit = spec.s_pattern[(site - 1) // 2]
            locals_.append([1.0, 0.0] if bit == "0" else [0.0, 1.0])
        else:
            locals_.append([s, c])
    return MatrixProductState.from_product(locals_)


# -- MPO ----------------------------------------------------------------------


def operator_to_mpo(op: OperatorSum, compress_tol=1e-13) -> list[np.ndarray]:
    """Exact MPO for a Pauli sum: direct-sum of rank-1 MPOs followed by a
    two-sided SVD compression.  Tensors have shape (Dl, Dr, d, d)."""
    L = op.n_sites
    nt = len(op.terms)
    if nt == 0:
        raise MPSError("empty operator")
    ws = []
    for i in range(L):
        w = np.zeros((nt if i > 0 else 1, nt if i < L - 1 else 1, 2, 2), dtype=complex)
        for k, term in enumerate(op.terms):
            mat = _PAULI_MATS[term.op_map.get(i + 1, "I")]
            if i == 0:
                w[0, k if L > 1 else 0] += term.coeff * mat
            else:
                w[k, k if i < L - 1 else 0] = mat
        ws.append(w)
    # left-to-right QR-like compression, then right-to-left SVD truncation
    for i in range(L - 1):
        dl, dr, d, _ = ws[i].shape
        m = ws[i].transpose(0, 2, 3, 1).reshape(dl * d * d, dr)
        q, r = np.linalg.qr(m)
        ws[i] = q.reshape(dl, d, d, -1).transpose(0, 3, 1, 2)
        ws[i + 1] = np.tensordot(r, ws[i + 1], axes=(1, 0))
    for i in range(L - 1, 0, -1):
        dl, dr, d, _ = ws[i].shape
        m = ws[i].transpose(0, 2, 3, 1).reshape(dl, d * d * dr)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        keep = max(1, int(np.sum(s > compress_tol * s[0])))
        ws[i] = vt[:keep].reshape(keep, d, d, dr).transpose(0, 3, 1, 2)
        ws[i - 1] = np.tensordot(ws[i - 1], u[:, :keep] * s[:keep], axes=(1, 0))
        ws[i - 1] = ws[i - 1].transpose(0, 3, 1, 2)
    return ws


def mpo_expectation(psi: MatrixProductState, ws) -> complex:
    """<psi|W|psi> for an MPO with tensors (Dl, Dr, p_out, p_in)."""
    env = np.ones((1, 1, 1), dtype=complex)  # (bra, Dw, ket)
    m = psi.copy().move_center(0).normalize()
    for t, w in zip(m.tensors, ws):
        env = np.tensordot(env, t, axes=(2, 0))                   # (bra, Dw, p, r)
        env = np.tensordot(env, w, axes=([1, 2], [0, 3]))         # (bra, r, Dr, p')
        env = np.tensordot(t.conj(), env, axes=([0, 1], [0, 3]))  # (bra', r, Dr)
        env = env.transpose(0, 2, 1)
    return complex(env[0, 0, 0])


# -- DMRG ----------------------------------------------------------------------


@dataclass
class DmrgResult:
    state: MatrixProductState
    energy: float
    energies: list[float]
    converged: bool
    max_truncation: float
    warning: str | None = None


def _penalized(op: OperatorSum, mu: float) -> OperatorSum:
    """Add mu * (sum over matter sites of s^z)^2 to pin matter half-filling."""
    L = op.n_sites
    n_m = (L + 1) // 2
    terms = [PauliString.make({}, mu * n_m)]
    for a in range(1, n_m + 1):
        for b in range(1, n_m + 1):
            if a != b:
                terms.append(
                    PauliString.make({matter_site(a): "Z", matter_site(b): "Z"}, mu)
                )
    return op + OperatorSum(terms, L)


def dmrg_ground_state(H: OperatorSum, chi_max: int = 128, sweeps: int = 20,
                      conv_tol: float = 1e-9, psi0: MatrixProductState | None = None,
                      half_filling_penalty: float = 0.0,
                      svd_tol: float = 1e-9) -> DmrgResult:
    """Two-site DMRG ground-state search.

    With `half_filling_penalty` mu > 0, minimizes H + mu (sum s^z)^2, which
    pins the matter sector at half filling; the returned energy excludes the
    penalty (it is re-evaluated against the bare H).
    """
    if chi_max < 2:
        raise MPSError("chi_max must be >= 2")
    L = H.n_sites
    Hwork = _penalized(H, half_filling_penalty) if half_filling_penalty else H
    ws = operator_to_mpo(Hwork)
    if psi0 is None:
        rng = np.random.default_rng(7)
        locals_ = []
        for site in range(1, L + 1):
            if site % 2 == 1:
                ell = (site + 1) // 2
                locals_.append([1.0, 0.0] if ell % 2 == 0 else [0.0, 1.0])
            else:
                locals_.append([1.0, -1.0])  # tau along -x
        psi = MatrixProductState.from_product(locals_)
        # small random admixture breaks accidental symmetries of the guess
        for i, t in enumerate(psi.tensors):
            psi.tensors[i] = t + 0.01 * rng.standard_normal(t.shape)
        psi.move_center(0).normalize()
    else:
        psi = psi0.copy().move_center(0).normalize()

    # environments: left[i] for bonds to the left of site i
    left = [np.ones((1, 1, 1), dtype=complex)]
    right = [np.ones((1, 1, 1), dtype=complex)] * L

    def update_left(env, t, w):
        e = np.tensordot(env, t, axes=(2, 0))                   # (bra, Dw, p, r)
        e = np.tensordot(e, w, axes=([1, 2], [0, 3]))           # (bra, r, Dr, p')
        e = np.tensordot(t.conj(), e, axes=([0, 1], [0, 3]))    # (bra', r, Dr)
        return e.transpose(0, 2, 1)

    def update_right(env, t, w):
        e = np.tensordot(t, env, axes=(2, 2))                   # (l, p, bra, Dw)
        e = np.tensordot(w, e, axes=([1, 3], [3, 1]))           # (Dl, p', l, bra)
        e = np.tensordot(e, t.conj(), axes=([1, 3], [1, 2]))    # (Dl, l, l')
        return e.transpose(2, 0, 1)  # (bra, Dw, ket)

    for i in range(L - 1, 1, -1):
        right[i - 1] = update_right(right[i], psi.tensors[i], ws[i])

    energies = []
    e_prev = np.inf
    max_trunc = 0.0
    converged = False
    for sweep in range(sweeps):
        for direction in (0, 1):
            sites = range(L - 1) if direction == 0 else range(L - 2, -1, -1)
            for i in sites:
                psi.move_center(i if direction == 0 else i + 1)
                tl, tr = psi.tensors[i], psi.tensors[i + 1]
                dl = tl.shape[0]
                dr = tr.shape[2]
                theta = np.tensordot(tl, tr, axes=(2, 0))  # (dl, d, d, dr)
                shape = theta.shape
                Lenv = left[i]
                Renv = right[i + 1]
                wl, wr = ws[i], ws[i + 1]

                def matvec(v):
                    th = v.reshape(shape)
                    e = np.tensordot(Lenv, th, axes=(2, 0))           # bra,Dw,d1,d2,dr
                    e = np.tensordot(e, wl, axes=([1, 2], [0, 3]))    # bra,d2,dr,Dm,d1'
                    e = np.tensordot(e, wr, axes=([3, 1], [0, 3]))    # bra,dr,d1',Dr,d2'
                    e = np.tensordot(e, Renv, axes=([3, 1], [1, 2]))  # bra,d1',d2',bra_r
                    return e.reshape(-1)

                dim = int(np.prod(shape))
                op = spla.LinearOperator((dim, dim), matvec=matvec, dtype=complex)
                v0 = theta.reshape(-1)
                if dim <= 16:
                    dense = np.array([matvec(col) for col in np.eye(dim)], dtype=complex).T
                    dense = 0.5 * (dense + dense.conj().T)
                    evals, evecs = np.linalg.eigh(dense)
                    e0, vec = evals[0], evecs[:, 0]
                else:
                    evals, evecs = spla.eigsh(op, k=1, which="SA", v0=v0,
                                              tol=1e-10, maxiter=300)
                    e0, vec = evals[0], evecs[:, 0]
                theta = vec.reshape(dl * 2, 2 * dr)
                u, s, vt = np.linalg.svd(theta, full_matrices=False)
                keep = min(chi_max, int(np.sum(s > svd_tol * s[0])), len(s))
                keep = max(keep, 1)
                trunc = float(np.sum(s[keep:] ** 2) / np.sum(s**2))
                max_trunc = max(max_trunc, trunc)
                s_kept = s[:keep] / np.linalg.norm(s[:keep])
                if direction == 0:
                    psi.tensors[i] = u[:, :keep].reshape(dl, 2, keep)
                    psi.tensors[i + 1] = (s_kept[:, None] * vt[:keep]).reshape(keep, 2, dr)
                    psi.center = i + 1
                    left_new = update_left(left[i], psi.tensors[i], wl)
                    if i + 1 < len(left):
                        left[i + 1] = left_new
                    else:
                        left.append(left_new)
                else:
                    psi.tensors[i] = (u[:, :keep] * s_kept).reshape(dl, 2, keep)
                    psi.tensors[i + 1] = vt[:keep].reshape(keep, 2, dr)
                    psi.center = i
                    right[i] = update_right(right[i + 1], psi.tensors[i + 1], wr)
        energies.append(float(e0))
        if abs(e_prev - e0) < conv_tol * max(1.0, abs(e0)):
            converged = True
            break
        e_prev = e0
    psi.normalize()
    energy = float(np.real(psi.expectation(H)))
    warning = None
    if not converged:
        warning = f"DMRG did not converge to {conv_tol} in {sweeps} sweeps"
        warnings.warn(warning)
    return DmrgResult(psi, energy, energies, converged, max_trunc, warning)


# -- TEBD ----------------------------------------------------------------------


@dataclass
class TrotterPlan:
    """Three-site gate layers of a second-order split: groups of disjoint
    contiguous blocks, applied A(dt/2) B(dt/2) C(dt) B(dt/2) A(dt/2)."""

    blocks: dict      # block start site (1-based) -> 8x8 hermitian block matrix
    dt: float
    order: int = 2

    def gates(self, scale: float) -> dict:
        return {b: scipy.linalg.expm(-1j * TWO_PI * scale * m)
                for b, m in self.blocks.items()}


def _block_matrix(term: PauliString, start: int) -> np.ndarray:
    """8x8 matrix of a Pauli term embedded in the 3-site block at `start`."""
    mat = np.array([[term.coeff]])
    ops = term.op_map
    for site in (start, start + 1, start + 2):
        mat = np.kron(mat, _PAULI_MATS[ops.get(site, "I")])
    return mat


def trotter_plan(H: OperatorSum, dt: float) -> TrotterPlan:
    """Group all terms (range <= 3) into contiguous three-site blocks."""
    L = H.n_sites
    if L < 3:
        raise MPSError("TEBD needs at least 3 sites")
    blocks: dict = {}
    for term in H.terms:
        sup = term.support()
        if not sup:
            continue  # identity shifts only the global phase
        lo, hi = min(sup), max(sup)
        if hi - lo > 2:
            raise MPSError(f"term {term.ops} has range > 3; not TEBD-representable")
        start = min(lo, L - 2)
        blocks.setdefault(start, np.zeros((8, 8), dtype=complex))
        blocks[start] += _block_matrix(term, start)
    return TrotterPlan(blocks, dt)


@dataclass
class TebdResult:
    times: list[float]
    states: list[MatrixProductState]
    truncation_error: float
    max_bond: int
    saturated: bool = False


def _apply_three_site(psi, gate, b, chi_max, svd_tol):
    """Apply an 8x8 gate on sites b, b+1, b+2 (1-based); center ends at b+2.
    Returns the discarded weight."""
    i = b - 1
    psi.move_center(i)
    theta = np.tensordot(psi.tensors[i], psi.tensors[i + 1], axes=(2, 0))
    theta = np.tensordot(theta, psi.tensors[i + 2], axes=(3, 0))  # dl,d,d,d,dr
    dl, _, _, _, dr = theta.shape
    theta = np.tensordot(gate.reshape(2, 2, 2, 2, 2, 2), theta,
                         axes=([3, 4, 5], [1, 2, 3]))  # d1,d2,d3,dl,dr
    theta = theta.transpose(3, 0, 1, 2, 4)
    discarded = 0.0
    # first split: site b | (b+1, b+2)
    m = theta.reshape(dl * 2, 2 * 2 * dr)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    keep = min(chi_max, max(1, int(np.sum(s > svd_tol * s[0]))))
    discarded += float(np.sum(s[keep:] ** 2) / np.sum(s**2))
    psi.tensors[i] = u[:, :keep].reshape(dl, 2, keep)
    rest = (s[:keep, None] * vt[:keep]).reshape(keep * 2, 2 * dr)
    # second split: site b+1 | b+2
    u, s, vt = np.linalg.svd(rest, full_matrices=False)
    keep2 = min(chi_max, max(1, int(np.sum(s > svd_tol * s[0]))))
    discarded += float(np.sum(s[keep2:] ** 2) / np.sum(s**2))
    psi.tensors[i + 1] = u[:, :keep2].reshape(keep, 2, keep2)
    psi.tensors[i + 2] = (s[:keep2, None] * vt[:keep2]).reshape(keep2, 2, dr)
    psi.center = i + 2
    nrm = np.linalg.norm(psi.tensors[i + 2])
    psi.tensors[i + 2] /= nrm
    return discarded


def tebd_evolve(H: OperatorSum, psi0: MatrixProductState, t_max: float,
                dt: float = 0.002, chi_max: int = 256, svd_tol: float = 1e-10,
                sample_every: int | None = None, order: int = 2,
                observe=None) -> TebdResult:
    """Trotterized evolution under exp(-i*2pi*H*t).

    order=2: symmetric Suzuki-Trotter over the three disjoint block groups.
    order=4: the 5-fold Suzuki fractal composition of the order-2 step.
    Samples the state every `sample_every` steps.  With `observe`, a callable
    (t, psi) -> None is invoked at each sample instead of storing a copy.
    """
    if dt <= 0:
        raise MPSError("dt must be > 0")
    if order not in (2, 4):
        raise MPSError("order must be 2 or 4")
    plan = trotter_plan(H, dt)
    groups = [sorted(b for b in plan.blocks if (b - 1) % 3 == r) for r in range(3)]
    n_steps = int(round(t_max / dt))
    if sample_every is None:
        sample_every = max(1, n_steps // 200)
    psi = psi0.copy()
    trunc = 0.0
    max_bond = max(psi.bond_dims) if psi.bond_dims else 1
    times, states = [0.0], []
    if observe is not None:
        observe(0.0, psi)
    else:
        states.append(psi.copy())

    def sweep(gates, group):
        nonlocal trunc, max_bond
        for b in group:
            trunc += _apply_three_site(psi, gates[b], b, chi_max, svd_tol)
        if psi.bond_dims:
            max_bond = max(max_bond, max(psi.bond_dims))

    # gate caches per substep scale
    if order == 2:
        scales = [1.0]
    else:
        p = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
        scales = [p, p, 1.0 - 4.0 * p, p, p]
    gate_cache = {s: (plan.gates(s * dt / 2), plan.gates(s * dt)) for s in set(scales)}

    def s2_step(scale):
        half, full = gate_cache[scale]
        sweep(half, groups[0])
        sweep(half, groups[1])
        sweep(full, groups[2])
        sweep(half, groups[1])
        sweep(half, groups[0])

    for step in range(1, n_steps + 1):
        for s in scales:
            s2_step(s)
        if step % sample_every == 0 or step == n_steps:
            t = step * dt
            times.append(t)
            psi.move_center(0).normalize()
            if observe is not None:
                observe(t, psi)
            else:
                states.append(psi.copy())
    saturated = max_bond >= chi_max
    if saturated:
        warnings.warn(
            f"TEBD bond dimension saturated at chi_max={chi_max}; "
            f"cumulative discarded weight {trunc:.3e}"
        )
    return TebdResult(times, states, trunc, max_bond, saturated)
