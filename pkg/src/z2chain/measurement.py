"""Measurement-chain model: finite-shot sampling, per-qubit readout error
and its inverse-calibration correction, and Z-line crosstalk compensation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DEVICE_READOUT_FIDELITIES


@dataclass(frozen=True)
class ReadoutModel:
    """Per-qubit readout fidelities; F_g = P(read 0 | prepared 0),
    F_e = P(read 1 | prepared 1)."""

    f_g: tuple[float, ...]
    f_e: tuple[float, ...]

    def __post_init__(self):
        if len(self.f_g) != len(self.f_e):
            raise ValueError("f_g and f_e lengths differ")
        for fg, fe in zip(self.f_g, self.f_e):
            if not (0 <= fg <= 1 and 0 <= fe <= 1):
                raise ValueError("fidelities must lie in [0,1]")
            if fg + fe <= 1:
                raise ValueError("calibration matrix singular: needs F_g + F_e > 1")

    @property
    def n_qubits(self):
        return len(self.f_g)

    def matrix(self, j: int) -> np.ndarray:
        """Calibration matrix of qubit j (1-based): maps true (P0, P1) to
        measured (P0, P1)."""
        fg, fe = self.f_g[j - 1], self.f_e[j - 1]
        return np.array([[fg, 1 - fe], [1 - fg, fe]])


def device_readout_model() -> ReadoutModel:
    fg = tuple(x[0] for x in DEVICE_READOUT_FIDELITIES)
    fe = tuple(x[1] for x in DEVICE_READOUT_FIDELITIES)
    return ReadoutModel(fg, fe)


# -- Z crosstalk -------------------------------------------------------------

# Measured Z crosstalk rows; the Q9 row is absent from the calibration data,
# so the ingestor inserts an identity row there and warns.
_CROSSTALK_ROWS = {
    1: (1.0000, -0.0032, 0.0112, 0.0031, -0.0012, 0.0064, 0.0033, 0.0037, 0.0027, 0.0034),
    2: (-0.0023, 1.0000, -0.0041, -0.0033, 0.0000, -0.0036, -0.0020, -0.0026, -0.0021, -0.0024),
    3: (-0.0058, -0.0377, 1.0000, -0.0077, 0.0005, -0.0075, -0.0049, -0.0065, -0.0052, -0.0057),
    4: (-0.0028, -0.0068, -0.0085, 1.0000, -0.0029, -0.0026, 0.0031, -0.0027, -0.0028, -0.0028),
    5: (0.0051, 0.0102, 0.0081, 0.0297, 1.0000, 0.0039, 0.0050, 0.0069, 0.0055, 0.0049),
    6: (0.0033, 0.0061, 0.0040, 0.0090, -0.0102, 1.0000, 0.0082, 0.0064, 0.0045, 0.0037),
    7: (-0.0049, -0.0085, -0.0050, -0.0098, 0.0060, 0.0188, 1.0000, -0.0220, -0.0103, -0.0061),
    8: (-0.0030, -0.0049, -0.0028, -0.0053, 0.0028, 0.0052, 0.0010, 1.0000, -0.0113, -0.0042),
    10: (0.0031, 0.0045, 0.0024, 0.0048, -0.0026, -0.0053, -0.0025, -0.0075, -0.0072, 1.0000),
}


@dataclass
class CrosstalkMatrix:
    m_z: np.ndarray
    filled_rows: tuple[int, ...] = ()  # rows replaced by identity (missing data)

    def __post_init__(self):
        self.m_z = np.asarray(self.m_z, dtype=float)
        n, m = self.m_z.shape
        if n != m:
            raise ValueError("crosstalk matrix must be square")
        if not np.allclose(np.diag(self.m_z), 1.0):
            raise ValueError("crosstalk diagonal must be 1")

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.m_z))


def device_crosstalk(warn=None) -> CrosstalkMatrix:
    """The measured 10x10 Z crosstalk map; the missing Q9 row is completed
    with an identity row, reported via `filled_rows` (and `warn`, if given)."""
    n = 10
    m = np.eye(n)
    filled = []
    for row in range(1, n + 1):
        if row in _CROSSTALK_ROWS:
            m[row - 1] = _CROSSTALK_ROWS[row]
        else:
            filled.append(row)
            if warn is not None:
                warn(f"crosstalk row Q{row} missing from calibration data; using identity row")
    return CrosstalkMatrix(m, tuple(filled))


def crosstalk_compensate(z_target, M: CrosstalkMatrix) -> np.ndarray:
    """Applied biases z_app = M^-1 z_target so the felt biases equal z_target."""
    z_target = np.asarray(z_target, dtype=float)
    if z_target.shape != (M.m_z.shape[0],):
        raise ValueError("dimension mismatch")
    return np.linalg.solve(M.m_z, z_target)


# -- shot sampling -----------------------------------------------------------

# maps |+x> -> |1> and |-x> -> |0>, so bit '1' always means eigenvalue +1
_X_TO_Z = np.array([[1, -1], [1, 1]]) / math.sqrt(2)


def _rotate_basis(psi, bases):
    """Rotate every X-basis site so that a computational-basis sample of the
    returned amplitudes realizes the requested measurement."""
    amps = psi.amps
    L = psi.n_sites
    for site, basis in enumerate(bases, start=1):
        if basis == "Z":
            continue
        if basis != "X":
            raise ValueError(f"unsupported basis {basis!r}")
        t = amps.reshape((1 << (site - 1), 2, 1 << (L - site)))
        amps = np.einsum("ab,ibj->iaj", _X_TO_Z, t).reshape(-1)
    return amps


@dataclass
class ShotCounts:
    counts: dict  # bitstring (site-1 first) -> count
    bases: str
    n_sites: int
    seed: int | None = None

    @property
    def n_shots(self):
        return sum(self.counts.values())

    def marginal(self, site: int) -> float:
        """Fraction of shots reading 1 on `site` (1-based)."""
        tot = self.n_shots
        return sum(c for b, c in self.counts.items() if b[site - 1] == "1") / tot

    def dumps(self) -> str:
        lines = [f"# shots n_sites={self.n_sites} bases={self.bases} seed={self.seed}"]
        for b in sorted(self.counts):
            lines.append(f"{b} {self.counts[b]}")
        return "\n".join(lines) + "\n"


def sample_shots(psi, bases, n_shots: int, seed) -> ShotCounts:
    """Draw basis-rotated computational-basis samples from |psi|^2.

    `bases` is a string over {'Z','X'}, one per site.  Deterministic for a
    given seed.  In the returned bitstrings, '1' always marks the +1
    eigenstate of the measured axis (|1> for Z, |+x> for X)."""
    bases = str(bases)
    if len(bases) != psi.n_sites:
        raise ValueError("need one basis letter per site")
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    amps = _rotate_basis(psi, bases)
    probs = np.abs(amps) ** 2
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(probs), size=n_shots, p=probs)
    counts: dict = {}
    L = psi.n_sites
    for d, c in zip(*np.unique(draws, return_counts=True)):
        bits = format(int(d), f"0{L}b")
        counts[bits] = counts.get(bits, 0) + int(c)
    return ShotCounts(counts, bases, L, seed if isinstance(seed, int) else None)


def apply_readout_error(shots: ShotCounts, model: ReadoutModel, seed) -> ShotCounts:
    """Corrupt counts through independent per-qubit bit-flip channels:
    a 1 is misread with probability 1 - F_e and a 0 with 1 - F_g."""
    if model.n_qubits != shots.n_sites:
        raise ValueError("model size mismatch")
    rng = np.random.default_rng(seed)
    out: dict = {}
    for bits, count in sorted(shots.counts.items()):
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        flips_p = np.where(arr == 1,
                           [1 - f for f in model.f_e],
                           [1 - f for f in model.f_g])
        u = rng.random((count, shots.n_sites))
        corrupted = np.where(u < flips_p, 1 - arr, arr)
        for row in corrupted:
            key = "".join("1" if b else "0" for b in row)
            out[key] = out.get(key, 0) + 1
    return ShotCounts(out, shots.bases, shots.n_sites, shots.seed)


def correct_readout(probs, model: ReadoutModel, sites=None):
    """Apply the inverse calibration matrix per qubit to a marginal-probability
    vector [(P0, P1), ...].  Results are clipped to [0,1] and renormalized;
    returns (corrected, clip_magnitude)."""
    if sites is None:
        sites = range(1, model.n_qubits + 1)
    corrected = []
    clip = 0.0
    for (p0, p1), j in zip(probs, sites):
        inv = np.linalg.inv(model.matrix(j))
        q = inv @ np.array([p0, p1])
        clipped = np.clip(q, 0.0, 1.0)
        clip = max(clip, float(np.max(np.abs(clipped - q))))
        s = clipped.sum()
        corrected.append(tuple(clipped / s if s > 0 else [0.5, 0.5]))
    return corrected, clip


def correct_marginals(shots: ShotCounts, model: ReadoutModel):
    """Readout-corrected P_j(1) estimates for every site."""
    probs = [(1 - shots.marginal(j), shots.marginal(j))
             for j in range(1, shots.n_sites + 1)]
    corrected, _ = correct_readout(probs, model)
    return np.array([p1 for _, p1 in corrected])


def joint_correlator_from_shots(shots: ShotCounts, sites, paulis,
                                model: ReadoutModel | None = None) -> float:
    """Empirical <P_a P_b P_c> as the mean of eigenvalue products over shots.

    Requires the shots to have been drawn in the matching per-site bases.
    With `model`, applies the tensor-product inverse calibration over the
    three sites to the joint outcome distribution first."""
    sites = tuple(sites)
    for site, p in zip(sites, paulis):
        want = "Z" if p == "Z" else "X"
        if shots.bases[site - 1] != want:
            raise ValueError(
                f"basis mismatch at site {site}: counts use {shots.bases[site - 1]}, "
                f"correlator needs {want}"
            )
    # joint distribution over the 8 outcomes of the three sites
    joint = np.zeros(8)
    total = shots.n_shots
    for bits, count in shots.counts.items():
        k = 0
        for site in sites:
            k = (k << 1) | (bits[site - 1] == "1")
        joint[k] += count / total
    if model is not None:
        cal = np.array([[1.0]])
        for site in sites:
            cal = np.kron(cal, model.matrix(site))
        joint = np.linalg.solve(cal, joint)
        joint = np.clip(joint, 0.0, None)
        joint /= joint.sum()
    est = 0.0
    for k in range(8):
        sign = 1.0
        for b in range(3):
            if (k >> (2 - b)) & 1:
                sign *= 1.0  # bit 1 = |1> or |+x>: eigenvalue +1
            else:
                sign *= -1.0
        est += sign * joint[k]
    return float(est)
