"""Symbolic Pauli-string algebra and the chain Hamiltonians.

An operator is a weighted sum of Pauli products over sites 1..L.  The three
builders return the full XY Hamiltonian, the effective matter/gauge
Hamiltonian, and (via ``rotate_frame``) its rotated-frame version.
Coefficients are MHz; matrices are only materialized inside the engines.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .params import DeviceParams, gauge_site, matter_site

_PAULIS = ("X", "Y", "Z")

# single-qubit products: _MUL[(a, b)] = (phase, c) with a.b = phase * c  ('I' = identity)
_MUL = {
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


@dataclass(frozen=True)
class PauliString:
    """A single weighted Pauli product; ``ops`` maps site -> 'X'|'Y'|'Z'.

    Identity sites are omitted, so an empty map is the identity operator.
    """

    ops: tuple  # sorted tuple of (site, label)
    coeff: complex

    @staticmethod
    def make(ops, coeff) -> "PauliString":
        if isinstance(ops, dict):
            items = ops.items()
        else:
            items = ops
        norm_ops = []
        for site, label in sorted(items):
            site = int(site)
            if site < 1:
                raise ValueError(f"site indices are 1-based, got {site}")
            if label not in _PAULIS:
                raise ValueError(f"bad Pauli label {label!r}")
            norm_ops.append((site, label))
        return PauliString(tuple(norm_ops), complex(coeff))

    @property
    def op_map(self) -> dict:
        return dict(self.ops)

    def support(self):
        return tuple(site for site, _ in self.ops)

    def __mul__(self, other: "PauliString") -> "PauliString":
        a, b = self.op_map, other.op_map
        phase = 1 + 0j
        out = {}
        for site in set(a) | set(b):
            if site in a and site in b:
                ph, c = _MUL[(a[site], b[site])]
                phase *= ph
                if c != "I":
                    out[site] = c
            else:
                out[site] = a.get(site, b.get(site))
        return PauliString.make(out, phase * self.coeff * other.coeff)


class OperatorSum:
    """Normalized sum of Pauli strings on a chain of ``n_sites`` sites."""

    def __init__(self, terms, n_sites: int):
        merged: dict = {}
        for t in terms:
            if t.ops and t.ops[-1][0] > n_sites:
                raise ValueError(f"term {t.ops} exceeds n_sites={n_sites}")
            merged[t.ops] = merged.get(t.ops, 0j) + t.coeff
        self.terms = tuple(
            PauliString(ops, c) for ops, c in sorted(merged.items()) if abs(c) > 1e-14
        )
        self.n_sites = int(n_sites)

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        if other.n_sites != self.n_sites:
            raise ValueError("size mismatch")
        return OperatorSum(self.terms + other.terms, self.n_sites)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "OperatorSum":
        return OperatorSum(
            [PauliString(t.ops, scalar * t.coeff) for t in self.terms], self.n_sites
        )

    def __matmul__(self, other: "OperatorSum") -> "OperatorSum":
        if other.n_sites != self.n_sites:
            raise ValueError("size mismatch")
        return OperatorSum(
            [a * b for a in self.terms for b in other.terms], self.n_sites
        )

    def adjoint(self) -> "OperatorSum":
        return OperatorSum(
            [PauliString(t.ops, t.coeff.conjugate()) for t in self.terms], self.n_sites
        )

    def is_hermitian(self, tol=1e-12) -> bool:
        return all(abs(t.coeff.imag) <= tol for t in self.terms)

    def norm2(self) -> float:
        """Coefficient two-norm; proportional to the Frobenius norm
        (Pauli strings are orthogonal under the trace inner product)."""
        return math.sqrt(sum(abs(t.coeff) ** 2 for t in self.terms))

    def coeff_of(self, ops) -> complex:
        key = PauliString.make(ops, 1.0).ops
        for t in self.terms:
            if t.ops == key:
                return t.coeff
        return 0j

    def __eq__(self, other):
        return (
            isinstance(other, OperatorSum)
            and self.n_sites == other.n_sites
            and (self - other).norm2() < 1e-12
        )

    def __repr__(self):
        body = " + ".join(
            f"({t.coeff:.6g})*" + "".join(f"{l}{s}" for s, l in t.ops) if t.ops
            else f"({t.coeff:.6g})*I"
            for t in self.terms[:8]
        )
        tail = " + ..." if len(self.terms) > 8 else ""
        return f"OperatorSum[{self.n_sites} sites]({body}{tail})"

    # -- stable text dump: one term per line, "coeff_re coeff_im site:P ..." --

    def dumps(self) -> str:
        lines = [f"# operator n_sites={self.n_sites} terms={len(self.terms)}"]
        for t in self.terms:
            body = " ".join(f"{s}:{l}" for s, l in t.ops)
            lines.append(f"{t.coeff.real:+.17g} {t.coeff.imag:+.17g} {body}".rstrip())
        return "\n".join(lines) + "\n"

    @staticmethod
    def loads(text: str) -> "OperatorSum":
        n_sites = None
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line.split():
                    if tok.startswith("n_sites="):
                        n_sites = int(tok.split("=")[1])
                continue
            parts = line.split()
            coeff = complex(float(parts[0]), float(parts[1]))
            ops = {}
            for tok in parts[2:]:
                site, label = tok.split(":")
                ops[int(site)] = label
            terms.append(PauliString.make(ops, coeff))
        if n_sites is None:
            raise ValueError("operator dump lacks n_sites header")
        return OperatorSum(terms, n_sites)


def identity(n_sites: int, coeff=1.0) -> OperatorSum:
    return OperatorSum([PauliString.make({}, coeff)], n_sites)


def single(site: int, label: str, n_sites: int, coeff=1.0) -> OperatorSum:
    return OperatorSum([PauliString.make({site: label}, coeff)], n_sites)


def _hop(i: int, j: int, coeff: float, n_sites: int, middle=None) -> list:
    """coeff * (sigma+_i sigma-_j + H.c.) = coeff/2 * (X_i X_j + Y_i Y_j),
    optionally dressed with an extra Pauli on a middle site."""
    extra = dict(middle or {})
    return [
        PauliString.make({i: "X", j: "X", **extra}, coeff / 2),
        PauliString.make({i: "Y", j: "Y", **extra}, coeff / 2),
    ]


def _neighbor(j: int, step: int, L: int, periodic: bool):
    k = j + step
    if k <= L:
        return k
    return k - L if periodic else None


def build_full(params: DeviceParams, boundary="open") -> OperatorSum:
    """Full XY Hamiltonian: NN hops g_j, NNN hops lambda_j, longitudinal
    field -V_j/2 per site, transverse field h_x on even sites.

    The longitudinal term enters as -(V_j/2) Z_j because the device detuning
    tables label the detuned (excited) manifold as the spin-down state: the
    single-excitation pattern ``00100`` is the spin state up-up-down-up-up.
    With our Z = |1><1| - |0><0| and bit '1' as the excited state, a positive
    detuning V therefore lowers the |0> level, i.e. the field couples with a
    minus sign.  This is the convention under which the quench phenomenology
    (localization at theta ~ -pi/2 - beta, delocalization at theta = pi)
    comes out with the observed orientation.
    """
    L = params.n_sites
    periodic = boundary == "periodic"
    terms = []
    for j in range(1, L + 1):
        if j <= len(params.g_nn) or periodic:
            k = _neighbor(j, 1, L, periodic)
            if k is not None:
                g = params.g_nn[(j - 1) % len(params.g_nn)]
                terms += _hop(j, k, g, L)
        if j <= len(params.lambda_nnn) or periodic:
            k = _neighbor(j, 2, L, periodic)
            if k is not None:
                lam = params.lambda_nnn[(j - 1) % len(params.lambda_nnn)]
                terms += _hop(j, k, lam, L)
        if params.v_long[j - 1] != 0.0:
            terms.append(PauliString.make({j: "Z"}, -params.v_long[j - 1] / 2))
        if j % 2 == 0 and params.h_x != 0.0:
            terms.append(PauliString.make({j: "X"}, params.h_x))
    H = OperatorSum(terms, L)
    assert H.is_hermitian()
    return H


def build_effective(params: DeviceParams, boundary="open") -> OperatorSum:
    """Effective matter/gauge Hamiltonian on the same 2^L space.

    Matter hops g_eff[l-1] * (s+_l tau^z_{l+1/2} s-_{l+1} + H.c.), electric
    field h_x tau^x, gauge hops -g_eff * (tau+ s^z tau- + H.c.), residual
    NNN hops lambda, and h_z tau^z.  g_eff carries its own sign (device
    value -1.8 MHz); the homogeneous convention is reached via g_eff = -g.
    """
    L = params.n_sites
    if L % 2 != 0:
        raise ValueError(f"effective Hamiltonian needs even n_sites, got {L}")
    if not params.g_eff:
        raise ValueError("params.g_eff is required for the effective Hamiltonian")
    periodic = boundary == "periodic"
    n_m = params.n_matter
    terms = []

    def g_tilde(bond):  # matter bond l, 1-based
        return params.g_eff[(bond - 1) % len(params.g_eff)]

    # H1: three-body matter hops + electric field
    last_bond = n_m if periodic else n_m - 1
    for ell in range(1, last_bond + 1):
        a = matter_site(ell)
        b = gauge_site(ell + 0.5)
        c = matter_site(ell + 1) if ell + 1 <= n_m else matter_site(1)
        terms += _hop(a, c, g_tilde(ell), L, middle={b: "Z"}) if a < c else \
                 _hop(c, a, g_tilde(ell), L, middle={b: "Z"})
    for ell in range(1, params.n_gauge + 1):
        if params.h_x != 0.0:
            terms.append(PauliString.make({gauge_site(ell + 0.5): "X"}, params.h_x))
        if params.h_z != 0.0:
            terms.append(PauliString.make({gauge_site(ell + 0.5): "Z"}, params.h_z))

    # H2: three-body gauge hops over interior matter sites
    first = 1 if periodic else 2
    for ell in range(first, n_m + 1):
        a = gauge_site(ell - 0.5) if ell > 1 else L  # tau_{1/2} wraps to the last link
        b = matter_site(ell)
        c = gauge_site(ell + 0.5)
        terms += _hop(a, c, -g_tilde(max(ell - 1, 1)), L, middle={b: "Z"})

    # H3: residual NNN two-body hops
    for j in range(1, L + 1):
        if j > len(params.lambda_nnn) and not periodic:
            continue
        k = _neighbor(j, 2, L, periodic)
        if k is None:
            continue
        lam = params.lambda_nnn[(j - 1) % len(params.lambda_nnn)]
        if lam != 0.0:
            terms += _hop(min(j, k), max(j, k), lam, L)

    H = OperatorSum(terms, L)
    assert H.is_hermitian()
    return H


def rotate_frame(op: OperatorSum, beta: float) -> OperatorSum:
    """Conjugate by the gauge-site rotation taking
    tau^x -> cos(beta) tau^x + sin(beta) tau^z and
    tau^z -> cos(beta) tau^z - sin(beta) tau^x; matter sites untouched.
    """
    c, s = math.cos(beta), math.sin(beta)
    out = []
    for t in op.terms:
        expanded = [({}, t.coeff)]
        for site, label in t.ops:
            if site % 2 == 1 or label == "Y":
                for ops, _ in expanded:
                    ops[site] = label
                continue
            new = []
            if label == "X":
                parts = [("X", c), ("Z", s)]
            else:  # Z
                parts = [("Z", c), ("X", -s)]
            for ops, coeff in expanded:
                for lbl, w in parts:
                    ops2 = dict(ops)
                    ops2[site] = lbl
                    new.append((ops2, coeff * w))
            expanded = new
        out += [PauliString.make(ops, coeff) for ops, coeff in expanded]
    return OperatorSum(out, op.n_sites)


def build_rotated_effective(params: DeviceParams, boundary="open") -> OperatorSum:
    """Effective Hamiltonian in the rotated gauge frame, beta = arctan(h_z/h_x).

    ``rotate_frame`` is the active map; expressing operators in the frame
    whose x axis points along the combined (h_x, h_z) field is the passive
    rotation, i.e. the active one by -beta.  In the result the gauge field
    is purely transverse with magnitude hypot(h_x, h_z).
    """
    return rotate_frame(build_effective(params, boundary), -params.beta)


def matter_number(n_sites: int) -> OperatorSum:
    """Total matter excitation sum_l s+_l s-_l = sum_odd (1 + Z_j)/2."""
    n_m = (n_sites + 1) // 2
    terms = [PauliString.make({}, n_m / 2)]
    terms += [PauliString.make({matter_site(l): "Z"}, 0.5) for l in range(1, n_m + 1)]
    return OperatorSum(terms, n_sites)


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    if a.n_sites != b.n_sites:
        raise ValueError("size mismatch")
    return a @ b - b @ a


def commutator_norm(a: OperatorSum, b: OperatorSum) -> float:
    """Coefficient two-norm of [a, b]; exactly 0 iff they commute."""
    return commutator(a, b).norm2()
