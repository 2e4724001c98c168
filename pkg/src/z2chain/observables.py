"""Physics observables: occupation profiles, extended imbalance, the gauge
generator ansatz and its steady curve, Z2 charge/flux Gauss-law diagnostics,
steady-value extraction, and curve fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .params import DeviceParams, gauge_site, matter_site
from .pauli import OperatorSum, PauliString


@dataclass
class ObservableSeries:
    name: str
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly ascending")


def occupation_profile(psi, odd_only: bool = True) -> np.ndarray:
    """P_j = <sigma+_j sigma-_j>, the |1> population per site.

    Works on any state object exposing `.n_sites` and `.expectation(op)`.
    """
    L = psi.n_sites
    sites = range(1, L + 1, 2) if odd_only else range(1, L + 1)
    out = []
    for j in sites:
        z = psi.expectation(OperatorSum([PauliString.make({j: "Z"}, 1.0)], L))
        p = (1.0 + float(np.real(z))) / 2.0
        assert -1e-8 <= p <= 1 + 1e-8, f"P_{j}={p} out of [0,1]"
        out.append(min(max(p, 0.0), 1.0))
    return np.array(out)


def imbalance_weights(s_pattern: str) -> np.ndarray:
    n1 = s_pattern.count("1")
    n0 = s_pattern.count("0")
    if n1 == 0 or n0 == 0:
        raise ValueError("imbalance undefined: pattern needs both 0s and 1s")
    return np.array([1.0 / n1 if c == "1" else -1.0 / n0 for c in s_pattern])


def extended_imbalance(profile, s_pattern: str) -> float:
    """I = sum_j eta_j P_j over matter sites, eta = 1/N1 on initially-|1>
    sites and -1/N0 on initially-|0> sites."""
    profile = np.asarray(profile, dtype=float)
    eta = imbalance_weights(s_pattern)
    if len(profile) != len(eta):
        raise ValueError("profile and pattern lengths differ")
    val = float(eta @ profile)
    assert -1.0 - 1e-9 <= val <= 1.0 + 1e-9, f"imbalance {val} out of bounds"
    return val


def gauge_generator(ell: int, alpha: float, n_sites: int) -> OperatorSum:
    """Three-site gauge-generator ansatz
    G_l(alpha) = T(alpha) s^z_l T(alpha) with T = cos(a) tau^x + sin(a) tau^z,
    on physical sites (2l-2, 2l-1, 2l)."""
    a, b, c = 2 * ell - 2, 2 * ell - 1, 2 * ell
    if a < 1 or c > n_sites:
        raise ValueError(f"ell={ell} has no interior gauge neighbors for L={n_sites}")
    ca, sa = math.cos(alpha), math.sin(alpha)
    terms = [
        PauliString.make({a: "X", b: "Z", c: "X"}, ca * ca),
        PauliString.make({a: "X", b: "Z", c: "Z"}, sa * ca),
        PauliString.make({a: "Z", b: "Z", c: "X"}, sa * ca),
        PauliString.make({a: "Z", b: "Z", c: "Z"}, sa * sa),
    ]
    return OperatorSum(terms, n_sites)


def gauge_correlator_ops(ell: int, n_sites: int) -> dict[str, OperatorSum]:
    """The four three-site correlators whose linear combination gives
    <G_l(alpha)> for any alpha."""
    a, b, c = 2 * ell - 2, 2 * ell - 1, 2 * ell
    if a < 1 or c > n_sites:
        raise ValueError(f"ell={ell} has no interior gauge neighbors for L={n_sites}")
    labels = {"xzx": ("X", "X"), "xzz": ("X", "Z"), "zzx": ("Z", "X"), "zzz": ("Z", "Z")}
    return {
        name: OperatorSum([PauliString.make({a: la, b: "Z", c: lc}, 1.0)], n_sites)
        for name, (la, lc) in labels.items()
    }


def gauge_value_from_correlators(alpha, xzx, xzz, zzx, zzz):
    """<G(alpha)> = cos^2 a * xzx + sin a cos a * (xzz + zzx) + sin^2 a * zzz."""
    ca, sa = np.cos(alpha), np.sin(alpha)
    return ca * ca * xzx + sa * ca * (xzz + zzx) + sa * sa * zzz


@dataclass
class GaugeAnsatzCurve:
    alphas: np.ndarray
    steady_values: np.ndarray
    offset: float      # c   in c + A sin(2a + phi)
    amplitude: float   # A
    phase: float       # phi
    alpha_star: float  # extremum of largest |value|, in (-pi/2, pi/2]
    residual: float
    coeff_cos: float = 0.0  # B in the equivalent c + B cos 2a + C sin 2a
    coeff_sin: float = 0.0  # C


def _window_mean(times, values, window):
    times = np.asarray(times)
    mask = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    if not np.any(mask):
        raise ValueError(f"no samples inside window {window}")
    return float(np.mean(np.asarray(values)[mask]))


def gauge_curve(times, correlators: dict, alphas, window) -> GaugeAnsatzCurve:
    """Steady gauge curve from the four correlator time series.

    `correlators` maps 'xzx'/'xzz'/'zzx'/'zzz' to value arrays over `times`.
    The steady value at each alpha is the window average; the curve is then
    exactly c + B cos(2a) + C sin(2a), solved in closed form.
    """
    m = {k: _window_mean(times, v, window) for k, v in correlators.items()}
    cbar = 0.5 * (m["xzx"] + m["zzz"])
    B = 0.5 * (m["xzx"] - m["zzz"])
    C = 0.5 * (m["xzz"] + m["zzx"])
    alphas = np.asarray(alphas, dtype=float)
    vals = gauge_value_from_correlators(alphas, m["xzx"], m["xzz"], m["zzx"], m["zzz"])
    A = math.hypot(B, C)
    # c + B cos2a + C sin2a = c + A sin(2a + phi) with phi = atan2(B, C)
    phi = math.atan2(B, C)
    # alpha* is the extremum where |c + B cos2a + C sin2a| is largest: the
    # surviving (conserved) component dominates there.  maximum of the
    # sinusoid at 2a = atan2(C, B), minimum at atan2(-C, -B).
    if abs(cbar + A) >= abs(cbar - A):
        alpha_star = 0.5 * math.atan2(C, B)
    else:
        alpha_star = 0.5 * math.atan2(-C, -B)
    if alpha_star <= -math.pi / 2:
        alpha_star += math.pi
    elif alpha_star > math.pi / 2:
        alpha_star -= math.pi
    fit = cbar + A * np.sin(2 * alphas + phi)
    residual = float(np.max(np.abs(fit - vals))) if len(alphas) else 0.0
    return GaugeAnsatzCurve(
        alphas=alphas, steady_values=vals, offset=cbar, amplitude=A, phase=phi,
        alpha_star=alpha_star, residual=residual, coeff_cos=B, coeff_sin=C,
    )


def gauss_sign_exponent(i: int, j: int) -> int:
    """f(i,j) = (j-i+1)(j+i+2)/2; always an integer."""
    num = (j - i + 1) * (j + i + 2)
    assert num % 2 == 0
    return num // 2


def z2_charge(i: int, j: int, n_sites: int) -> OperatorSum:
    """Z2 charge string W(i,j) = prod_{i<=k<=j} s^z_k on matter sites."""
    n_m = (n_sites + 1) // 2
    if not 1 <= i <= j <= n_m:
        raise ValueError(f"need 1 <= i <= j <= {n_m}, got ({i}, {j})")
    ops = {matter_site(k): "Z" for k in range(i, j + 1)}
    return OperatorSum([PauliString.make(ops, 1.0)], n_sites)


def z2_flux(i: int, j: int, n_sites: int, beta: float) -> OperatorSum:
    """Z2 flux C(i,j) = tau~^x_{i-1/2} tau~^x_{j+1/2} in the beta-rotated
    gauge frame (tau~^x = cos b tau^x + sin b tau^z)."""
    if i < 2:
        raise ValueError(f"flux needs the left boundary link; i must be >= 2, got {i}")
    left, right = gauge_site(i - 0.5), gauge_site(j + 0.5)
    if right > n_sites:
        raise ValueError(f"flux right link {right} outside chain of {n_sites}")
    cb, sb = math.cos(beta), math.sin(beta)
    terms = []
    for la, wa in (("X", cb), ("Z", sb)):
        for lb, wb in (("X", cb), ("Z", sb)):
            terms.append(PauliString.make({left: la, right: lb}, wa * wb))
    return OperatorSum(terms, n_sites)


def gauss_law_residual(psi, i: int, j: int, beta: float) -> float:
    """|<C(i,j)> - (-1)^f(i,j) <W(i,j)>| on a state."""
    L = psi.n_sites
    c = float(np.real(psi.expectation(z2_flux(i, j, L, beta))))
    w = float(np.real(psi.expectation(z2_charge(i, j, L))))
    sign = -1.0 if gauss_sign_exponent(i, j) % 2 else 1.0
    return abs(c - sign * w)


def gauge_correlation_residual(psi, i: int, j: int, beta: float) -> float:
    """1 - |<C(i,j) W(i,j)>| on a state.

    The product C(i,j) W(i,j) equals (up to sign) the string of gauge
    generators G_i ... G_j, so this residual vanishes on any eigenstate of
    the generators, regardless of which gauge sector (+1 or -1 per link)
    the state lives in.  Unlike `gauss_law_residual`, which compares the
    two expectation values with the vacuum-sector sign, it is insensitive
    to mixing inside degenerate multiplets and is therefore the right
    per-eigenstate measure when scanning a whole spectrum.
    """
    L = psi.n_sites
    cw = z2_flux(i, j, L, beta) @ z2_charge(i, j, L)
    return 1.0 - abs(float(np.real(psi.expectation(cw))))


def meanfield_residual(psi, params: DeviceParams) -> float:
    """max over gauge links of |lambda_s - g sin(beta) <tau~^x>|, the
    mean-field measure of how well the gauge-breaking matter hop cancels."""
    beta = params.beta
    L = psi.n_sites
    g = -params.g_eff[0] if params.g_eff else 0.0  # homogeneous-convention sign
    lam_s = params.lambda_nnn[0] if params.lambda_nnn else 0.0
    cb, sb = math.cos(beta), math.sin(beta)
    worst = 0.0
    for ell in range(1, params.n_gauge + 1):
        site = gauge_site(ell + 0.5)
        op = OperatorSum(
            [PauliString.make({site: "X"}, cb), PauliString.make({site: "Z"}, sb)], L
        )
        tx = float(np.real(psi.expectation(op)))
        worst = max(worst, abs(lam_s - g * sb * tx))
    return worst


def steady_value(series: ObservableSeries, window) -> tuple[float, float]:
    """Mean and sample standard deviation over samples with t in the window."""
    mask = (series.times >= window[0] - 1e-12) & (series.times <= window[1] + 1e-12)
    vals = series.values[mask]
    if len(vals) < 2:
        raise ValueError(f"need >= 2 samples in window {window}, got {len(vals)}")
    return float(np.mean(vals)), float(np.std(vals, ddof=1))


@dataclass
class GaussianFit:
    mu: float
    sigma: float
    amplitude: float
    offset: float
    residual: float
    converged: bool
    degenerate: bool = False


def fit_gaussian_peak(xs, ys) -> GaussianFit:
    """Least-squares fit of a*exp(-(x-mu)^2/(2 sigma^2)) + b.

    Initialization: mu0 = argmax(ys), sigma0 = a quarter of the x span.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 5:
        raise ValueError("need at least 5 points for a Gaussian fit")
    span = xs.max() - xs.min()
    b0 = float(ys.min())
    a0 = float(ys.max() - ys.min())
    if a0 < 1e-12 or span <= 0:
        return GaussianFit(float(xs[np.argmax(ys)]), span / 4 or 1.0, 0.0,
                           float(np.mean(ys)), 0.0, True, degenerate=True)
    mu0 = float(xs[np.argmax(ys)])
    s0 = span / 4

    def model(x, a, mu, sigma, b):
        return a * np.exp(-((x - mu) ** 2) / (2 * sigma**2)) + b

    try:
        popt, _ = scipy.optimize.curve_fit(
            model, xs, ys, p0=[a0, mu0, s0, b0],
            bounds=([0, xs.min() - span, 1e-6, -np.inf],
                    [np.inf, xs.max() + span, 10 * span, np.inf]),
            maxfev=20000,
        )
        converged = True
    except RuntimeError:
        popt, converged = [a0, mu0, s0, b0], False
    a, mu, sigma, b = (float(v) for v in popt)
    residual = float(np.sqrt(np.mean((model(xs, a, mu, sigma, b) - ys) ** 2)))
    degenerate = a < 1e-6 * max(1.0, abs(b))
    return GaussianFit(mu, sigma, a, b, residual, converged, degenerate)
