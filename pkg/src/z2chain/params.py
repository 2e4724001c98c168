"""Device parameters, unit conventions, and run configuration.

Conventions used throughout the package:

* All Hamiltonian coefficients are linear frequencies in MHz (the "/2pi"
  values); the propagators multiply by 2*pi, so time is in microseconds.
* Physical sites are 1-based, 1..L.  Odd sites carry the matter spins
  (s_1 = site 1, s_2 = site 3, ...), even sites the gauge spins
  (tau_{l+1/2} = site 2l).
* sigma^z = |1><1| - |0><0|, and the basis is site-major with site 1 as
  the most significant bit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import yaml

DEFAULT_SEED = 20210901  # fixed fallback seed used when a config omits rng_seed

# Table S1 device values (MHz).
_DEVICE_G_NN = (12.05, 12.2, 11.90, 11.90, 11.90, 11.76, 11.90, 12.05, 12.35)
_DEVICE_LAMBDA_NNN = (1.10, 0.69, 1.10, 0.69, 1.10, 0.61, 1.10, 0.71)
_DEVICE_V_ODD = -80.0
_DEVICE_G_EFF = -1.8

# Table S1 readout fidelities (F_g, F_e) per qubit.
DEVICE_READOUT_FIDELITIES = (
    (0.970, 0.897), (0.958, 0.874), (0.966, 0.865), (0.989, 0.916),
    (0.959, 0.880), (0.984, 0.932), (0.976, 0.908), (0.968, 0.845),
    (0.956, 0.888), (0.979, 0.893),
)


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


@dataclass(frozen=True)
class DeviceParams:
    """Couplings and fields of the chain, all in MHz.

    g_nn[j-1] couples sites j and j+1; lambda_nnn[j-1] couples j and j+2;
    v_long[j-1] is the longitudinal field on site j.  h_x acts on even
    sites only.  g_eff[l-1] is the three-body coupling associated with
    matter bond l (used for both the matter and gauge three-site hops of
    the effective model); h_z is the effective gauge-site longitudinal
    field, a free parameter.
    """

    n_sites: int
    g_nn: tuple[float, ...]
    lambda_nnn: tuple[float, ...]
    v_long: tuple[float, ...]
    h_x: float = 0.0
    h_z: float = 0.0
    g_eff: tuple[float, ...] = ()

    def __post_init__(self):
        L = self.n_sites
        if L < 3:
            raise ConfigError(f"n_sites must be >= 3, got {L}")
        object.__setattr__(self, "g_nn", tuple(float(x) for x in self.g_nn))
        object.__setattr__(self, "lambda_nnn", tuple(float(x) for x in self.lambda_nnn))
        object.__setattr__(self, "v_long", tuple(float(x) for x in self.v_long))
        object.__setattr__(self, "g_eff", tuple(float(x) for x in self.g_eff))
        if len(self.g_nn) != L - 1:
            raise ConfigError(f"g_nn must have {L - 1} entries, got {len(self.g_nn)}")
        if len(self.lambda_nnn) != L - 2:
            raise ConfigError(
                f"lambda_nnn must have {L - 2} entries, got {len(self.lambda_nnn)}"
            )
        if len(self.v_long) != L:
            raise ConfigError(f"v_long must have {L} entries, got {len(self.v_long)}")
        if self.g_eff and L % 2 == 0 and len(self.g_eff) != L // 2 - 1:
            raise ConfigError(
                f"g_eff must have {L // 2 - 1} entries for L={L}, got {len(self.g_eff)}"
            )

    @property
    def n_matter(self) -> int:
        return (self.n_sites + 1) // 2

    @property
    def n_gauge(self) -> int:
        return self.n_sites // 2

    @property
    def beta(self) -> float:
        """Gauge-frame rotation angle arctan(h_z/h_x)."""
        return math.atan2(self.h_z, self.h_x)

    def with_fields(self, h_x=None, h_z=None, v_even=None, v_odd=None) -> "DeviceParams":
        """Copy with replaced transverse/longitudinal fields."""
        v = list(self.v_long)
        if v_odd is not None:
            v[0::2] = [float(v_odd)] * len(v[0::2])
        if v_even is not None:
            v[1::2] = [float(v_even)] * len(v[1::2])
        return dataclasses.replace(
            self,
            v_long=tuple(v),
            h_x=self.h_x if h_x is None else float(h_x),
            h_z=self.h_z if h_z is None else float(h_z),
        )


def matter_index(site: int) -> float:
    """Sublattice label of a physical site: l for odd (matter), l+1/2 for even."""
    if site % 2 == 1:
        return (site + 1) // 2
    return site // 2 + 0.5


def matter_site(ell: int) -> int:
    """Physical site of matter spin s_ell."""
    return 2 * ell - 1


def gauge_site(ell_plus_half: float) -> int:
    """Physical site of gauge spin tau_{l+1/2} = sigma_{2l}; pass l + 0.5."""
    doubled = round(2 * ell_plus_half)
    if doubled % 2 != 1:
        raise ValueError(f"{ell_plus_half} is not a gauge-link index")
    return doubled - 1


def device_default() -> DeviceParams:
    """The 10-qubit device table: couplings from the calibrated chip values,
    odd-site longitudinal field -80 MHz, three-body coupling -1.8 MHz.

    Fields h_x / h_z / v_even default to zero; set them per run via
    ``with_fields``.
    """
    v = tuple(_DEVICE_V_ODD if j % 2 == 1 else 0.0 for j in range(1, 11))
    return DeviceParams(
        n_sites=10,
        g_nn=_DEVICE_G_NN,
        lambda_nnn=_DEVICE_LAMBDA_NNN,
        v_long=v,
        h_x=0.0,
        h_z=0.0,
        g_eff=(_DEVICE_G_EFF,) * 4,
    )


def uniform_params(L, g=1.8, lambda_s=1.1, lambda_tau=0.7, h_x=6.0, h_z=-4.45) -> DeviceParams:
    """Homogeneous chain with three-body coupling g (stored as g_eff = -g so the
    effective Hamiltonian reproduces the homogeneous sign convention), matter
    NNN coupling lambda_s, gauge NNN coupling lambda_tau.

    Only meaningful for the effective Hamiltonian: g_nn is zeroed.
    """
    if L < 3:
        raise ConfigError(f"L must be >= 3, got {L}")
    lam = tuple(lambda_s if j % 2 == 1 else lambda_tau for j in range(1, L - 1))
    g_eff = (-float(g),) * (L // 2 - 1) if L % 2 == 0 else ()
    return DeviceParams(
        n_sites=L,
        g_nn=(0.0,) * (L - 1),
        lambda_nnn=lam,
        v_long=(0.0,) * L,
        h_x=float(h_x),
        h_z=float(h_z),
        g_eff=g_eff,
    )


@dataclass(frozen=True)
class InitialStateSpec:
    """Product initial state: bit pattern on matter sites, Bloch angle theta on
    every gauge site, |Phi_theta> = cos(theta/2)|1> + sin(theta/2)|0>.
    """

    s_pattern: str
    theta: float

    def __post_init__(self):
        if not self.s_pattern or any(c not in "01" for c in self.s_pattern):
            raise ConfigError(f"s_pattern must be a nonempty bit string, got {self.s_pattern!r}")
        if not (-math.pi < self.theta <= math.pi + 1e-12):
            raise ConfigError(f"theta must lie in (-pi, pi], got {self.theta}")

    def validate_for(self, L: int):
        n_matter = (L + 1) // 2
        if len(self.s_pattern) != n_matter:
            raise ConfigError(
                f"s_pattern length {len(self.s_pattern)} != matter-site count {n_matter} for L={L}"
            )


@dataclass(frozen=True)
class EngineParams:
    krylov_dim: int = 30
    chi_max: int = 256
    trotter_dt: float = 0.002
    svd_tol: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    hamiltonian_kind: str  # full | effective | rotated_effective
    initial: InitialStateSpec
    t_max: float
    dt_sample: float
    steady_window: tuple[float, float]
    engine: str = "exact"  # exact | tebd
    engine_params: EngineParams = field(default_factory=EngineParams)
    rng_seed: int = DEFAULT_SEED
    device: DeviceParams | None = None

    def __post_init__(self):
        if self.hamiltonian_kind not in ("full", "effective", "rotated_effective"):
            raise ConfigError(f"unknown hamiltonian_kind {self.hamiltonian_kind!r}")
        if self.engine not in ("exact", "tebd"):
            raise ConfigError(f"unknown engine {self.engine!r}")
        if self.dt_sample <= 0:
            raise ConfigError("dt_sample must be > 0")
        a, b = self.steady_window
        if not (0 <= a < b <= self.t_max + 1e-12):
            raise ConfigError(
                f"steady_window must satisfy 0 <= start < end <= t_max, got [{a}, {b}]"
            )


CONFIG_SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema_version", "hamiltonian", "device", "uniform", "fields",
    "initial", "t_max", "dt_sample", "steady_window", "engine",
    "engine_params", "rng_seed",
}
_UNIFORM_KEYS = {"L", "g", "lambda_s", "lambda_tau"}
_FIELDS_KEYS = {"h_x", "h_z", "v_even", "v_odd"}
_INITIAL_KEYS = {"s_pattern", "theta"}
_ENGINE_KEYS = {"krylov_dim", "chi_max", "trotter_dt", "svd_tol"}


def _check_keys(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_theta(value) -> float:
    # accepts numbers or simple pi expressions like "-pi/3"
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().replace(" ", "")
    sign = 1.0
    if text.startswith("-"):
        sign, text = -1.0, text[1:]
    if text == "pi":
        return sign * math.pi
    if text.startswith("pi/"):
        return sign * math.pi / float(text[3:])
    raise ConfigError(f"cannot parse theta value {value!r}")


def config_from_dict(data: dict) -> RunConfig:
    """Validate a parsed config mapping into a RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(data, _TOP_KEYS, "config root")
    version = data.get("schema_version")
    if version != CONFIG_SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {CONFIG_SCHEMA_VERSION}, got {version!r}")

    device_kind = data.get("device", "default")
    if device_kind == "default":
        params = device_default()
    elif device_kind == "uniform":
        uni = data.get("uniform", {})
        _check_keys(uni, _UNIFORM_KEYS, "uniform")
        if "L" not in uni:
            raise ConfigError("uniform device requires uniform.L")
        params = uniform_params(
            int(uni["L"]),
            g=float(uni.get("g", 1.8)),
            lambda_s=float(uni.get("lambda_s", 1.1)),
            lambda_tau=float(uni.get("lambda_tau", 0.7)),
            h_x=0.0,
            h_z=0.0,
        )
    else:
        raise ConfigError(f"device must be 'default' or 'uniform', got {device_kind!r}")

    flds = data.get("fields", {})
    _check_keys(flds, _FIELDS_KEYS, "fields")
    params = params.with_fields(
        h_x=flds.get("h_x"), h_z=flds.get("h_z"),
        v_even=flds.get("v_even"), v_odd=flds.get("v_odd"),
    )

    init = data.get("initial")
    if not isinstance(init, dict):
        raise ConfigError("config requires an 'initial' mapping")
    _check_keys(init, _INITIAL_KEYS, "initial")
    spec = InitialStateSpec(
        s_pattern=str(init.get("s_pattern", "")),
        theta=_parse_theta(init.get("theta", 0.0)),
    )
    spec.validate_for(params.n_sites)

    ep = data.get("engine_params", {})
    _check_keys(ep, _ENGINE_KEYS, "engine_params")
    engine_params = EngineParams(
        krylov_dim=int(ep.get("krylov_dim", 30)),
        chi_max=int(ep.get("chi_max", 256)),
        trotter_dt=float(ep.get("trotter_dt", 0.002)),
        svd_tol=float(ep.get("svd_tol", 1e-10)),
    )

    t_max = float(data.get("t_max", 1.0))
    window = data.get("steady_window", [0.2, min(1.0, t_max)])
    if not (isinstance(window, (list, tuple)) and len(window) == 2):
        raise ConfigError("steady_window must be a pair [start, end]")

    return RunConfig(
        hamiltonian_kind=str(data.get("hamiltonian", "full")),
        initial=spec,
        t_max=t_max,
        dt_sample=float(data.get("dt_sample", 0.005)),
        steady_window=(float(window[0]), float(window[1])),
        engine=str(data.get("engine", "exact")),
        engine_params=engine_params,
        rng_seed=int(data.get("rng_seed", DEFAULT_SEED)),
        device=params,
    )


def load_config(path) -> RunConfig:
    """Load and validate a YAML run config.  Unknown keys are an error."""
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict:
    """Serialize a RunConfig back to a plain mapping that reparses equal."""
    params = cfg.device
    d = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "hamiltonian": cfg.hamiltonian_kind,
        "initial": {"s_pattern": cfg.initial.s_pattern, "theta": float(cfg.initial.theta)},
        "t_max": cfg.t_max,
        "dt_sample": cfg.dt_sample,
        "steady_window": list(cfg.steady_window),
        "engine": cfg.engine,
        "engine_params": {
            "krylov_dim": cfg.engine_params.krylov_dim,
            "chi_max": cfg.engine_params.chi_max,
            "trotter_dt": cfg.engine_params.trotter_dt,
            "svd_tol": cfg.engine_params.svd_tol,
        },
        "rng_seed": cfg.rng_seed,
    }
    if params is not None:
        if params.g_nn == _DEVICE_G_NN and params.n_sites == 10:
            d["device"] = "default"
        else:
            lam_s = params.lambda_nnn[0] if params.lambda_nnn else 0.0
            lam_t = params.lambda_nnn[1] if len(params.lambda_nnn) > 1 else 0.0
            d["device"] = "uniform"
            d["uniform"] = {
                "L": params.n_sites,
                "g": -params.g_eff[0] if params.g_eff else 1.8,
                "lambda_s": lam_s,
                "lambda_tau": lam_t,
            }
        d["fields"] = {
            "h_x": params.h_x,
            "h_z": params.h_z,
            "v_even": params.v_long[1] if params.n_sites > 1 else 0.0,
            "v_odd": params.v_long[0],
        }
    return d
