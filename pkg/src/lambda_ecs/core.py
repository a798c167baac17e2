"""Physical parameters, regime predicates and effective couplings.

All rates share one angular-frequency unit and hbar = 1.  Atomic levels are
indexed ``g = 0``, ``e = 1``, ``c = 2`` everywhere in the package.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping, NamedTuple

from .exceptions import ConfigError

__all__ = [
    "SystemParams",
    "EffectiveParams",
    "CoherentPair",
    "RegimeReport",
    "effective_couplings",
    "regime_check",
    "read_config",
    "params_from_mapping",
    "load_params",
]


@dataclass(frozen=True)
class SystemParams:
    """Couplings, drives, detunings and cavity loss of the Lambda system.

    The default values are illustrative only: they put the system at the
    edge of both the large-detuning and the strong-driving regime (all
    ratios 0.1) with ``g_eff = 1`` and ``omega_eff = 10``.

    ``w_e``, ``w_c``, ``w_1`` and ``w_2`` are the bare frequencies.  The
    simulations work in the interaction picture where only the detunings
    ``delta`` (cavity) and ``delta_prime`` (classical drives) survive, so
    the bare frequencies are carried for bookkeeping and never enter the
    dynamics.
    """

    g1: float = 10.0
    g2: float = 10.0
    omega1_rabi: float = 100.0
    omega2_rabi: float = 100.0
    delta: float = 100.0
    delta_prime: float = 1000.0
    w_e: float = 0.0
    w_c: float = 0.0
    w_1: float = 0.0
    w_2: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{f.name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        for name in ("g1", "g2", "omega1_rabi", "omega2_rabi", "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.delta == 0 or self.delta_prime == 0:
            raise ValueError("detunings delta and delta_prime must be non-zero")

    @classmethod
    def from_effective(
        cls,
        g_eff: float,
        omega_eff: float = 0.0,
        kappa: float = 0.0,
        delta: float = 100.0,
        delta_prime: float = 1000.0,
    ) -> "SystemParams":
        """Symmetric couplings (g1 = g2, Omega1 = Omega2) realising the given
        effective rates.  The sign of each effective rate is carried by the
        corresponding detuning."""
        delta = math.copysign(abs(delta), g_eff) if g_eff != 0 else delta
        delta_prime = (
            math.copysign(abs(delta_prime), omega_eff) if omega_eff != 0 else delta_prime
        )
        g = math.sqrt(abs(g_eff * delta))
        om = math.sqrt(abs(omega_eff * delta_prime))
        return cls(
            g1=g,
            g2=g,
            omega1_rabi=om,
            omega2_rabi=om,
            delta=delta,
            delta_prime=delta_prime,
            kappa=kappa,
        )

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


class EffectiveParams(NamedTuple):
    g_eff: float
    omega_eff: float


@dataclass(frozen=True)
class CoherentPair:
    """Complex amplitudes of the two cavity modes, ``|alpha, beta>``."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if not (_finite(a) and _finite(b)):
            raise ValueError(f"amplitudes must be finite, got ({a}, {b})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    def __iter__(self):
        yield self.alpha
        yield self.beta

    def conj(self) -> "CoherentPair":
        return CoherentPair(self.alpha.conjugate(), self.beta.conjugate())

    def scaled(self, factor: complex) -> "CoherentPair":
        return CoherentPair(self.alpha * factor, self.beta * factor)

    def swapped(self) -> "CoherentPair":
        return CoherentPair(self.beta, self.alpha)

    @property
    def energy(self) -> float:
        """Mean total photon number ``|alpha|^2 + |beta|^2``."""
        return abs(self.alpha) ** 2 + abs(self.beta) ** 2

    def is_real(self) -> bool:
        return self.alpha.imag == 0 and self.beta.imag == 0


def _finite(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)


def effective_couplings(params: SystemParams) -> EffectiveParams:
    """Two-photon coupling ``g1 g2 / delta`` and effective Rabi frequency
    ``Omega1 Omega2 / delta_prime`` left after eliminating ``|c>``."""
    if params.delta == 0 or params.delta_prime == 0:
        raise ValueError("effective couplings are undefined at zero detuning")
    return EffectiveParams(
        g_eff=params.g1 * params.g2 / params.delta,
        omega_eff=params.omega1_rabi * params.omega2_rabi / params.delta_prime,
    )


class RegimeReport(NamedTuple):
    large_detuning: bool
    strong_driving: bool
    ratios: dict


def regime_check(params: SystemParams, threshold: float = 0.1) -> RegimeReport:
    """Test the large-detuning and strong-driving conditions.

    ``large_detuning`` holds when ``|Omega_i / delta_prime|`` and
    ``|g_i / delta|`` are all at most ``threshold``; ``strong_driving`` when
    ``|g_eff / omega_eff| <= threshold``.  Without a drive (``omega_eff ==
    0``) the system is never strongly driven.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    ratios = {
        "omega1/delta_prime": abs(params.omega1_rabi / params.delta_prime),
        "omega2/delta_prime": abs(params.omega2_rabi / params.delta_prime),
        "g1/delta": abs(params.g1 / params.delta),
        "g2/delta": abs(params.g2 / params.delta),
    }
    eff = effective_couplings(params)
    if eff.omega_eff != 0:
        ratios["g_eff/omega_eff"] = abs(eff.g_eff / eff.omega_eff)
    else:
        ratios["g_eff/omega_eff"] = math.inf
    large = all(ratios[k] <= threshold for k in list(ratios)[:4])
    strong = ratios["g_eff/omega_eff"] <= threshold
    return RegimeReport(large, strong, ratios)


# -- flat key = value configuration files ----------------------------------

_SECTION = "run"


def read_config(path) -> dict[str, str]:
    """Read a flat ``key = value`` file (``#`` comments, no sections).

    Keys are lower-cased and dashes become underscores, so ``g-eff`` and
    ``g_eff`` are the same key.
    """
    text = Path(path).read_text()
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",)
    )
    try:
        parser.read_string(f"[{_SECTION}]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return {k.replace("-", "_"): v.strip() for k, v in parser.items(_SECTION)}


_PARAM_FIELDS = tuple(f.name for f in fields(SystemParams))


def params_from_mapping(values: Mapping[str, str | float], base: SystemParams | None = None):
    """Build :class:`SystemParams` from the keys of ``values`` that name its
    fields; other keys are ignored.  Numbers are parsed with ``float`` so
    decimal and scientific notation are both exact round-trips."""
    updates = {}
    for key in _PARAM_FIELDS:
        if key in values:
            raw = values[key]
            try:
                updates[key] = float(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: not a number: {raw!r}") from exc
    try:
        return replace(base or SystemParams(), **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_params(path) -> SystemParams:
    values = read_config(path)
    unknown = set(values) - set(_PARAM_FIELDS)
    if unknown:
        raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
    return params_from_mapping(values)
