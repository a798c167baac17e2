"""Hamiltonians, unitary propagation and the Lindblad integrator.

Three levels of description are available:

``full``
    Three-level atom with both cavity modes and both classical drives,
    written in the interaction picture with respect to the bare atomic and
    cavity frequencies.  Only the cavity detuning ``delta`` and the drive
    detuning ``delta_prime`` survive, and the drives carry the phase
    ``exp(i (delta_prime - delta) t)``.
``effective``
    Two-level atom after eliminating ``|c>``:
    ``H = -g_eff (a1_dag a2 sigma_dag + a1 a2_dag sigma) - omega_eff (sigma_dag + sigma)``.
``rwa``
    The strongly driven limit in the frame rotating with the drive:
    ``H = -(g_eff / 2)(a1_dag a2 + a1 a2_dag) sigma_x``.

All matrices use the basis ordering of :mod:`lambda_ecs.fock`.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import sparse

from .analytic import lossy_density_state, project_lossy
from .core import CoherentPair, SystemParams, effective_couplings, regime_check
from .exceptions import (
    ConfigError,
    DegenerateOutcomeError,
    IntegrationError,
    RegimeWarning,
    TruncationError,
)
from .fock import (
    HilbertSpec,
    atom_vector,
    atomic_operators,
    closed_sector,
    coherent_vector,
    fidelity,
    mode_operators,
    number_diagonal,
    product_state,
    required_n_max,
    superposition_to_matrix,
)

__all__ = [
    "LEVELS",
    "HamiltonianSpec",
    "IntegratorConfig",
    "build_hamiltonian",
    "static_frame_hamiltonian",
    "stark_shift_operator",
    "propagate",
    "rotating_frame",
    "lindblad_rhs",
    "lindblad_step",
    "integrate_master",
    "master_trajectory",
    "project_atom_numeric",
    "branch_coherence",
    "AdiabaticReport",
    "adiabatic_elimination_check",
    "TrajectoryRow",
    "oracle_trajectory",
    "write_trajectory_csv",
]

log = logging.getLogger(__name__)

LEVELS = ("full", "effective", "rwa")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Which Hamiltonian to build, with what parameters, on which space."""

    level: str
    params: SystemParams
    hilbert: HilbertSpec

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")
        want = 3 if self.level == "full" else 2
        if self.hilbert.atom_dim != want:
            raise ValueError(f"level {self.level!r} needs atom_dim={want}")

    @classmethod
    def from_rates(
        cls,
        level: str,
        g_eff: float,
        n_max: int,
        omega_eff: float = 0.0,
        kappa: float = 0.0,
        truncation_tol: float = 1e-8,
    ) -> "HamiltonianSpec":
        """Two-level spec realising the given effective rates."""
        params = SystemParams.from_effective(g_eff, omega_eff, kappa)
        return cls(level, params, HilbertSpec(n_max, 2, truncation_tol))

    @property
    def conserves_photon_number(self) -> bool:
        return self.level != "full"


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    ``dt=None`` picks ``dt_scale / scale`` where ``scale`` is the largest
    frequency in the problem (see :func:`frequency_scale`).  Tolerances are
    drift bounds checked every step (trace, hermiticity) or at snapshots
    (negativity of the density matrix, norm of a state vector).
    """

    dt: float | None = None
    method: str = "rk4"
    dt_scale: float = 0.2
    trace_tolerance: float = 1e-8
    hermiticity_tolerance: float = 1e-10
    negativity_tolerance: float = 1e-6
    norm_tolerance: float = 1e-6

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError("only the fixed-step 'rk4' method is available")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.dt_scale > 0:
            raise ValueError("dt_scale must be positive")

    @classmethod
    def from_mapping(cls, values: Mapping[str, str | float]) -> "IntegratorConfig":
        """Pick integrator keys out of a flat config mapping."""
        updates = {}
        for f in fields(cls):
            if f.name in values and f.name != "method":
                try:
                    updates[f.name] = float(values[f.name])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{f.name}: not a number: {values[f.name]!r}") from exc
        if "method" in values:
            updates["method"] = str(values["method"])
        try:
            return cls(**updates)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def step_for(self, spec: HamiltonianSpec, kappa: float = 0.0) -> float:
        if self.dt is not None:
            return self.dt
        return self.dt_scale / frequency_scale(spec, kappa)


def frequency_scale(spec: HamiltonianSpec, kappa: float = 0.0) -> float:
    """Largest rate the integrator has to resolve."""
    p, n = spec.params, spec.hilbert.n_max
    eff = effective_couplings(p)
    # commutators with H oscillate at eigenvalue differences, up to g_eff n
    rates = [abs(eff.g_eff) * n, kappa * n]
    if spec.level == "effective":
        rates.append(abs(eff.omega_eff))
    if spec.level == "full":
        rates += [
            abs(p.delta),
            abs(p.delta_prime),
            abs(p.delta_prime - p.delta),
            max(p.g1, p.g2) * math.sqrt(n),
            p.omega1_rabi,
            p.omega2_rabi,
        ]
    scale = max(rates)
    return scale if scale > 0 else 1.0


# -- Hamiltonians ------------------------------------------------------------


def _level_op(spec: HilbertSpec, i: int, j: int) -> np.ndarray:
    m = np.zeros((spec.atom_dim, spec.atom_dim), dtype=complex)
    m[i, j] = 1.0
    return m


@lru_cache(maxsize=16)
def _full_parts(spec: HamiltonianSpec):
    """Static part ``H0`` and drive part ``Hd`` (coefficient of the phase
    ``exp(i w t)``, ``w = delta_prime - delta``) of the three-level
    Hamiltonian."""
    hs, p = spec.hilbert, spec.params
    ops = mode_operators(hs)
    ifield = np.eye(hs.field_dim)
    g, e, c = 0, 1, 2

    def atom(i, j):
        return np.kron(_level_op(hs, i, j), ifield)

    cpl1 = p.g1 * ops.a1_dag @ atom(e, c)
    cpl2 = p.g2 * ops.a2_dag @ atom(g, c)
    h0 = p.delta * atom(c, c) + cpl1 + cpl1.conj().T + cpl2 + cpl2.conj().T
    hd = p.omega1_rabi * atom(c, e) + p.omega2_rabi * atom(c, g)
    return h0, hd, p.delta_prime - p.delta


def _two_level(spec: HamiltonianSpec) -> np.ndarray:
    ops = mode_operators(spec.hilbert)
    at = atomic_operators(spec.hilbert)
    eff = effective_couplings(spec.params)
    if spec.level == "effective":
        hop = ops.k_plus @ at.sigma_dag
        h = -eff.g_eff * (hop + hop.conj().T) - eff.omega_eff * (at.sigma + at.sigma_dag)
    else:
        h = -0.5 * eff.g_eff * (ops.k_plus + ops.k_minus) @ (at.sigma + at.sigma_dag)
    return h


def build_hamiltonian(spec: HamiltonianSpec, t: float = 0.0) -> np.ndarray:
    """Dense hermitian Hamiltonian; ``t`` only matters for ``level='full'``."""
    if spec.level != "full":
        return _two_level(spec)
    h0, hd, w = _full_parts(spec)
    ph = complex(math.cos(w * t), math.sin(w * t))
    drive = ph * hd
    return h0 + drive + drive.conj().T


def _excitation_operator(hs: HilbertSpec) -> np.ndarray:
    """Diagonal of ``n1 + n2 + |c><c|``."""
    n1, n2 = number_diagonal(hs.n_max)
    x = np.tile((n1 + n2).astype(float), hs.atom_dim)
    if hs.atom_dim == 3:
        x[2 * hs.field_dim :] += 1.0
    return x


def static_frame_hamiltonian(spec: HamiltonianSpec) -> tuple[np.ndarray, np.ndarray, float]:
    """Time-independent form of the three-level Hamiltonian.

    With ``X = n1 + n2 + |c><c|`` and ``w = delta_prime - delta``, a state
    ``psi2`` evolving under ``H2 = H(0) + w X`` gives the interaction-picture
    state as ``psi(t) = exp(i w t X) psi2(t)``.  Returns ``(H2, diag(X), w)``.
    """
    if spec.level != "full":
        raise ValueError("only the three-level Hamiltonian is time dependent")
    h0, hd, w = _full_parts(spec)
    x = _excitation_operator(spec.hilbert)
    return h0 + hd + hd.conj().T + np.diag(w * x), x, w


def stark_shift_operator(params: SystemParams, hilbert: HilbertSpec) -> np.ndarray:
    """Second-order level shifts left over by eliminating ``|c>``.

    ``|g>`` moves by ``-(g2^2 n2 / delta + Omega2^2 / delta_prime)`` and
    ``|e>`` by ``-(g1^2 n1 / delta + Omega1^2 / delta_prime)``.  Returned as a
    diagonal matrix on the two-level space.
    """
    if hilbert.atom_dim != 2:
        raise ValueError("Stark shifts are expressed on the two-level space")
    n1, n2 = number_diagonal(hilbert.n_max)
    p = params
    shift_g = -(p.g2**2 * n2 / p.delta + p.omega2_rabi**2 / p.delta_prime)
    shift_e = -(p.g1**2 * n1 / p.delta + p.omega1_rabi**2 / p.delta_prime)
    return np.diag(np.concatenate([shift_g, shift_e]).astype(complex))


# -- subspace bookkeeping ----------------------------------------------------


def _sector_index(spec: HamiltonianSpec) -> np.ndarray | None:
    """Indices of the ``n1 + n2 <= n_max`` sector, or None for the full space."""
    if not spec.conserves_photon_number:
        return None
    mask = np.tile(closed_sector(spec.hilbert.n_max), spec.hilbert.atom_dim)
    return np.flatnonzero(mask)


def _restrict_vector(psi: np.ndarray, idx, tol: float) -> np.ndarray:
    if idx is None:
        return psi
    kept = psi[idx]
    lost = np.vdot(psi, psi).real - np.vdot(kept, kept).real
    if lost > tol:
        raise TruncationError(
            f"{lost:.2e} of the state has more than n_max photons in total; raise n_max"
        )
    return kept


def _expand_vector(v: np.ndarray, idx, dim: int) -> np.ndarray:
    if idx is None:
        return v
    out = np.zeros(dim, dtype=complex)
    out[idx] = v
    return out


@lru_cache(maxsize=8)
def _eigensystem(spec: HamiltonianSpec):
    if spec.level == "full":
        h, _, _ = static_frame_hamiltonian(spec)
    else:
        idx = _sector_index(spec)
        h = _two_level(spec)[np.ix_(idx, idx)]
    w, v = np.linalg.eigh(h)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


# -- unitary evolution -------------------------------------------------------


def propagate(
    spec: HamiltonianSpec,
    psi0: np.ndarray,
    t_final: float,
    config: IntegratorConfig | None = None,
    *,
    stepped: bool = False,
) -> np.ndarray:
    """Evolve a state vector from ``t = 0`` to ``t_final``.

    By default the evolution is exact: the Hamiltonian (for ``full`` its
    static-frame form) is diagonalized once and cached.  Photon-number
    conserving levels are solved on the ``n1 + n2 <= n_max`` sector, where
    the truncated operators are exact; weight outside it above
    ``hilbert.truncation_tol`` raises :class:`TruncationError`.

    ``stepped=True`` integrates with fixed-step RK4 instead (the
    time-dependent form for ``full``), as an independent check.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (spec.hilbert.dim,):
        raise ValueError(f"psi0 must have length {spec.hilbert.dim}")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if t_final == 0:
        return psi0.copy()
    if stepped:
        return _propagate_rk4(spec, psi0, t_final, config or IntegratorConfig())
    idx = _sector_index(spec)
    w, v = _eigensystem(spec)
    coeff = v.conj().T @ _restrict_vector(psi0, idx, spec.hilbert.truncation_tol)
    out = v @ (np.exp(-1j * w * t_final) * coeff)
    if spec.level == "full":
        _, x, om = static_frame_hamiltonian(spec)
        out = np.exp(1j * om * t_final * x) * out
    return _expand_vector(out, idx, spec.hilbert.dim)


def _rk4(f: Callable, y, t: float, dt: float):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _grid(t0: float, t1: float, dt_max: float) -> tuple[int, float]:
    steps = max(1, math.ceil((t1 - t0) / dt_max - 1e-9))
    return steps, (t1 - t0) / steps


def _sparse_generator(spec: HamiltonianSpec, idx):
    """Return ``h(t)`` producing a sparse Hamiltonian on the working space."""
    if spec.level == "full":
        h0, hd, w = _full_parts(spec)
        h0s, hds = sparse.csr_matrix(h0), sparse.csr_matrix(hd)
        hdh = hds.conj().T.tocsr()
        return lambda t: h0s + complex(math.cos(w * t), math.sin(w * t)) * hds + complex(
            math.cos(w * t), -math.sin(w * t)
        ) * hdh
    h = sparse.csr_matrix(_two_level(spec)[np.ix_(idx, idx)])
    return lambda t: h


def _propagate_rk4(spec, psi0, t_final, config):
    idx = _sector_index(spec)
    psi = _restrict_vector(psi0, idx, spec.hilbert.truncation_tol)
    hgen = _sparse_generator(spec, idx)
    norm0 = np.vdot(psi, psi).real
    steps, dt = _grid(0.0, t_final, config.step_for(spec))
    t = 0.0
    for _ in range(steps):
        psi = _rk4(lambda s, y: -1j * (hgen(s) @ y), psi, t, dt)
        t += dt
    drift = abs(np.vdot(psi, psi).real - norm0)
    if drift > config.norm_tolerance:
        raise IntegrationError(f"norm drifted by {drift:.2e}; reduce dt")
    return _expand_vector(psi, idx, spec.hilbert.dim)


def rotating_frame(psi: np.ndarray, omega_eff: float, t: float, atom_dim: int = 2) -> np.ndarray:
    """Remove the drive precession ``exp(i omega_eff t sigma_x)``.

    Applies ``exp(-i omega_eff t sigma_x) (x) 1`` to a state vector (or
    conjugates a density matrix with it), so the ``|+>`` component picks up
    ``exp(-i omega_eff t)`` and ``|->`` the opposite phase.
    """
    psi = np.asarray(psi, dtype=complex)
    if atom_dim != 2:
        raise ValueError("the drive frame is defined on the two-level atom")
    c, s = math.cos(omega_eff * t), math.sin(omega_eff * t)
    u = np.array([[c, -1j * s], [-1j * s, c]])
    d = psi.shape[0] // 2
    if psi.ndim == 1:
        return (u @ psi.reshape(2, d)).reshape(-1)
    blocks = psi.reshape(2, d, 2, d)
    return np.einsum("ab,bicj,dc->aidj", u, blocks, u.conj()).reshape(psi.shape)


# -- master equation ---------------------------------------------------------


class _Lindblad:
    """Vectorized generator of ``d rho/dt = -i[H, rho] + kappa sum_j D[a_j] rho``.

    ``rho`` is flattened row-major, for which ``vec(A rho B) = (A (x) B^T) vec(rho)``.
    With ``K = H - (i kappa / 2)(n1 + n2)`` the generator is
    ``-i K (x) 1 + i 1 (x) K* + kappa sum_j a_j (x) a_j*``.
    """

    def __init__(self, spec: HamiltonianSpec, kappa: float):
        self.spec, self.kappa = spec, kappa
        self.idx = _sector_index(spec)
        ops = mode_operators(spec.hilbert)
        sel = (lambda m: m) if self.idx is None else (lambda m: m[np.ix_(self.idx, self.idx)])
        self.dim = spec.hilbert.dim if self.idx is None else self.idx.size
        eye = sparse.identity(self.dim, dtype=complex, format="csr")

        def comm(h):
            h = sparse.csr_matrix(h)
            return -1j * sparse.kron(h, eye) + 1j * sparse.kron(eye, h.conj())

        damp = -0.5j * kappa * sel(ops.n1 + ops.n2)
        jumps = sparse.csr_matrix((self.dim**2, self.dim**2), dtype=complex)
        for a in (ops.a1, ops.a2):
            a = sparse.csr_matrix(sel(a))
            jumps = jumps + kappa * sparse.kron(a, a.conj())
        if spec.level == "full":
            h0, hd, self.omega = _full_parts(spec)
            self.parts = (
                (comm(h0 + damp) + jumps).tocsr(),
                comm(hd).tocsr(),  # with exp(+i w t)
                comm(hd.conj().T).tocsr(),  # with exp(-i w t)
            )
        else:
            h = _two_level(spec)[np.ix_(self.idx, self.idx)]
            self.parts = ((comm(h + damp) + jumps).tocsr(),)

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        out = self.parts[0] @ y
        if len(self.parts) == 3:
            ph = complex(math.cos(self.omega * t), math.sin(self.omega * t))
            out += ph * (self.parts[1] @ y) + ph.conjugate() * (self.parts[2] @ y)
        return out

    def restrict(self, rho: np.ndarray) -> np.ndarray:
        if self.idx is None:
            return rho
        kept = rho[np.ix_(self.idx, self.idx)]
        total = np.trace(rho).real
        lost = total - np.trace(kept).real
        if lost > self.spec.hilbert.truncation_tol:
            raise TruncationError(
                f"{lost:.2e} of the density matrix has more than n_max photons; raise n_max"
            )
        return kept * (total / np.trace(kept).real)

    def expand(self, rho: np.ndarray) -> np.ndarray:
        if self.idx is None:
            return rho
        out = np.zeros((self.spec.hilbert.dim,) * 2, dtype=complex)
        out[np.ix_(self.idx, self.idx)] = rho
        return out


def lindblad_rhs(spec: HamiltonianSpec, kappa: float) -> Callable:
    """``f(t, rho)`` on full-space density matrices.

    For photon-number conserving levels only the ``n1 + n2 <= n_max``
    block is evolved; the derivative vanishes outside it, so callers should
    start from a state supported on that block.
    """
    lind = _Lindblad(spec, kappa)
    d = lind.dim

    def f(t, rho):
        sub = rho if lind.idx is None else rho[np.ix_(lind.idx, lind.idx)]
        return lind.expand(lind.rhs(t, sub.reshape(-1)).reshape(d, d))

    return f


def lindblad_step(f: Callable, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One RK4 step of ``d rho/dt = f(t, rho)`` followed by re-symmetrization."""
    out = _rk4(f, rho, t, dt)
    return 0.5 * (out + out.conj().T)


def _check_snapshot(rho: np.ndarray, t: float, config: IntegratorConfig):
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -config.negativity_tolerance:
        raise IntegrationError(
            f"density matrix eigenvalue {lo:.2e} at t={t:.4g}; use a smaller dt or larger n_max"
        )


def master_trajectory(
    rho0: np.ndarray,
    spec: HamiltonianSpec,
    times: Sequence[float],
    kappa: float | None = None,
    config: IntegratorConfig | None = None,
) -> list[np.ndarray]:
    """Integrate the master equation and return ``rho`` at each of ``times``.

    ``times`` must be non-decreasing and start at or after 0.  Each interval
    is split into equal RK4 steps no longer than the configured ``dt`` so
    that every requested time is hit exactly.  Photon-number conserving
    levels are integrated on the ``n1 + n2 <= n_max`` sector, which the
    dynamics never leave (the jumps only lower the photon number).
    """
    config = config or IntegratorConfig()
    kappa = spec.params.kappa if kappa is None else float(kappa)
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    times = [float(t) for t in times]
    if not times or times[0] < 0 or any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be non-negative and non-decreasing")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (spec.hilbert.dim,) * 2:
        raise ValueError(f"rho0 must be {spec.hilbert.dim}x{spec.hilbert.dim}")

    lind = _Lindblad(spec, kappa)
    rho = lind.restrict(0.5 * (rho0 + rho0.conj().T))
    d = lind.dim
    y = rho.reshape(-1).copy()
    dt_max = config.step_for(spec, kappa)
    out, t, worst_herm = [], 0.0, 0.0
    for target in times:
        if target > t:
            steps, dt = _grid(t, target, dt_max)
            for k in range(steps):
                tr0 = y[:: d + 1].sum().real
                m = _rk4(lind.rhs, y, t + k * dt, dt).reshape(d, d)
                herm = np.abs(m - m.conj().T).max()
                worst_herm = max(worst_herm, herm)
                y = (0.5 * (m + m.conj().T)).reshape(-1)
                drift = abs(y[:: d + 1].sum().real - tr0)
                if drift > config.trace_tolerance:
                    raise IntegrationError(f"trace drifted by {drift:.2e} in one step")
                if herm > config.hermiticity_tolerance:
                    raise IntegrationError(f"hermiticity drifted by {herm:.2e} in one step")
            t = target
        rho = y.reshape(d, d)
        _check_snapshot(rho, t, config)
        out.append(lind.expand(rho.copy()))
    log.debug("master_trajectory: max hermiticity drift %.2e", worst_herm)
    return out


def integrate_master(
    rho0: np.ndarray,
    spec: HamiltonianSpec,
    kappa: float | None,
    t_final: float,
    config: IntegratorConfig | None = None,
) -> np.ndarray:
    """Density matrix at ``t_final``; see :func:`master_trajectory`."""
    return master_trajectory(rho0, spec, [t_final], kappa, config)[0]


def project_atom_numeric(rho: np.ndarray, outcome: str, atom_dim: int = 2):
    """Condition on the atom being found in ``|g>`` or ``|e>``.

    Returns ``(rho_field, probability)`` with ``rho_field`` of unit trace.
    """
    if outcome not in ("g", "e"):
        raise ValueError("outcome must be 'g' or 'e'")
    rho = np.asarray(rho)
    d = rho.shape[0] // atom_dim
    i = 0 if outcome == "g" else 1
    block = rho[i * d : (i + 1) * d, i * d : (i + 1) * d]
    prob = np.trace(block).real
    if prob < 1e-15:
        raise DegenerateOutcomeError(f"outcome {outcome!r} has probability {prob:.3e}")
    return block / prob, prob


def branch_coherence(
    rho: np.ndarray, hilbert: HilbertSpec, plus: CoherentPair, minus: CoherentPair
) -> complex:
    """Estimate the ``|+, plus><-, minus|`` coefficient of a numeric state.

    For ``rho = ... + (eta/2) |+, A><-, B| + h.c.`` this returns ``eta``,
    read off as ``2 <A| <+|rho|-> |B> / (<A|A> <B|B>)``.
    """
    d = hilbert.field_dim
    up, dn = atom_vector("plus"), atom_vector("minus")
    blocks = np.asarray(rho).reshape(2, d, 2, d)
    cross = np.einsum("a,aibj,b->ij", up.conj(), blocks, dn)
    n = hilbert.n_max
    va = np.kron(coherent_vector(plus.alpha, n, None), coherent_vector(plus.beta, n, None))
    vb = np.kron(coherent_vector(minus.alpha, n, None), coherent_vector(minus.beta, n, None))
    return 2.0 * np.vdot(va, cross @ vb) / (np.vdot(va, va).real * np.vdot(vb, vb).real)


# -- validity of the approximation hierarchy --------------------------------


class AdiabaticReport(NamedTuple):
    max_c_population: float
    fidelity_vs_effective: float
    n_samples: int


def adiabatic_elimination_check(
    params: SystemParams,
    hilbert: HilbertSpec | None,
    t_final: float,
    config: IntegratorConfig | None = None,
    initial: CoherentPair = CoherentPair(1.0, 1.5),
    sample_step: float = 0.2,
) -> AdiabaticReport:
    """Compare the three-level dynamics with the effective two-level model.

    Starting from ``|g> |alpha, beta>`` the three-level state is evolved to
    ``t_final`` (exactly, in its static frame).  ``max_c_population`` is the
    largest population of ``|c>`` on a grid with spacing
    ``sample_step / max(|delta|, |delta_prime|)``.  ``fidelity_vs_effective``
    is ``|<ref|P psi>|^2`` with ``P`` the projector onto ``{g, e}`` and
    ``ref`` evolved under the effective Hamiltonian plus
    :func:`stark_shift_operator` (the shifts are compensated rather than
    modelled).  A :class:`RegimeWarning` is issued when the parameters are
    outside the large-detuning regime.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    report = regime_check(params)
    if not report.large_detuning:
        warnings.warn(
            f"large-detuning ratios {report.ratios} exceed 0.1; elimination is not expected to hold",
            RegimeWarning,
            stacklevel=2,
        )
    if hilbert is None:
        hilbert = HilbertSpec(required_n_max(initial.energy, 1e-6), 3, 1e-6)
    h3 = hilbert if hilbert.atom_dim == 3 else replace(hilbert, atom_dim=3)
    h2 = replace(h3, atom_dim=2)
    full = HamiltonianSpec("full", params, h3)
    psi0 = product_state("g", initial, h3)

    w, v = _eigensystem(full)
    coeff = v.conj().T @ psi0
    fd = h3.field_dim
    vc = v[2 * fd :, :]
    fastest = max(abs(params.delta), abs(params.delta_prime), abs(params.delta_prime - params.delta))
    n_samples = max(2, math.ceil(t_final * fastest / sample_step) + 1)
    grid = np.linspace(0.0, t_final, n_samples)
    max_c = 0.0
    for chunk in np.array_split(grid, max(1, n_samples // 512)):
        amps = vc @ (coeff[:, None] * np.exp(-1j * np.outer(w, chunk)))
        max_c = max(max_c, float(np.max(np.sum(np.abs(amps) ** 2, axis=0))))

    psi_full = propagate(full, psi0, t_final)
    eff = HamiltonianSpec("effective", params, h2)
    h_ref = build_hamiltonian(eff) + stark_shift_operator(params, h2)
    ref0 = product_state("g", initial, h2)
    wr, vr = np.linalg.eigh(h_ref)
    ref = vr @ (np.exp(-1j * wr * t_final) * (vr.conj().T @ ref0))
    overlap = np.vdot(ref, psi_full[: 2 * fd])
    fid = abs(overlap) ** 2 / (np.vdot(ref, ref).real * np.vdot(psi0, psi0).real)
    return AdiabaticReport(max_c, float(min(fid, 1.0)), n_samples)


# -- oracle trajectories -----------------------------------------------------


class TrajectoryRow(NamedTuple):
    t: float
    trace: float
    fidelity_vs_analytic: float
    n1: float
    n2: float
    concurrence: float


def oracle_trajectory(
    initial: CoherentPair,
    g_eff: float,
    kappa: float,
    times: Sequence[float],
    n_max: int | None = None,
    config: IntegratorConfig | None = None,
    level: str = "rwa",
    outcome: str = "g",
    with_fidelity: bool = True,
) -> list[TrajectoryRow]:
    """Integrate the master equation from ``|g> |alpha, beta>`` and compare
    each snapshot with the closed-form lossy state.

    ``concurrence`` is the Wootters concurrence of the numerically evolved
    state after projecting the atom onto ``outcome`` and mapping the field
    onto the two-qubit basis of the closed-form branches.  With
    ``with_fidelity=False`` the (costly) fidelity column is left as ``nan``.
    """
    from .entanglement import build_qubit_mapping, numeric_field_to_qubits, wootters_concurrence
    from .fock import default_n_max

    n_max = n_max or default_n_max(initial.alpha, initial.beta)
    spec = HamiltonianSpec.from_rates(level, g_eff, n_max, kappa=kappa)
    hs = spec.hilbert
    ops = mode_operators(hs)
    psi0 = product_state("g", initial, hs)
    rho0 = np.outer(psi0, psi0.conj())
    rhos = master_trajectory(rho0, spec, times, kappa, config)
    rows = []
    for t, rho in zip(times, rhos):
        exact = lossy_density_state(initial, g_eff, kappa, t)
        fid = (
            fidelity(superposition_to_matrix(exact, hs, None), rho) if with_fidelity else math.nan
        )
        n1 = np.trace(ops.n1 @ rho).real
        n2 = np.trace(ops.n2 @ rho).real
        try:
            field, _ = project_atom_numeric(rho, outcome)
            mapping = build_qubit_mapping(project_lossy(exact, outcome))
            conc = 0.0 if mapping.degenerate else wootters_concurrence(
                numeric_field_to_qubits(field, mapping, hs.n_max)
            )
        except DegenerateOutcomeError:
            conc = float("nan")
        rows.append(TrajectoryRow(float(t), float(np.trace(rho).real), fid, n1, n2, conc))
    return rows


def write_trajectory_csv(path, rows: Iterable[TrajectoryRow]) -> None:
    """CSV time series with a schema comment as the first line."""
    with open(path, "w", newline="") as fh:
        fh.write("# schema: lambda-ecs trajectory v1\n")
        w = csv.writer(fh)
        w.writerow(TrajectoryRow._fields)
        for r in rows:
            w.writerow([f"{x:.17g}" for x in r])
