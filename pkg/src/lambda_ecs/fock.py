"""Truncated Fock-space linear algebra.

Basis ordering is fixed for the whole package: ``atom (x) mode1 (x) mode2``
with the atom slowest and mode 2 fastest, so the flat index of
``|a, n1, n2>`` is ``(a * (n_max + 1) + n1) * (n_max + 1) + n2``.  Pure
states are 1-d complex arrays, density matrices 2-d complex arrays.  A
field-only object simply omits the atomic factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg
from scipy.special import gammainc

from .core import CoherentPair
from .exceptions import TruncationError

__all__ = [
    "HilbertSpec",
    "ModeOperators",
    "AtomOperators",
    "truncation_deficit",
    "required_n_max",
    "default_n_max",
    "coherent_vector",
    "field_vector",
    "atom_vector",
    "product_state",
    "field_operators",
    "mode_operators",
    "atomic_operators",
    "number_diagonal",
    "closed_sector",
    "expm_hermitian",
    "su2_disentangle_check",
    "partial_trace",
    "fidelity",
    "superposition_to_matrix",
    "superposition_to_vector",
    "check_density_matrix",
    "save_array_csv",
    "load_array_csv",
]

DEFAULT_TRUNCATION_TOL = 1e-8
DEFAULT_MEMORY_BUDGET = 256 * 2**20  # bytes for one dense complex matrix


@dataclass(frozen=True)
class HilbertSpec:
    """Photon cutoff per mode (inclusive) and atomic dimension.

    ``atom_dim = 2`` spans ``{g, e}``; ``atom_dim = 3`` adds the excited
    level ``c`` needed by the three-level Hamiltonian.
    """

    n_max: int
    atom_dim: int = 2
    truncation_tol: float = DEFAULT_TRUNCATION_TOL
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))
        if self.atom_dim not in (2, 3):
            raise ValueError("atom_dim must be 2 or 3")
        if not 0 < self.truncation_tol < 1:
            raise ValueError("truncation_tol must lie in (0, 1)")
        need = 16 * self.dim**2
        if need > self.memory_budget:
            raise ValueError(
                f"a dense {self.dim}x{self.dim} matrix needs {need / 2**20:.0f} MiB, "
                f"over the {self.memory_budget / 2**20:.0f} MiB budget"
            )

    @property
    def mode_dim(self) -> int:
        return self.n_max + 1

    @property
    def field_dim(self) -> int:
        return self.mode_dim**2

    @property
    def dim(self) -> int:
        return self.atom_dim * self.field_dim

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.atom_dim, self.mode_dim, self.mode_dim)


# -- coherent states ---------------------------------------------------------


def truncation_deficit(alpha: complex, n_max: int) -> float:
    """Probability weight of ``|alpha>`` above ``n_max`` photons
    (a Poisson tail, evaluated as a regularized incomplete gamma)."""
    mean = abs(alpha) ** 2
    if mean == 0:
        return 0.0
    return float(gammainc(n_max + 1, mean))


def required_n_max(mean_photons: float, tol: float = DEFAULT_TRUNCATION_TOL) -> int:
    """Smallest cutoff whose Poisson tail for ``mean_photons`` is ``<= tol``."""
    if mean_photons < 0:
        raise ValueError("mean photon number must be non-negative")
    n = 1
    while mean_photons > 0 and gammainc(n + 1, mean_photons) > tol:
        n += 1
    return n


def default_n_max(alpha: complex, beta: complex, tol: float = DEFAULT_TRUNCATION_TOL) -> int:
    """Cutoff for a two-mode coherent input.

    The beam-splitter coupling redistributes photons between the modes, so
    the tail is taken over the total photon number (mean
    ``|alpha|^2 + |beta|^2``).  Gives 18 for ``(1, 1.5)`` at ``1e-8``.
    """
    return required_n_max(abs(alpha) ** 2 + abs(beta) ** 2, tol)


def coherent_vector(
    alpha: complex, n_max: int, tol: float | None = DEFAULT_TRUNCATION_TOL
) -> np.ndarray:
    """Fock amplitudes ``e^{-|alpha|^2/2} alpha^n / sqrt(n!)`` for ``n <= n_max``.

    The vector is not renormalized; its missing weight is
    :func:`truncation_deficit`.  Raises :class:`TruncationError` when that
    exceeds ``tol`` (pass ``tol=None`` to skip the check).
    """
    alpha = complex(alpha)
    if tol is not None:
        deficit = truncation_deficit(alpha, n_max)
        if deficit > tol:
            need = required_n_max(abs(alpha) ** 2, tol)
            raise TruncationError(
                f"|alpha|={abs(alpha):.3g} loses {deficit:.2e} > {tol:.0e} at n_max={n_max}; "
                f"use n_max >= {need}",
                required_n_max=need,
            )
    out = np.empty(n_max + 1, dtype=complex)
    out[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, n_max + 1):
        out[n] = out[n - 1] * alpha / math.sqrt(n)
    return out


def field_vector(pair: CoherentPair, n_max: int, tol=DEFAULT_TRUNCATION_TOL) -> np.ndarray:
    return np.kron(coherent_vector(pair.alpha, n_max, tol), coherent_vector(pair.beta, n_max, tol))


_SQRT_HALF = math.sqrt(0.5)
_ATOM_AMPLITUDES = {
    "g": (1.0, 0.0),
    "e": (0.0, 1.0),
    "plus": (_SQRT_HALF, _SQRT_HALF),
    "minus": (_SQRT_HALF, -_SQRT_HALF),
}


def atom_vector(label: str, atom_dim: int = 2) -> np.ndarray:
    """``|g>``, ``|e>``, ``|c>`` or ``|+/->`` as a length-``atom_dim`` vector."""
    out = np.zeros(atom_dim, dtype=complex)
    if label == "c":
        if atom_dim < 3:
            raise ValueError("level c needs atom_dim=3")
        out[2] = 1.0
        return out
    if label not in _ATOM_AMPLITUDES:
        raise ValueError(f"unknown atomic label {label!r}")
    out[:2] = _ATOM_AMPLITUDES[label]
    return out


def product_state(label: str, pair: CoherentPair, spec: HilbertSpec) -> np.ndarray:
    """``|label> (x) |alpha> (x) |beta>`` in the full space."""
    return np.kron(
        atom_vector(label, spec.atom_dim), field_vector(pair, spec.n_max, spec.truncation_tol)
    )


# -- operators ---------------------------------------------------------------


def _readonly(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


@lru_cache(maxsize=32)
def field_operators(n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single-mode ``(a, a_dag, n)`` on ``{|0>, ..., |n_max>}``."""
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)
    return _readonly(a), _readonly(a.conj().T.copy()), _readonly(a.conj().T @ a)


class ModeOperators(NamedTuple):
    a1: np.ndarray
    a2: np.ndarray
    a1_dag: np.ndarray
    a2_dag: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    k_plus: np.ndarray  # a1_dag a2
    k_minus: np.ndarray  # a1 a2_dag


@lru_cache(maxsize=16)
def mode_operators(spec: HilbertSpec) -> ModeOperators:
    """Field ladder operators embedded in the full space (cached, read-only)."""
    a, _, _ = field_operators(spec.n_max)
    ia, im = np.eye(spec.atom_dim), np.eye(spec.mode_dim)
    a1 = np.kron(ia, np.kron(a, im))
    a2 = np.kron(ia, np.kron(im, a))
    a1d, a2d = a1.conj().T.copy(), a2.conj().T.copy()
    ops = ModeOperators(a1, a2, a1d, a2d, a1d @ a1, a2d @ a2, a1d @ a2, a1 @ a2d)
    return ModeOperators(*(_readonly(m) for m in ops))


class AtomOperators(NamedTuple):
    sigma: np.ndarray  # |g><e|
    sigma_dag: np.ndarray
    proj_g: np.ndarray
    proj_e: np.ndarray
    proj_c: np.ndarray | None


@lru_cache(maxsize=16)
def atomic_operators(spec: HilbertSpec) -> AtomOperators:
    """Atomic lowering/raising operators and level projectors (cached, read-only)."""
    d = spec.atom_dim
    ifield = np.eye(spec.field_dim)

    def embed(i, j):
        m = np.zeros((d, d), dtype=complex)
        m[i, j] = 1.0
        return _readonly(np.kron(m, ifield))

    sigma = embed(0, 1)
    return AtomOperators(
        sigma,
        embed(1, 0),
        embed(0, 0),
        embed(1, 1),
        embed(2, 2) if d == 3 else None,
    )


def number_diagonal(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Photon numbers ``(n1, n2)`` of each field basis index."""
    n = np.arange(n_max + 1)
    return np.repeat(n, n_max + 1), np.tile(n, n_max + 1)


def closed_sector(n_max: int) -> np.ndarray:
    """Boolean mask of field basis states with ``n1 + n2 <= n_max``.

    Operators conserving the total photon number act exactly on this sector
    despite the per-mode cutoff.
    """
    n1, n2 = number_diagonal(n_max)
    return (n1 + n2) <= n_max


def expm_hermitian(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(-i h t)`` for hermitian ``h`` via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def su2_disentangle_check(
    theta: float, state: np.ndarray, n_max: int, tol: float = DEFAULT_TRUNCATION_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``exp(i theta (K+ + K-))`` to a two-mode state in two ways.

    ``direct`` uses a dense matrix exponential.  ``factored`` uses the
    normal-ordered product ``exp(x K+) exp(ln(x0) K0) exp(x K-)`` with
    ``K+ = a1_dag a2``, ``K- = a1 a2_dag``, ``K0 = (n1 - n2)/2``,
    ``x = i tan(theta)`` and ``x0 = 1/cos(theta)^2``.

    Both act on the input restricted to ``n1 + n2 <= n_max``, where the
    truncated generators close exactly; a :class:`TruncationError` is
    raised if the discarded weight exceeds ``tol``.

    For ``|theta| > pi/4`` the factored route applies the product to
    ``theta / m`` ``m`` times.  A single factorization at large
    ``tan(theta)`` cancels huge intermediate amplitudes and loses digits
    (about 1e-7 at ``theta = 1.1``), and it is singular at ``cos = 0``.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != ((n_max + 1) ** 2,):
        raise ValueError("state must be a two-mode field vector")
    mask = closed_sector(n_max)
    lost = float(np.sum(np.abs(state[~mask]) ** 2))
    if lost > tol:
        raise TruncationError(f"{lost:.2e} of the state lies outside n1 + n2 <= {n_max}")
    psi = np.where(mask, state, 0)

    a, _, _ = field_operators(n_max)
    im = np.eye(n_max + 1)
    kp = np.kron(a.conj().T, im) @ np.kron(im, a)
    km = kp.conj().T
    direct = linalg.expm(1j * theta * (kp + km)) @ psi

    pieces = max(1, math.ceil(abs(theta) / (math.pi / 4) - 1e-12))
    step = theta / pieces
    x = 1j * math.tan(step)
    n1, n2 = number_diagonal(n_max)
    scale = (1.0 / math.cos(step)) ** (n1 - n2).astype(float)  # exp(ln(x0) K0)
    up, down = linalg.expm(x * kp), linalg.expm(x * km)
    factored = psi
    for _ in range(pieces):
        factored = up @ (scale * (down @ factored))
    return direct, factored


# -- reduced states and distances -------------------------------------------


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists subsystem dimensions in basis order.  Keeping nothing
    returns the (0-d) trace.
    """
    dims = tuple(int(d) for d in dims)
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError("keep indexes a missing subsystem")
    rho = np.asarray(rho)
    n = len(dims)
    t = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = [letters[n + i] if i in keep else rows[i] for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    k = int(np.prod([dims[i] for i in keep])) if keep else 1
    return reduced.reshape(k, k) if keep else reduced


def _as_density(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        return np.outer(x, x.conj())
    return x


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Either argument may be a state vector.  Inputs are normalized to unit
    norm/trace first; with a pure argument the fidelity reduces to an
    expectation value and is exact to rounding.
    """
    rho, sigma = np.asarray(rho, dtype=complex), np.asarray(sigma, dtype=complex)
    if rho.shape[0] != sigma.shape[0]:
        raise ValueError("dimension mismatch")
    if rho.ndim == 1 and sigma.ndim == 1:
        val = abs(np.vdot(rho, sigma)) ** 2 / (np.vdot(rho, rho).real * np.vdot(sigma, sigma).real)
        return float(min(max(val, 0.0), 1.0))
    if rho.ndim == 1 or sigma.ndim == 1:
        psi, m = (rho, sigma) if rho.ndim == 1 else (sigma, rho)
        val = np.vdot(psi, m @ psi).real / (np.vdot(psi, psi).real * np.trace(m).real)
        return float(min(max(val, 0.0), 1.0))
    rho = rho / np.trace(rho).real
    sigma = sigma / np.trace(sigma).real
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    keep = w > 1e-14 * max(w.max(), 1e-300)
    s = np.sqrt(w[keep])[:, None] * v[:, keep].conj().T
    inner = s @ sigma @ s.conj().T
    mu = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    val = np.sum(np.sqrt(np.clip(mu, 0.0, None))) ** 2
    return float(min(max(val, 0.0), 1.0))


def check_density_matrix(
    rho: np.ndarray,
    hermiticity_tol: float = 1e-10,
    trace_tol: float = 1e-8,
    eigenvalue_tol: float = 1e-8,
) -> None:
    """Raise ``ValueError`` unless ``rho`` is hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > hermiticity_tol:
        raise ValueError(f"not hermitian: max |rho - rho^dag| = {herm:.2e}")
    tr = np.trace(rho).real
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < -eigenvalue_tol:
        raise ValueError(f"negative eigenvalue {lo:.2e}")


# -- symbolic states to matrices --------------------------------------------


def _branch_vector(label: str, pair: CoherentPair, spec: HilbertSpec, tol) -> np.ndarray:
    f = field_vector(pair, spec.n_max, tol)
    return f if label == "none" else np.kron(atom_vector(label, spec.atom_dim), f)


def superposition_to_matrix(state, spec: HilbertSpec, tol=DEFAULT_TRUNCATION_TOL) -> np.ndarray:
    """Dense density matrix of any object exposing ``dyads()``.

    Field-only states (label ``none``) give a matrix over the two modes;
    atomic labels give one over the full space.  Truncated coherent vectors
    are used as they are, so the trace falls short of 1 by at most the
    truncation deficit.
    """
    cache: dict = {}

    def vec(label, pair):
        key = (label, pair)
        if key not in cache:
            cache[key] = _branch_vector(label, pair, spec, tol)
        return cache[key]

    out = None
    for weight, ket, bra in state.dyads():
        term = weight * np.outer(vec(*ket), vec(*bra).conj())
        out = term if out is None else out + term
    return out


def superposition_to_vector(state, spec: HilbertSpec, tol=DEFAULT_TRUNCATION_TOL) -> np.ndarray:
    """State vector of a pure superposition (anything with ``terms``)."""
    return sum(
        t.coefficient * _branch_vector(t.label, t.amplitudes, spec, tol) for t in state.terms
    )


# -- text serialization ------------------------------------------------------

_CSV_HEADER = "lambda-ecs array v1"


def save_array_csv(path, array: np.ndarray) -> None:
    """Write a complex vector or matrix as ``row,col,re,im`` lines.

    The first line is ``# lambda-ecs array v1 shape=R[xC]``; vectors use
    ``col = 0``.  Values are written with 17 significant digits so reading
    them back is exact.
    """
    a = np.asarray(array, dtype=complex)
    if a.ndim not in (1, 2):
        raise ValueError("only vectors and matrices are supported")
    shape = "x".join(str(s) for s in a.shape)
    m = a.reshape(a.shape[0], -1)
    rows, cols = np.indices(m.shape)
    table = np.column_stack([rows.ravel(), cols.ravel(), m.real.ravel(), m.imag.ravel()])
    np.savetxt(
        path,
        table,
        fmt=["%d", "%d", "%.17g", "%.17g"],
        delimiter=",",
        header=f"{_CSV_HEADER} shape={shape}\nrow,col,re,im",
    )


def load_array_csv(path) -> np.ndarray:
    with Path(path).open() as fh:
        first = fh.readline()
    if _CSV_HEADER not in first or "shape=" not in first:
        raise ValueError(f"{path}: missing array header")
    shape = tuple(int(s) for s in first.split("shape=")[1].strip().split("x"))
    table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    out = np.zeros((shape[0], shape[1] if len(shape) == 2 else 1), dtype=complex)
    out[table[:, 0].astype(int), table[:, 1].astype(int)] = table[:, 2] + 1j * table[:, 3]
    return out.reshape(shape)
