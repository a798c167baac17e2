"""Two-qubit encoding of two-branch cat states and Wootters concurrence.

A field state built from two coherent branches ``|A> = |A1, A2>`` and
``|B> = |B1, B2>`` lives in a 2 x 2 dimensional subspace.  For each mode the
orthonormal basis is

    |0>_j = |A_j>,    |1>_j = (|B_j> - p_j |A_j>) / M_j,

with ``p_j = <A_j|B_j>`` and ``M_j = sqrt(1 - |p_j|^2)``, so that
``|B_j> = p_j |0>_j + M_j |1>_j``.  Any density operator spanned by the two
branches becomes an exact 4 x 4 matrix, and its concurrence can be compared
with the closed-form values of :mod:`lambda_ecs.analytic`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .analytic import (
    ConcurrenceReport,
    MixedFieldState,
    SuperpositionState,
    coherent_overlap,
    concurrence_lossy,
    concurrence_pure,
    evolve_amplitudes,
    full_evolution_state,
    lossy_density_state,
    project_lossy,
    project_measurement,
)
from .core import CoherentPair
from .exceptions import CrosscheckError, DegenerateOutcomeError
from .fock import coherent_vector

__all__ = [
    "DEGENERACY_THRESHOLD",
    "QubitMapping",
    "build_qubit_mapping",
    "wootters_concurrence",
    "wootters_from_factor",
    "concurrence_from_mapping",
    "numeric_field_to_qubits",
    "CrosscheckReport",
    "concurrence_crosscheck",
    "CrosscheckRow",
    "concurrence_profile",
    "write_crosscheck_csv",
]

DEGENERACY_THRESHOLD = 1e-12
PURE_AGREEMENT = 1e-8

_SIGMA_YY = np.array(
    [[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex
)


@dataclass(frozen=True)
class QubitMapping:
    """Two-qubit image of a two-branch field state.

    ``reference`` holds the ``|0>`` amplitudes ``(A1, A2)``, ``overlaps``
    the ``p_j`` and ``norms`` the ``M_j``.  ``factor`` is a 4 x r matrix with
    ``rho4 = factor @ factor^dag``.  ``degenerate`` is set when some
    ``M_j < 1e-12``: the state is then a product and its concurrence is 0.
    """

    reference: CoherentPair
    partner: CoherentPair
    overlaps: tuple
    norms: tuple
    rho4: np.ndarray
    factor: np.ndarray
    degenerate: bool

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho4 @ self.rho4).real)


def _branch_weights(field) -> tuple[CoherentPair, CoherentPair, np.ndarray]:
    """Branches ``(A, B)`` and the 2 x 2 weight matrix ``W`` such that
    ``rho = sum W[x, y] |x><y|`` over ``x, y in (A, B)``."""
    if isinstance(field, MixedFieldState):
        a, b = field.branch_amplitudes
        c, inv = field.coherence, 1.0 / field.norm_n
        return a, b, inv * np.array([[1.0, c], [np.conj(c), 1.0]], dtype=complex)
    if isinstance(field, SuperpositionState):
        if not field.is_field_state:
            raise ValueError("project the atom out before mapping the field")
        terms = field.terms
        if len(terms) == 1:
            coeffs = np.array([terms[0].coefficient, 0.0], dtype=complex)
            a = b = terms[0].amplitudes
        elif len(terms) == 2:
            coeffs = np.array([t.coefficient for t in terms], dtype=complex)
            a, b = terms[0].amplitudes, terms[1].amplitudes
        else:
            raise ValueError("the qubit encoding needs at most two coherent branches")
        return a, b, np.outer(coeffs, coeffs.conj())
    raise TypeError(f"cannot map {type(field).__name__}")


def _psd_sqrt(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (w + w.conj().T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def build_qubit_mapping(field, reference: str = "plus") -> QubitMapping:
    """Encode a two-branch field state as a 4 x 4 density matrix.

    ``field`` is a projected :class:`SuperpositionState` (one or two field
    terms) or a :class:`MixedFieldState`.  By default the first branch
    (``|+>`` branch, amplitudes ``alpha~``) provides the ``|0>`` reference;
    ``reference='minus'`` uses the other one.
    """
    a, b, w = _branch_weights(field)
    if reference == "minus":
        a, b, w = b, a, w[::-1, ::-1]
    elif reference != "plus":
        raise ValueError("reference must be 'plus' or 'minus'")
    p = (coherent_overlap(a.alpha, b.alpha), coherent_overlap(a.beta, b.beta))
    m = tuple(
        math.sqrt(-math.expm1(-abs(x - y) ** 2)) for x, y in ((a.alpha, b.alpha), (a.beta, b.beta))
    )
    degenerate = min(m) < DEGENERACY_THRESHOLD
    va = np.array([1, 0, 0, 0], dtype=complex)
    vb = np.kron([p[0], m[0]], [p[1], m[1]]).astype(complex)
    v = np.column_stack([va, vb])
    factor = v @ _psd_sqrt(w)
    rho4 = factor @ factor.conj().T
    trace = np.trace(rho4).real
    if trace <= 0:
        raise DegenerateOutcomeError("mapped state has zero trace")
    factor = factor / math.sqrt(trace)
    rho4 = rho4 / trace
    return QubitMapping(a, b, p, m, rho4, factor, degenerate)


def wootters_from_factor(factor: np.ndarray) -> float:
    """Concurrence of ``rho = F F^dag`` for a 4 x r factor ``F``.

    The square roots of the eigenvalues of ``rho (sy x sy) rho* (sy x sy)``
    are the singular values of the symmetric r x r matrix
    ``F^T (sy x sy) F``, which avoids square roots of a non-hermitian
    product.
    """
    f = np.asarray(factor, dtype=complex)
    tau = f.T @ _SIGMA_YY @ f
    lam = np.sort(np.linalg.svd(tau, compute_uv=False))[::-1]
    lam = np.concatenate([lam, np.zeros(max(0, 4 - lam.size))])
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def wootters_concurrence(rho4: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix (normalized first)."""
    rho = np.asarray(rho4, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("expected a 4x4 density matrix")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    vals, vecs = np.linalg.eigh(rho)
    keep = vals > 1e-14 * max(vals.max(), 1e-300)
    return wootters_from_factor(vecs[:, keep] * np.sqrt(vals[keep]))


def concurrence_from_mapping(mapping: QubitMapping) -> float:
    if mapping.degenerate:
        return 0.0
    return wootters_from_factor(mapping.factor)


def numeric_field_to_qubits(rho_field: np.ndarray, mapping: QubitMapping, n_max: int) -> np.ndarray:
    """Compress a truncated-Fock field density matrix onto the qubit basis.

    The per-mode basis is rebuilt from the truncated coherent vectors by a
    QR decomposition (same orientation as the exact encoding); weight
    outside the span is dropped and the result renormalized.
    """
    bases = []
    for x, y in ((mapping.reference.alpha, mapping.partner.alpha), (mapping.reference.beta, mapping.partner.beta)):
        q, r = np.linalg.qr(
            np.column_stack([coherent_vector(x, n_max, None), coherent_vector(y, n_max, None)])
        )
        q = q * np.sign(np.diag(r).real)
        bases.append(q)
    u = np.kron(bases[0], bases[1])
    rho4 = u.conj().T @ rho_field @ u
    return rho4 / np.trace(rho4).real


class CrosscheckReport(NamedTuple):
    closed_c: float
    wootters_c: float
    difference: float
    pure: bool


def concurrence_crosscheck(field, closed_value=None) -> CrosscheckReport:
    """Compare a closed-form concurrence with the Wootters value of the
    mapped state.

    ``closed_value`` (a ``ConcurrenceReport``) defaults to the closed form
    matching ``field``.  For pure states the two must agree to ``1e-8``,
    otherwise :class:`CrosscheckError` is raised; for mixed states the
    difference is only reported.
    """
    pure = isinstance(field, SuperpositionState)
    if closed_value is None:
        closed_value = _closed_form(field)
    c_closed = float(closed_value.concurrence)
    c_w = concurrence_from_mapping(build_qubit_mapping(field))
    diff = abs(c_closed - c_w)
    if pure and diff > PURE_AGREEMENT:
        raise CrosscheckError(
            f"pure-state concurrence mismatch: closed form {c_closed!r}, Wootters {c_w!r}"
        )
    return CrosscheckReport(c_closed, c_w, diff, pure)


def _closed_form(field):
    if isinstance(field, MixedFieldState):
        return concurrence_lossy(field)
    terms = field.terms
    if len(terms) == 1:
        return ConcurrenceReport(0.0, 1.0 + 0j, 1.0 + 0j, 0.0, 0.0, 1.0)
    a, b = terms[0].amplitudes, terms[1].amplitudes
    ratio = terms[1].coefficient / terms[0].coefficient
    if b != a.conj() or abs(abs(ratio) - 1) > 1e-12 or abs(ratio.imag) > 1e-12:
        raise ValueError("closed form needs (|A> +/- |A*>) with A as first branch")
    return concurrence_pure(a, 1 if ratio.real > 0 else -1)


class CrosscheckRow(NamedTuple):
    t: float
    k: float
    closed_c: float
    wootters_c: float
    diff: float


def concurrence_profile(
    initial: CoherentPair,
    g_eff: float,
    kappa: float,
    times: Sequence[float],
    outcome: str = "g",
) -> list[CrosscheckRow]:
    """Closed-form versus Wootters concurrence along a time grid.

    ``kappa == 0`` uses the pure projected state; otherwise the projected
    lossy mixture.  Degenerate outcomes give ``nan`` rows.
    """
    rows = []
    for t in times:
        try:
            if kappa == 0:
                field, _ = project_measurement(full_evolution_state(initial, g_eff, t), outcome)
                if len(field.terms) == 2:
                    closed = concurrence_pure(
                        evolve_amplitudes(initial, g_eff, t), 1 if outcome == "g" else -1
                    )
                else:
                    closed = None
            else:
                field = project_lossy(lossy_density_state(initial, g_eff, kappa, t), outcome)
                closed = concurrence_lossy(field)
            if closed is None:
                c_p = c_w = 0.0
            else:
                c_p = float(closed.concurrence)
                c_w = concurrence_from_mapping(build_qubit_mapping(field))
            rows.append(CrosscheckRow(float(t), float(kappa), c_p, c_w, abs(c_p - c_w)))
        except DegenerateOutcomeError:
            nan = float("nan")
            rows.append(CrosscheckRow(float(t), float(kappa), nan, nan, nan))
    return rows


def write_crosscheck_csv(path, rows: Iterable[CrosscheckRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# schema: lambda-ecs concurrence-crosscheck v1\n")
        w = csv.writer(fh)
        w.writerow(CrosscheckRow._fields)
        for r in rows:
            w.writerow([f"{x:.17g}" for x in r])
