"""Closed-form dynamics of the two cavity modes.

States are kept symbolically as short lists of two-mode coherent products
tagged with an atomic label; all norms and traces are evaluated with the
exact (non-orthogonal) coherent-state overlap, never in a truncated Fock
basis.  The numerical counterparts live in :mod:`lambda_ecs.fock` and
:mod:`lambda_ecs.dynamics`.

A density operator is exposed through ``dyads()``: a list of
``(weight, (ket_label, ket_pair), (bra_label, bra_pair))`` so that
``rho = sum(weight * |ket_label, ket_pair><bra_label, bra_pair|)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

from .core import CoherentPair
from .exceptions import DegenerateOutcomeError

__all__ = [
    "ATOM_LABELS",
    "Term",
    "SuperpositionState",
    "LossyDensityState",
    "MixedFieldState",
    "ConcurrenceReport",
    "atom_overlap",
    "coherent_overlap",
    "pair_overlap",
    "dyad_trace",
    "conjugate_overlap",
    "evolve_amplitudes",
    "full_evolution_state",
    "project_measurement",
    "pure_field_state",
    "normalization_m",
    "concurrence_pure",
    "lambda_factors",
    "eta_factor",
    "eta_exponent",
    "lossy_density_state",
    "normalization_n",
    "project_lossy",
    "concurrence_lossy",
]

ATOM_LABELS = ("g", "e", "plus", "minus", "none")
DEGENERATE_THRESHOLD = 1e-15
NORM_TOLERANCE = 1e-12

_SQRT_HALF = math.sqrt(0.5)
_ATOM_VECTORS = {
    "g": (1.0, 0.0),
    "e": (0.0, 1.0),
    "plus": (_SQRT_HALF, _SQRT_HALF),
    "minus": (_SQRT_HALF, -_SQRT_HALF),
}

Outcome = Literal["g", "e"]


def atom_overlap(bra: str, ket: str) -> float:
    """``<bra|ket>`` for atomic labels; ``none`` only pairs with ``none``."""
    if bra == "none" or ket == "none":
        if bra == ket:
            return 1.0
        raise ValueError("cannot overlap a field-only state with an atomic one")
    u, v = _ATOM_VECTORS[bra], _ATOM_VECTORS[ket]
    return u[0] * v[0] + u[1] * v[1]


def coherent_overlap(gamma: complex, delta: complex) -> complex:
    """``<gamma|delta> = exp(-(|gamma|^2 + |delta|^2)/2 + gamma* delta)``.

    Evaluated as ``exp(-|gamma - delta|^2 / 2 + i Im(gamma* delta))`` which is
    the same number without the cancellation in the real part.
    """
    gamma, delta = complex(gamma), complex(delta)
    cross = gamma.conjugate() * delta
    return cmath.exp(complex(-0.5 * abs(gamma - delta) ** 2, cross.imag))


def pair_overlap(bra: CoherentPair, ket: CoherentPair) -> complex:
    return coherent_overlap(bra.alpha, ket.alpha) * coherent_overlap(bra.beta, ket.beta)


def conjugate_overlap(gamma: complex) -> complex:
    """``<gamma|gamma*> = exp(-|gamma|^2 + gamma*^2)``, written for
    ``gamma = x + iy`` as ``exp(-2y^2 - 2ixy)``."""
    x, y = gamma.real, gamma.imag
    return cmath.exp(complex(-2.0 * y * y, -2.0 * x * y))


def _one_minus_abs2(a: complex, b: complex) -> float:
    # 1 - |<a|b>|^2 = 1 - exp(-|a - b|^2)
    return -math.expm1(-abs(a - b) ** 2)


def dyad_trace(dyads) -> complex:
    return sum(
        w * atom_overlap(bl, kl) * pair_overlap(bp, kp) for w, (kl, kp), (bl, bp) in dyads
    )


@dataclass(frozen=True)
class Term:
    coefficient: complex
    label: str
    amplitudes: CoherentPair

    def __post_init__(self):
        if self.label not in ATOM_LABELS:
            raise ValueError(f"unknown atomic label {self.label!r}")
        object.__setattr__(self, "coefficient", complex(self.coefficient))


@dataclass(frozen=True)
class SuperpositionState:
    """``sum_i c_i |label_i> |alpha_i, beta_i>``.

    With ``normalized=True`` the physical norm (computed with coherent
    overlaps) must be 1 to within ``1e-12``.
    """

    terms: tuple
    normalized: bool = True

    def __post_init__(self):
        terms = tuple(
            t if isinstance(t, Term) else Term(*t) for t in self.terms
        )
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("a superposition needs at least one term")
        field_only = [t.label == "none" for t in terms]
        if any(field_only) and not all(field_only):
            raise ValueError("label 'none' cannot be mixed with atomic labels")
        if self.normalized:
            n2 = self.norm_squared()
            if abs(n2 - 1.0) > NORM_TOLERANCE:
                raise ValueError(f"state flagged normalized has norm^2 = {n2!r}")

    @property
    def is_field_state(self) -> bool:
        return self.terms[0].label == "none"

    def norm_squared(self) -> float:
        return dyad_trace(self.dyads()).real

    def dyads(self):
        return [
            (
                ti.coefficient * tj.coefficient.conjugate(),
                (ti.label, ti.amplitudes),
                (tj.label, tj.amplitudes),
            )
            for ti in self.terms
            for tj in self.terms
        ]

    def merged(self) -> "SuperpositionState":
        """Combine terms with identical label and amplitudes; drop zeros."""
        acc: dict = {}
        for t in self.terms:
            key = (t.label, t.amplitudes)
            acc[key] = acc.get(key, 0j) + t.coefficient
        kept = tuple(Term(c, lab, amps) for (lab, amps), c in acc.items() if c != 0)
        if not kept:
            raise ValueError("all terms cancel")
        return SuperpositionState(kept, normalized=self.normalized)


def _rotate(pair: CoherentPair, theta: float) -> CoherentPair:
    c, s = math.cos(theta), math.sin(theta)
    a, b = pair.alpha, pair.beta
    return CoherentPair(a * c + 1j * b * s, b * c + 1j * a * s)


def evolve_amplitudes(pair: CoherentPair, g_eff: float, t: float) -> CoherentPair:
    """Mode amplitudes of the ``|+>`` branch after time ``t``.

    ``alpha~ = alpha cos(g t/2) + i beta sin(g t/2)`` and symmetrically for
    ``beta~``; a beam-splitter rotation, so ``|alpha~|^2 + |beta~|^2`` is
    conserved.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    return _rotate(pair, 0.5 * g_eff * t)


def full_evolution_state(initial: CoherentPair, g_eff: float, t: float) -> SuperpositionState:
    """Atom + field state at time ``t`` from ``|g> |alpha, beta>``.

    Returned in the bare ``{g, e}`` basis as
    ``1/2 |g>(|A> + |B>) + 1/2 |e>(|A> - |B>)`` where ``A`` is the ``|+>``
    branch (rotation by ``+g t/2``) and ``B`` the ``|->`` branch (rotation by
    ``-g t/2``).  For real ``alpha, beta`` this is ``B = A*``; for complex
    inputs the conjugate form does not hold and ``B`` is kept explicitly.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    theta = 0.5 * g_eff * t
    a, b = _rotate(initial, theta), _rotate(initial, -theta)
    return SuperpositionState(
        (
            Term(0.5, "g", a),
            Term(0.5, "g", b),
            Term(0.5, "e", a),
            Term(-0.5, "e", b),
        )
    )


def project_measurement(state: SuperpositionState, outcome: Outcome):
    """Project the atom onto ``|g>`` or ``|e>``.

    Returns ``(field_state, probability)``; the field state is normalized and
    labelled ``none``.  Raises :class:`DegenerateOutcomeError` when the
    probability is below ``1e-15``.
    """
    if outcome not in ("g", "e"):
        raise ValueError("outcome must be 'g' or 'e'")
    if state.is_field_state:
        raise ValueError("state carries no atomic degree of freedom")
    projected = [
        Term(t.coefficient * atom_overlap(outcome, t.label), "none", t.amplitudes)
        for t in state.terms
    ]
    try:
        field = SuperpositionState(tuple(projected), normalized=False).merged()
    except ValueError:
        raise DegenerateOutcomeError(f"outcome {outcome!r} has zero amplitude") from None
    prob = field.norm_squared()
    if prob < DEGENERATE_THRESHOLD:
        raise DegenerateOutcomeError(f"outcome {outcome!r} has probability {prob:.3e}")
    scale = 1.0 / math.sqrt(prob)
    field = SuperpositionState(
        tuple(Term(t.coefficient * scale, "none", t.amplitudes) for t in field.terms)
    )
    return field, prob


def _sign(sign) -> int:
    if sign in (1, "+", "plus", "g"):
        return 1
    if sign in (-1, "-", "minus", "e"):
        return -1
    raise ValueError(f"sign must be +1/-1 (or plus/minus), got {sign!r}")


def normalization_m(evolved: CoherentPair, sign=1) -> float:
    """``M`` such that ``(|a, b> +/- |a*, b*>)/sqrt(M)`` has unit norm."""
    s = _sign(sign)
    return _two_plus_twice_real(s, _self_exponent(evolved))


def _self_exponent(pair: CoherentPair) -> complex:
    """``-|a|^2 - |b|^2 + a^2 + b^2``, i.e. ``-2y^2 + 2ixy`` per mode."""
    a, b = pair.alpha, pair.beta
    return complex(
        -2.0 * (a.imag**2 + b.imag**2), 2.0 * (a.real * a.imag + b.real * b.imag)
    )


def _two_plus_twice_real(s: int, exponent: complex) -> float:
    """``2 + 2 s Re(exp(exponent))`` without cancellation for ``s = -1``."""
    if s > 0:
        return 2.0 + 2.0 * cmath.exp(exponent).real
    # Re(expm1(x + iy)) = expm1(x) cos(y) - 2 sin(y/2)^2
    x, y = exponent.real, exponent.imag
    return -2.0 * (math.expm1(x) * math.cos(y) - 2.0 * math.sin(0.5 * y) ** 2)


def pure_field_state(evolved: CoherentPair, sign=1) -> SuperpositionState:
    """``(|a, b> +/- |a*, b*>) / sqrt(M)`` as a field-only superposition."""
    s = _sign(sign)
    m = normalization_m(evolved, s)
    if m < DEGENERATE_THRESHOLD:
        raise DegenerateOutcomeError("superposition vanishes identically")
    c = 1.0 / math.sqrt(m)
    return SuperpositionState(
        (Term(c, "none", evolved), Term(s * c, "none", evolved.conj()))
    )


class ConcurrenceReport(NamedTuple):
    concurrence: float
    p1: complex
    p2: complex
    m1: float
    m2: float
    normalization: float
    eta_magnitude: float = 1.0


def concurrence_pure(evolved: CoherentPair, sign=1) -> ConcurrenceReport:
    """Concurrence of ``(|a, b> +/- |a*, b*>)/sqrt(M)``.

    ``C = 2 sqrt((1 - |p1|^2)(1 - |p2|^2)) / |M|`` with
    ``p1 = exp(-|a|^2 + a*^2)`` and ``p2`` likewise for ``b``.  Real ``a`` or
    ``b`` gives ``C = 0`` exactly.
    """
    s = _sign(sign)
    a, b = evolved.alpha, evolved.beta
    p1, p2 = conjugate_overlap(a), conjugate_overlap(b)
    m1 = math.sqrt(-math.expm1(-4.0 * a.imag**2))
    m2 = math.sqrt(-math.expm1(-4.0 * b.imag**2))
    m = normalization_m(evolved, s)
    c = 0.0 if m1 * m2 == 0.0 else 2.0 * m1 * m2 / abs(m)
    return ConcurrenceReport(c, p1, p2, m1, m2, m, 1.0)


# -- cavity loss -------------------------------------------------------------


def lambda_factors(g_eff: float, kappa: float, t: float) -> tuple[complex, complex]:
    """The two damping integrals entering the coherence factor ``eta``."""
    den = kappa * kappa + g_eff * g_eff
    if den == 0:
        raise ValueError("kappa and g_eff cannot both vanish")
    decay = math.exp(-kappa * t)
    cg, sg = math.cos(g_eff * t), math.sin(g_eff * t)
    num1 = kappa * g_eff * cg - kappa * kappa * sg - kappa * g_eff * decay
    num2 = kappa * kappa * cg + kappa * g_eff * sg - kappa * kappa * decay
    lam1 = num1 * (-0.5j) / den  # 1/(2i) = -i/2
    lam2 = num2 / (2.0 * den)
    return lam1, complex(lam2)


def _require_real(initial: CoherentPair):
    if not initial.is_real():
        raise ValueError(
            "the closed-form lossy solution assumes real initial amplitudes "
            "(the |-> branch is then the complex conjugate of the |+> branch)"
        )


def eta_factor(initial: CoherentPair, g_eff: float, kappa: float, t: float) -> complex:
    """Coherence factor between the ``|+>`` and ``|->`` branches.

    ``eta = exp[-4 l1 a b + (|a|^2 + |b|^2)(e^{-kt} - 1) + 2 l2 (a^2 + b^2)]``
    with ``a, b`` the undamped amplitudes at time ``t`` and ``l1, l2`` from
    :func:`lambda_factors`.  ``|eta| <= 1``; ``eta = 1`` at ``t = 0`` or
    ``kappa = 0``.
    """
    return cmath.exp(eta_exponent(initial, g_eff, kappa, t))


def eta_exponent(initial: CoherentPair, g_eff: float, kappa: float, t: float) -> complex:
    """``ln eta`` (see :func:`eta_factor`), exact to rounding even when tiny."""
    _require_real(initial)
    if t < 0 or kappa < 0:
        raise ValueError("t and kappa must be non-negative")
    if kappa == 0:
        return 0j
    lam1, lam2 = lambda_factors(g_eff, kappa, t)
    ev = evolve_amplitudes(initial, g_eff, t)
    a, b = ev.alpha, ev.beta
    exponent = (
        -4.0 * lam1 * a * b
        + (abs(a) ** 2 + abs(b) ** 2) * math.expm1(-kappa * t)
        + 2.0 * lam2 * (a * a + b * b)
    )
    return complex(exponent)


@dataclass(frozen=True)
class LossyDensityState:
    """Atom + field density operator with cavity loss.

    ``rho = 1/2 |+,A><+,A| + 1/2 |-,B><-,B| + 1/2 eta |+,A><-,B| + h.c.``
    where ``A = a e^{-kt/2}`` and ``B = a* e^{-kt/2}`` are the damped branch
    amplitudes.
    """

    plus_branch: CoherentPair
    minus_branch: CoherentPair
    eta: complex
    evolved: CoherentPair
    g_eff: float
    kappa: float
    t: float
    log_eta: complex = 0j

    def dyads(self):
        a, b, eta = self.plus_branch, self.minus_branch, self.eta
        return [
            (0.5, ("plus", a), ("plus", a)),
            (0.5, ("minus", b), ("minus", b)),
            (0.5 * eta, ("plus", a), ("minus", b)),
            (0.5 * eta.conjugate(), ("minus", b), ("plus", a)),
        ]

    def trace(self) -> float:
        return dyad_trace(self.dyads()).real


def lossy_density_state(
    initial: CoherentPair, g_eff: float, kappa: float, t: float
) -> LossyDensityState:
    if t < 0:
        raise ValueError("t must be non-negative")
    log_eta = eta_exponent(initial, g_eff, kappa, t)
    ev = evolve_amplitudes(initial, g_eff, t)
    damp = math.exp(-0.5 * kappa * t)
    return LossyDensityState(
        plus_branch=ev.scaled(damp),
        minus_branch=ev.conj().scaled(damp),
        eta=cmath.exp(log_eta),
        evolved=ev,
        g_eff=g_eff,
        kappa=kappa,
        t=t,
        log_eta=log_eta,
    )


def normalization_n(
    evolved: CoherentPair, eta: complex, kappa: float, t: float, sign=1, log_eta=None
) -> float:
    """``N = 2 +/- [eta exp((-|a|^2 - |b|^2 + a^2 + b^2) e^{-kt}) + c.c.]``.

    This is the trace of the unnormalized projected field operator
    (``4 x`` the outcome probability).  Passing ``log_eta`` avoids the
    cancellation in ``2 - 2 Re(...)`` when the ``-`` outcome is nearly
    impossible.
    """
    s = _sign(sign)
    if log_eta is None:
        log_eta = cmath.log(eta)
    return _two_plus_twice_real(s, log_eta + _self_exponent(evolved) * math.exp(-kappa * t))


@dataclass(frozen=True)
class MixedFieldState:
    """Two-mode field after the atom is found in ``atom_outcome``.

    ``rho_f = (1/N)[|A><A| + s eta |A><B| + s eta* |B><A| + |B><B|]`` with
    ``s = +1`` for ``g`` and ``-1`` for ``e``.
    """

    branch_amplitudes: tuple
    eta: complex
    norm_n: float
    atom_outcome: Outcome = "g"

    def __post_init__(self):
        if self.atom_outcome not in ("g", "e"):
            raise ValueError("atom_outcome must be 'g' or 'e'")
        if abs(self.eta) > 1.0 + 1e-12:
            raise ValueError(f"|eta| = {abs(self.eta)!r} exceeds 1")
        if not self.norm_n > 0:
            raise ValueError("normalization N must be positive")

    @property
    def coherence(self) -> complex:
        return self.eta if self.atom_outcome == "g" else -self.eta

    @property
    def probability(self) -> float:
        return self.norm_n / 4.0

    def dyads(self):
        a, b = self.branch_amplitudes
        c, inv = self.coherence, 1.0 / self.norm_n
        return [
            (inv, ("none", a), ("none", a)),
            (inv * c, ("none", a), ("none", b)),
            (inv * c.conjugate(), ("none", b), ("none", a)),
            (inv, ("none", b), ("none", b)),
        ]

    def trace(self) -> float:
        return dyad_trace(self.dyads()).real


def project_lossy(state: LossyDensityState, outcome: Outcome) -> MixedFieldState:
    """Project the lossy atom + field state onto ``|g>`` or ``|e>``.

    The ``e`` outcome is the sign-flipped analogue of the ``g`` outcome.
    The result is normalized to unit trace; ``norm_n`` records ``N``.
    """
    if outcome not in ("g", "e"):
        raise ValueError("outcome must be 'g' or 'e'")
    n = normalization_n(state.evolved, state.eta, state.kappa, state.t, outcome, state.log_eta)
    if n < DEGENERATE_THRESHOLD:
        raise DegenerateOutcomeError(f"outcome {outcome!r} has N = {n:.3e}")
    return MixedFieldState(
        branch_amplitudes=(state.plus_branch, state.minus_branch),
        eta=state.eta,
        norm_n=n,
        atom_outcome=outcome,
    )


def concurrence_lossy(field: MixedFieldState) -> ConcurrenceReport:
    """``C = 2 M1 M2 |eta| / N`` for the projected lossy field state.

    ``p_i`` is the overlap of the two branch amplitudes of mode ``i`` and
    ``M_i = sqrt(1 - |p_i|^2)``.
    """
    a, b = field.branch_amplitudes
    p1 = coherent_overlap(a.alpha, b.alpha)
    p2 = coherent_overlap(a.beta, b.beta)
    m1 = math.sqrt(_one_minus_abs2(a.alpha, b.alpha))
    m2 = math.sqrt(_one_minus_abs2(a.beta, b.beta))
    eta_abs = abs(field.eta)
    c = 2.0 * m1 * m2 * eta_abs / field.norm_n
    return ConcurrenceReport(c, p1, p2, m1, m2, field.norm_n, eta_abs)


def concurrence_series(
    initial: CoherentPair, g_eff: float, kappa: float, times: Sequence[float], outcome: Outcome = "g"
) -> list[float]:
    """Closed-form concurrence along a time grid (pure formula at ``kappa == 0``)."""
    s = _sign(outcome)
    out = []
    for t in times:
        if kappa == 0:
            out.append(concurrence_pure(evolve_amplitudes(initial, g_eff, t), s).concurrence)
        else:
            field = project_lossy(lossy_density_state(initial, g_eff, kappa, t), outcome)
            out.append(concurrence_lossy(field).concurrence)
    return out
