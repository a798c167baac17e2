import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lambda_ecs import CoherentPair
from lambda_ecs.analytic import full_evolution_state, lossy_density_state, project_lossy
from lambda_ecs.exceptions import TruncationError
from lambda_ecs.fock import (
    HilbertSpec,
    atom_vector,
    atomic_operators,
    check_density_matrix,
    closed_sector,
    coherent_vector,
    default_n_max,
    expm_hermitian,
    field_operators,
    field_vector,
    fidelity,
    load_array_csv,
    mode_operators,
    partial_trace,
    product_state,
    required_n_max,
    save_array_csv,
    su2_disentangle_check,
    superposition_to_matrix,
    superposition_to_vector,
    truncation_deficit,
)

camp = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


def test_hilbert_spec_validation():
    hs = HilbertSpec(4)
    assert hs.dims == (2, 5, 5) and hs.dim == 50
    for bad in (dict(n_max=0), dict(n_max=3, atom_dim=4), dict(n_max=2.5)):
        with pytest.raises(ValueError):
            HilbertSpec(**bad)
    with pytest.raises(ValueError):
        HilbertSpec(200, memory_budget=2**20)


def test_vacuum_vector():
    v = coherent_vector(0, 6)
    assert v[0] == 1 and not v[1:].any()
    assert truncation_deficit(0, 6) == 0


def test_deficit_below_tolerance_at_moderate_cutoff():
    assert truncation_deficit(1.5, 16) < 1e-8


def test_deficit_is_poisson_tail():
    v = coherent_vector(1.2 - 0.4j, 10, None)
    assert 1 - np.vdot(v, v).real == pytest.approx(truncation_deficit(1.2 - 0.4j, 10), abs=1e-15)


@given(st.floats(0.1, 3.0))
def test_deficit_decreases_with_cutoff(a):
    d = [truncation_deficit(a, n) for n in range(1, 30)]
    assert all(x >= y for x, y in zip(d, d[1:]))


def test_truncation_error_names_cutoff():
    with pytest.raises(TruncationError) as exc:
        coherent_vector(1.5, 3)
    assert exc.value.required_n_max == required_n_max(2.25)
    assert "n_max >=" in str(exc.value)


def test_default_cutoff_for_reference_amplitudes():
    n = default_n_max(1, 1.5)
    assert 15 <= n <= 20
    from scipy.stats import poisson

    assert poisson.sf(n, 3.25) <= 1e-8 < poisson.sf(n - 1, 3.25)


@given(camp, camp)
def test_vector_overlap_matches_closed_form(g, d):
    n = 30
    num = np.vdot(coherent_vector(g, n), coherent_vector(d, n))
    ref = cmath.exp(-(abs(g) ** 2 + abs(d) ** 2) / 2 + g.conjugate() * d)
    assert abs(num - ref) < 2 * math.sqrt(truncation_deficit(g, n) + truncation_deficit(d, n)) + 1e-14


def test_ladder_action_exact():
    hs = HilbertSpec(5)
    ops = mode_operators(hs)
    n = hs.n_max + 1

    def idx(a, n1, n2):
        return (a * n + n1) * n + n2

    for n1 in range(n):
        for n2 in range(n):
            e = np.zeros(hs.dim)
            e[idx(1, n1, n2)] = 1
            out = ops.k_plus @ e
            if n1 + 1 < n and n2 > 0:
                want = np.zeros(hs.dim)
                want[idx(1, n1 + 1, n2 - 1)] = math.sqrt((n1 + 1) * n2)
                assert np.allclose(out, want, atol=1e-14)
            else:
                assert not out.any()
            assert (ops.n1 @ e)[idx(1, n1, n2)] == pytest.approx(n1)
            assert (ops.n2 @ e)[idx(1, n1, n2)] == pytest.approx(n2)


def test_operators_cached_and_read_only():
    hs = HilbertSpec(3)
    assert mode_operators(hs) is mode_operators(HilbertSpec(3))
    with pytest.raises(ValueError):
        mode_operators(hs).a1[0, 0] = 1
    a, ad, n = field_operators(3)
    assert np.allclose(a @ ad - ad @ a, np.diag([1, 1, 1, -3]))


def test_atomic_operators():
    hs = HilbertSpec(2, atom_dim=3)
    at = atomic_operators(hs)
    g = product_state("g", CoherentPair(0, 0), HilbertSpec(2, 3, 0.5))
    e = np.kron(atom_vector("e", 3), field_vector(CoherentPair(0, 0), 2))
    assert np.allclose(at.sigma @ e, g)
    assert np.allclose(at.proj_g + at.proj_e + at.proj_c, np.eye(hs.dim))
    assert atomic_operators(HilbertSpec(2)).proj_c is None
    with pytest.raises(ValueError):
        atom_vector("c", 2)


def test_closed_sector_size():
    assert closed_sector(4).sum() == 15


def test_expm_hermitian_unitary(rng):
    h = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = h + h.conj().T
    u = expm_hermitian(h, 0.7)
    from scipy.linalg import expm

    assert np.abs(u - expm(-0.7j * h)).max() < 1e-12


def test_su2_identity_at_zero():
    psi = field_vector(CoherentPair(0.5, 0.3j), 12)
    d, f = su2_disentangle_check(0.0, psi, 12)
    assert np.abs(d - f).max() < 1e-15
    assert np.abs(d - np.where(closed_sector(12), psi, 0)).max() < 1e-12


def test_su2_quarter_turn():
    psi = field_vector(CoherentPair(1.0, 1.5), 20)
    d, f = su2_disentangle_check(math.pi / 4, psi, 20)
    assert np.linalg.norm(d - f) < 1e-8


@settings(max_examples=25)
@given(camp, camp, st.floats(-math.pi, math.pi))
def test_su2_factorization_random(a, b, theta):
    # |a|^2 + |b|^2 up to 4.5 leaves ~5e-7 above n1 + n2 = 20; the sector
    # itself is closed, so the comparison stays exact
    psi = field_vector(CoherentPair(a, b), 20, None)
    d, f = su2_disentangle_check(theta, psi, 20, tol=1e-6)
    assert np.linalg.norm(d - f) < 1e-8


def test_su2_rotates_coherent_amplitudes():
    # exp(i t G)|a, b> = |a cos t + i b sin t, b cos t + i a sin t>
    a, b, th = 0.8, -0.6j, 0.9
    d, _ = su2_disentangle_check(th, field_vector(CoherentPair(a, b), 24), 24)
    target = field_vector(
        CoherentPair(a * math.cos(th) + 1j * b * math.sin(th), b * math.cos(th) + 1j * a * math.sin(th)), 24
    )
    assert np.linalg.norm(d - target) < 1e-8


def test_su2_quarter_period_where_single_factorization_is_singular():
    psi = field_vector(CoherentPair(0.7, 0.2), 16)
    d, f = su2_disentangle_check(math.pi / 2, psi, 16)
    assert np.linalg.norm(d - f) < 1e-10
    swapped = field_vector(CoherentPair(0.2j, 0.7j), 16)
    assert np.linalg.norm(d - swapped) < 1e-7


def test_su2_rejects_bad_input():
    psi = field_vector(CoherentPair(0.1, 0.1), 8)
    with pytest.raises(ValueError):
        su2_disentangle_check(0.1, psi[:-1], 8)
    with pytest.raises(TruncationError):
        su2_disentangle_check(0.1, field_vector(CoherentPair(1.5, 1.5), 8, None), 8)


def _rand_density(rng, d, rank=None):
    rank = rank or d
    x = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def test_partial_trace_product(rng):
    a, b, c = _rand_density(rng, 2), _rand_density(rng, 3), _rand_density(rng, 4)
    rho = np.kron(a, np.kron(b, c))
    assert np.allclose(partial_trace(rho, (2, 3, 4), [0]), a)
    assert np.allclose(partial_trace(rho, (2, 3, 4), [1]), b)
    assert np.allclose(partial_trace(rho, (2, 3, 4), [0, 2]), np.kron(a, c))
    assert partial_trace(rho, (2, 3, 4), []) == pytest.approx(1)


def test_partial_trace_bell_marginal():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    rho = np.outer(bell, bell)
    assert np.allclose(partial_trace(rho, (2, 2), [1]), np.eye(2) / 2)


def test_fidelity_basic_cases():
    e0, e1 = np.array([1, 0]), np.array([0, 1])
    assert fidelity(e0, e0) == pytest.approx(1)
    assert fidelity(e0, e1) == 0
    vac = coherent_vector(0, 30)
    one = coherent_vector(1, 30)
    assert fidelity(vac, one) == pytest.approx(math.exp(-1), abs=1e-12)
    assert fidelity(np.outer(vac, vac), np.outer(one, one.conj())) == pytest.approx(math.exp(-1), abs=1e-8)


def test_fidelity_mixed_against_qubit_formula(rng):
    r, s = _rand_density(rng, 2), _rand_density(rng, 2)
    ref = np.trace(r @ s).real + 2 * math.sqrt(np.linalg.det(r).real * np.linalg.det(s).real)
    assert fidelity(r, s) == pytest.approx(ref, abs=1e-12)
    assert fidelity(r, r) == pytest.approx(1, abs=1e-12)


def test_check_density_matrix(rng):
    rho = _rand_density(rng, 4)
    check_density_matrix(rho)
    with pytest.raises(ValueError):
        check_density_matrix(rho * 2)
    with pytest.raises(ValueError):
        check_density_matrix(rho + 1e-3j * np.triu(np.ones((4, 4)), 1))
    with pytest.raises(ValueError):
        check_density_matrix(np.diag([1.5, -0.5]))


def test_superposition_matrix_single_term_is_projector(ref_pair):
    from lambda_ecs.analytic import SuperpositionState, Term

    hs = HilbertSpec(18)
    s = SuperpositionState((Term(1.0, "none", ref_pair),))
    rho = superposition_to_matrix(s, hs)
    assert np.linalg.matrix_rank(rho, tol=1e-10) == 1
    assert np.trace(rho).real == pytest.approx(1, abs=1e-8)


def test_pure_and_lossless_mixture_agree(ref_pair):
    hs = HilbertSpec(18)
    pure = superposition_to_vector(full_evolution_state(ref_pair, 1.0, math.pi), hs)
    rho = superposition_to_matrix(lossy_density_state(ref_pair, 1.0, 0.0, math.pi), hs)
    assert np.abs(rho - np.outer(pure, pure.conj())).max() < 1e-12


def test_projected_lossy_matrix_has_unit_trace(ref_pair):
    hs = HilbertSpec(18)
    f = project_lossy(lossy_density_state(ref_pair, 1.0, 0.2, 2.0), "g")
    assert np.trace(superposition_to_matrix(f, hs)).real == pytest.approx(1, abs=1e-8)


def test_csv_round_trip(tmp_path, rng):
    m = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    v = rng.normal(size=5) + 0j
    save_array_csv(tmp_path / "m.csv", m)
    save_array_csv(tmp_path / "v.csv", v)
    assert np.array_equal(load_array_csv(tmp_path / "m.csv"), m)
    assert np.array_equal(load_array_csv(tmp_path / "v.csv"), v)
    (tmp_path / "bad.csv").write_text("1,2,3\n")
    with pytest.raises(ValueError):
        load_array_csv(tmp_path / "bad.csv")
