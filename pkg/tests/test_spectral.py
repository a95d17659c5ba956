import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lqjacobi import (
    HamiltonianField, LqProblem, assemble, build_gamma_plus, build_imaginary_jordan_fixture, classify_spectrum,
    conjugate_time_bounds, direct_sum, double_integrator, harmonic_oscillator, hyperbolic_saddle,
    invariant_isotropic_subspace, isotropic_oscillator, jordan_structure, krein_frequencies, oscillator_saddle,
    predict_dichotomy,
)
from lqjacobi.exceptions import ConsistencyError, ParameterError
from lqjacobi.spectral import (
    INFINITELY_MANY, NO_CONJUGATE_TIMES, ConjugateTimeBound, KreinFrequency, SpectrumReport, bounds_for,
    normal_form_gamma_coordinates, omega_orthogonality_check,
)
from lqjacobi.symplectic import ComplexEigenvalue, invariance_residual, isotropy_residual

from _corpus import random_symplectic

seeds = st.integers(0, 2 ** 32 - 1)
FIXTURES = [(kind, k, beta) for kind in ("even", "odd") for k in (1, 2) for beta in (1.0, 2.5)]


def transformed(field, T):
    """The same Hamiltonian in the symplectic coordinates ``z = T z'``."""
    return HamiltonianField(T.T @ field.hmat @ T)


# ---------------------------------------------------------------------------
# classification


def test_classify_oscillator():
    rep = classify_spectrum(assemble(harmonic_oscillator()))
    assert [(j.eigenvalue.im, j.block_sizes) for j in rep.pure_imaginary] == [(-1.0, (1,)), (1.0, (1,))] or \
        sorted((j.eigenvalue.im, j.block_sizes) for j in rep.pure_imaginary) == [(-1.0, (1,)), (1.0, (1,))]
    assert rep.zero_eigenvalue is None and not rep.hyperbolic


def test_classify_double_integrator():
    rep = classify_spectrum(assemble(double_integrator()))
    assert sum(rep.zero_eigenvalue.block_sizes) == 4
    assert not rep.pure_imaginary


def test_classify_saddle():
    rep = classify_spectrum(assemble(hyperbolic_saddle()))
    assert sorted(j.eigenvalue.re for j in rep.hyperbolic) == pytest.approx([-1.0, 1.0])
    assert not rep.pure_imaginary and rep.zero_eigenvalue is None


def test_spectrum_report_round_trip():
    rep = classify_spectrum(direct_sum(assemble(oscillator_saddle()), build_imaginary_jordan_fixture("odd", 1, 2.0)))
    assert SpectrumReport.from_dict(rep.to_dict()) == rep


# ---------------------------------------------------------------------------
# Krein frequencies, dichotomy and bounds


def test_krein_oscillator():
    f = assemble(harmonic_oscillator())
    (freq,) = krein_frequencies(f, classify_spectrum(f))
    assert freq.beta == pytest.approx(1.0) and freq.sign == 1 and freq.omega == pytest.approx(1.0)


def test_krein_signed_oscillators():
    f = HamiltonianField(np.diag([2.0, -1.0, 2.0, -1.0]))
    omegas = [fr.omega for fr in krein_frequencies(f, classify_spectrum(f))]
    assert omegas == pytest.approx([2.0, -1.0])


def test_krein_empty_without_imaginary_spectrum():
    f = assemble(hyperbolic_saddle())
    assert krein_frequencies(f, classify_spectrum(f)) == []


@given(seeds)
def test_krein_signs_survive_symplectic_change(seed):
    rng = np.random.default_rng(seed)
    f = HamiltonianField(np.diag([2.0, -1.0, 2.0, -1.0]))
    g = transformed(f, random_symplectic(rng, 2))
    a = [(round(x.beta, 6), x.sign) for x in krein_frequencies(f, classify_spectrum(f))]
    b = [(round(x.beta, 6), x.sign) for x in krein_frequencies(g, classify_spectrum(g))]
    assert a == b


def test_dichotomy_examples():
    f = assemble(harmonic_oscillator())
    v = predict_dichotomy(classify_spectrum(f))
    assert v.kind == INFINITELY_MANY and v.witnesses == ((pytest.approx(1.0), 1),)
    assert predict_dichotomy(classify_spectrum(assemble(double_integrator()))).kind == NO_CONJUGATE_TIMES
    g = build_imaginary_jordan_fixture("odd", 1, 1.0, 1)
    v = predict_dichotomy(classify_spectrum(g))
    assert v.kind == INFINITELY_MANY and v.witnesses == ((pytest.approx(1.0), 3),)


def test_bound_single_oscillator():
    b = conjugate_time_bounds([KreinFrequency(1.0, 1)], 1, 0)
    assert b.first_time_bound == pytest.approx(3 * math.pi)


def test_bound_isotropic_oscillator():
    b = conjugate_time_bounds([KreinFrequency(1.0, 1, 3)], 3, 0)
    assert b.first_time_bound == pytest.approx(3 * math.pi)
    # (N + 8) pi / 3 <= 12 pi
    assert b.count_lower_bound(12 * math.pi) == 28


def test_bound_with_reduction():
    b = conjugate_time_bounds([KreinFrequency(1.0, 1)], 2, 1)
    assert b.first_time_bound == pytest.approx(5 * math.pi)
    f = assemble(oscillator_saddle())
    assert bounds_for(f, classify_spectrum(f)) == ConjugateTimeBound(pytest.approx(1.0), 2, 1, pytest.approx(5 * math.pi))


def test_bound_rejects_non_positive_sum():
    with pytest.raises(ConsistencyError):
        conjugate_time_bounds([KreinFrequency(1.0, -1)], 1, 0)


def test_count_lower_bound_is_never_negative():
    b = conjugate_time_bounds([KreinFrequency(1.0, 1, 4)], 4, 0)
    assert b.count_lower_bound(1.0) == 0


def _pure_imaginary_problem(rng):
    """Admissible controllable problems with a positive definite Hamiltonian (all frequencies real)."""
    n = int(rng.integers(1, 5))
    B = rng.standard_normal((n, n)) + 2 * np.eye(n)
    Q = rng.standard_normal((n, n))
    Q = Q @ Q.T + np.eye(n)
    A = 0.3 * rng.standard_normal((n, n))
    return LqProblem(A, B, Q)


@given(seeds)
def test_frequency_sum_positive_for_controllable_problems(seed):
    f = assemble(_pure_imaginary_problem(np.random.default_rng(seed)))
    rep = classify_spectrum(f)
    if rep.hyperbolic or rep.zero_eigenvalue is not None or not rep.semisimple_imaginary:
        return
    assert sum(x.omega * x.multiplicity for x in krein_frequencies(f, rep)) > 0


# ---------------------------------------------------------------------------
# fixtures


def test_odd_fixture_k0_is_an_oscillator():
    f = build_imaginary_jordan_fixture("odd", 0, 1.5, 1)
    assert f.hmat.shape == (2, 2)
    assert np.count_nonzero(f.hmat - np.diag(np.diag(f.hmat))) == 0
    rep = classify_spectrum(f)
    assert sorted(j.eigenvalue.im for j in rep.pure_imaginary) == pytest.approx([-1.5, 1.5])
    assert all(j.block_sizes == (1,) for j in rep.pure_imaginary)


@pytest.mark.parametrize("kind, k, beta", FIXTURES)
def test_fixture_jordan_blocks(kind, k, beta):
    f = build_imaginary_jordan_fixture(kind, k, beta, 1)
    d = 2 * k if kind == "even" else 2 * k + 1
    assert f.hmat.shape == (2 * d, 2 * d)
    js = jordan_structure(f.vech, ComplexEigenvalue(0.0, beta, d))
    assert js.block_sizes == (d,)
    rep = classify_spectrum(f)
    assert [j.block_sizes for j in rep.upper_imaginary()] == [(d,)]
    assert abs(rep.upper_imaginary()[0].eigenvalue.im - beta) <= 1e-8
    odd = [b for j in rep.pure_imaginary for b in j.block_sizes if b % 2]
    assert len(odd) == (2 if kind == "odd" else 0)


@pytest.mark.parametrize("kind, k, beta", FIXTURES)
def test_fixture_isotropic_subspace(kind, k, beta):
    f = build_imaginary_jordan_fixture(kind, k, beta, 1)
    Z = invariant_isotropic_subspace(f, beta).Z
    assert Z.shape[1] == 2 * k
    assert isotropy_residual(Z) <= 1e-8
    assert invariance_residual(f.vech, Z) <= 1e-8


@pytest.mark.parametrize("kind, k", [("even", 1), ("even", 2), ("odd", 1), ("odd", 2)])
def test_normal_form_reference_subspace(kind, k):
    f = build_imaginary_jordan_fixture(kind, k, 1.0, 1)
    Z = normal_form_gamma_coordinates(kind, k)
    assert Z.shape[1] == 2 * k
    assert isotropy_residual(Z) == 0.0
    assert invariance_residual(f.vech, Z) <= 1e-14


def test_odd_k0_has_empty_isotropic_subspace():
    f = build_imaginary_jordan_fixture("odd", 0, 1.0, 1)
    assert invariant_isotropic_subspace(f, 1.0).dim == 0


@pytest.mark.parametrize("args", [("even", 0, 1.0, 1), ("both", 1, 1.0, 1), ("odd", -1, 1.0, 1),
                                  ("odd", 1, 0.0, 1), ("odd", 1, 1.0, 2), ("odd", 1.5, 1.0, 1)])
def test_fixture_parameter_errors(args):
    with pytest.raises(ParameterError):
        build_imaginary_jordan_fixture(*args)


@given(st.lists(st.tuples(st.sampled_from(["even", "odd"]), st.integers(1, 2), st.sampled_from([1.0, 2.5])),
                min_size=1, max_size=2))
def test_dichotomy_of_fixture_sums(parts):
    betas = [b for _, _, b in parts]
    if len(set(betas)) < len(betas):
        return
    f = direct_sum(*[build_imaginary_jordan_fixture(kind, k, beta) for kind, k, beta in parts])
    expected = INFINITELY_MANY if any(kind == "odd" for kind, _, _ in parts) else NO_CONJUGATE_TIMES
    assert predict_dichotomy(classify_spectrum(f)).kind == expected


@given(seeds, st.sampled_from(FIXTURES))
def test_dichotomy_invariant_under_symplectic_change(seed, fixture):
    kind, k, beta = fixture
    f = build_imaginary_jordan_fixture(kind, k, beta)
    g = transformed(f, random_symplectic(np.random.default_rng(seed), f.n, 0.3))
    a, b = classify_spectrum(f), classify_spectrum(g)
    assert predict_dichotomy(a).kind == predict_dichotomy(b).kind

    def blocks(rep):
        return sorted((round(j.eigenvalue.im, 6), j.block_sizes) for j in rep.pure_imaginary)
    assert blocks(a) == blocks(b)


# ---------------------------------------------------------------------------
# invariant subspaces


def test_gamma_plus_saddle():
    Z = build_gamma_plus(assemble(hyperbolic_saddle())).Z
    assert Z.shape == (2, 1)
    assert abs(abs(Z[:, 0] @ np.array([1.0, 1.0])) / math.sqrt(2) - 1.0) <= 1e-12


def test_gamma_plus_oscillator_is_empty():
    assert build_gamma_plus(assemble(harmonic_oscillator())).dim == 0


def test_gamma_plus_double_integrator():
    f = assemble(double_integrator())
    Z = build_gamma_plus(f).Z
    assert Z.shape == (4, 2)
    assert isotropy_residual(Z) <= 1e-12
    KZ = f.vech @ Z
    assert np.linalg.norm(KZ - Z @ (Z.T @ KZ)) <= 1e-12


def test_gamma_plus_mixed_is_the_saddle_direction():
    Z = build_gamma_plus(assemble(oscillator_saddle())).Z
    # p2 = x2 in the saddle block, nothing in the oscillator block
    assert Z.shape == (4, 1)
    assert np.allclose(np.abs(Z[:, 0]), [0.0, 1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)], atol=1e-12)


def test_orthogonality_saddle():
    rep = omega_orthogonality_check(assemble(hyperbolic_saddle()))
    assert rep.passed


def test_orthogonality_two_oscillators():
    f = HamiltonianField(np.diag([1.0, 2.0, 1.0, 2.0]))
    rep = omega_orthogonality_check(f)
    assert rep.residuals and rep.max_residual <= 1e-10


def test_orthogonality_on_isotropic_and_fixture():
    assert omega_orthogonality_check(assemble(isotropic_oscillator())).passed
    assert omega_orthogonality_check(build_imaginary_jordan_fixture("odd", 1, 1.0)).passed
