"""The ten acceptance criteria, at their stated tolerances.

Each test prints one ``criterion N: PASS|FAIL`` line before asserting.  The
literal absolute bound of criterion 7 is unattainable in double precision; it
is reported as FAIL and marked as an expected failure, and its scaled form is
checked separately.
"""
import math
import time

import numpy as np
import pytest

from lqjacobi import (
    JacobiCurve, assemble, build_gamma_plus, build_imaginary_jordan_fixture, classify_spectrum,
    conjugate_time_bounds, count_conjugate_times_via_maslov, detect_conjugate_times, detect_reduced_conjugate_times,
    double_integrator, expm, harmonic_oscillator, hyperbolic_saddle, index_bound_audit, is_symplectic,
    isotropic_oscillator, jordan_structure, krein_frequencies, maslov_index, monotonicity_check, oscillator_saddle,
    predict_dichotomy, reduce_curve, self_intersection_check,
)
from lqjacobi.spectral import INFINITELY_MANY, NO_CONJUGATE_TIMES
from lqjacobi.symplectic import ComplexEigenvalue, symplectic_form
from lqjacobi.tolerances import DEFAULT_TOLERANCES

from _corpus import mixed_corpus, random_admissible, random_lagrangian, random_problem

EPS = DEFAULT_TOLERANCES.eps_shift


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"criterion {number}: {detail}"
    return emit


def timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


def test_criterion_1_harmonic_oscillator(report):
    def run():
        curve = JacobiCurve(harmonic_oscillator())
        found = detect_conjugate_times(curve, 0.0, 10 * math.pi + 0.5)
        index = maslov_index(curve, EPS, 10 * math.pi + EPS).index
        verdict = predict_dichotomy(classify_spectrum(curve.field)).kind
        return found, index, verdict
    (found, index, verdict), elapsed = timed(run)
    # oracle: the flow is the rotation (cos t, sin t), so X(t) = sin t vanishes at k pi
    errors = [abs(c.t - k * math.pi) for k, c in enumerate(found, start=1)]
    ok = (len(found) == 10 and max(errors) <= 1e-6 and all(c.multiplicity == 1 for c in found)
          and abs(index) == 10 and verdict == INFINITELY_MANY and elapsed < 1.0)
    report(1, ok, f"{len(found)} times, max error {max(errors):.2e}, |maslov| {abs(index)}, {verdict}, "
                  f"{elapsed:.2f} s")


def test_criterion_2_isotropic_oscillator(report):
    def run():
        field = assemble(isotropic_oscillator(3))
        found = detect_conjugate_times(field, 0.0, 5 * math.pi + 0.5)
        spectrum = classify_spectrum(field)
        bound = conjugate_time_bounds(krein_frequencies(field, spectrum), 3)
        return found, bound
    (found, bound), elapsed = timed(run)
    errors = [abs(c.t - k * math.pi) for k, c in enumerate(found, start=1)]
    ok = (len(found) == 5 and max(errors) <= 1e-6 and all(c.multiplicity == 3 for c in found)
          and bound.first_time_bound == pytest.approx(3 * math.pi) and found[0].t <= bound.first_time_bound
          and elapsed < 2.0)
    report(2, ok, f"multiplicities {[c.multiplicity for c in found]}, first {found[0].t:.6f} <= "
                  f"{bound.first_time_bound:.6f}, {elapsed:.2f} s")


def test_criterion_3_double_integrator(report):
    def run():
        curve = JacobiCurve(double_integrator())
        verdict = predict_dichotomy(classify_spectrum(curve.field)).kind
        found = detect_conjugate_times(curve, 0.0, 100.0)
        rng = np.random.default_rng(3)
        pairs = [tuple(rng.uniform(0.0, 100.0, 2)) for _ in range(50)]
        return verdict, found, self_intersection_check(curve, pairs)
    (verdict, found, worst), elapsed = timed(run)
    ok = verdict == NO_CONJUGATE_TIMES and not found and worst == 0 and elapsed < 2.0
    report(3, ok, f"{verdict}, {len(found)} detections on (0, 100], max self-intersection {worst}, {elapsed:.2f} s")


def test_criterion_4_hyperbolic(report):
    field = assemble(hyperbolic_saddle())
    verdict = predict_dichotomy(classify_spectrum(field)).kind
    found = detect_conjugate_times(field, 0.0, 50.0)
    ok = verdict == NO_CONJUGATE_TIMES and not found
    report(4, ok, f"{verdict}, {len(found)} detections on (0, 50]")


def test_criterion_5_mixed_spectrum(report):
    field = assemble(oscillator_saddle())
    spectrum = classify_spectrum(field)
    verdict = predict_dichotomy(spectrum).kind
    k_reduced = (2 * field.n - spectrum.imaginary_dimension) // 2
    bound = conjugate_time_bounds(krein_frequencies(field, spectrum), field.n, k_reduced)
    T = 20 * math.pi
    found = detect_conjugate_times(field, 0.0, T)
    count = sum(c.multiplicity for c in found)
    need = bound.count_lower_bound(T)
    ok = (verdict == INFINITELY_MANY and k_reduced == 1 and count >= need
          and bound.first_time_bound == pytest.approx(5 * math.pi) and found[0].t <= bound.first_time_bound)
    report(5, ok, f"{verdict}, k_reduced {k_reduced}, count {count} >= {need}, first {found[0].t:.6f} <= "
                  f"{bound.first_time_bound:.6f}")


def test_criterion_6_jordan_fixtures(report):
    def run():
        failures, worst = [], 0.0
        for kind in ("even", "odd"):
            for k in (1, 2):
                for beta in (1.0, 2.5):
                    field = build_imaginary_jordan_fixture(kind, k, beta)
                    d = 2 * k if kind == "even" else 2 * k + 1
                    spectrum = classify_spectrum(field)
                    found = sorted((j.eigenvalue.im, j.block_sizes) for j in spectrum.pure_imaginary)
                    error = max(abs(abs(im) - beta) for im, _ in found)
                    worst = max(worst, error)
                    signs = [im > 0 for im, _ in found]
                    stairs = [jordan_structure(field.vech, ComplexEigenvalue(0.0, s * beta, d)).block_sizes
                              for s in (1, -1)]
                    flagged = predict_dichotomy(spectrum).kind == INFINITELY_MANY
                    if ([b for _, b in found] != [(d,), (d,)] or sorted(signs) != [False, True]
                            or stairs != [(d,), (d,)] or error > 1e-8 or flagged != (kind == "odd")):
                        failures.append((kind, k, beta))
        return failures, worst
    (failures, worst), elapsed = timed(run)
    ok = not failures and elapsed < 5.0
    report(6, ok, f"8 fixtures, failures {failures}, max eigenvalue error {worst:.2e}, {elapsed:.2f} s")


def _symplecticity_samples():
    rng = np.random.default_rng(11)
    residuals, norms, normalized = [], [], []
    while len(residuals) < 200:
        K = assemble(random_problem(rng)).vech
        t = rng.uniform(-1.0, 1.0) * 50.0 / np.linalg.norm(K, 2)
        P = expm(K, t)
        omega = symplectic_form(K.shape[0] // 2)
        residuals.append(np.linalg.norm(P.T @ omega @ P - omega, 2))
        norms.append(np.linalg.norm(P, 2))
        normalized.append(is_symplectic(P, DEFAULT_TOLERANCES.symplectic))
    return np.array(residuals), np.array(norms), np.array(normalized)


@pytest.mark.xfail(strict=True, reason="an absolute 1e-9 residual is below double precision once ||P|| >> 1e4; "
                                       "rounding P alone leaves ~eps ||P||^2")
def test_criterion_7_symplecticity(report):
    residuals, norms, _ = _symplecticity_samples()
    failures = int(np.sum(residuals > 1e-9))
    report(7, failures == 0, f"absolute ||P^T Omega P - Omega|| <= 1e-9 fails on {failures}/200 samples, "
                             f"max residual {residuals.max():.1e} at max ||P|| {norms.max():.1e}")


def test_criterion_7_scaled_symplecticity(report):
    residuals, norms, normalized = _symplecticity_samples()
    moderate = norms <= 1e2
    moderate_fail = int(np.sum(residuals[moderate] > 1e-9))
    relative = float(np.max(residuals / norms ** 2))
    ok = bool(normalized.all()) and moderate_fail == 0 and relative <= 1e-9
    report("7 (scaled)", ok, f"normalized check on {int(normalized.sum())}/200; absolute 1e-9 on the "
                             f"{int(moderate.sum())} samples with ||P|| <= 1e2: {moderate_fail} failures; "
                             f"max residual/||P||^2 {relative:.1e}")


def test_criterion_8_maslov_oracle(report):
    rng = np.random.default_rng(2024)
    T, disagreements, near_endpoint = 30.0, [], []
    for i in range(20):
        problem = random_admissible(rng, 4)
        curve = JacobiCurve(problem)
        found = detect_conjugate_times(curve, 0.0, T + EPS)
        near_endpoint += [(i, c.t) for c in found if c.t <= 2 * EPS or abs(c.t - T) <= 2 * EPS]
        count = sum(c.multiplicity for c in found)
        index = count_conjugate_times_via_maslov(curve, T, EPS, seed=i)
        if index != count:
            disagreements.append((i, problem.n, count, index))
    ok = not disagreements and not near_endpoint
    report(8, ok, f"20 systems, disagreements {disagreements}, detections within the endpoint guard {near_endpoint}")


def test_criterion_9_index_change_bounds(report):
    rng = np.random.default_rng(7)
    failures, skipped = [], 0
    for i in range(100):
        problem = random_problem(rng, 3)
        n = problem.n
        curve = JacobiCurve(problem)
        audit = index_bound_audit(curve, 0.1, 10.0, random_lagrangian(rng, n), random_lagrangian(rng, n),
                                  random_lagrangian(rng, n), seed=i)
        skipped += bool(audit.skipped)
        if not audit.passed:
            failures.append((i, audit.to_dict()))
    ok = not failures
    report(9, ok, f"100 trials, {len(failures)} failures, {skipped} skipped")


def test_criterion_10_reduction(report):
    details, ok = [], True
    T = 20 * math.pi
    for name, problem in mixed_corpus().items():
        field = assemble(problem)
        curve = JacobiCurve(field)
        reduced = reduce_curve(curve, build_gamma_plus(field).Z)
        full = [c.t for c in detect_conjugate_times(curve, 0.0, T)]
        red = [c.t for c in detect_reduced_conjugate_times(reduced, 0.0, T)]
        error = max((abs(a - b) for a, b in zip(full, red)), default=0.0)
        monotone = monotonicity_check(reduced, np.linspace(0.0, 10.0, 6)).passed
        good = len(full) == len(red) > 0 and error <= 1e-6 and monotone
        ok &= good
        details.append(f"{name}: {len(full)}/{len(red)} times, max diff {error:.1e}, monotone {monotone}")
    report(10, ok, "; ".join(details))
