import json
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lqjacobi import (
    LqProblem, assemble, change_state_coordinates, check_admissible, direct_sum, double_integrator,
    eigen_decompose, harmonic_oscillator, hyperbolic_saddle, load_problem, symplectic_form,
)
from lqjacobi.exceptions import DimensionError, IngestionError
from lqjacobi.model import hamiltonian_value, kalman_rank
from lqjacobi.symplectic import is_hamiltonian

from _corpus import random_problem

seeds = st.integers(0, 2 ** 32 - 1)


def test_assemble_oscillator():
    f = assemble(harmonic_oscillator())
    assert np.array_equal(f.hmat, np.eye(2))
    assert np.array_equal(f.vech, [[0.0, -1.0], [1.0, 0.0]])


def test_assemble_free_particle():
    f = assemble(LqProblem([[0.0]], [[1.0]], [[0.0]]))
    assert np.array_equal(f.vech, [[0.0, 0.0], [1.0, 0.0]])


def test_assemble_double_integrator():
    f = assemble(double_integrator())
    assert np.array_equal(f.bbt, [[0.0, 0.0], [0.0, 1.0]])
    assert np.array_equal(np.linalg.matrix_power(f.vech, 4), np.zeros((4, 4)))


def test_vech_is_minus_omega_hmat():
    f = assemble(random_problem(np.random.default_rng(0)))
    assert np.array_equal(f.vech, -symplectic_form(f.n) @ f.hmat)


@given(seeds)
def test_assembled_field_is_infinitesimally_symplectic(seed):
    f = assemble(random_problem(np.random.default_rng(seed)))
    omega = symplectic_form(f.n)
    assert np.linalg.norm(f.vech.T @ omega + omega @ f.vech) <= 1e-12 * max(1.0, np.linalg.norm(f.vech))
    assert is_hamiltonian(f.vech)


@given(seeds)
def test_hamiltonian_non_negative_on_vertical(seed):
    rng = np.random.default_rng(seed)
    f = assemble(random_problem(rng))
    assert hamiltonian_value(f, rng.standard_normal(f.n), np.zeros(f.n)) >= 0


@given(seeds)
def test_spectrum_symmetric_under_negation(seed):
    f = assemble(random_problem(np.random.default_rng(seed)))
    values = sorted((round(e.re, 6), round(e.im, 6), e.algebraic_multiplicity) for e in eigen_decompose(f.vech))
    negated = sorted((round(-e.re, 6) + 0.0, round(-e.im, 6) + 0.0, e.algebraic_multiplicity)
                     for e in eigen_decompose(f.vech))
    assert values == negated


@pytest.mark.parametrize("p, x, value", [(1.0, 0.0, 0.5), (0.0, 0.0, 0.0), (3.0, 4.0, 12.5)])
def test_hamiltonian_value_oscillator(p, x, value):
    assert hamiltonian_value(assemble(harmonic_oscillator()), [p], [x]) == pytest.approx(value)


def test_kalman_rank_examples():
    assert kalman_rank(double_integrator()) == 2
    assert kalman_rank(LqProblem(np.zeros((2, 2)), [[1.0], [0.0]], np.zeros((2, 2)))) == 1
    assert kalman_rank(LqProblem(np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)))) == 2


def test_admissibility_examples():
    rep = check_admissible(harmonic_oscillator())
    assert rep.controllable and rep.vertical_psd and rep.admissible
    assert not check_admissible(LqProblem(np.zeros((2, 2)), [[1.0], [0.0]], np.zeros((2, 2)))).controllable
    assert check_admissible(double_integrator()).controllable


def test_q_is_symmetrized_with_warning():
    with pytest.warns(UserWarning):
        p = LqProblem([[0.0, 0.0], [0.0, 0.0]], np.eye(2), [[1.0, 2.0], [0.0, 1.0]])
    assert np.array_equal(p.Q, [[1.0, 1.0], [1.0, 1.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        LqProblem([[0.0]], [[1.0]], [[1.0]])


def test_shape_errors():
    with pytest.raises(DimensionError):
        LqProblem(np.zeros((2, 3)), np.eye(2), np.eye(2))
    with pytest.raises(DimensionError):
        LqProblem(np.zeros((2, 2)), np.eye(3), np.eye(2))
    with pytest.raises(DimensionError):
        LqProblem(np.zeros((2, 2)), np.eye(2), [[np.nan, 0.0], [0.0, 1.0]])


def test_problem_json_round_trip(tmp_path):
    p = double_integrator()
    path = tmp_path / "p.json"
    path.write_text(json.dumps(p.to_dict()))
    assert load_problem(path) == p


@pytest.mark.parametrize("data, match", [
    ({"n": 2, "k": 1, "A": [[0, 1], [0, 0]], "B": [[0], [1]]}, "missing"),
    ({"n": 1, "k": 1, "A": [[0]], "B": [[1]], "Q": [[1]], "R": [[1]]}, "unknown"),
    ({"n": 2, "k": 1, "A": [[0, 1], [0, 0]], "B": [[0], [1], [2]], "Q": [[0, 0], [0, 0]]}, "shape"),
    ({"n": 1, "k": 1, "A": [[0]], "B": [[1]], "Q": [["x"]]}, "non-numeric"),
    ({"n": 2, "k": 1, "A": [[0, 1], [0]], "B": [[0], [1]], "Q": [[0, 0], [0, 0]]}, "ragged"),
    ({"n": 0, "k": 1, "A": [], "B": [], "Q": []}, "positive"),
    ([1, 2], "object"),
])
def test_strict_ingestion(data, match):
    with pytest.raises(IngestionError, match=match):
        LqProblem.from_dict(data)


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(IngestionError):
        load_problem(path)


def test_direct_sum_blocks():
    f = direct_sum(assemble(harmonic_oscillator()), assemble(hyperbolic_saddle()))
    assert f.n == 2
    assert np.array_equal(f.hmat, np.diag([1.0, 1.0, 1.0, -1.0]))


def test_point_transformation_preserves_spectrum():
    rng = np.random.default_rng(5)
    p = random_problem(rng)
    T = rng.standard_normal((p.n, p.n)) + 3 * np.eye(p.n)
    a = np.sort_complex(np.linalg.eigvals(assemble(p).vech))
    b = np.sort_complex(np.linalg.eigvals(assemble(change_state_coordinates(p, T)).vech))
    assert np.allclose(a, b, atol=1e-8)
