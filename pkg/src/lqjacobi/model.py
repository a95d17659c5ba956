"""Linear-quadratic problems and their Hamiltonian objects.

A problem is the triple ``(A, B, Q)`` of the reduced cost
``1/2 int (|u|^2 - x^T Q x) dt`` under ``xdot = A x + B u``.  Its Hamiltonian is
``H(p, x) = 1/2 (p, x)^T Hmat (p, x)`` with ``Hmat = [[B B^T, A], [A^T, Q]]``
and the Hamiltonian field is ``vecH = -Omega Hmat``.
"""
import json
import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import as_real_matrix, as_vector, half_dimension
from .exceptions import DimensionError, IngestionError
from .symplectic import LagrangianFrame, rank_tol, symplectic_form, vertical_frame

PROBLEM_KEYS = ("n", "k", "A", "B", "Q")


@dataclass(frozen=True, eq=False)
class LqProblem:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = as_real_matrix(self.A, "A", square=True)
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(n, -1) if B.size % max(n, 1) == 0 else B
        B = as_real_matrix(B, "B", shape=(n, None))
        Q = as_real_matrix(self.Q, "Q", shape=(n, n))
        asym = np.linalg.norm(Q - Q.T, 2)
        if asym > 1e-9 * max(np.linalg.norm(Q, 2), 1e-300):
            warnings.warn(f"Q is not symmetric (||Q - Q^T|| = {asym:.3e}); using its symmetric part",
                          stacklevel=3)
        Q = 0.5 * (Q + Q.T)
        for name, value in (("A", A), ("B", B), ("Q", Q)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def k(self):
        return self.B.shape[1]

    def __eq__(self, other):
        if not isinstance(other, LqProblem):
            return NotImplemented
        return all(np.array_equal(getattr(self, m), getattr(other, m)) for m in "ABQ")

    __hash__ = None

    def to_dict(self):
        return {"n": self.n, "k": self.k, "A": self.A.tolist(), "B": self.B.tolist(), "Q": self.Q.tolist()}

    @classmethod
    def from_dict(cls, data):
        """Strict ingestion of the problem JSON object (keys n, k, A, B, Q)."""
        if not isinstance(data, dict):
            raise IngestionError("problem must be a JSON object")
        unknown = set(data) - set(PROBLEM_KEYS)
        if unknown:
            raise IngestionError(f"unknown problem keys: {sorted(unknown)}")
        missing = [key for key in PROBLEM_KEYS if key not in data]
        if missing:
            raise IngestionError(f"missing problem keys: {missing}")
        n, k = data["n"], data["k"]
        if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
            raise IngestionError("n must be a positive integer")
        if not (isinstance(k, int) and not isinstance(k, bool) and k >= 1):
            raise IngestionError("k must be a positive integer")
        try:
            A = as_real_matrix(_nested(data["A"], "A"), "A", shape=(n, n))
            B = as_real_matrix(_nested(data["B"], "B"), "B", shape=(n, k))
            Q = as_real_matrix(_nested(data["Q"], "Q"), "Q", shape=(n, n))
        except DimensionError as exc:
            raise IngestionError(str(exc)) from exc
        return cls(A, B, Q)


def _nested(value, name):
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise IngestionError(f"{name} must be a row-major nested array")
    if len({len(row) for row in value}) > 1:
        raise IngestionError(f"{name} has ragged rows")
    for row in value:
        for entry in row:
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                raise IngestionError(f"{name} has a non-numeric entry {entry!r}")
    return np.array(value, dtype=float)


@dataclass(frozen=True, eq=False)
class HamiltonianField:
    """A quadratic Hamiltonian on R^{2n}: ``hmat`` (symmetric) and ``vech = -Omega @ hmat``."""

    hmat: np.ndarray
    label: str = ""

    def __post_init__(self):
        H = as_real_matrix(self.hmat, "Hmat", square=True)
        half_dimension(H, "Hmat")
        H = 0.5 * (H + H.T)
        H.setflags(write=False)
        object.__setattr__(self, "hmat", H)
        vech = -symplectic_form(H.shape[0] // 2) @ H
        vech.setflags(write=False)
        object.__setattr__(self, "vech", vech)

    @property
    def n(self):
        return self.hmat.shape[0] // 2

    @property
    def bbt(self):
        """Top-left block: the Hamiltonian restricted to the vertical subspace."""
        return self.hmat[: self.n, : self.n]

    @property
    def drift(self):
        return self.hmat[: self.n, self.n:]

    @property
    def potential(self):
        return self.hmat[self.n:, self.n:]

    @property
    def generator(self):
        """``Omega @ hmat = -vech``.  The Jacobi curve itself is ``J(t) = exp(t * vech) V``."""
        return -self.vech

    def __eq__(self, other):
        if not isinstance(other, HamiltonianField):
            return NotImplemented
        return np.array_equal(self.hmat, other.hmat)

    __hash__ = None


def assemble(problem):
    """Hamiltonian field of an LQ problem: ``Hmat = [[BB^T, A], [A^T, Q]]``."""
    if not isinstance(problem, LqProblem):
        raise DimensionError("assemble expects an LqProblem")
    bbt = problem.B @ problem.B.T
    H = np.block([[bbt, problem.A], [problem.A.T, problem.Q]])
    return HamiltonianField(H)


def direct_sum(*fields):
    """Block-diagonal sum of Hamiltonian fields in (p, x) ordering."""
    ns = [f.n for f in fields]
    total = sum(ns)
    H = np.zeros((2 * total, 2 * total))
    offset = 0
    for f, n in zip(fields, ns):
        p = slice(offset, offset + n)
        x = slice(total + offset, total + offset + n)
        H[p, p] = f.hmat[:n, :n]
        H[p, x] = f.hmat[:n, n:]
        H[x, p] = f.hmat[n:, :n]
        H[x, x] = f.hmat[n:, n:]
        offset += n
    return HamiltonianField(H)


def hamiltonian_value(field, p, x):
    """``1/2 (p, x)^T Hmat (p, x)``."""
    p = as_vector(p, "p", field.n)
    x = as_vector(x, "x", field.n)
    z = np.concatenate([p, x])
    return float(0.5 * z @ field.hmat @ z)


def kalman_matrix(A, B):
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def kalman_rank(problem, rel_tol=1e-9):
    """Rank of ``[B, AB, ..., A^{n-1} B]``."""
    return rank_tol(kalman_matrix(problem.A, problem.B), rel_tol)


def field_kalman_rank(field, rel_tol=1e-9):
    """Kalman rank read off a Hamiltonian matrix: ``(A, BB^T)`` has the same reachable space as ``(A, B)``."""
    return rank_tol(kalman_matrix(field.drift, field.bbt), rel_tol)


def vertical_psd(field, tol=1e-9):
    """``H|_V >= 0``: the smallest eigenvalue of ``BB^T`` is >= ``-tol * max(1, ||BB^T||)``."""
    bbt = field.bbt
    if bbt.size == 0:
        return True
    lo = np.linalg.eigvalsh(bbt)[0]
    return bool(lo >= -tol * max(1.0, np.linalg.norm(bbt, 2)))


@dataclass(frozen=True)
class AdmissibilityReport:
    n: int
    kalman_rank: int
    controllable: bool
    vertical_psd: bool

    @property
    def admissible(self):
        return self.controllable and self.vertical_psd

    def to_dict(self):
        return {"n": self.n, "kalman_rank": self.kalman_rank,
                "controllable": self.controllable, "vertical_psd": self.vertical_psd}

    @classmethod
    def from_dict(cls, d):
        return cls(d["n"], d["kalman_rank"], d["controllable"], d["vertical_psd"])


def check_admissible(problem, rel_tol=1e-9):
    """Controllability and ``H|_V >= 0`` for an LqProblem or a bare HamiltonianField."""
    if isinstance(problem, LqProblem):
        rank = kalman_rank(problem, rel_tol)
        field = assemble(problem)
    else:
        field = problem
        rank = field_kalman_rank(field, rel_tol)
    return AdmissibilityReport(field.n, rank, rank == field.n, vertical_psd(field))


def vertical_subspace(n):
    """The vertical Lagrangian subspace ``V = {(p, 0)}``."""
    return vertical_frame(n)


def load_problem(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"malformed JSON in {path}: {exc}") from exc
    return LqProblem.from_dict(data)


# named problems used throughout the docs and tests

def harmonic_oscillator():
    return LqProblem([[0.0]], [[1.0]], [[1.0]])


def isotropic_oscillator(n=3):
    return LqProblem(np.zeros((n, n)), np.eye(n), np.eye(n))


def double_integrator():
    return LqProblem([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], np.zeros((2, 2)))


def hyperbolic_saddle():
    return LqProblem([[0.0]], [[1.0]], [[-1.0]])


def oscillator_saddle(omega=1.0, rate=1.0):
    """Decoupled sum of an oscillator of frequency ``omega`` and a saddle of rate ``rate``."""
    return LqProblem(np.zeros((2, 2)), np.eye(2), np.diag([omega ** 2, -rate ** 2]))


def change_state_coordinates(problem, T):
    """Apply ``x' = T x``: conjugate times and spectra are unchanged."""
    T = as_real_matrix(T, "T", shape=(problem.n, problem.n))
    Tinv = np.linalg.inv(T)
    return LqProblem(T @ problem.A @ Tinv, T @ problem.B, Tinv.T @ problem.Q @ Tinv)


__all__ = [
    "LqProblem", "HamiltonianField", "AdmissibilityReport", "LagrangianFrame",
    "assemble", "direct_sum", "hamiltonian_value", "kalman_rank", "kalman_matrix", "field_kalman_rank",
    "vertical_psd", "check_admissible", "vertical_subspace", "load_problem",
    "harmonic_oscillator", "isotropic_oscillator", "double_integrator", "hyperbolic_saddle",
    "oscillator_saddle", "change_state_coordinates",
]
