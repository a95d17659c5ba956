"""Spectrum of the Hamiltonian field: classification, Krein signs, dichotomy and invariant subspaces."""
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .exceptions import ClassificationError, ConsistencyError, ConstructionError, ParameterError
from .model import HamiltonianField
from .symplectic import (
    ComplexEigenvalue, IsotropicFrame, JordanStructure, eigen_decompose, eigenspace_of,
    generalized_eigenspace, invariance_residual, isotropy_residual, jordan_structure,
    orthonormal_basis, real_invariant_subspace, symplectic_form,
)
from .tolerances import resolve

NO_CONJUGATE_TIMES = "NoConjugateTimes"
INFINITELY_MANY = "InfinitelyMany"


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: tuple
    pure_imaginary: tuple
    hyperbolic: tuple
    zero_eigenvalue: JordanStructure = None
    scale: float = dc_field(default=1.0, compare=False)

    @property
    def imaginary_dimension(self):
        """Real dimension of the sum of the E_{i beta}, beta != 0."""
        return sum(j.eigenvalue.algebraic_multiplicity for j in self.pure_imaginary)

    @property
    def semisimple_imaginary(self):
        return all(j.is_semisimple for j in self.pure_imaginary)

    def upper_imaginary(self):
        """One Jordan structure per conjugate pair +-i beta (the one with beta > 0)."""
        return [j for j in self.pure_imaginary if j.eigenvalue.im > 0]

    def to_dict(self):
        def one(j):
            return {"re": j.eigenvalue.re, "im": j.eigenvalue.im, "blocks": list(j.block_sizes)}
        return {
            "eigenvalues": [one(j) for j in self.eigenvalues],
            "pure_imaginary": [one(j) for j in self.pure_imaginary],
            "hyperbolic": [one(j) for j in self.hyperbolic],
            "zero_eigenvalue": None if self.zero_eigenvalue is None else one(self.zero_eigenvalue),
        }

    @classmethod
    def from_dict(cls, d):
        def one(e):
            ev = ComplexEigenvalue(e["re"], e["im"], sum(e["blocks"]))
            return JordanStructure(ev, tuple(e["blocks"]))
        zero = d.get("zero_eigenvalue")
        return cls(tuple(one(e) for e in d["eigenvalues"]), tuple(one(e) for e in d["pure_imaginary"]),
                   tuple(one(e) for e in d["hyperbolic"]), None if zero is None else one(zero))


@dataclass(frozen=True)
class KreinFrequency:
    beta: float
    sign: int
    multiplicity: int = 1

    def __post_init__(self):
        if self.beta <= 0 or self.sign not in (-1, 1) or self.multiplicity < 1:
            raise ValueError(f"invalid Krein frequency {self}")

    @property
    def omega(self):
        return self.sign * self.beta

    def to_dict(self):
        return {"beta": self.beta, "sign": self.sign, "multiplicity": self.multiplicity}

    @classmethod
    def from_dict(cls, d):
        return cls(d["beta"], d["sign"], d.get("multiplicity", 1))


@dataclass(frozen=True)
class DichotomyVerdict:
    kind: str
    witnesses: tuple = ()

    def __post_init__(self):
        if self.kind not in (NO_CONJUGATE_TIMES, INFINITELY_MANY):
            raise ValueError(f"unknown verdict {self.kind!r}")
        if (self.kind == INFINITELY_MANY) != bool(self.witnesses):
            raise ValueError("InfinitelyMany requires witnesses and only InfinitelyMany has them")

    def to_dict(self):
        return {"kind": self.kind, "witnesses": [list(w) for w in self.witnesses]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple((w[0], w[1]) for w in d["witnesses"]))


@dataclass(frozen=True)
class ConjugateTimeBound:
    """Guaranteed conjugate-time counts for a spectrum with frequencies summing to ``sum_omega``.

    With ``c = 3n`` (``k_reduced == 0``) or ``c = 4n - 3k`` the first conjugate
    time is at most ``c pi / sum_omega`` and ``(0, T]`` holds at least
    ``floor(T sum_omega / pi) - c + 1`` of them.
    """

    sum_omega: float
    n: int
    k_reduced: int
    first_time_bound: float

    @property
    def offset(self):
        return 3 * self.n if self.k_reduced == 0 else 4 * self.n - 3 * self.k_reduced

    def count_lower_bound(self, T):
        # the 1e-9 guard keeps exact multiples of pi / sum_omega from rounding down
        value = T * self.sum_omega / math.pi - self.offset + 1
        return max(0, math.floor(value + 1e-9))

    def to_dict(self):
        return {"sum_omega": self.sum_omega, "n": self.n, "k_reduced": self.k_reduced,
                "first_time_bound": self.first_time_bound}

    @classmethod
    def from_dict(cls, d):
        return cls(d["sum_omega"], d["n"], d["k_reduced"], d["first_time_bound"])


def _threshold(field, tol):
    return tol.imaginary * max(np.linalg.norm(field.vech, 2), np.finfo(float).tiny)


def classify_spectrum(field, tol=None):
    """Eigenvalues of ``vecH`` with Jordan structure, split into zero, pure imaginary and hyperbolic."""
    tol = resolve(tol)
    K = field.vech
    thr = _threshold(field, tol)
    structures = []
    for ev in eigen_decompose(K, tol.cluster, tol.defect, tol.jordan_rank):
        structures.extend(_jordan_or_split(K, ev, tol))
    zero, imag, hyper = None, [], []
    for js in structures:
        ev = js.eigenvalue
        if abs(ev.re) <= thr and abs(ev.im) <= thr:
            zero = js if zero is None else _merge_zero(zero, js)
        elif abs(ev.re) <= thr:
            imag.append(js)
        else:
            hyper.append(js)
    if zero is not None and zero.eigenvalue.re != 0.0:
        zero = JordanStructure(ComplexEigenvalue(0.0, 0.0, zero.eigenvalue.algebraic_multiplicity,
                                                 zero.eigenvalue.spread, zero.eigenvalue.radius),
                               zero.block_sizes, zero.staircase)
    structures = [zero if (zero is not None and abs(js.eigenvalue.value) <= thr) else js for js in structures]
    uniq = []
    for js in structures:
        if js not in uniq:
            uniq.append(js)
    return SpectrumReport(tuple(uniq), tuple(imag), tuple(hyper), zero, float(np.linalg.norm(K, 2)))


def _merge_zero(a, b):
    ev = ComplexEigenvalue(0.0, 0.0, a.eigenvalue.algebraic_multiplicity + b.eigenvalue.algebraic_multiplicity)
    return JordanStructure(ev, a.block_sizes + b.block_sizes)


def _jordan_or_split(K, ev, tol):
    try:
        return [jordan_structure(K, ev, tol.jordan_rank)]
    except ClassificationError:
        if ev.algebraic_multiplicity == 1:
            raise
    # an over-merged cluster: retry with the plain clustering radius only
    pieces = [e for e in eigen_decompose(K, tol.cluster, 0.0, None) if ev.contains(e.value)]
    if sum(e.algebraic_multiplicity for e in pieces) != ev.algebraic_multiplicity or len(pieces) < 2:
        return [jordan_structure(K, ev, tol.jordan_rank)]
    return [jordan_structure(K, e, tol.jordan_rank) for e in pieces]


def predict_dichotomy(report):
    """InfinitelyMany iff some pure imaginary eigenvalue has a Jordan block of odd size."""
    witnesses = []
    for js in report.upper_imaginary():
        for size in js.block_sizes:
            if size % 2:
                witnesses.append((js.eigenvalue.im, size))
    if witnesses:
        return DichotomyVerdict(INFINITELY_MANY, tuple(witnesses))
    return DichotomyVerdict(NO_CONJUGATE_TIMES)


def krein_frequencies(field, report, tol=None):
    """Signed frequencies of the semisimple pure imaginary spectrum, sorted descending.

    On the eigenspace of ``i beta`` the Hermitian form ``xi^* Hmat xi`` has the
    sign of ``H`` on each real eigenplane ``span(Re xi, Im xi)``; its inertia
    gives how many frequencies are ``+beta`` and how many ``-beta``.
    """
    tol = resolve(tol)
    out = []
    for js in report.upper_imaginary():
        ev = js.eigenvalue
        if not js.is_semisimple:
            raise ClassificationError(f"eigenvalue {ev.value} has Jordan blocks {js.block_sizes}; "
                                      "Krein frequencies need a diagonalizable restriction")
        basis = generalized_eigenspace(field.vech, ev)
        gram = basis.conj().T @ field.hmat @ basis
        gram = 0.5 * (gram + gram.conj().T)
        w = np.linalg.eigvalsh(gram)
        floor = tol.definiteness * max(1.0, np.linalg.norm(field.hmat, 2))
        if np.any(np.abs(w) <= floor):
            raise ClassificationError(f"Hamiltonian is degenerate on the eigenspace of {ev.value}")
        plus, minus = int(np.sum(w > 0)), int(np.sum(w < 0))
        if plus:
            out.append(KreinFrequency(ev.im, 1, plus))
        if minus:
            out.append(KreinFrequency(ev.im, -1, minus))
    out.sort(key=lambda f: -f.omega)
    return out


def expand_omegas(freqs):
    return [f.omega for f in freqs for _ in range(f.multiplicity)]


def conjugate_time_bounds(freqs, n, k_reduced=0, tol=1e-12):
    """First-conjugate-time bound and guaranteed counts from signed frequencies."""
    if n < 1 or k_reduced < 0 or k_reduced >= n:
        raise ParameterError(f"need n >= 1 and 0 <= k_reduced < n, got n={n}, k_reduced={k_reduced}")
    omegas = expand_omegas(freqs)
    if len(omegas) != n - k_reduced:
        raise ConsistencyError(f"{len(omegas)} frequencies for n - k_reduced = {n - k_reduced}")
    total = float(sum(omegas))
    if total <= tol * max(1.0, sum(abs(w) for w in omegas)):
        raise ConsistencyError(f"sum of signed frequencies is {total:.6g} <= 0; "
                               "the system is not controllable or the spectrum is misclassified")
    c = 3 * n if k_reduced == 0 else 4 * n - 3 * k_reduced
    return ConjugateTimeBound(total, n, k_reduced, c * math.pi / total)


def bounds_for(field, report, tol=None):
    """Bounds for a field whose pure imaginary spectrum is semisimple (else ``None``)."""
    if not report.pure_imaginary or not report.semisimple_imaginary:
        return None
    freqs = krein_frequencies(field, report, tol)
    k_reduced = (2 * field.n - report.imaginary_dimension) // 2
    return conjugate_time_bounds(freqs, field.n, k_reduced)


# ---------------------------------------------------------------------------
# invariant isotropic subspaces


def _isotropic_invariant(basis, op, form, target, hermitian, tol):
    """Greedy maximal isotropic, op-invariant subspace inside the invariant span of ``basis``.

    ``op`` is nilpotent on that span. Each step adds a form-neutral vector ``v``
    with ``v`` form-orthogonal to ``W`` and ``op v`` in ``W``; such ``v`` exist
    in the kernel of ``op`` on ``W^perp / W`` while that quotient is not definite.
    """
    Nc = basis.conj().T @ op @ basis
    Fc = basis.conj().T @ form @ basis
    d = basis.shape[1]
    W = np.zeros((d, 0), dtype=basis.dtype)
    scale = max(1.0, np.linalg.norm(Nc, 2))
    while W.shape[1] < target:
        constraints = np.vstack([W.conj().T @ Fc, W.conj().T]) if W.shape[1] else np.zeros((0, d))
        if constraints.shape[0]:
            _, s, vh = np.linalg.svd(constraints)
            rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
            C = vh[rank:].conj().T
        else:
            C = np.eye(d, dtype=basis.dtype)
        if C.shape[1] == 0:
            break
        proj = np.eye(d) - W @ W.conj().T
        _, s, vh = np.linalg.svd(proj @ Nc @ C)
        s_full = np.zeros(C.shape[1])
        s_full[: len(s)] = s
        kernel_idx = [i for i in range(C.shape[1]) if s_full[i] <= tol * scale]
        if not kernel_idx:
            kernel_idx = [C.shape[1] - 1]
        kern = C @ vh[kernel_idx].conj().T
        if hermitian:
            gram = kern.conj().T @ Fc @ kern
            gram = 0.5 * (gram + gram.conj().T)
            w, u = np.linalg.eigh(gram)
            gscale = max(1.0, np.abs(w).max())
            if np.abs(w).min() <= 1e-8 * gscale:
                v = kern @ u[:, np.argmin(np.abs(w))]
            elif w[0] < 0 < w[-1]:
                v = kern @ (u[:, 0] / math.sqrt(-w[0]) + u[:, -1] / math.sqrt(w[-1]))
            else:
                break
        else:
            v = kern[:, -1]
        v = v - W @ (W.conj().T @ v)
        v = v / np.linalg.norm(v)
        W = np.hstack([W, v[:, None]])
    return basis @ W


def _verified(K, Z, tol, what):
    iso = isotropy_residual(Z)
    inv = invariance_residual(K, Z)
    if iso > tol.subspace or inv > tol.subspace:
        raise ConstructionError(f"{what}: isotropy residual {iso:.3e}, invariance residual {inv:.3e}",
                                {"isotropy": iso, "invariance": inv})
    return IsotropicFrame(Z, tol=max(tol.subspace, 1e-8))


def invariant_isotropic_subspace(field, beta, tol=None, report=None):
    """vecH-invariant isotropic frame inside E_{i beta}.

    For a pair of Jordan blocks of order ``2k`` the result is Lagrangian in
    E_{i beta} (dimension 2k); for order ``2k + 1`` it is isotropic of
    dimension ``2k``. Built from the complex generalized eigenspace of
    ``i beta`` with the Hermitian form ``x^* (i Omega) y``.
    """
    tol = resolve(tol)
    report = report or classify_spectrum(field, tol)
    K = field.vech
    match = [js for js in report.upper_imaginary() if abs(js.eigenvalue.im - abs(beta)) <= max(
        js.eigenvalue.radius, tol.imaginary * report.scale, 4 * js.eigenvalue.spread)]
    if not match:
        raise ParameterError(f"i*{beta} is not a pure imaginary eigenvalue of the field")
    js = match[0]
    ev = js.eigenvalue
    basis = generalized_eigenspace(K, ev)
    omega = symplectic_form(field.n)
    op = K - ev.value * np.eye(K.shape[0])
    target = ev.algebraic_multiplicity // 2
    Wc = _isotropic_invariant(basis, op, 1j * omega, target, True, tol.subspace)
    if Wc.shape[1] == 0:
        return IsotropicFrame(np.zeros((K.shape[0], 0)))
    Z = orthonormal_basis(np.hstack([Wc.real, Wc.imag]), 2 * Wc.shape[1])
    return _verified(K, Z, tol, f"isotropic subspace at i*{beta}")


def zero_isotropic_subspace(field, report=None, tol=None):
    """m-dimensional isotropic vecH-invariant subspace of E_0 (dim E_0 = 2m)."""
    tol = resolve(tol)
    report = report or classify_spectrum(field, tol)
    K = field.vech
    if report.zero_eigenvalue is None:
        return np.zeros((K.shape[0], 0))
    m2 = report.zero_eigenvalue.eigenvalue.algebraic_multiplicity
    thr = _threshold(field, tol)
    reach = max(thr, report.zero_eigenvalue.eigenvalue.radius, 4 * report.zero_eigenvalue.eigenvalue.spread)
    E0 = real_invariant_subspace(K, lambda z: abs(z) <= reach, m2)
    omega = symplectic_form(field.n)
    return _isotropic_invariant(E0, K, omega, m2 // 2, False, tol.subspace).real


def build_gamma_plus(field, report=None, tol=None):
    """Invariant isotropic frame, Lagrangian in the non-pure-imaginary part of the space.

    The real invariant subspace of eigenvalues with positive real part plus an
    isotropic invariant half of E_0.
    """
    tol = resolve(tol)
    report = report or classify_spectrum(field, tol)
    K = field.vech
    thr = _threshold(field, tol)
    unstable_dim = sum(js.eigenvalue.algebraic_multiplicity for js in report.hyperbolic if js.eigenvalue.re > 0)
    parts = []
    if unstable_dim:
        parts.append(real_invariant_subspace(K, lambda z: z.real > thr, unstable_dim))
    if report.zero_eigenvalue is not None:
        parts.append(zero_isotropic_subspace(field, report, tol))
    if not parts:
        return IsotropicFrame(np.zeros((K.shape[0], 0)))
    Z = orthonormal_basis(np.hstack(parts), sum(p.shape[1] for p in parts))
    return _verified(K, Z, tol, "Gamma_plus")


def build_imaginary_jordan_fixture(order_kind, k, beta, sign=1):
    """Hamiltonian field of the normal form for a pair of Jordan blocks at +-i beta.

    ``order_kind="even"`` gives blocks of order ``2k`` (dimension 4k), ``"odd"``
    blocks of order ``2k + 1`` (dimension 4k + 2). Coordinates are
    ``(p_1..p_d, x_1..x_d)``. The even form carries no 1/2 prefactor so that its
    eigenvalues sit at +-i beta. Fixtures need not be admissible LQ problems.
    """
    if order_kind not in ("even", "odd"):
        raise ParameterError(f"order_kind must be 'even' or 'odd', got {order_kind!r}")
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ParameterError("k must be an integer")
    if order_kind == "even" and k < 1:
        raise ParameterError("even order requires k >= 1")
    if k < 0:
        raise ParameterError("k must be >= 0")
    if beta == 0 or not np.isfinite(beta):
        raise ParameterError("beta must be finite and non-zero")
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1")
    b2 = beta * beta
    d = 2 * k if order_kind == "even" else 2 * k + 1
    form = np.zeros((2 * d, 2 * d))

    def P(i):
        return i - 1

    def X(i):
        return d + i - 1

    def add(u, v, c):
        # coefficient c of the monomial u*v inside the bracket
        if u == v:
            form[u, u] += c
        else:
            form[u, v] += c / 2
            form[v, u] += c / 2

    if order_kind == "even":
        for j in range(1, k + 1):
            add(X(2 * j - 1), X(2 * k - 2 * j + 1), 1.0 / b2)
            add(X(2 * j), X(2 * k - 2 * j + 2), 1.0)
            add(P(2 * j - 1), X(2 * j), -b2)
            add(P(2 * j), X(2 * j - 1), 1.0)
        for j in range(1, k):
            add(P(2 * j + 1), P(2 * k - 2 * j + 1), -b2)
            add(P(2 * j + 2), P(2 * k - 2 * j + 2), -1.0)
        hmat = sign * 2.0 * form
    else:
        for j in range(1, k + 1):
            add(P(2 * j), P(2 * k - 2 * j + 2), b2)
            add(X(2 * j), X(2 * k - 2 * j + 2), 1.0)
        for j in range(1, 2 * k + 1):
            add(P(j), X(j + 1), -1.0)
        for j in range(1, k + 2):
            add(P(2 * j - 1), P(2 * k - 2 * j + 3), -b2)
            add(X(2 * j - 1), X(2 * k - 2 * j + 3), -1.0)
        hmat = sign * form
    return HamiltonianField(hmat, label=f"{order_kind}:k={k}:beta={beta}:sign={sign:+d}")


def normal_form_gamma_coordinates(order_kind, k):
    """Coordinate frame of the invariant subspace read off the normal-form sparsity pattern.

    Serves as an exact reference for :func:`invariant_isotropic_subspace` on the fixtures.
    """
    d = 2 * k if order_kind == "even" else 2 * k + 1
    if order_kind == "even":
        if k % 2 == 0:
            zero_p, zero_x = range(k + 1, 2 * k + 1), range(1, k + 1)
        else:
            zero_p, zero_x = range(k + 2, 2 * k + 1), range(1, k + 2)
    else:
        zero_p, zero_x = range(1, k + 2), range(k + 1, 2 * k + 2)
    keep = [i - 1 for i in range(1, d + 1) if i not in zero_p] + [d + i - 1 for i in range(1, d + 1)
                                                                   if i not in zero_x]
    return np.eye(2 * d)[:, keep]


# ---------------------------------------------------------------------------
# Omega-orthogonality of spectral subspaces


@dataclass(frozen=True)
class OrthogonalityReport:
    residuals: tuple
    tol: float

    @property
    def max_residual(self):
        return max((r for _, _, r in self.residuals), default=0.0)

    @property
    def passed(self):
        return self.max_residual <= self.tol


def omega_orthogonality_check(field, report=None, tol=None):
    """``||E_l^T Omega E_l'||`` for every pair with ``l + l' != 0`` and ``conj(l) + l' != 0``."""
    tol = resolve(tol)
    report = report or classify_spectrum(field, tol)
    K = field.vech
    omega = symplectic_form(field.n)
    thr = _threshold(field, tol)
    reps = [js.eigenvalue for js in report.eigenvalues if js.eigenvalue.im >= 0]
    spaces = [eigenspace_of(K, ev) for ev in reps]
    out = []
    for i, a in enumerate(reps):
        for j in range(i, len(reps)):
            b = reps[j]
            if abs(a.value + b.value) <= thr or abs(a.value.conjugate() + b.value) <= thr:
                continue
            out.append((a.value, b.value, float(np.linalg.norm(spaces[i].T @ omega @ spaces[j], 2))))
    return OrthogonalityReport(tuple(out), tol.subspace * max(1.0, report.scale))
