"""Dense linear algebra on a standard symplectic space (R^{2n}, Omega).

Coordinates are ordered ``(p, x)`` and ``Omega = [[0, I], [-I, 0]]`` so that
``omega(a, b) = a.T @ Omega @ b = p_a . x_b - x_a . p_b``.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from ._validation import as_real_matrix, half_dimension
from .exceptions import ClassificationError, DimensionError, NumericalFailure

_EPS = np.finfo(float).eps


@lru_cache(maxsize=32)
def symplectic_form(n):
    """The 2n x 2n matrix Omega (exact, read-only)."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    omega = np.block([[zero, eye], [-eye, zero]])
    omega.setflags(write=False)
    return omega


def expm(M, t=1.0):
    """Return ``exp(t * M)``; exact identity at ``t == 0``.

    Backed by scipy's scaling-and-squaring Pade approximant.
    """
    M = as_real_matrix(M, "M", square=True)
    if t == 0:
        return np.eye(M.shape[0])
    tM = t * M
    if not np.all(np.isfinite(tM)):
        raise NumericalFailure("t * M is not representable")
    return sla.expm(tM)


def rank_tol(M, rel_tol=1e-9, floor=0.0):
    """Count singular values above ``rel_tol * max(sigma_max, floor)``.

    With the default ``floor=0`` this is the purely relative rank; a zero matrix has rank 0.
    """
    M = np.asarray(M)
    if M.size == 0:
        return 0
    try:
        s = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD failed: {exc}") from exc
    scale = max(s[0], floor)
    if scale == 0:
        return 0
    return int(np.sum(s > rel_tol * scale))


def is_symplectic(P, tol=1e-9):
    """True iff ``||P^T Omega P - Omega|| <= tol * (1 + ||P||^2)`` (spectral norms)."""
    P = as_real_matrix(P, "P", square=True)
    n = half_dimension(P, "P")
    omega = symplectic_form(n)
    resid = np.linalg.norm(P.T @ omega @ P - omega, 2)
    return bool(resid <= tol * (1.0 + np.linalg.norm(P, 2) ** 2))


def symplectic_residual(P):
    P = np.asarray(P, dtype=float)
    omega = symplectic_form(P.shape[0] // 2)
    return float(np.linalg.norm(P.T @ omega @ P - omega, 2))


def is_hamiltonian(K, tol=1e-12):
    """``K^T Omega + Omega K = 0`` within ``tol * ||K||``."""
    K = as_real_matrix(K, "K", square=True)
    omega = symplectic_form(half_dimension(K, "K"))
    return bool(np.linalg.norm(K.T @ omega + omega @ K, 2) <= tol * max(1.0, np.linalg.norm(K, 2)))


# ---------------------------------------------------------------------------
# eigenvalues and Jordan structure


@dataclass(frozen=True)
class ComplexEigenvalue:
    re: float
    im: float
    algebraic_multiplicity: int = 1
    # half-width of the numerical cluster this value was averaged from
    spread: float = field(default=0.0, compare=False)
    radius: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.algebraic_multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")

    @property
    def value(self):
        return complex(self.re, self.im)

    @property
    def is_real(self):
        return self.im == 0.0

    def conjugate(self):
        return ComplexEigenvalue(self.re, -self.im, self.algebraic_multiplicity, self.spread, self.radius)

    def contains(self, z):
        """Whether a raw eigenvalue ``z`` belongs to this cluster."""
        z = complex(z)
        if self.is_real:
            z = complex(z.real, abs(z.imag))
            centre = complex(self.re, 0.0)
        else:
            if np.sign(z.imag) != np.sign(self.im):
                return False
            centre = self.value
        reach = max(4.0 * self.spread, self.radius, 1e-14)
        return abs(z - centre) <= reach


@dataclass(frozen=True)
class JordanStructure:
    eigenvalue: ComplexEigenvalue
    block_sizes: tuple
    staircase: tuple = field(default=(), compare=False)

    def __post_init__(self):
        sizes = tuple(sorted((int(b) for b in self.block_sizes), reverse=True))
        object.__setattr__(self, "block_sizes", sizes)
        if any(b < 1 for b in sizes):
            raise ValueError("block sizes must be >= 1")
        if sum(sizes) != self.eigenvalue.algebraic_multiplicity:
            raise ValueError(
                f"block sizes {sizes} do not sum to multiplicity {self.eigenvalue.algebraic_multiplicity}")

    @property
    def is_semisimple(self):
        return all(b == 1 for b in self.block_sizes)


def _cluster_radius(d, scale, tol, defect):
    return max(tol, defect * _EPS ** (1.0 / d)) * scale


def eigen_decompose(M, tol=1e-7, defect=10.0, rank_rel=1e-9):
    """Eigenvalues of ``M`` with algebraic multiplicities.

    Raw eigenvalues are folded onto the closed upper half plane (conjugate pairs
    coincide there) and linked into a centroid tree.  The tree is cut top-down:
    a node of multiplicity ``d`` is one eigenvalue when its spread is within
    ``max(tol, defect * eps**(1/d)) * ||M||`` (defective eigenvalues split by
    about ``eps**(1/d)`` under rounding) and ``(M - c I)^d`` has nullity ``d`` at
    its centroid ``c`` (checked with ``rank_rel``; ``None`` skips the check).
    A folded node of even size off the real axis is read as a conjugate pair
    first and as one defective real eigenvalue only if that fails.
    The output is closed under conjugation.
    """
    M = as_real_matrix(M, "M", square=True)
    if M.shape[0] == 0:
        return []
    try:
        raw = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue iteration failed for {M.shape} matrix: {exc}") from exc
    if not np.all(np.isfinite(raw)):
        raise NumericalFailure(f"non-finite eigenvalues for {M.shape} matrix")
    scale = max(np.linalg.norm(M, 2), np.finfo(float).tiny)

    folded = [complex(z.real, abs(z.imag)) for z in raw]

    def readings(members, centre):
        # (multiplicity, real?) candidates; a folded node of even size off the
        # axis may be a conjugate pair of d/2 or, when defective, one real value
        size = len(members)
        real = (size, True)
        if size % 2:
            return [real]
        pair = (size // 2, False)
        if centre.imag <= tol * scale:
            return [real]
        if centre.imag > _cluster_radius(size, scale, tol, defect):
            return [pair]
        return [pair, real]

    # full centroid-linkage tree; intermediate clusters of a defective
    # eigenvalue may be too spread for their own size but fine for the whole
    nodes = [([z], ()) for z in folded]
    active = list(range(len(nodes)))
    while len(active) > 1:
        centres = np.array([np.mean(nodes[a][0]) for a in active])
        dist = np.abs(centres[:, None] - centres[None, :])
        np.fill_diagonal(dist, np.inf)
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        nodes.append((nodes[active[i]][0] + nodes[active[j]][0], (active[i], active[j])))
        active = [a for k, a in enumerate(active) if k not in (i, j)] + [len(nodes) - 1]

    def passes(members, centre, d, real):
        spread = max(abs(z - centre) for z in members)
        if spread > _cluster_radius(d, scale, tol, defect):
            return False
        if rank_rel is None or d == 1:
            return True
        lam = complex(centre.real, 0.0) if real else centre
        power = np.linalg.matrix_power(_shifted(M, lam), d)
        return M.shape[0] - rank_tol(power, rank_rel) == d

    def accepted(members):
        centre = complex(np.mean(members))
        for d, real in readings(members, centre):
            if passes(members, centre, d, real):
                return d, real
        return None

    clusters, stack = [], [len(nodes) - 1]
    while stack:
        members, children = nodes[stack.pop()]
        reading = accepted(members)
        if reading is None and children:
            stack.extend(children)
            continue
        if reading is None:
            reading = readings(members, complex(members[0]))[-1]
        clusters.append((members, reading))

    out = []
    for members, (d, real) in clusters:
        centre = complex(np.mean(members))
        radius = _cluster_radius(d, scale, tol, defect)
        spread = float(max(abs(z - centre) for z in members))
        if real:
            out.append(ComplexEigenvalue(float(centre.real), 0.0, d, spread, radius))
        else:
            up = ComplexEigenvalue(float(centre.real), float(centre.imag), d, spread, radius)
            out.extend([up, up.conjugate()])
    out.sort(key=lambda e: (e.re, e.im))
    return out


def _shifted(M, lam):
    z = lam.value if isinstance(lam, ComplexEigenvalue) else complex(lam)
    if z.imag == 0.0:
        return M - z.real * np.eye(M.shape[0])
    return M.astype(complex) - z * np.eye(M.shape[0])


def jordan_structure(M, lam, tol=1e-9):
    """Jordan block sizes of ``M`` at the eigenvalue ``lam`` from the rank staircase.

    ``r_k = rank((M - lam I)^k)``; the number of blocks of size >= k is
    ``r_{k-1} - r_k``. Non-real ``lam`` is handled over the complex numbers.
    """
    M = as_real_matrix(M, "M", square=True)
    if not isinstance(lam, ComplexEigenvalue):
        lam = ComplexEigenvalue(float(np.real(lam)), float(np.imag(lam)), 1)
    A = _shifted(M, lam)
    dim = M.shape[0]
    m = lam.algebraic_multiplicity
    ranks = [dim]
    power = np.eye(dim, dtype=A.dtype)
    for _ in range(m + 1):
        power = power @ A
        ranks.append(rank_tol(power, tol))
        if ranks[-1] == ranks[-2]:
            break
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))]
    staircase = tuple(ranks)
    if any(b < 0 for b in at_least) or any(at_least[k] < at_least[k + 1] for k in range(len(at_least) - 1)):
        raise ClassificationError(f"non-monotone rank staircase {staircase} at {lam.value}", staircase)
    nullity = dim - ranks[-1]
    if ranks[-1] != ranks[-2] or nullity != m:
        raise ClassificationError(
            f"rank staircase {staircase} at {lam.value} gives nullity {nullity}, expected {m}", staircase)
    at_least.append(0)
    sizes = []
    for k in range(1, len(at_least)):
        sizes += [k] * (at_least[k - 1] - at_least[k])
    return JordanStructure(lam, tuple(sizes), staircase)


def _kernel_basis(A, dim):
    _, _, vh = np.linalg.svd(A)
    return vh[-dim:].conj().T


def generalized_eigenspace(M, lam):
    """Orthonormal complex basis (columns) of the generalized eigenspace of the cluster ``lam``."""
    M = as_real_matrix(M, "M", square=True)
    m = lam.algebraic_multiplicity
    try:
        _, Z, sdim = sla.schur(M.astype(complex), output="complex", sort=lam.contains)
        if sdim == m:
            return Z[:, :m]
    except (np.linalg.LinAlgError, ValueError):
        pass
    return _kernel_basis(np.linalg.matrix_power(_shifted(M, lam), m), m)


def real_invariant_subspace(M, select, expected=None):
    """Orthonormal real basis of the invariant subspace for eigenvalues where ``select(z)`` holds.

    ``select`` must be closed under conjugation.
    """
    M = as_real_matrix(M, "M", square=True)
    if M.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        _, Z, sdim = sla.schur(M, output="real", sort=select)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"ordered Schur decomposition failed: {exc}") from exc
    if expected is not None and sdim != expected:
        raise NumericalFailure(f"ordered Schur selected {sdim} eigenvalues, expected {expected}")
    return Z[:, :sdim]


def eigenspace_of(M, lam):
    """Real invariant subspace E_lambda (the span of generalized eigenvectors of lam and its conjugate)."""
    expected = lam.algebraic_multiplicity * (1 if lam.is_real else 2)
    conj = lam.conjugate()
    try:
        return real_invariant_subspace(M, lambda z: lam.contains(z) or conj.contains(z), expected)
    except NumericalFailure:
        basis = generalized_eigenspace(M, lam)
        if lam.is_real:
            return orthonormal_basis(basis.real, expected)
        return orthonormal_basis(np.hstack([basis.real, basis.imag]), expected)


# ---------------------------------------------------------------------------
# frames


def orthonormal_basis(Z, dim=None):
    """Orthonormal basis of the column span of ``Z`` (the leading ``dim`` left singular vectors)."""
    Z = np.asarray(Z)
    if Z.shape[1] == 0:
        return np.zeros((Z.shape[0], 0), dtype=Z.dtype)
    u, s, _ = np.linalg.svd(Z, full_matrices=False)
    if dim is None:
        dim = rank_tol(Z, 1e-10)
    return u[:, :dim]


def orthonormalize(Z):
    """QR-based orthonormalization preserving orientation (R has a positive diagonal)."""
    q, r = np.linalg.qr(Z)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    return q * signs[..., None, :]


def pairing(Z1, Z2):
    """The matrix of omega restricted to the two frames: ``Z1^T Omega Z2``."""
    n = Z1.shape[0] // 2
    return Z1.T @ symplectic_form(n) @ Z2


def isotropy_residual(Z):
    Z = np.asarray(Z, dtype=float)
    if Z.shape[1] == 0:
        return 0.0
    q = orthonormal_basis(Z, Z.shape[1])
    return float(np.linalg.norm(pairing(q, q), 2))


def invariance_residual(K, Z):
    """``||(I - Z Z^+) K Z||`` for an orthonormalized ``Z``."""
    Z = np.asarray(Z)
    if Z.shape[1] == 0:
        return 0.0
    q = orthonormal_basis(Z, Z.shape[1])
    KZ = K @ q
    return float(np.linalg.norm(KZ - q @ (q.conj().T @ KZ), 2))


@dataclass(frozen=True, eq=False)
class IsotropicFrame:
    """Columns of ``Z`` (2n x k) span an isotropic subspace of R^{2n}."""

    Z: np.ndarray
    tol: float = 1e-8

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim != 2:
            raise DimensionError(f"frame must be 2-D, got shape {Z.shape}")
        half_dimension(Z, "frame")
        if Z.shape[1] > Z.shape[0] // 2:
            raise DimensionError(f"an isotropic subspace of R^{Z.shape[0]} has dimension <= {Z.shape[0] // 2}")
        if not np.all(np.isfinite(Z)):
            raise DimensionError("frame has non-finite entries")
        if Z.shape[1] and rank_tol(Z, self.tol) != Z.shape[1]:
            raise DimensionError("frame columns are linearly dependent")
        if isotropy_residual(Z) > self.tol:
            raise DimensionError(f"frame is not isotropic (residual {isotropy_residual(Z):.3e})")
        Z.setflags(write=False)
        object.__setattr__(self, "Z", Z)

    @property
    def n(self):
        return self.Z.shape[0] // 2

    @property
    def dim(self):
        return self.Z.shape[1]

    def orthonormal(self):
        return orthonormal_basis(self.Z, self.dim)


@dataclass(frozen=True, eq=False)
class LagrangianFrame(IsotropicFrame):
    """An isotropic frame of full dimension n."""

    def __post_init__(self):
        super().__post_init__()
        if self.Z.shape[1] != self.n:
            raise DimensionError(f"a Lagrangian frame in R^{2 * self.n} needs {self.n} columns")


def vertical_frame(n):
    """The vertical subspace {(p, 0)}."""
    return LagrangianFrame(np.vstack([np.eye(n), np.zeros((n, n))]))


def horizontal_frame(n):
    """The horizontal subspace {(0, x)}."""
    return LagrangianFrame(np.vstack([np.zeros((n, n)), np.eye(n)]))


def lagrangian_graph(base, symmetric):
    """The Lagrangian ``{Omega E u + E R u}`` transversal to ``span(E)``, for a Lagrangian frame ``E``."""
    E = orthonormal_basis(np.asarray(base.Z if isinstance(base, IsotropicFrame) else base))
    omega = symplectic_form(E.shape[0] // 2)
    R = np.asarray(symmetric, dtype=float)
    R = 0.5 * (R + R.T)
    return LagrangianFrame(omega @ E + E @ R)


def intersection_dim(Z1, Z2, rel_tol=1e-7):
    """Dimension of the intersection of two Lagrangian subspaces.

    For Lagrangian spans the intersection is the kernel of the omega pairing;
    singular values below ``rel_tol`` (frames are orthonormalized) count as zero.
    """
    q1 = orthonormal_basis(np.asarray(Z1))
    q2 = orthonormal_basis(np.asarray(Z2))
    return q1.shape[1] - rank_tol(pairing(q1, q2), rel_tol, floor=1.0)
