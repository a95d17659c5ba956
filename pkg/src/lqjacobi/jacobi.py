"""Jacobi curves: propagation, conjugate times, Maslov index, reduction and monotonicity.

The curve is ``J(t) = P_t Lambda_0`` with the Hamiltonian flow
``P_t = exp(t vecH)`` and ``Lambda_0 = V`` by default.  Frames are kept
orthonormal with an orientation-preserving QR so that ``det`` of a pairing
changes sign only where the curve crosses the train.
"""
import math
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, minimize_scalar

from .exceptions import ChartError, ContractError, ParameterError, ReductionError
from .model import HamiltonianField, LqProblem, assemble, kalman_rank
from .symplectic import (
    IsotropicFrame, LagrangianFrame, expm, isotropy_residual, orthonormal_basis, orthonormalize,
    rank_tol, symplectic_form, vertical_frame,
)
from .tolerances import resolve


def _frame_matrix(frame):
    return np.asarray(frame.Z if isinstance(frame, IsotropicFrame) else frame, dtype=float)


def _pairing_svals(E, Z):
    """Singular values of ``E^T Omega Z`` for orthonormal frames: all 0 <= s <= 1."""
    omega = symplectic_form(E.shape[0] // 2)
    return np.linalg.svd(E.T @ omega @ Z, compute_uv=False)


class JacobiCurve:
    """``t -> exp(t vecH) Lambda_0`` in the Lagrange Grassmannian of R^{2n}."""

    def __init__(self, field, initial=None):
        if isinstance(field, LqProblem):
            field = assemble(field)
        if not isinstance(field, HamiltonianField):
            raise ParameterError("JacobiCurve needs a HamiltonianField or an LqProblem")
        self.field = field
        self.n = field.n
        self.initial = vertical_frame(field.n) if initial is None else initial
        if not isinstance(self.initial, LagrangianFrame):
            self.initial = LagrangianFrame(_frame_matrix(self.initial))
        if self.initial.n != field.n:
            raise ParameterError(f"initial frame lives in R^{2 * self.initial.n}, field in R^{2 * field.n}")
        self.generator = np.asarray(field.vech)
        self.norm = float(np.linalg.norm(self.generator, 2))
        self._Z0 = orthonormalize(self.initial.Z)
        self._h = 1.0 / max(1.0, self.norm)
        self._checkpoints = {1: [self._Z0], -1: [self._Z0]}
        self._steps = {}

    @property
    def hmat(self):
        return self.field.hmat

    @property
    def train(self):
        """The default train: the vertical subspace."""
        return vertical_frame(self.n)

    def _step(self, sign):
        if sign not in self._steps:
            self._steps[sign] = expm(self.generator, sign * self._h)
        return self._steps[sign]

    def _checkpoint(self, i, sign):
        cps = self._checkpoints[sign]
        while len(cps) <= i:
            cps.append(orthonormalize(self._step(sign) @ cps[-1]))
        return cps[i]

    def frame(self, t):
        """Orthonormal, orientation-continuous frame of ``J(t)``."""
        t = float(t)
        sign = 1 if t >= 0 else -1
        i = int(math.floor(abs(t) / self._h))
        base = self._checkpoint(i, sign)
        rest = t - sign * i * self._h
        if rest == 0.0:
            return base.copy()
        return orthonormalize(sla.expm(rest * self.generator) @ base)

    def frames(self, ts):
        """Frames on an increasing, uniformly spaced grid ``ts`` (one exponential for the whole grid)."""
        ts = np.asarray(ts, dtype=float)
        out = np.empty((len(ts), 2 * self.n, self.n))
        if len(ts) == 0:
            return out
        out[0] = self.frame(ts[0])
        if len(ts) == 1:
            return out
        dt = ts[1] - ts[0]
        uniform = np.abs(np.diff(ts) - dt) <= 1e-9 * abs(dt)
        if not uniform.all():
            # uniform prefix, then frame by frame
            stop = int(np.argmin(uniform)) + 1
            out[:stop] = self.frames(ts[:stop])
            for j in range(stop, len(ts)):
                out[j] = self.frame(ts[j])
            return out
        # powers exp(j dt K), j <= m, with m dt ||K|| <= 1 keep each block well conditioned
        m = max(1, min(len(ts) - 1, int(1.0 / max(abs(dt) * self.norm, 1e-300))))
        powers = np.empty((m, 2 * self.n, 2 * self.n))
        powers[0] = expm(self.generator, dt)
        for j in range(1, m):
            powers[j] = powers[0] @ powers[j - 1]
        j = 0
        while j < len(ts) - 1:
            size = min(m, len(ts) - 1 - j)
            out[j + 1: j + 1 + size] = orthonormalize(powers[:size] @ out[j])
            j += size
        return out

    def flow(self, t):
        return expm(self.generator, t)


@dataclass(frozen=True)
class ConjugateTime:
    t: float
    multiplicity: int

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")

    def to_dict(self):
        return {"t": self.t, "multiplicity": self.multiplicity}

    @classmethod
    def from_dict(cls, d):
        return cls(d["t"], d["multiplicity"])


def flow_frame(curve, t):
    """``(P(t), X(t))``: momentum and position blocks of ``exp(t vecH) Lambda_0``."""
    Z = curve.flow(t) @ curve.initial.Z
    return Z[: curve.n].copy(), Z[curve.n:].copy()


def _multiplicity(svals, tol):
    smax = svals[0] if len(svals) else 0.0
    return int(np.sum(svals <= tol.multiplicity * max(1.0, smax)))


def train_intersection_dim(curve, t, train=None, tol=None):
    tol = resolve(tol)
    E = orthonormalize(_frame_matrix(train if train is not None else curve.train))
    return _multiplicity(_pairing_svals(E, curve.frame(t)), tol)


def vertical_intersection_dim(curve, t, tol=None):
    """``dim(J(t) cap V)``: the number of singular values of X(t) at the multiplicity tolerance."""
    return train_intersection_dim(curve, t, vertical_frame(curve.n), tol)


def default_grid_step(field, tol=None):
    """``min(1e-2, pi / (8 max |Im lambda|))``."""
    K = field.vech if isinstance(field, HamiltonianField) else field
    im = np.abs(np.linalg.eigvals(K).imag).max() if K.size else 0.0
    return min(1e-2, math.pi / (8.0 * im)) if im > 0 else 1e-2


def curve_admissibility(curve, tol=None):
    """(monotone, ample): ``H|_{Lambda_0} >= 0`` and ``span{vecH^j Lambda_0} = R^{2n}``."""
    tol = resolve(tol)
    Z = curve._Z0
    restricted = Z.T @ curve.hmat @ Z
    scale = max(1.0, np.linalg.norm(curve.hmat, 2))
    monotone = bool(np.linalg.eigvalsh(0.5 * (restricted + restricted.T))[0] >= -tol.definiteness * scale)
    blocks = [Z]
    K = curve.generator / max(1.0, curve.norm)
    for _ in range(2 * curve.n - 1):
        blocks.append(K @ blocks[-1])
    ample = rank_tol(np.hstack(blocks), tol.rank) == 2 * curve.n
    return monotone, ample


def _grid(t_min, t_max, step):
    count = int(math.floor((t_max - t_min) / step + 1e-9))
    ts = t_min + step * np.arange(count + 1)
    if t_max - ts[-1] > 1e-9 * step:
        ts = np.append(ts, t_max)
    return ts


def _aligned_sequence(frames):
    """Flip columns so consecutive frames keep the same orientation."""
    out = np.array(frames, copy=True)
    for j in range(1, len(out)):
        if np.linalg.det(out[j].T @ out[j - 1]) < 0:
            out[j][:, -1] *= -1
    return out


# bisection depth for crossing pairs hidden inside one grid cell: pairs further
# apart than grid_step / 2**_PAIR_DEPTH are always resolved
_PAIR_DEPTH = 5


def detect_intersections(curve, t_min, t_max, grid_step=None, train=None, tol=None):
    """Times in ``(t_min, t_max]`` where ``J(t)`` meets ``train``, with multiplicities.

    Sign changes of ``det(E^T Omega Z)`` are refined with Brent's method; local
    minima of its smallest singular value catch touches of even multiplicity.
    Cells without a sign change whose sigma_min bound does not exclude an
    intersection are bisected for a pair of crossings.
    """
    tol = resolve(tol)
    if grid_step is None:
        grid_step = default_grid_step(curve.generator)
    if not grid_step > 0:
        raise ParameterError(f"grid_step must be positive, got {grid_step}")
    if not t_max > t_min:
        raise ParameterError(f"need t_max > t_min, got [{t_min}, {t_max}]")
    E = orthonormalize(_frame_matrix(train if train is not None else curve.train))
    omega = symplectic_form(curve.n)
    EtO = E.T @ omega
    # a start numerically on the train (e.g. just after J(0) = V) carries no sign
    # information; move it forward exactly as the Maslov computation does
    t_start = _nudge(curve, E, float(t_min), tol)
    if t_start >= t_max:
        return []
    ts = _grid(t_start, t_max, grid_step)
    Zs = curve.frames(ts)
    if getattr(curve, "needs_alignment", False):
        Zs = _aligned_sequence(Zs)
    M = EtO @ Zs
    dets = np.linalg.det(M)
    smin = np.linalg.svd(M, compute_uv=False)[:, -1]

    def aligned(t, ref):
        Z = curve.frame(t)
        if getattr(curve, "needs_alignment", False) and np.linalg.det(Z.T @ ref) < 0:
            Z = Z.copy()
            Z[:, -1] *= -1
        return Z

    def det_at(t, ref):
        return float(np.linalg.det(EtO @ aligned(t, ref)))

    def smin_at(t):
        return float(np.linalg.svd(EtO @ curve.frame(t), compute_uv=False)[-1])

    lip = 1.1 * max(curve.norm, 1e-12)
    roots = []
    crossing = np.zeros(len(ts) - 1, dtype=bool)
    for j in range(len(ts) - 1):
        a, b = dets[j], dets[j + 1]
        if a == 0.0:
            roots.append(ts[j])
        elif a * b < 0:
            crossing[j] = True
            ref = Zs[j]
            roots.append(brentq(det_at, ts[j], ts[j + 1], args=(ref,), xtol=tol.time, rtol=4 * np.finfo(float).eps))
    if dets[-1] == 0.0:
        roots.append(ts[-1])

    # |d sigma_min / dt| is at most the speed ||(I - Z Z^T) K Z|| of the subspace, and the
    # speed grows at most like exp(3 ||K|| dt) along a flow; without a flow use lip
    flow = not getattr(curve, "needs_alignment", False)
    growth = 3.0 * curve.norm

    def speed(Z):
        if not flow:
            return np.inf
        W = curve.generator @ Z
        return float(np.linalg.norm(W - Z @ (Z.T @ W), 2))

    def hidden_pair(lo, hi, d_lo, s_lo, s_hi, v_lo, v_hi, ref, depth):
        # a cell with s_lo + s_hi > L (hi - lo) holds no intersection; otherwise
        # bisect and look for a pair of sign changes
        L = min(lip, min(v_lo, v_hi) * math.exp(growth * (hi - lo)))
        if s_lo + s_hi > L * (hi - lo) or depth == 0:
            return False
        mid = 0.5 * (lo + hi)
        Zm = aligned(mid, ref)
        Mm = EtO @ Zm
        d_mid = float(np.linalg.det(Mm))
        s_mid = float(np.linalg.svd(Mm, compute_uv=False)[-1])
        if d_mid * d_lo < 0:
            for a, b in ((lo, mid), (mid, hi)):
                roots.append(brentq(det_at, a, b, args=(ref,), xtol=tol.time, rtol=4 * np.finfo(float).eps))
            return True
        v_mid = speed(Zm)
        return (hidden_pair(lo, mid, d_lo, s_lo, s_mid, v_lo, v_mid, ref, depth - 1)
                or hidden_pair(mid, hi, d_mid, s_mid, s_hi, v_mid, v_hi, ref, depth - 1))

    speeds = [speed(Z) for Z in Zs]
    for j in range(len(ts) - 1):
        if not crossing[j] and dets[j] != 0.0 and dets[j + 1] != 0.0:
            crossing[j] = hidden_pair(ts[j], ts[j + 1], dets[j], smin[j], smin[j + 1], speeds[j], speeds[j + 1],
                                      Zs[j], _PAIR_DEPTH)

    # touches: interior local minima of sigma_min not explained by a sign change
    for j in range(1, len(ts)):
        right = smin[j + 1] if j + 1 < len(ts) else np.inf
        if not (smin[j] <= smin[j - 1] and smin[j] <= right):
            continue
        if crossing[j - 1] or (j < len(crossing) and crossing[j]):
            continue
        # sigma_min moves at most ||vecH|| per unit time: skip minima that cannot reach the tolerance
        if smin[j] - lip * grid_step > tol.touch:
            continue
        # flat stretches (a frame converging to an invariant subspace) only carry rounding noise
        if max(smin[j - 1], min(right, 1.0)) - smin[j] <= 1e-12:
            continue
        lo, hi = ts[j - 1], ts[j + 1] if j + 1 < len(ts) else ts[j]
        if smin[j] <= tol.touch:
            # the bounded search keeps away from the bounds; grid points are candidates too
            roots.append(ts[j])
            continue
        res = minimize_scalar(smin_at, bounds=(lo, hi), method="bounded",
                              options={"xatol": tol.time})
        if res.fun <= tol.touch:
            roots.append(float(res.x))

    out = []
    for r in sorted(roots):
        if r <= t_min or r > t_max + tol.time:
            continue
        if out and r - out[-1] <= max(100 * tol.time, 1e-9 * abs(r)):
            continue
        out.append(r)
    result = []
    for r in out:
        mult = _multiplicity(np.linalg.svd(EtO @ curve.frame(r), compute_uv=False), tol)
        result.append(ConjugateTime(float(min(r, t_max)), max(1, mult)))
    return result


def require_conjugate_semantics(curve, tol=None):
    monotone, ample = curve_admissibility(curve, tol)
    if not monotone:
        raise ContractError("the Hamiltonian is not non-negative on the initial subspace; "
                            "conjugate times are not isolated (fixtures are not LQ problems)")
    if not ample:
        raise ContractError("the curve is not ample (the system is not controllable); "
                            "conjugate times need not be isolated")


def detect_conjugate_times(curve, t_min, t_max, grid_step=None, tol=None):
    """Conjugate times in ``(t_min, t_max]`` with multiplicities ``dim(J(t) cap V)``."""
    if isinstance(curve, (LqProblem, HamiltonianField)):
        curve = JacobiCurve(curve)
    require_conjugate_semantics(curve, tol)
    return detect_intersections(curve, t_min, t_max, grid_step, curve.train, tol)


# ---------------------------------------------------------------------------
# charts


class Chart:
    """Darboux chart of ``Delta^pitchfork`` adapted to the splitting ``Sigma = Pi (+) Delta``.

    With ``E`` spanning the train ``Pi`` and ``F`` spanning ``Delta`` scaled so
    that ``E^T Omega F = I``, a Lagrangian ``Lambda`` transversal to ``Delta`` is
    ``{E a + F S a}`` with ``S`` symmetric; ``S`` is degenerate iff
    ``Lambda cap Pi != 0``.
    """

    def __init__(self, train, complement=None, label="custom", tol=None):
        tol = resolve(tol)
        E = orthonormalize(_frame_matrix(train))
        n = E.shape[0] // 2
        omega = symplectic_form(n)
        Fp = omega @ E if complement is None else orthonormalize(_frame_matrix(complement))
        pair = E.T @ omega @ Fp
        s = np.linalg.svd(pair, compute_uv=False)
        if s[-1] <= tol.multiplicity:
            raise ChartError(f"chart complement meets the train (sigma_min = {s[-1]:.3e})")
        self.E = E
        self.F = Fp @ np.linalg.inv(pair)
        self.Fhat = Fp
        self.n = n
        self.label = label
        self._omega = omega

    @classmethod
    def standard(cls, n):
        """Train V and complement the horizontal subspace: ``S = X P^{-1}``."""
        return cls(vertical_frame(n), None, "standard")

    def coordinates(self, Z):
        a = -self.F.T @ self._omega @ Z
        b = self.E.T @ self._omega @ Z
        return a, b

    def transversality(self, Z):
        """Smallest singular value of the pairing of ``Z`` with the complement (orthonormal frames)."""
        return float(np.linalg.svd(self.Fhat.T @ self._omega @ Z, compute_uv=False)[-1])

    def S(self, Z, tol=None):
        tol = resolve(tol)
        Z = orthonormalize(Z)
        if self.transversality(Z) <= tol.multiplicity:
            raise ChartError("subspace is not transversal to the chart complement")
        a, b = self.coordinates(Z)
        S = b @ np.linalg.inv(a)
        return 0.5 * (S + S.T)

    def index(self, Z):
        """Negative inertia of ``S`` via the congruent ``sym(a^T b)``; no inversion needed."""
        a, b = self.coordinates(Z)
        G = a.T @ b
        w = np.linalg.eigvalsh(0.5 * (G + G.T))
        return int(np.sum(w < 0))

    def frame(self, S):
        return LagrangianFrame(self.E + self.F @ np.asarray(S, dtype=float), tol=1e-6)


@dataclass(frozen=True, eq=False)
class ChartCoordinates:
    t: float
    S: np.ndarray
    chart: Chart

    def frame(self):
        return self.chart.frame(self.S)


def chart_coordinates(curve, t, chart=None, tol=None):
    """``S(t)`` of ``J(t)`` in ``chart`` (default: ``S = X P^{-1}``)."""
    chart = Chart.standard(curve.n) if chart is None else chart
    try:
        S = chart.S(curve.frame(t), tol)
    except ChartError as exc:
        raise ChartError(f"J({t}) is not transversal to the chart complement; re-chart") from exc
    return ChartCoordinates(float(t), S, chart)


def chart_index_difference(S0, S1):
    """``ind S0 - ind S1`` for two symmetric matrices in one chart."""
    def ind(S):
        S = np.asarray(S, dtype=float)
        return int(np.sum(np.linalg.eigvalsh(0.5 * (S + S.T)) < 0))
    return ind(S0) - ind(S1)


# ---------------------------------------------------------------------------
# Maslov index


class MaslovSegment(NamedTuple):
    chart: str
    start: float
    end: float
    index_start: int
    index_end: int


@dataclass(frozen=True, eq=False)
class MaslovResult:
    t0: float
    t1: float
    train: LagrangianFrame
    index: int
    segments: tuple = dc_field(default=())

    def to_dict(self):
        return {"t0": self.t0, "t1": self.t1, "index": self.index, "segments": len(self.segments)}


def _nudge(curve, E, t, tol):
    """Move ``t`` forward until ``J(t)`` is transversal to the train."""
    shift = tol.eps_shift
    for _ in range(40):
        if _pairing_svals(E, curve.frame(t))[-1] > tol.train:
            return t
        t = t + shift
        shift *= 2.0
    raise ContractError(f"endpoint {t} stays on the train after shifting")


def maslov_index(curve, t0, t1, train=None, eps_shift=None, tol=None, seed=0):
    """Signed intersection number of ``J|[t0, t1]`` with the train of ``train`` (default V).

    The interval is split so that every piece lies in one chart; each piece
    contributes ``ind S(tau_i) - ind S(tau_{i+1})``.  Endpoints on the train are
    moved forward by ``eps_shift`` (doubled until transversal).
    """
    tol = resolve(tol)
    if eps_shift is not None:
        tol = tol.with_overrides(time=eps_shift / 10.0)
    E = orthonormalize(_frame_matrix(train if train is not None else curve.train))
    train_frame = LagrangianFrame(E)
    if t0 == t1:
        return MaslovResult(float(t0), float(t1), train_frame, 0)
    if t1 < t0:
        res = maslov_index(curve, t1, t0, E, eps_shift, tol, seed)
        return MaslovResult(float(t0), float(t1), train_frame, -res.index, res.segments)
    a = _nudge(curve, E, float(t0), tol)
    b = _nudge(curve, E, float(t1), tol)
    if b <= a:
        return MaslovResult(a, b, train_frame, 0)
    rng = np.random.default_rng(seed)
    lip = 1.1 * max(curve.norm, 1e-12)
    floor = tol.chart
    away = 1e-6
    omega = symplectic_form(curve.n)

    def candidates(Z, last):
        # Omega J(cur) is orthogonal to J(cur): the widest margin whenever it misses the train
        if _pairing_svals(E, omega @ Z)[-1] > floor:
            yield Chart(E, omega @ Z, "normal", tol)
        if last is not None:
            yield last
        yield Chart(E, None, "standard", tol)
        for i in range(16):
            R = rng.standard_normal((curve.n, curve.n))
            yield Chart(E, omega @ E + E @ (R + R.T), f"graph{i}", tol)

    def breakpoint(t_end):
        # cur + (b - cur) may round below b; a leftover gap of rounding size is not steppable
        if t_end >= b - 1e-12 * max(1.0, abs(b)):
            return b, curve.frame(b)
        h = t_end - cur
        # keep interior breakpoints off the train
        for frac in (1.0, 0.7, 0.45, 0.85, 0.3):
            Zn = curve.frame(cur + frac * h)
            if _pairing_svals(E, Zn)[-1] > away:
                return cur + frac * h, Zn
        return t_end, curve.frame(t_end)

    total, segments = 0, []
    cur, Zc, last = a, curve.frame(a), None
    while cur < b:
        done = False
        for ch in candidates(Zc, last):
            ga = ch.transversality(Zc)
            if ga <= 2 * floor:
                continue
            # the transversality margin moves at most lip per unit time
            h = min(b - cur, 1.8 * (ga - floor) / lip)
            while h > 1e-12 * max(1.0, abs(cur)):
                nxt, Zn = breakpoint(cur + h)
                Zmid = curve.frame(0.5 * (cur + nxt))
                quarter = 0.25 * (nxt - cur)
                gm, gb = ch.transversality(Zmid), ch.transversality(Zn)
                if min(ga, gm) - lip * quarter >= floor and min(gm, gb) - lip * quarter >= floor:
                    ia, ib = ch.index(Zc), ch.index(Zn)
                    total += ia - ib
                    segments.append(MaslovSegment(ch.label, cur, nxt, ia, ib))
                    done = True
                    break
                h *= 0.5
            if done:
                break
        if not done:
            raise ChartError(f"no certified chart near t = {cur}")
        cur, Zc, last = nxt, Zn, ch
    return MaslovResult(a, b, train_frame, int(total), tuple(segments))


def count_conjugate_times_via_maslov(curve, T, eps_shift=None, tol=None, seed=0):
    """``|Maslov index|`` of ``J|(eps, T + eps)`` with respect to the vertical train."""
    if isinstance(curve, (LqProblem, HamiltonianField)):
        curve = JacobiCurve(curve)
    tol = resolve(tol)
    eps = tol.eps_shift if eps_shift is None else eps_shift
    return abs(maslov_index(curve, eps, T + eps, curve.train, eps, tol, seed).index)


# ---------------------------------------------------------------------------
# reduction


def symplectic_gram_schmidt(U):
    """Symplectic basis ``[e_1..e_m, f_1..f_m]`` (with ``omega(e_i, f_j) = delta_ij``) of a symplectic span."""
    omega = symplectic_form(U.shape[0] // 2)
    vecs = [U[:, j].copy() for j in range(U.shape[1])]
    es, fs = [], []
    while vecs:
        # pick the pair with the largest pairing for stability
        G = np.array([[v @ omega @ w for w in vecs] for v in vecs])
        i, j = np.unravel_index(np.argmax(np.abs(G)), G.shape)
        if abs(G[i, j]) < 1e-12:
            raise ReductionError("span is not symplectic")
        e, f = vecs[i], vecs[j] / G[i, j]
        es.append(e)
        fs.append(f)
        rest = [v for k, v in enumerate(vecs) if k not in (i, j)]
        vecs = [v - (v @ omega @ f) * e + (v @ omega @ e) * f for v in rest]
    return np.column_stack(es + fs)


class ReducedCurve:
    """Projection of a Jacobi curve to ``Gamma^angle / Gamma`` for an isotropic ``Gamma``.

    Frames live in ``R^{2(n-k)}`` with the standard form, through a symplectic
    basis ``U`` of ``Gamma^angle cap Gamma^perp``.  A sample is
    ``pi(J(t) cap Gamma^angle)``.  When ``Gamma`` is invariant the flow commutes
    with the projection, so the samples are computed as the flow of the induced
    field applied to ``pi(J(0) cap Gamma^angle)``; this stays accurate when
    ``J(t)`` approaches ``Gamma`` exponentially fast.
    """

    def __init__(self, curve, gamma, tol=None):
        tol = resolve(tol)
        G = _frame_matrix(gamma)
        self.curve = curve
        self.k = G.shape[1]
        self.n = curve.n - self.k
        self.tol = tol
        if self.k and isotropy_residual(G) > tol.subspace * 10:
            raise ReductionError(f"Gamma is not isotropic (residual {isotropy_residual(G):.3e})")
        if self.n == 0:
            raise ParameterError("Gamma is Lagrangian: the reduced space is zero-dimensional")
        omega = symplectic_form(curve.n)
        self.G = orthonormal_basis(G, self.k) if self.k else np.zeros((2 * curve.n, 0))
        if self.k:
            # Gamma^angle cap Gamma^perp: the kernel of [G^T Omega; G^T]
            C = np.vstack([self.G.T @ omega, self.G.T])
            _, _, vh = np.linalg.svd(C)
            U0 = vh[rank_tol(C, 1e-10):].T
            if U0.shape[1] != 2 * self.n:
                raise ReductionError("unexpected dimension of Gamma^angle cap Gamma^perp")
            self.U = symplectic_gram_schmidt(U0)
        else:
            self.U = np.eye(2 * curve.n)
        self._omega = omega
        self._omega_r = symplectic_form(self.n)
        K = curve.generator
        drift = K @ self.G - self.G @ (self.G.T @ K @ self.G)
        self.invariant = not self.k or np.linalg.norm(drift, 2) <= tol.subspace * max(1.0, curve.norm)
        self.generator = -self._omega_r @ self.U.T @ omega @ K @ self.U
        self.norm = float(np.linalg.norm(self.generator, 2))
        self.train = LagrangianFrame(self.reduce_frame(curve.train.Z), tol=1e-6)
        self.hmat = None
        self._flow = None
        if self.invariant:
            self.hmat = self._omega_r @ self.generator
            field = HamiltonianField(self.hmat, label="reduced")
            self._flow = JacobiCurve(field, LagrangianFrame(self.reduce_frame(curve.frame(0.0), 0.0), tol=1e-6))
            self._Z0 = self._flow._Z0

    @property
    def needs_alignment(self):
        return self._flow is None

    def project(self, Y):
        """Reduced coordinates of vectors in ``Gamma^angle``."""
        return -self._omega_r @ self.U.T @ self._omega @ Y

    def reduce_frame(self, Z, t=None):
        if not self.k:
            return orthonormalize(self.project(Z))
        M = self.G.T @ self._omega @ Z
        if rank_tol(M, self.tol.multiplicity, floor=1.0) < self.k:
            raise ReductionError(f"J({t}) meets Gamma; the reduction is not defined there", t)
        _, _, vh = np.linalg.svd(M)
        N = vh[self.k:].T
        return orthonormalize(self.project(Z @ N))

    def frame(self, t):
        if self._flow is not None:
            return self._flow.frame(t)
        return self.reduce_frame(self.curve.frame(t), t)

    def frames(self, ts):
        if self._flow is not None:
            return self._flow.frames(ts)
        full = self.curve.frames(ts)
        return np.array([self.reduce_frame(Z, t) for Z, t in zip(full, ts)])


def reduce_curve(curve, gamma, tol=None):
    """Reduced curve sampler; ``gamma`` of dimension 0 gives back the original frames."""
    if isinstance(curve, (LqProblem, HamiltonianField)):
        curve = JacobiCurve(curve)
    return ReducedCurve(curve, gamma, tol)


def detect_reduced_conjugate_times(reduced, t_min, t_max, grid_step=None, tol=None):
    """Intersections of the reduced curve with the reduced vertical train."""
    if grid_step is None:
        grid_step = default_grid_step(reduced.curve.generator)
    return detect_intersections(reduced, t_min, t_max, grid_step, reduced.train, tol)


# ---------------------------------------------------------------------------
# structural checks


@dataclass(frozen=True)
class MonotonicityReport:
    samples: tuple
    identity_residual: float
    passed: bool
    violations: tuple = ()

    def to_dict(self):
        return {"samples": [list(s) for s in self.samples], "identity_residual": self.identity_residual,
                "passed": self.passed, "violations": list(self.violations)}


def monotonicity_check(curve, sample_times, tol=None, seed=0, n_vectors=5):
    """Sign of the velocity of the curve at each sample.

    In the chart with train ``J(t)`` and complement ``Omega J(t)`` the velocity
    form is ``-dS/dt``; a Jacobi curve has ``dS/dt >= 0``, i.e. the velocity form
    ``omega(zdot, z) = -z0^T BB^T z0 <= 0``.  Both facts are checked; the identity
    uses random ``z0`` in the initial subspace.
    """
    tol = resolve(tol)
    norm = max(1.0, curve.norm)
    h = 1e-4 / norm
    samples, violations = [], []
    for t in sample_times:
        Z = curve.frame(t)
        chart = Chart(Z, None, "centred")
        Sp = chart.S(curve.frame(t + h))
        Sm = chart.S(curve.frame(t - h))
        Sdot = (Sp - Sm) / (2 * h)
        w = np.linalg.eigvalsh(0.5 * (Sdot + Sdot.T))
        floor = 1e-6 * max(1.0, np.abs(w).max())
        samples.append((float(t), float(w[0]), float(w[-1])))
        if w[0] < -floor:
            violations.append(float(t))
    residual = 0.0
    hmat = getattr(curve, "hmat", None)
    if hmat is not None:
        rng = np.random.default_rng(seed)
        omega = symplectic_form(curve.n)
        Z0 = curve.frame(0.0)
        for t in list(sample_times)[:n_vectors] or [0.0]:
            z0 = Z0 @ rng.standard_normal(curve.n)
            P = expm(curve.generator, t)
            z = P @ z0
            zdot = curve.generator @ z
            lhs = zdot @ omega @ z
            rhs = -z0 @ hmat @ z0
            residual = max(residual, abs(lhs - rhs) / max(1.0, abs(rhs), np.linalg.norm(z) ** 2 * norm))
    passed = bool(not violations and residual <= 1e-8)
    return MonotonicityReport(tuple(samples), float(residual), passed, tuple(violations))


class AmplenessResult(NamedTuple):
    ample: bool
    rank: int


def ampleness_check(problem, tol=None):
    """Ampleness of the Jacobi curve, equivalent to full Kalman rank."""
    tol = resolve(tol)
    rank = kalman_rank(problem, tol.rank)
    return AmplenessResult(rank == problem.n, rank)


@dataclass(frozen=True)
class IndexAudit:
    n: int
    index_pi: int = None
    index_pi_prime: int = None
    index_lambda_prime: int = None
    skipped: str = ""

    @property
    def change_of_train(self):
        if self.index_pi is None or self.index_pi_prime is None:
            return None
        return abs(self.index_pi - self.index_pi_prime)

    @property
    def change_of_initial(self):
        if self.index_pi is None or self.index_lambda_prime is None:
            return None
        return abs(self.index_pi - self.index_lambda_prime)

    @property
    def passed(self):
        diffs = [d for d in (self.change_of_train, self.change_of_initial) if d is not None]
        return not self.skipped and all(d <= self.n for d in diffs)

    def to_dict(self):
        return {"n": self.n, "index_pi": self.index_pi, "index_pi_prime": self.index_pi_prime,
                "index_lambda_prime": self.index_lambda_prime, "skipped": self.skipped,
                "passed": self.passed}


def index_bound_audit(curve, t0, t1, Pi, Pi_prime, initial_prime=None, tol=None, seed=0):
    """Indices of one curve against two trains, and of two initial subspaces against one train.

    Both differences are bounded by ``n``.  If an endpoint meets a train the
    audit is skipped with a reason instead of shifting the interval.
    """
    tol = resolve(tol)
    E = orthonormalize(_frame_matrix(Pi))
    Ep = orthonormalize(_frame_matrix(Pi_prime))
    other = JacobiCurve(curve.field, initial_prime) if initial_prime is not None else None
    floor = 1e-6
    for t in (t0, t1):
        for name, train in (("Pi", E), ("Pi'", Ep)):
            if _pairing_svals(train, curve.frame(t))[-1] <= floor:
                return IndexAudit(curve.n, skipped=f"J({t}) meets {name}")
        if other is not None and _pairing_svals(E, other.frame(t))[-1] <= floor:
            return IndexAudit(curve.n, skipped=f"J'({t}) meets Pi")
    i_pi = maslov_index(curve, t0, t1, E, tol=tol, seed=seed).index
    i_pp = maslov_index(curve, t0, t1, Ep, tol=tol, seed=seed).index
    i_lp = maslov_index(other, t0, t1, E, tol=tol, seed=seed).index if other is not None else None
    return IndexAudit(curve.n, i_pi, i_pp, i_lp)


# ---------------------------------------------------------------------------
# trace export


def curve_trace(curve, t_min, t_max, grid_step, tol=None):
    """Rows ``(t, det X, sigma_min X, intersection_dim)`` on ``t_min + j * grid_step <= t_max``."""
    tol = resolve(tol)
    if not grid_step > 0:
        raise ParameterError(f"grid_step must be positive, got {grid_step}")
    if not t_max > t_min:
        raise ParameterError(f"horizon must exceed the start time, got [{t_min}, {t_max}]")
    count = int(math.floor((t_max - t_min) / grid_step + 1e-9))
    ts = t_min + grid_step * np.arange(count + 1)
    rows = []
    for t in ts:
        _, X = flow_frame(curve, t)
        s = np.linalg.svd(X, compute_uv=False)
        rows.append((float(t), float(np.linalg.det(X)), float(s[-1]), vertical_intersection_dim(curve, t, tol)))
    return rows


def self_intersection_check(curve, pairs, tol=None):
    """Largest ``dim(J(t1) cap J(t2))`` over the sampled pairs.

    The flow is symplectic and maps ``J(0)`` to ``J(t1)``, so the pair is
    pulled back by ``P_{-t1}`` to ``(J(0), J(t2 - t1))``.  Comparing the raw
    frames instead fails once the curve converges to an invariant subspace:
    late samples then agree to rounding.
    """
    tol = resolve(tol)
    Z0 = curve.frame(0.0)
    worst = 0
    for t1, t2 in pairs:
        s = _pairing_svals(Z0, curve.frame(t2 - t1))
        worst = max(worst, _multiplicity(s, tol))
    return worst
