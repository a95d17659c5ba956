"""End-to-end analysis of one problem: spectrum, prediction, detection and the cross-checks between them."""
import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .exceptions import ClassificationError, ConsistencyError, LqJacobiError, ParameterError
from .jacobi import (
    ConjugateTime, JacobiCurve, default_grid_step, detect_intersections, maslov_index, monotonicity_check, reduce_curve,
    self_intersection_check, train_intersection_dim,
)
from .model import AdmissibilityReport, HamiltonianField, LqProblem, assemble, check_admissible
from .spectral import (
    INFINITELY_MANY, NO_CONJUGATE_TIMES, ConjugateTimeBound, DichotomyVerdict, KreinFrequency, SpectrumReport,
    build_gamma_plus, classify_spectrum, conjugate_time_bounds, krein_frequencies, predict_dichotomy,
)
from .tolerances import DEFAULT_TOLERANCES, ToleranceConfig

AGREE, DISAGREE, LIMITED = "agree", "disagree", "limited"
PASS, FAIL, SKIPPED = "pass", "fail", "skipped"
EXIT_CODES = {AGREE: 0, DISAGREE: 2, LIMITED: 1}
# horizon over which a NoConjugateTimes verdict is confirmed, whatever the requested horizon
EMPTY_HORIZON = 100.0


@dataclass(frozen=True)
class AnalysisConfig:
    horizon: float = 30.0
    grid_step: float = None
    tolerances: ToleranceConfig = DEFAULT_TOLERANCES
    eps_shift: float = None
    seed: int = 0
    n_pairs: int = 50
    output: str = dc_field(default=None, compare=False)

    def __post_init__(self):
        if not (isinstance(self.horizon, (int, float)) and math.isfinite(self.horizon) and self.horizon > 0):
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if self.grid_step is not None and not (math.isfinite(self.grid_step) and self.grid_step > 0):
            raise ParameterError(f"grid_step must be positive, got {self.grid_step}")
        if self.eps_shift is not None and not (math.isfinite(self.eps_shift) and self.eps_shift > 0):
            raise ParameterError(f"eps_shift must be positive, got {self.eps_shift}")

    @property
    def shift(self):
        return self.tolerances.eps_shift if self.eps_shift is None else self.eps_shift

    def to_dict(self):
        return {"horizon": float(self.horizon), "grid_step": self.grid_step, "eps_shift": self.eps_shift,
                "effective_eps_shift": self.shift, "seed": self.seed, "n_pairs": self.n_pairs,
                "tolerances": self.tolerances.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["horizon"], d["grid_step"], ToleranceConfig(**d["tolerances"]), d["eps_shift"],
                   d["seed"], d["n_pairs"])


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "status": self.status, "detail": self.detail}

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["status"], d["detail"])


def _opt(obj):
    return None if obj is None else obj.to_dict()


@dataclass(frozen=True)
class AnalysisReport:
    input_kind: str
    config: AnalysisConfig
    admissibility: AdmissibilityReport
    spectrum: SpectrumReport = None
    verdict: DichotomyVerdict = None
    frequencies: tuple = ()
    bounds: ConjugateTimeBound = None
    conjugate_times: tuple = ()
    maslov_index: int = None
    checks: tuple = ()
    status: str = LIMITED
    diagnostics: tuple = dc_field(default=())

    @property
    def conjugate_count(self):
        """Conjugate times in ``(0, horizon]`` counted with multiplicity."""
        return sum(c.multiplicity for c in self.conjugate_times)

    @property
    def maslov_count(self):
        return None if self.maslov_index is None else abs(self.maslov_index)

    @property
    def exit_code(self):
        return EXIT_CODES[self.status]

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "input_kind": self.input_kind,
            "status": self.status,
            "config": self.config.to_dict(),
            "admissibility": self.admissibility.to_dict(),
            "spectrum": _opt(self.spectrum),
            "verdict": _opt(self.verdict),
            "frequencies": [f.to_dict() for f in self.frequencies],
            "bounds": _opt(self.bounds),
            "conjugate_times": [c.to_dict() for c in self.conjugate_times],
            "conjugate_count": self.conjugate_count,
            "maslov_index": self.maslov_index,
            "maslov_count": self.maslov_count,
            "checks": [c.to_dict() for c in self.checks],
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d):
        def opt(kind, value):
            return None if value is None else kind.from_dict(value)
        return cls(
            d["input_kind"], AnalysisConfig.from_dict(d["config"]), AdmissibilityReport.from_dict(d["admissibility"]),
            opt(SpectrumReport, d["spectrum"]), opt(DichotomyVerdict, d["verdict"]),
            tuple(KreinFrequency.from_dict(f) for f in d["frequencies"]), opt(ConjugateTimeBound, d["bounds"]),
            tuple(ConjugateTime.from_dict(c) for c in d["conjugate_times"]), d["maslov_index"],
            tuple(CheckResult.from_dict(c) for c in d["checks"]), d["status"], tuple(d["diagnostics"]),
        )


# ---------------------------------------------------------------------------
# spectral part


def _spectral(field, tol, diagnostics):
    try:
        spectrum = classify_spectrum(field, tol)
    except ClassificationError as exc:
        diagnostics.append(f"spectrum: {exc}")
        return None, None, (), None
    verdict = predict_dichotomy(spectrum)
    freqs, bounds = (), None
    if spectrum.pure_imaginary and spectrum.semisimple_imaginary:
        try:
            freqs = tuple(krein_frequencies(field, spectrum, tol))
            k_reduced = (2 * field.n - spectrum.imaginary_dimension) // 2
            bounds = conjugate_time_bounds(freqs, field.n, k_reduced)
        except (ClassificationError, ConsistencyError) as exc:
            diagnostics.append(f"bounds: {exc}")
    return spectrum, verdict, freqs, bounds


# ---------------------------------------------------------------------------
# cross-checks


def _check_maslov(times, index, config):
    count = sum(c.multiplicity for c in times)
    guard = 2 * config.shift
    near = [c.t for c in times if c.t <= guard or abs(c.t - config.horizon) <= guard]
    if near:
        return CheckResult("maslov_oracle", SKIPPED, f"conjugate time within {guard:.3g} of an endpoint: {near}")
    status = PASS if abs(index) == count else FAIL
    return CheckResult("maslov_oracle", status, f"|maslov| = {abs(index)}, detected = {count}")


def _check_dichotomy(curve, verdict, bounds, times, config, tol, grid_step):
    if verdict.kind == NO_CONJUGATE_TIMES:
        horizon = max(config.horizon, EMPTY_HORIZON)
        found = times if horizon == config.horizon else detect_intersections(
            curve, 0.0, horizon, grid_step, curve.train, tol)
        status = PASS if not found else FAIL
        return CheckResult("dichotomy", status, f"{len(found)} detections on (0, {horizon:g}]")
    if bounds is None:
        return CheckResult("dichotomy", SKIPPED, "no count bound for a non-semisimple imaginary spectrum")
    need = bounds.count_lower_bound(config.horizon)
    count = sum(c.multiplicity for c in times)
    status = PASS if count >= need else FAIL
    return CheckResult("dichotomy", status, f"detected {count} >= lower bound {need}")


def _check_first_time(bounds, times, config):
    if bounds is None:
        return CheckResult("first_time_bound", SKIPPED, "no bound")
    if bounds.first_time_bound > config.horizon:
        return CheckResult("first_time_bound", SKIPPED,
                           f"bound {bounds.first_time_bound:.6g} lies beyond the horizon")
    if not times:
        return CheckResult("first_time_bound", FAIL, f"no conjugate time up to {bounds.first_time_bound:.6g}")
    first = times[0].t
    status = PASS if first <= bounds.first_time_bound * (1 + 1e-12) else FAIL
    return CheckResult("first_time_bound", status, f"first {first:.6g} <= bound {bounds.first_time_bound:.6g}")


def _check_transversality(curve, times, grid_step, tol):
    """The curve leaves the train on both sides of every detected time."""
    bad = []
    ts = [c.t for c in times]
    for i, t in enumerate(ts):
        gaps = [grid_step / 4]
        if i:
            gaps.append((t - ts[i - 1]) / 3)
        if i + 1 < len(ts):
            gaps.append((ts[i + 1] - t) / 3)
        delta = min(gaps)
        for s in (t - delta, t + delta):
            if s > 0 and train_intersection_dim(curve, s, tol=tol):
                bad.append(s)
    status = PASS if not bad else FAIL
    return CheckResult("transversality", status, f"{len(ts)} conjugate times probed, {len(bad)} failures")


def _check_self_intersection(curve, verdict, config, tol):
    if verdict.kind != NO_CONJUGATE_TIMES:
        return CheckResult("self_intersection", SKIPPED, "only for curves with an invariant Lagrangian")
    rng = np.random.default_rng(config.seed)
    pairs = []
    while len(pairs) < config.n_pairs:
        t1, t2 = rng.uniform(0.0, config.horizon, size=2)
        if abs(t1 - t2) > 1e-3:
            pairs.append((t1, t2))
    worst = self_intersection_check(curve, pairs, tol)
    status = PASS if worst == 0 else FAIL
    return CheckResult("self_intersection", status, f"max dim over {len(pairs)} pairs = {worst}")


def _sample_times(config):
    return list(np.linspace(0.0, min(config.horizon, 10.0), 6))


def _check_monotonicity(curve, config, tol):
    rep = monotonicity_check(curve, _sample_times(config), tol, seed=config.seed)
    status = PASS if rep.passed else FAIL
    return CheckResult("monotonicity", status,
                       f"identity residual {rep.identity_residual:.3g}, violations at {list(rep.violations)}")


def _check_reduced(curve, field, spectrum, verdict, config, tol):
    if verdict.kind != INFINITELY_MANY or not spectrum.hyperbolic and spectrum.zero_eigenvalue is None:
        return CheckResult("reduced_monotonicity", SKIPPED, "nothing to reduce")
    try:
        gamma = build_gamma_plus(field, spectrum, tol)
        reduced = reduce_curve(curve, gamma, tol)
    except LqJacobiError as exc:
        return CheckResult("reduced_monotonicity", SKIPPED, f"reduction unavailable: {exc}")
    if not reduced.invariant:
        return CheckResult("reduced_monotonicity", SKIPPED, "Gamma is not invariant")
    rep = monotonicity_check(reduced, _sample_times(config), tol, seed=config.seed)
    status = PASS if rep.passed else FAIL
    return CheckResult("reduced_monotonicity", status, f"reduced dimension {2 * reduced.n}, "
                       f"violations at {list(rep.violations)}")


# ---------------------------------------------------------------------------
# orchestration


def analyze(source, config=None):
    """Assemble, classify, predict, detect and cross-check one problem.

    ``source`` is an LqProblem or a HamiltonianField.  Inputs that are not
    controllable, or whose Hamiltonian is not non-negative on the vertical
    subspace, get the spectral part only and status ``limited``.
    """
    config = config or AnalysisConfig()
    tol = config.tolerances
    if isinstance(source, LqProblem):
        kind, field = "lq_problem", assemble(source)
    elif isinstance(source, HamiltonianField):
        kind, field = "hamiltonian_field", source
    else:
        raise ParameterError("analyze expects an LqProblem or a HamiltonianField")
    admissibility = check_admissible(source, tol.rank)
    diagnostics = []
    spectrum, verdict, freqs, bounds = _spectral(field, tol, diagnostics)
    base = AnalysisReport(kind, config, admissibility, spectrum, verdict, freqs, bounds)
    if not admissibility.controllable:
        diagnostics.append(f"not controllable (Kalman rank {admissibility.kalman_rank} < {admissibility.n}); "
                           "analysis limited to the spectrum")
    if not admissibility.vertical_psd:
        diagnostics.append("Hamiltonian is not non-negative on the vertical subspace; "
                           "conjugate-time analysis refused")
    if not admissibility.admissible or verdict is None:
        return replace(base, status=LIMITED, diagnostics=tuple(diagnostics))

    curve = JacobiCurve(field)
    grid_step = config.grid_step
    times = tuple(detect_intersections(curve, 0.0, config.horizon, grid_step, curve.train, tol))
    shift = config.shift
    index = maslov_index(curve, shift, config.horizon + shift, curve.train, shift, tol, config.seed).index
    checks = (
        _check_maslov(times, index, config),
        _check_dichotomy(curve, verdict, bounds, times, config, tol, grid_step),
        _check_first_time(bounds, times, config),
        _check_transversality(curve, times, grid_step or default_grid_step(curve.generator), tol),
        _check_self_intersection(curve, verdict, config, tol),
        _check_monotonicity(curve, config, tol),
        _check_reduced(curve, field, spectrum, verdict, config, tol),
    )
    status = DISAGREE if any(c.status == FAIL for c in checks) else AGREE
    return replace(base, conjugate_times=times, maslov_index=int(index), checks=checks, status=status,
                   diagnostics=tuple(diagnostics))
