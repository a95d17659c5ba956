"""Conjugate times of linear-quadratic optimal control problems.

The Jacobi curve ``J(t) = exp(t vecH) V`` of an LQ problem meets the vertical
subspace ``V`` exactly at the conjugate times.  The package predicts from the
spectrum of ``vecH`` whether there are none or infinitely many, detects them
numerically, counts them as a Maslov index and checks the two against each other.
"""
from .analysis import AnalysisConfig, AnalysisReport, CheckResult, analyze
from .estimator import ConjugateTimeAnalyzer
from .exceptions import (
    ChartError, ClassificationError, ConsistencyError, ConstructionError, ContractError, DimensionError,
    IngestionError, LqJacobiError, NumericalFailure, ParameterError, ReductionError,
)
from .jacobi import (
    Chart, ConjugateTime, JacobiCurve, ReducedCurve, ampleness_check, count_conjugate_times_via_maslov,
    curve_trace, detect_conjugate_times, detect_intersections, detect_reduced_conjugate_times, index_bound_audit,
    maslov_index, monotonicity_check, reduce_curve, self_intersection_check,
)
from .model import (
    HamiltonianField, LqProblem, assemble, change_state_coordinates, check_admissible, direct_sum,
    double_integrator, harmonic_oscillator, hyperbolic_saddle, isotropic_oscillator, load_problem,
    oscillator_saddle,
)
from .spectral import (
    INFINITELY_MANY, NO_CONJUGATE_TIMES, build_gamma_plus, build_imaginary_jordan_fixture, classify_spectrum,
    conjugate_time_bounds, invariant_isotropic_subspace, krein_frequencies, predict_dichotomy,
)
from .symplectic import eigen_decompose, expm, is_symplectic, jordan_structure, symplectic_form
from .tolerances import DEFAULT_TOLERANCES, ToleranceConfig

__version__ = "0.1.0"
