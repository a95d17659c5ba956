from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class ToleranceConfig:
    """Every numerical threshold used by the package.

    Relative thresholds are scaled by the spectral norm of the matrix they are
    applied to unless stated otherwise.
    """

    rank: float = 1e-9
    cluster: float = 1e-7
    # defective eigenvalues of a size-d block split by ~eps**(1/d); the
    # clustering radius for a d-fold cluster is max(cluster, defect * eps**(1/d))
    defect: float = 10.0
    imaginary: float = 1e-7
    jordan_rank: float = 1e-9
    time: float = 1e-10
    multiplicity: float = 1e-7
    touch: float = 1e-7
    subspace: float = 1e-8
    train: float = 1e-11
    chart: float = 1e-3
    symplectic: float = 1e-9
    definiteness: float = 1e-9

    @property
    def eps_shift(self):
        return 10.0 * self.time

    def with_overrides(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOLERANCES = ToleranceConfig()


def resolve(tol):
    return DEFAULT_TOLERANCES if tol is None else tol
