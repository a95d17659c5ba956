import numpy as np
from sklearn.utils import check_array

from .exceptions import DimensionError


def as_real_matrix(M, name="matrix", shape=None, square=False):
    """Return ``M`` as a finite float64 2-D array, raising ``DimensionError`` on bad shapes.

    ``shape`` may contain ``None`` entries for free dimensions.
    """
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size:
        try:
            arr = check_array(arr, dtype=np.float64, ensure_all_finite=True,
                              ensure_min_samples=1, ensure_min_features=0, input_name=name)
        except ValueError as exc:
            raise DimensionError(str(exc)) from exc
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if shape is not None:
        for want, got in zip(shape, arr.shape):
            if want is not None and want != got:
                raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def as_vector(v, name="vector", size=None):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite entries")
    if size is not None and arr.shape[0] != size:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {size}")
    return arr


def half_dimension(M, name="matrix"):
    dim = M.shape[0]
    if dim % 2:
        raise DimensionError(f"{name} has odd dimension {dim}; a symplectic space is even-dimensional")
    return dim // 2
