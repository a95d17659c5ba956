"""JSON and CSV input/output.

Every float is written with 17 significant digits so that a report read back
reproduces the computed doubles bit for bit.
"""
import csv
import json
import math

import numpy as np

from .exceptions import IngestionError
from .model import HamiltonianField, LqProblem, _nested

FIELD_KIND = "hamiltonian_field"
FIELD_KEYS = ("kind", "n", "Hmat", "label", "admissible_lq", "order_kind", "k", "beta", "sign")
TRACE_COLUMNS = ("t", "det_X", "sigma_min_X", "intersection_dim")


def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x}")
    text = format(x, ".17g")
    # keep integral values recognisable as floats when read back
    return text if any(c in text for c in ".e") else text + ".0"


def _encode(obj, indent, level):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ", "
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items())
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        return "[" + pad + sep.join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with every float at 17 significant digits."""
    return _encode(obj, indent, 0)


def write_json(obj, path, indent=2):
    text = dumps(obj, indent) + "\n"
    if path is None or path == "-":
        return text
    with open(path, "w") as fh:
        fh.write(text)
    return text


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise IngestionError(f"malformed JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# fixtures


def field_to_dict(field, admissible_lq, **meta):
    """Fixture JSON object: ``Hmat`` plus the discriminator ``"kind": "hamiltonian_field"``."""
    out = {"kind": FIELD_KIND, "n": field.n, "Hmat": field.hmat.tolist(), "label": field.label,
           "admissible_lq": bool(admissible_lq)}
    out.update(meta)
    return out


def field_from_dict(data):
    if not isinstance(data, dict) or data.get("kind") != FIELD_KIND:
        raise IngestionError(f'expected an object with "kind": "{FIELD_KIND}"')
    unknown = set(data) - set(FIELD_KEYS)
    if unknown:
        raise IngestionError(f"unknown field keys: {sorted(unknown)}")
    if "Hmat" not in data or "n" not in data:
        raise IngestionError("field object needs n and Hmat")
    n = data["n"]
    if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
        raise IngestionError("n must be a positive integer")
    H = _nested(data["Hmat"], "Hmat")
    if H.shape != (2 * n, 2 * n):
        raise IngestionError(f"Hmat must be {2 * n}x{2 * n}, got {H.shape[0]}x{H.shape[1] if H.ndim > 1 else 0}")
    if not np.allclose(H, H.T, rtol=0, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise IngestionError("Hmat must be symmetric")
    return HamiltonianField(H, label=str(data.get("label", "")))


def parse_input(data):
    """An LqProblem, or a HamiltonianField when the object carries the field discriminator."""
    if isinstance(data, dict) and "kind" in data:
        return field_from_dict(data)
    return LqProblem.from_dict(data)


def load_input(path):
    return parse_input(read_json(path))


# ---------------------------------------------------------------------------
# traces


def write_trace_csv(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for t, det, smin, dim in rows:
        writer.writerow([format_float(t), format_float(det), format_float(smin), int(dim)])


def read_trace_csv(fh):
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
        raise IngestionError(f"trace columns must be {TRACE_COLUMNS}")
    return [(float(r["t"]), float(r["det_X"]), float(r["sigma_min_X"]), int(r["intersection_dim"]))
            for r in reader]
