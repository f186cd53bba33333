"""Model files.

Three JSON kinds are understood:

    {"kind": "finite_system", "points": [...], "map": [int, ...],
     "weights": [num, ...] or {"num": [int, ...], "den": [int, ...]},
     "invertible": bool}

    {"kind": "markov_chain", "states": [...], "P": [[num, ...], ...]}

    {"kind": "harris_discrete", "states": [...], "K": [[num, ...], ...],
     "R": [int, ...], "ell": int, "epsilon": num, "lambda": [num, ...]}

"points"/"states" are optional labels.  Rational weights are honoured
exactly.  Markov and Harris rows are validated to sum to one within
1e-9 and then renormalised exactly.  "epsilon"/"lambda" may be omitted,
in which case the minorization is fitted and reports say so.

Errors carry the offending field path and a distinct exit code per
failure class (unreadable file, bad JSON, unknown kind, violated
invariant).
"""

import hashlib
import json
import os

import numpy as np

from .errors import (
    FileAccessError,
    InvariantError,
    ModelParseError,
    UnknownKindError,
)
from .harris import HarrisModel
from .markov import StochasticMatrix
from .measure import FiniteSystem

KINDS = ("finite_system", "markov_chain", "harris_discrete")


def _require(doc, key, types, kind):
    if key not in doc:
        raise InvariantError("missing required field", field=key)
    value = doc[key]
    if types is not None and not isinstance(value, types):
        raise InvariantError("field has the wrong type for a %s" % kind,
                             field=key)
    return value


def _number_list(value, field):
    if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool)
            for v in value):
        raise InvariantError("expected a list of numbers", field=field)
    return value


def _int_list(value, field):
    if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise InvariantError("expected a list of integers", field=field)
    return value


def _matrix(value, field):
    if not isinstance(value, list) or not value:
        raise InvariantError("expected a nonempty matrix", field=field)
    n = len(value)
    for i, row in enumerate(value):
        _number_list(row, "%s[%d]" % (field, i))
        if len(row) != n:
            raise InvariantError("matrix is not square", field="%s[%d]" % (field, i))
    return np.asarray(value, dtype=np.float64)


def _renormalized_rows(matrix, field):
    sums = matrix.sum(axis=1)
    gap = np.abs(sums - 1.0)
    bad = int(gap.argmax())
    if gap[bad] > 1e-9:
        raise InvariantError(
            "row sums to %.12g, not 1" % sums[bad], field="%s[%d]" % (field, bad))
    return matrix / sums[:, None]


def _build_finite_system(doc):
    mapping = _int_list(_require(doc, "map", list, "finite_system"), "map")
    raw_weights = _require(doc, "weights", (list, dict), "finite_system")
    if isinstance(raw_weights, dict):
        num = _int_list(_require(raw_weights, "num", list, "finite_system"),
                        "weights.num")
        den = _int_list(_require(raw_weights, "den", list, "finite_system"),
                        "weights.den")
        if len(num) != len(den):
            raise InvariantError("num and den differ in length",
                                 field="weights")
        if any(d == 0 for d in den):
            raise InvariantError("zero denominator", field="weights.den")
        system = FiniteSystem.from_rational(
            mapping, num, den,
            invertible=bool(_require(doc, "invertible", bool, "finite_system")),
            points=doc.get("points"),
        )
    else:
        system = FiniteSystem(
            mapping,
            np.asarray(_number_list(raw_weights, "weights"), dtype=np.float64),
            invertible=bool(_require(doc, "invertible", bool, "finite_system")),
            points=doc.get("points"),
        )
    return system


def _build_markov_chain(doc):
    p = _matrix(_require(doc, "P", list, "markov_chain"), "P")
    p = _renormalized_rows(p, "P")
    states = doc.get("states")
    if states is not None and len(states) != p.shape[0]:
        raise InvariantError("states length does not match P", field="states")
    return StochasticMatrix(p, states=states)


def _build_harris(doc):
    k = _matrix(_require(doc, "K", list, "harris_discrete"), "K")
    k = _renormalized_rows(k, "K")
    states = doc.get("states")
    if states is not None and len(states) != k.shape[0]:
        raise InvariantError("states length does not match K", field="states")
    regen = _int_list(_require(doc, "R", list, "harris_discrete"), "R")
    ell = _require(doc, "ell", int, "harris_discrete")
    if isinstance(ell, bool) or ell < 1:
        raise InvariantError("ell must be a positive integer", field="ell")
    epsilon = doc.get("epsilon")
    if epsilon is not None and not isinstance(epsilon, (int, float)):
        raise InvariantError("epsilon must be a number", field="epsilon")
    lam = doc.get("lambda")
    if lam is not None:
        lam = np.asarray(_number_list(lam, "lambda"), dtype=np.float64)
    return HarrisModel(StochasticMatrix(k, states=states), regen,
                       ell=ell, epsilon=epsilon, lam=lam)


_BUILDERS = {
    "finite_system": _build_finite_system,
    "markov_chain": _build_markov_chain,
    "harris_discrete": _build_harris,
}


def parse_model(doc, source=None):
    """Build a model from an already-parsed JSON document."""
    if not isinstance(doc, dict):
        raise InvariantError("model document must be a JSON object",
                             field="$")
    kind = doc.get("kind")
    if kind not in _BUILDERS:
        raise UnknownKindError(
            "unknown model kind %r (expected one of %s)"
            % (kind, ", ".join(KINDS)), field="kind")
    model = _BUILDERS[kind](doc)
    model.kind = kind
    model.source = source
    return model


def load_model(path):
    """Read and validate a model file; see the module docstring for the
    accepted kinds."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FileAccessError(str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError("%s: %s" % (path, exc)) from exc
    return parse_model(doc, source=os.path.basename(path))


def model_document(model):
    """Canonical JSON-ready document for a model, inverse of parsing up
    to row renormalisation; used for hashing and report identity."""
    kind = getattr(model, "kind", None)
    if isinstance(model, FiniteSystem):
        if model.exact:
            weights = {"num": [int(w.numerator) for w in model.weights],
                       "den": [int(w.denominator) for w in model.weights]}
        else:
            weights = [float(w) for w in model.weights]
        return {
            "kind": "finite_system",
            "points": list(model.points),
            "map": [int(x) for x in model.mapping],
            "weights": weights,
            "invertible": bool(model.invertible),
        }
    if isinstance(model, StochasticMatrix):
        return {
            "kind": "markov_chain",
            "states": list(model.states),
            "P": [[float(x) for x in row] for row in model.matrix],
        }
    if isinstance(model, HarrisModel):
        return {
            "kind": "harris_discrete",
            "states": list(model.kernel.states),
            "K": [[float(x) for x in row] for row in model.kernel.matrix],
            "R": list(model.regen_indices),
            "ell": model.ell,
            "epsilon": float(model.epsilon),
            "lambda": [float(x) for x in model.lam],
        }
    raise UnknownKindError("cannot serialise %r" % type(model).__name__)


def model_size(model):
    if isinstance(model, FiniteSystem):
        return model.size
    if isinstance(model, StochasticMatrix):
        return model.n
    return model.n


def model_hash(model):
    """sha256 over the canonical model document."""
    from .report import canonical_json
    return hashlib.sha256(
        canonical_json(model_document(model)).encode("utf-8")).hexdigest()
