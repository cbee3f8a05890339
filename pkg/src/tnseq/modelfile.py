"""Text serialization of models.

A model file is a UTF-8 JSON object whose first key is ``model_type``.
Every numeric parameter is stored as a nested list whose leaves are
``[re, im]`` pairs, written with 17 significant digits so that parsing the
output reproduces every finite double bit for bit.

Example (abridged)::

    {
      "model_type": "hmm",
      "format_version": "1",
      "obs_count": 2,
      "dims": {"state": 2},
      "params": {
        "transition": [[[0.5, 0.0], ...]],
        ...
      }
    }
"""

import json
import math

import numpy as np

from .controlled import CONTROLLED_TYPES
from .errors import ModelFileError, TnseqError
from .models import MODEL_TYPES, KrausSet, model_kind

FORMAT_VERSION = "1"

# field name -> encoding, in serialization order
_FIELDS = {
    "umps": (("sigma", "array"), ("cores", "array"), ("rho0", "array")),
    "mps_chain": (("sites", "array_list"),),
    "psr": (("sigma", "array"), ("ops", "array"), ("x0", "array")),
    "hmm": (("transition", "array"), ("emission", "array"), ("x0", "array")),
    "ubm": (("alpha", "array"), ("cores", "array"), ("omega0", "array")),
    "noom": (("phis", "array"), ("psi0", "array")),
    "hqmm": (("kraus", "kraus_list"), ("rho0", "array")),
    "ulps": (("left_kraus", "kraus"), ("core_kraus", "kraus_list"), ("right_kraus", "kraus")),
    "pomdp": (("transitions", "array"), ("emissions", "array"), ("x0", "array")),
    "io_hqmm": (("kraus", "kraus_grid"), ("rho0", "array")),
    "qomdp": (("kraus", "array"), ("rho0", "array")),
}

ALL_TYPES = {**MODEL_TYPES, **CONTROLLED_TYPES}


# --------------------------------------------------------------------------
# encoding


def _float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ModelFileError(f"non-finite value {x!r} cannot be serialized")
    s = format(x, ".17g")
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _complex_tree(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [_complex_tree(x) for x in a]


def _encode(value, how):
    if how == "array":
        return _complex_tree(value)
    if how == "array_list":
        return [_complex_tree(v) for v in value]
    if how == "kraus":
        return _complex_tree(value.ops)
    if how == "kraus_list":
        return [_complex_tree(ks.ops) for ks in value]
    if how == "kraus_grid":
        return [[_complex_tree(ks.ops) for ks in row] for row in value]
    raise AssertionError(how)


def _dims(model, kind):
    if kind == "mps_chain":
        return {"bonds": [int(s.shape[2]) for s in model.sites] + [1]}
    if kind in ("umps", "ubm", "ulps"):
        return {"bond": int(model.bond_dim)}
    if kind == "noom":
        return {"state": int(model.dim)}
    if kind == "psr":
        return {"state": int(model.ops.shape[1])}
    return {"state": int(model.state_dim)}


def _obs_count(model, kind):
    if kind == "mps_chain":
        return [int(k) for k in model.obs_counts]
    return int(model.obs_count)


def _dump(obj, indent=0):
    if isinstance(obj, dict):
        pad = "  " * (indent + 1)
        body = ",\n".join(f"{pad}{json.dumps(k)}: {_dump(v, indent + 1)}" for k, v in obj.items())
        return "{\n" + body + "\n" + "  " * indent + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(_dump(v, indent) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    return json.dumps(obj)


def dumps(model):
    """Serialize ``model`` to model-file text (ends with a newline)."""
    kind = model_kind(model)
    doc = {"model_type": kind, "format_version": FORMAT_VERSION, "obs_count": _obs_count(model, kind)}
    doc["dims"] = _dims(model, kind)
    if kind in CONTROLLED_TYPES:
        doc["action_count"] = int(model.action_count)
    doc["params"] = {name: _encode(getattr(model, name), how) for name, how in _FIELDS[kind]}
    return _dump(doc) + "\n"


def dump(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


# --------------------------------------------------------------------------
# decoding


def _complex_array(tree, name):
    try:
        a = np.asarray(tree, dtype=float)
    except (TypeError, ValueError):
        raise ModelFileError(f"{name}: ragged or non-numeric array") from None
    if a.ndim == 0 or a.shape[-1] != 2:
        raise ModelFileError(f"{name}: leaves must be [re, im] pairs")
    out = np.empty(a.shape[:-1], dtype=complex)
    out.real, out.imag = a[..., 0], a[..., 1]  # arithmetic would lose the sign of -0.0
    return out


def _decode(tree, how, name):
    if how == "array":
        return _complex_array(tree, name)
    if not isinstance(tree, list):
        raise ModelFileError(f"{name}: expected a list")
    if how == "array_list":
        return tuple(_complex_array(t, f"{name}[{i}]") for i, t in enumerate(tree))
    if how == "kraus":
        return KrausSet(_complex_array(tree, name))
    if how == "kraus_list":
        return tuple(KrausSet(_complex_array(t, f"{name}[{i}]")) for i, t in enumerate(tree))
    if how == "kraus_grid":
        if not all(isinstance(row, list) for row in tree):
            raise ModelFileError(f"{name}: expected a list of lists")
        return tuple(tuple(KrausSet(_complex_array(t, f"{name}[{a}][{y}]")) for y, t in enumerate(row))
                     for a, row in enumerate(tree))
    raise AssertionError(how)


def loads(text):
    """Parse model-file text; raises :class:`~tnseq.errors.ModelFileError`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFileError("top level must be an object")
    kind = doc.get("model_type")
    if kind not in _FIELDS:
        raise ModelFileError(f"unknown model_type {kind!r}")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFileError(f"unsupported format_version {doc.get('format_version')!r}")
    params = doc.get("params")
    if not isinstance(params, dict):
        raise ModelFileError("missing params object")
    missing = [n for n, _ in _FIELDS[kind] if n not in params]
    if missing:
        raise ModelFileError(f"missing parameters: {', '.join(missing)}")
    try:
        values = {n: _decode(params[n], how, n) for n, how in _FIELDS[kind]}
        model = ALL_TYPES[kind](**values)
    except (TnseqError, ValueError) as exc:
        raise ModelFileError(f"{kind}: {exc}") from None
    for key, actual in (("obs_count", _obs_count(model, kind)), ("dims", _dims(model, kind))):
        if key in doc and doc[key] != actual:
            raise ModelFileError(f"{key} {doc[key]!r} disagrees with the parameters ({actual!r})")
    if kind in CONTROLLED_TYPES and doc.get("action_count", model.action_count) != model.action_count:
        raise ModelFileError("action_count disagrees with the parameters")
    return model


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def models_identical(a, b):
    """Bitwise equality of two models of the same kind."""
    if type(a) is not type(b):
        return False
    return dumps(a) == dumps(b) and _bits(a) == _bits(b)


def _bits(model):
    out = []
    for name, how in _FIELDS[model_kind(model)]:
        v = getattr(model, name)
        if how == "array":
            out.append(np.asarray(v).tobytes())
        elif how == "array_list":
            out.extend(x.tobytes() for x in v)
        elif how == "kraus":
            out.append(v.ops.tobytes())
        elif how == "kraus_list":
            out.extend(ks.ops.tobytes() for ks in v)
        else:
            out.extend(ks.ops.tobytes() for row in v for ks in row)
    return out

