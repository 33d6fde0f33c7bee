"""JSON encoding for matrices, channel specs, state fixtures and certificates.

Complex entries are ``[re, im]`` pairs and matrices are lists of rows. Floats are
written with ``repr``, which is the shortest decimal that round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from keb_lab.channels import FAMILY_NAMES, ChannelRep, FamilySpec, family_make
from keb_lab.errors import KebError, SpecError
from keb_lab.linalg import BipartiteOperator

SCHEMA = "keb-lab/1"


def encode_complex(a) -> Any:
    """Nested lists with ``[re, im]`` leaves."""
    a = np.asarray(a)
    if a.ndim == 0:
        z = complex(a)
        return [float(z.real), float(z.imag)]
    return [encode_complex(row) for row in a]


def decode_complex(obj, ndim: int = 2) -> np.ndarray:
    """Inverse of :func:`encode_complex`. A flat list of ``n*n`` pairs is reshaped row-major."""
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError("matrix entries must be [re, im] pairs") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise SpecError("matrix entries must be [re, im] pairs")
    z = arr[..., 0] + 1j * arr[..., 1]
    if z.ndim == 1 and ndim == 2:
        n = int(round(np.sqrt(z.size)))
        if n * n != z.size:
            raise SpecError("flat matrix length is not a perfect square")
        z = z.reshape(n, n)
    if z.ndim != ndim:
        raise SpecError(f"expected a {ndim}-dimensional array of [re, im] pairs")
    return z


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy and package objects to plain JSON values."""
    from keb_lab.certificates import Certificate

    if isinstance(obj, Certificate):
        return certificate_to_dict(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_complex(obj)
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, BipartiteOperator):
        return state_to_dict(obj)
    if isinstance(obj, ChannelRep):
        return channel_to_spec(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed separators)."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from exc


def load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)


def digest(*texts: str) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
        h.update(b"\0")
    return "sha256:" + h.hexdigest()


# ------------------------------------------------------------------ states

def state_to_dict(x: BipartiteOperator, **meta) -> dict:
    return {"dimA": x.dim_a, "dimB": x.dim_b, "matrix": encode_complex(x.matrix), **meta}


def state_from_dict(obj: dict) -> BipartiteOperator:
    if not isinstance(obj, dict):
        raise SpecError("state fixture must be a JSON object")
    for key in ("dimA", "dimB", "matrix"):
        if key not in obj:
            raise SpecError(f"state fixture lacks {key!r}")
    da, db = obj["dimA"], obj["dimB"]
    if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in (da, db)):
        raise SpecError("dimA and dimB must be positive integers")
    m = decode_complex(obj["matrix"])
    try:
        return BipartiteOperator(m, da, db)
    except KebError as exc:
        raise SpecError(str(exc)) from exc


def load_state(path: str | Path) -> tuple[BipartiteOperator, dict]:
    obj = load_json(path)
    return state_from_dict(obj), {k: v for k, v in obj.items() if k not in ("dimA", "dimB", "matrix")}


def fixture_path(name: str) -> Path:
    return Path(__file__).parent / "fixtures" / name


# ---------------------------------------------------------------- channels

def _family_params_to_json(spec: FamilySpec) -> dict:
    out = {}
    for k, v in spec.params.items():
        if isinstance(v, ChannelRep):
            out[k] = channel_to_spec(v)
        elif isinstance(v, np.ndarray):
            out[k] = encode_complex(v)
        else:
            out[k] = v
    return out


def channel_to_spec(phi: ChannelRep) -> dict:
    """Channel spec JSON: ``{"dim_in", "dim_out", "body": {"family"|"kraus"|"choi": ...}}``."""
    kind = phi.body_kind
    if kind == "family":
        body = {"family": {"name": phi.family.name, "params": _family_params_to_json(phi.family)}}
    elif kind == "kraus":
        body = {"kraus": [encode_complex(v) for v in phi.kraus()]}
    else:
        body = {"choi": encode_complex(phi.choi.matrix)}
    return {"dim_in": phi.dim_in, "dim_out": phi.dim_out, "body": body}


def _family_from_json(fam: dict) -> ChannelRep:
    if not isinstance(fam, dict) or "name" not in fam:
        raise SpecError("family body needs a name")
    name = fam["name"]
    if name not in FAMILY_NAMES:
        raise SpecError(f"unknown family {name!r}")
    params = dict(fam.get("params", {}))
    for key in ("gamma", "first", "second"):
        if key in params:
            params[key] = channel_from_spec(params[key])
    for key in ("A", "V"):
        if key in params:
            params[key] = decode_complex(params[key])
    try:
        return family_make(FamilySpec(name, params))
    except (KebError, TypeError, ValueError) as exc:
        raise SpecError(f"invalid {name} parameters: {exc}") from exc


def channel_from_spec(obj: dict) -> ChannelRep:
    if not isinstance(obj, dict) or "body" not in obj:
        raise SpecError("channel spec must be an object with a 'body'")
    body = obj["body"]
    if not isinstance(body, dict) or len(body) != 1:
        raise SpecError("body must have exactly one of 'kraus', 'choi', 'family'")
    (kind, val), = body.items()
    if kind == "family":
        phi = _family_from_json(val)
    else:
        d1, d2 = obj.get("dim_in"), obj.get("dim_out")
        if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in (d1, d2)):
            raise SpecError("dim_in and dim_out must be positive integers")
        try:
            if kind == "kraus":
                if not isinstance(val, list) or not val:
                    raise SpecError("kraus must be a nonempty list of matrices")
                phi = ChannelRep(d1, d2, kraus=[decode_complex(v) for v in val])
            elif kind == "choi":
                phi = ChannelRep(d1, d2, choi=decode_complex(val))
            else:
                raise SpecError(f"unknown body kind {kind!r}")
        except SpecError:
            raise
        except KebError as exc:
            raise SpecError(str(exc)) from exc
    for key, want in (("dim_in", phi.dim_in), ("dim_out", phi.dim_out)):
        if key in obj and obj[key] != want:
            raise SpecError(f"{key}={obj[key]} disagrees with the body ({want})")
    return phi


def load_channel(path: str | Path) -> ChannelRep:
    return channel_from_spec(load_json(path))


# ------------------------------------------------------------ certificates

def certificate_to_dict(cert) -> dict:
    out = {"verdict": cert.verdict.value, "method": cert.method, "evidence": to_jsonable(cert.evidence),
           "flags": list(cert.flags)}
    dec = cert.decomposition
    if dec is not None and hasattr(dec, "terms"):
        out["decomposition"] = {
            "terms": [[encode_complex(a), encode_complex(b)] for a, b in dec.terms],
            "residual": dec.residual,
            "twirl": None if dec.twirl is None else {
                "trace": dec.twirl.trace,
                "weights": dec.twirl.weights.tolist(),
                "pairs": [[encode_complex(x), encode_complex(y)] for x, y in dec.twirl.pairs],
            },
        }
    return out
