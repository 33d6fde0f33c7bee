"""``keb-lab`` command line interface.

Every command writes one report (JSON by default) that embeds its inputs, so
``keb-lab --verify report.json`` can recompute each FAILS verdict from the stored
witness. Reports are byte-identical for identical inputs, flags and seed; timings
are only included with ``--timings``.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np

from keb_lab.certificates import Certificate, Verdict
from keb_lab.channels import ChannelRep, FamilySpec, family_make
from keb_lab.errors import KebError, LimitExceededError, NumericGateError, SpecError
from keb_lab.keb import KebReport, keb_decide, keb_threshold, power_to_eb, verify_keb_refutation, verify_power_eb
from keb_lab.linalg import BipartiteOperator, ToleranceProfile, kron, partial_transpose
from keb_lab.majorization import conditional_majorization_check, keb_majorization_check
from keb_lab.positivity import is_cp, is_positive_map, is_ppt_map, verify_positivity_witness
from keb_lab.separability import reverify_refutation, sep_decide
from keb_lab.serialization import (
    SCHEMA,
    channel_from_spec,
    channel_to_spec,
    decode_complex,
    digest,
    dumps,
    fixture_path,
    load_json,
    state_from_dict,
    state_to_dict,
)
from keb_lab.twirl import (
    twirl_cone_membership,
    twirl_monte_carlo,
    twirl_product_coeffs,
    twirl_project,
)

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3

# evidence entries holding complex arrays, with their array rank
COMPLEX_KEYS = {"vector": 1, "u": 1, "w": 1, "witness": 2, "isometry_a": 2, "isometry_b": 2, "basis": 2}

ENV = {
    "tol_psd": ("KEB_LAB_TOL_PSD", float),
    "tol_sep": ("KEB_LAB_TOL_SEP", float),
    "restarts": ("KEB_LAB_RESTARTS", int),
    "samples": ("KEB_LAB_SAMPLES", int),
    "seed": ("KEB_LAB_SEED", int),
    "max_dim": ("KEB_LAB_MAX_DIM", int),
    "format": ("KEB_LAB_FORMAT", str),
}
DEFAULTS = {"tol_psd": 1e-9, "tol_sep": 1e-7, "restarts": 64, "samples": 100_000, "seed": 0, "max_dim": 6,
            "format": "json"}


class InputError(KebError):
    pass


# ------------------------------------------------------------------ options

def _settings(args: argparse.Namespace) -> dict:
    """Flag, then environment variable, then default."""
    out = {}
    for key, (var, cast) in ENV.items():
        val = getattr(args, key, None)
        if val is None and var in os.environ:
            try:
                val = cast(os.environ[var])
            except ValueError as exc:
                raise InputError(f"{var}={os.environ[var]!r} is not a valid {cast.__name__}") from exc
        out[key] = DEFAULTS[key] if val is None else val
    if out["format"] not in ("json", "csv", "text"):
        raise InputError(f"unknown format {out['format']!r}")
    if out["max_dim"] < 1:
        raise InputError("--max-dim must be positive")
    return out


def _profile(s: dict) -> ToleranceProfile:
    try:
        return ToleranceProfile(eps_psd=s["tol_psd"], eps_sep=s["tol_sep"], restarts=s["restarts"],
                                samples=s["samples"], seed=s["seed"])
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _check_dims(dims, max_dim: int) -> None:
    if max(dims) > max_dim:
        raise LimitExceededError(f"dimension {max(dims)} exceeds --max-dim {max_dim}")


def _load_channel(path: str, max_dim: int) -> tuple[ChannelRep, dict]:
    obj = load_json(path)
    _precheck_dims(obj, max_dim)
    phi = channel_from_spec(obj)
    _check_dims((phi.dim_in, phi.dim_out), max_dim)
    return phi, channel_to_spec(phi)


def _precheck_dims(obj: Any, max_dim: int) -> None:
    # refuse huge inputs before building any matrices
    if isinstance(obj, dict):
        for key in ("dim_in", "dim_out", "d", "dimA", "dimB"):
            v = obj.get(key)
            if isinstance(v, int) and not isinstance(v, bool) and v > max_dim:
                raise LimitExceededError(f"{key}={v} exceeds --max-dim {max_dim}")
        for v in obj.values():
            _precheck_dims(v, max_dim)


def _load_state(path: str | None, fixture: str | None, max_dim: int) -> tuple[BipartiteOperator, dict]:
    if fixture is not None:
        p = fixture_path(fixture if fixture.endswith(".json") else fixture + ".json")
        if not p.exists():
            raise InputError(f"no packaged fixture named {fixture!r}")
        path = str(p)
    if path is None:
        raise InputError("a state file or --fixture is required")
    obj = load_json(path)
    _precheck_dims(obj, max_dim)
    x = state_from_dict(obj)
    _check_dims(x.dims, max_dim)
    return x, state_to_dict(x)


# ------------------------------------------------------------------ records

def _complexify(ev: dict) -> dict:
    out = {}
    for key, val in ev.items():
        if isinstance(val, KebReport):
            out[key] = _keb_record(val, val.summary())
        elif key in COMPLEX_KEYS and val is not None:
            out[key] = np.asarray(val, dtype=complex)
        elif key == "psi_kraus":
            out[key] = [np.asarray(v, dtype=complex) for v in val]
        elif isinstance(val, dict):
            out[key] = _complexify(val)
        else:
            out[key] = val
    return out


def _cert_record(name: str, cert: Certificate, **extra) -> dict:
    rec = {"name": name, "verdict": cert.verdict, "method": cert.method, "flags": list(cert.flags),
           "evidence": _complexify(cert.evidence), **extra}
    if cert.decomposition is not None:
        from keb_lab.serialization import certificate_to_dict

        rec["decomposition"] = certificate_to_dict(cert).get("decomposition")
    return rec


def _keb_record(rep: KebReport, name: str | None = None) -> dict:
    return _cert_record(name or f"{rep.k}-EB", rep.verdict, k=rep.k, route=rep.route, details=_complexify(rep.details))


def _decode_evidence(ev: dict) -> dict:
    out = dict(ev)
    for key, ndim in COMPLEX_KEYS.items():
        if out.get(key) is not None:
            out[key] = decode_complex(out[key], ndim)
    return out


def _cert_from_record(rec: dict) -> Certificate:
    return Certificate(Verdict(rec["verdict"]), rec["method"], _decode_evidence(rec["evidence"]), list(rec["flags"]))


def _keb_from_record(rec: dict) -> KebReport:
    details = dict(rec.get("details", {}))
    if details.get("basis") is not None:
        details["basis"] = decode_complex(details["basis"])
    if "psi_kraus" in details:
        details["psi_kraus"] = [decode_complex(v) for v in details["psi_kraus"]]
    return KebReport(rec["k"], _cert_from_record(rec), rec["route"], details)


# ----------------------------------------------------------------- commands

def cmd_analyze(args, s, tol) -> dict:
    phi, spec = _load_channel(args.spec, s["max_dim"])
    k_max = phi.dim_in if args.k_max is None else min(args.k_max, phi.dim_in)
    verdicts = [
        _cert_record("positive", is_positive_map(phi, tol)),
        _cert_record("CP", is_cp(phi, tol)),
        _cert_record("PPT", is_ppt_map(phi, tol)),
    ]
    for k in range(1, k_max + 1):
        verdicts.append(_keb_record(keb_decide(phi, k, tol)))
    return {"inputs": {"channel": spec, "k_max": k_max}, "verdicts": verdicts}


def _k_range(text: str) -> list[int]:
    try:
        if "-" in text:
            lo, hi = (int(t) for t in text.split("-", 1))
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise InputError(f"bad k range {text!r}") from exc
    if lo < 1 or hi < lo:
        raise InputError(f"bad k range {text!r}")
    return list(range(lo, hi + 1))


def cmd_threshold(args, s, tol) -> dict:
    if args.family not in ("WernerHolevo", "PhiLambda"):
        raise InputError(f"family {args.family!r} has no lambda threshold")
    _check_dims((args.dim,), s["max_dim"])
    ks = _k_range(args.k or f"1-{args.dim}")
    rows, verdicts = [], []
    for k in ks:
        t = keb_threshold(args.family, k, args.dim)
        rows.append(t.to_dict())
        if args.probe is not None:
            for end in sorted({t.certified[0], t.certified[1], t.necessary[0]}):
                for lam in (end - args.probe, end + args.probe):
                    phi = family_make(FamilySpec(args.family, {"lambda": lam, "d": args.dim}))
                    rec = _keb_record(keb_decide(phi, k, tol), f"{k}-EB at lambda={lam!r}")
                    rec["lambda"] = lam
                    verdicts.append(rec)
    inputs = {"family": args.family, "d": args.dim, "k": ks, "probe": args.probe}
    return {"inputs": inputs, "rows": rows, "verdicts": verdicts}


def cmd_sep(args, s, tol) -> dict:
    x, state = _load_state(args.state, args.fixture, s["max_dim"])
    cert = sep_decide(x, tol)
    label = {Verdict.HOLDS: "SEPARABLE", Verdict.FAILS: "ENTANGLED", Verdict.UNKNOWN: "UNKNOWN"}[cert.verdict]
    return {"inputs": {"state": state}, "verdicts": [_cert_record("separable", cert, label=label)]}


def _parse_vector(text: str, d: int) -> np.ndarray:
    t = text.strip()
    if t.startswith("e") and t[1:].isdigit():
        i = int(t[1:])
        if not 1 <= i <= d:
            raise InputError(f"basis vector {t} outside dimension {d}")
        return np.eye(d, dtype=complex)[i - 1]
    try:
        vals = [complex(v.replace(" ", "")) for v in t.split(",")]
    except ValueError as exc:
        raise InputError(f"cannot parse vector {text!r}; use e1, e2, ... or comma separated numbers") from exc
    if len(vals) != d:
        raise InputError(f"vector {text!r} has length {len(vals)}, expected {d}")
    return np.array(vals)


def cmd_twirl(args, s, tol) -> dict:
    if args.product is not None:
        if args.dim is None:
            raise InputError("--product needs --dim")
        _check_dims((args.dim,), s["max_dim"])
        d = args.dim
        x, y = (_parse_vector(v, d) for v in args.product)
        if np.linalg.norm(x) == 0 or np.linalg.norm(y) == 0:
            raise InputError("product vectors must be nonzero")
        op = BipartiteOperator(kron(np.outer(x, x.conj()), np.outer(y, y.conj())), d, d)
        inputs = {"product": [x, y], "d": d}
    else:
        op, state = _load_state(args.state, args.fixture, s["max_dim"])
        inputs = {"state": state}
    proj, coeffs = twirl_project(op)
    mc = twirl_monte_carlo(op, tol.samples, tol.seed)
    out = {
        "coefficients": {"a": coeffs.a, "b": coeffs.b, "c": coeffs.c},
        "form": "a I + b |Omega><Omega| + c Delta with independent b and c",
        "monte_carlo": {"samples": tol.samples, "frobenius_gap": float(np.linalg.norm(mc.matrix - proj.matrix))},
    }
    if args.product is not None:
        closed = twirl_product_coeffs(x / np.linalg.norm(x), y / np.linalg.norm(y), args.dim)
        scale = np.linalg.norm(x) ** 2 * np.linalg.norm(y) ** 2
        out["closed_form_gap"] = float(np.abs(np.array(closed.as_tuple()) * scale - coeffs.as_tuple()).max())
    cone = twirl_cone_membership(coeffs, op.dim_a, tol=tol)
    return {"inputs": inputs, **out, "verdicts": [_cert_record("twirl cone", cone)]}


def cmd_majorize(args, s, tol) -> dict:
    phi, spec = _load_channel(args.spec, s["max_dim"])
    cert = keb_majorization_check(phi, args.k, tol)
    verdicts = [_cert_record(f"{args.k}-EB majorization", cert, k=args.k)]
    if is_cp(phi, tol).holds:
        verdicts.append(_cert_record("conditional majorization", conditional_majorization_check(phi.choi, args.k, tol)))
    return {"inputs": {"channel": spec, "k": args.k}, "verdicts": verdicts}


def cmd_power(args, s, tol) -> dict:
    phi, spec = _load_channel(args.spec, s["max_dim"])
    m, ev = power_to_eb(phi, args.k, tol)
    cert = verify_power_eb(phi, m, tol)
    return {"inputs": {"channel": spec, "k": args.k}, "power": m, "bound": ev,
            "verdicts": [_cert_record(f"power {m} is EB", cert, power=m)]}


COMMANDS: dict[str, Callable] = {
    "analyze": cmd_analyze,
    "threshold": cmd_threshold,
    "sep": cmd_sep,
    "twirl": cmd_twirl,
    "majorize": cmd_majorize,
    "power": cmd_power,
}


# ------------------------------------------------------------------- replay

def _replay_one(rec: dict, report: dict, tol: ToleranceProfile) -> tuple[bool | None, str]:
    """``(ok, note)``; ``ok`` is None when the verdict carries nothing numeric to replay."""
    inputs = report["inputs"]
    ev = rec["evidence"]
    name = rec["name"]
    if "route" in rec:
        phi = channel_from_spec(inputs["channel"]) if "channel" in inputs else family_make(
            FamilySpec(inputs["family"], {"lambda": rec["lambda"], "d": inputs["d"]}))
        rep = _keb_from_record(rec)
        if rep.route in ("ProjectionWitness", "CompositionWitness") or (rep.route == "PrincipalBlock"
                                                                          and ev.get("kind") != "analytic"):
            return verify_keb_refutation(phi, rep, tol), rep.route
        if rep.route == "Positivity" and ev.get("kind") == "input_witness":
            return verify_positivity_witness(phi, _cert_from_record(rec), tol), "input witness"
        wit = rec.get("details", {}).get("witness")
        if wit is not None:
            return verify_keb_refutation(phi, _keb_from_record(wit), tol), "attached " + wit["route"]
        return None, "analytic verdict"
    cert = _cert_from_record(rec)
    if name == "positive":
        if ev.get("kind") != "input_witness":
            return None, "analytic verdict"
        return verify_positivity_witness(channel_from_spec(inputs["channel"]), cert, tol), "input witness"
    if name in ("CP", "PPT"):
        phi = channel_from_spec(inputs["channel"])
        m = phi.choi.matrix if ev.get("operator") is None else partial_transpose(phi.choi, "second").matrix
        v = cert.evidence["vector"]
        return float(np.real(np.vdot(v, m @ v))) / np.vdot(v, v).real < -tol.eps_psd, "eigenvector"
    if name == "separable":
        return reverify_refutation(state_from_dict(inputs["state"]), cert, tol), cert.method
    if name == "twirl cone":
        return None, "cone verdict follows from the stored coefficients"
    return None, "no replay rule"


def cmd_verify(path: str, tol: ToleranceProfile) -> tuple[dict, int]:
    report = load_json(path)
    if not isinstance(report, dict) or report.get("schema") != SCHEMA:
        raise SpecError(f"not a {SCHEMA} report")
    if "inputs" not in report or "verdicts" not in report:
        raise SpecError("report lacks inputs or verdicts")
    results, bad = [], 0
    for rec in report["verdicts"]:
        if rec.get("verdict") != "FAILS":
            continue
        ok, note = _replay_one(rec, report, tol)
        ok = None if ok is None else bool(ok)
        if ok is False:
            bad += 1
        results.append({"name": rec["name"], "replayed": ok is not None, "ok": ok, "note": note})
    out = {"command": "verify", "report": report.get("inputsDigest"), "replays": results,
           "all_ok": bad == 0}
    return out, EXIT_OK if bad == 0 else EXIT_NUMERIC


# ------------------------------------------------------------------ output

def _csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "rows" in report:
        w.writerow(["family", "d", "k", "certified_lo", "certified_hi", "necessary_lo", "necessary_hi",
                    "gap_lo", "gap_hi", "status"])
        for r in report["rows"]:
            gap = r["gap"] or ["", ""]
            w.writerow([r["family"], r["d"], r["k"], *map(repr, r["certified"]), *map(repr, r["necessary"]),
                        *(repr(g) if g != "" else "" for g in gap), "exact" if r["exact"] else "gap"])
        return buf.getvalue()
    if "replays" in report:
        w.writerow(["name", "replayed", "ok", "note"])
        for r in report["replays"]:
            w.writerow([r["name"], r["replayed"], r["ok"], r["note"]])
        return buf.getvalue()
    w.writerow(["name", "verdict", "method", "route"])
    for v in report["verdicts"]:
        w.writerow([v["name"], v["verdict"], v["method"], v.get("route", "")])
    return buf.getvalue()


def _text(report: dict) -> str:
    lines = [f"keb-lab {report['command']}"]
    if "inputsDigest" in report:
        lines.append(f"inputs {report['inputsDigest']}")
    for r in report.get("rows", []):
        gap = "" if r["exact"] else f"  gap [{r['gap'][0]:.6g}, {r['gap'][1]:.6g})"
        lines.append(f"{r['family']} d={r['d']} k={r['k']}: certified [{r['certified'][0]:.6g}, "
                     f"{r['certified'][1]:.6g}], necessary [{r['necessary'][0]:.6g}, {r['necessary'][1]:.6g}]{gap}")
    for key in ("coefficients", "monte_carlo", "power"):
        if key in report:
            lines.append(f"{key}: {report[key]}")
    for v in report.get("verdicts", []):
        route = f" via {v['route']}" if "route" in v else ""
        note = v["evidence"].get("note")
        lines.append(f"{v['name']}: {v.get('label', v['verdict'])}{route} ({v['method']})" + (f"  [{note}]" if note else ""))
    for r in report.get("replays", []):
        lines.append(f"{r['name']}: {'skipped' if not r['replayed'] else ('ok' if r['ok'] else 'MISMATCH')} ({r['note']})")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report) + "\n"
    return _csv(report) if fmt == "csv" else _text(report)


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-psd", type=float, default=None, help="PSD tolerance (KEB_LAB_TOL_PSD)")
    common.add_argument("--tol-sep", type=float, default=None, help="separability residual (KEB_LAB_TOL_SEP)")
    common.add_argument("--restarts", type=int, default=None, help="search restarts (KEB_LAB_RESTARTS)")
    common.add_argument("--samples", type=int, default=None, help="Monte Carlo samples (KEB_LAB_SAMPLES)")
    common.add_argument("--seed", type=int, default=None, help="random seed (KEB_LAB_SEED)")
    common.add_argument("--max-dim", type=int, default=None, help="largest accepted dimension (KEB_LAB_MAX_DIM)")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None, help="output format (KEB_LAB_FORMAT)")
    common.add_argument("--output", "-o", default=None, help="write the report to a file instead of stdout")
    common.add_argument("--timings", action="store_true", help="include per-step milliseconds (breaks byte identity)")

    p = argparse.ArgumentParser(prog="keb-lab", parents=[common],
                                description="k-entanglement-breaking maps: certify, refute, reproduce thresholds.")
    p.add_argument("--verify", metavar="REPORT", default=None, help="replay every FAILS verdict of a saved report")
    sub = p.add_subparsers(dest="command")

    a = sub.add_parser("analyze", parents=[common], help="positivity, CP, PPT and k-EB for k = 1..d")
    a.add_argument("spec", help="channel spec JSON")
    a.add_argument("--k-max", type=int, default=None)

    t = sub.add_parser("threshold", parents=[common], help="lambda intervals of a parametric family")
    t.add_argument("family", help="WernerHolevo or PhiLambda")
    t.add_argument("--dim", "-d", type=int, required=True)
    t.add_argument("--k", default=None, help="k or a range like 1-4 (default 1-d)")
    t.add_argument("--probe", type=float, default=None, metavar="EPS", help="decide k-EB at interval ends +- EPS")

    sp = sub.add_parser("sep", parents=[common], help="separability of a state fixture")
    sp.add_argument("state", nargs="?", default=None)
    sp.add_argument("--fixture", default=None, help="name of a packaged fixture")

    tw = sub.add_parser("twirl", parents=[common], help="orthogonal twirl of a state or a product")
    tw.add_argument("state", nargs="?", default=None)
    tw.add_argument("--fixture", default=None)
    tw.add_argument("--product", nargs=2, metavar=("X", "Y"), default=None, help="vectors like e1 or 1,0,1j")
    tw.add_argument("--dim", type=int, default=None)

    mj = sub.add_parser("majorize", parents=[common], help="spectral majorization check for a k-EB map")
    mj.add_argument("spec")
    mj.add_argument("--k", type=int, required=True)

    pw = sub.add_parser("power", parents=[common], help="power of a k-EB map that is entanglement breaking")
    pw.add_argument("spec")
    pw.add_argument("--k", type=int, required=True)
    return p


def _merge_globals(args: argparse.Namespace, argv: list[str]) -> None:
    # options given before the subcommand are overwritten by the subparser defaults; restore them
    pre = build_parser().parse_known_args(argv[: _command_index(argv)])[0] if _command_index(argv) else None
    if pre is None:
        return
    for key in ("tol_psd", "tol_sep", "restarts", "samples", "seed", "max_dim", "format", "output"):
        if getattr(args, key, None) is None and getattr(pre, key, None) is not None:
            setattr(args, key, getattr(pre, key))
    args.timings = args.timings or pre.timings


def _command_index(argv: list[str]) -> int:
    for i, tok in enumerate(argv):
        if tok in COMMANDS:
            return i
    return 0


def run(argv: list[str] | None = None) -> tuple[str, int, str | None]:
    """Execute and return ``(rendered report, exit code, output path)``."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    _merge_globals(args, argv)
    s = _settings(args)
    tol = _profile(s)
    if args.verify is not None:
        if args.command is not None:
            raise InputError("--verify takes no command")
        report, code = cmd_verify(args.verify, tol)
        report = {"schema": SCHEMA, **report}
        return render(report, s["format"]), code, args.output
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise InputError("a command is required")
    t0 = time.perf_counter()
    body = COMMANDS[args.command](args, s, tol)
    elapsed = (time.perf_counter() - t0) * 1e3
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "inputsDigest": digest(args.command, dumps(body["inputs"])),
        **body,
        "toleranceProfile": tol.to_dict(),
    }
    if args.timings:
        report["timings"] = {args.command: elapsed}
    return render(report, s["format"]), EXIT_OK, args.output


def main(argv: list[str] | None = None) -> int:
    try:
        text, code, out = run(argv)
    except LimitExceededError as exc:
        print(f"keb-lab: limit exceeded: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except NumericGateError as exc:
        print(f"keb-lab: numeric gate failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KebError, ValueError, OSError) as exc:
        print(f"keb-lab: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    if out is not None:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
