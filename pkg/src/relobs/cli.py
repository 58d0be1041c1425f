"""Command-line front end.

Every subcommand writes one report (JSON by default) to stdout or ``-o``.  Reports
are deterministic: keys are sorted, floats are rounded to ten significant digits
and wall-clock timing appears only with ``--timing``.  Failures print a JSON
object on stderr and exit with 2 (usage or parse), 3 (model invariant) or 4
(numerical failure).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .algebra import AlgebraError, ParticleSystem
from .errors import ModelError, NumericalError, RelobsError, UsageError
from .expr import ExpressionError, format_poly, parse_and_lower
from .reduction import (CMPositionDependence, FrameMapError, LinearFrameMap, apply_frame_map,
                        internal_vectors, jacobi_map, project_cm, rotational_invariant_basis)
from .spectral import (GridModel, HarmonicModel, bo_solve, cm_ladder_scaling,
                       full_grid_spectrum, normal_modes, reduced_grid_spectrum,
                       remove_acoustic_modes, spectral_function)
from .spectral.phonons import acoustic_mask
from .symmetry import InconsistentRotationCheck, SymmetrySelection, classify

SIG_DIGITS = 10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- input helpers

def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from exc


def _load_system(path: str) -> tuple[ParticleSystem, dict]:
    doc = _load_json(path)
    try:
        masses = tuple(Fraction(str(m)) for m in doc["masses"])
        return ParticleSystem(masses, int(doc.get("d", 3))), doc
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"malformed system document: {exc}") from exc


def _load_map(spec: str, system: ParticleSystem) -> tuple[LinearFrameMap, object]:
    if spec == "jacobi":
        try:
            return jacobi_map(system), "jacobi"
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    doc = _load_json(spec)
    try:
        fmap = LinearFrameMap.from_json(doc, system.d)
    except FrameMapError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"malformed frame map: {exc}") from exc
    if fmap.system.masses != system.masses:
        raise ModelError("frame map masses differ from the system masses")
    return fmap, doc


def _numbers(text: str, name: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--{name} expects comma-separated numbers") from exc
    if not values:
        raise UsageError(f"--{name} is empty")
    return values


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a rational number: {text!r}") from exc


# ---------------------------------------------------------------- output helpers

def _clean(value):
    """Round floats and convert numpy scalars so JSON output is stable."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if not math.isfinite(x):
            return str(x)
        x = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if x == 0 else x
    if isinstance(value, Fraction):
        return str(value)
    return value


def _round(x) -> str:
    x = float(x)
    return "0" if x == 0 else f"{x:.{SIG_DIGITS}g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_round(c) if isinstance(c, (float, np.floating)) else c for c in row])
    return buf.getvalue()


def _input_hash(args, documents) -> str:
    payload = json.dumps({"options": _echo(args), "inputs": documents}, sort_keys=True,
                         default=str, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()


_FILE_OPTIONS = ("system", "model")
_SKIP = ("func", "output", "format", "timing", "command")


def _echo(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in _SKIP:
            continue
        if key in _FILE_OPTIONS or (key == "map" and value != "jacobi"):
            value = os.path.basename(value)
        out[key] = value
    return out


def _report(args, documents, payload: dict, started: float) -> dict:
    report = {
        "command": args.command,
        "options": _echo(args),
        "inputHash": _input_hash(args, documents),
        "version": __version__,
        **payload,
    }
    if args.timing:
        report["timingSeconds"] = time.perf_counter() - started
    return report


def _emit(args, report: dict, csv_text: str | None):
    fmt = args.format
    if fmt == "csv":
        if csv_text is None:
            raise UsageError(f"{args.command} has no CSV output")
        text = csv_text
    else:
        text = json.dumps(_clean(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_classify(args):
    system, doc = _load_system(args.system)
    op = parse_and_lower(args.expr, system)
    selection = SymmetrySelection(rotations=not args.no_rotations)
    try:
        selection.validate(system)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    verdict = classify(op, system, selection)
    payload = {
        "expression": format_poly(op),
        "isPhysical": verdict.is_physical,
        "perGenerator": {name: {"invariant": r.invariant, "residual": format_poly(r.residual)}
                         for name, r in verdict.per_generator.items()},
    }
    return [doc], payload, None


def cmd_reduce(args):
    system, doc = _load_system(args.system)
    fmap, map_doc = _load_map(args.map, system)
    op = parse_and_lower(args.expr, system)
    reduced = apply_frame_map(op, fmap)
    payload = {
        "frameMap": fmap.to_json(),
        "transformed": format_poly(reduced.expression),
        "cmDependence": reduced.cm_dependence,
        "cmIndex": fmap.cm_index,
    }
    q = [Fraction(0)] * system.d
    if args.sector_momentum is not None:
        q[0] = _rational(args.sector_momentum)
    if reduced.cm_dependence in ("positionDependent", "both"):
        payload["projected"] = None
        payload["note"] = "operator depends on the centre-of-mass position; no projection"
    else:
        projected = project_cm(reduced, q)
        payload["projected"] = format_poly(projected)
        payload["note"] = f"P_cm -> ({', '.join(str(x) for x in q)}) applied"
    return [doc, map_doc], payload, None


def cmd_invariants(args):
    system, doc = _load_system(args.system)
    if system.d != 3:
        raise UsageError("rotational invariants are listed for d = 3 systems")
    try:
        fmap = jacobi_map(system)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    vectors = internal_vectors(fmap)
    basis = rotational_invariant_basis(system, vectors, args.degree)
    labels = []
    idx = fmap.internal_indices
    for a in range(len(idx)):
        for b in range(a, len(idx)):
            labels.append(f"dot(z[{idx[a]}], z[{idx[b]}])")
    if args.degree == 3:
        from itertools import combinations
        for a, b, c in combinations(idx, 3):
            labels.append(f"dot(z[{a}], cross(z[{b}], z[{c}]))")
    payload = {
        "frameMap": fmap.to_json(),
        "degree": args.degree,
        "basis": [{"label": lab, "expression": format_poly(el)} for lab, el in zip(labels, basis)],
    }
    rows = [[b["label"], b["expression"]] for b in payload["basis"]]
    return [doc], payload, _csv(["label", "expression"], rows)


def cmd_modes(args):
    doc = _load_json(args.model)
    model = HarmonicModel.from_json(doc)
    freqs, vecs = normal_modes(model)
    acoustic = acoustic_mask(freqs)
    kept = remove_acoustic_modes(freqs)
    payload = {
        "asrSatisfied": model.asr_satisfied,
        "frequencies": freqs,
        "kinds": ["acoustic" if a else "optical" for a in acoustic],
        "zeroModeCount": int(acoustic.sum()),
        "reducedFrequencies": kept,
    }
    rows = [[i, float(w), "acoustic" if a else "optical"] for i, (w, a) in enumerate(zip(freqs, acoustic))]
    return [doc], payload, _csv(["index", "omega", "kind"], rows)


def _grid_model(path: str):
    doc = _load_json(path)
    return GridModel.from_json(doc), doc


def cmd_spectrum(args):
    model, doc = _grid_model(args.model)
    count = model.count if args.count is None else args.count
    if count < 1:
        raise UsageError("--count must be positive")
    if args.variant == "full":
        res = full_grid_spectrum(model, args.sector, count)
    else:
        res = reduced_grid_spectrum(model, count)
    payload = {
        "sector": res.sector,
        "eigenvalues": res.eigenvalues,
        "gaps": res.gaps(),
        "metadata": {**res.metadata, "model": model.to_json()},
    }
    rows = [[i, float(e)] for i, e in enumerate(res.eigenvalues)]
    return [doc], payload, _csv(["index", "energy"], rows)


def cmd_scaling(args):
    model, doc = _grid_model(args.model)
    fit = cm_ladder_scaling(model, _numbers(args.lengths, "lengths"))
    payload = {"fit": fit, "model": model.to_json()}
    rows = [[L, c, g] for L, c, g in zip(fit["lengths"], fit["cm_spacing"], fit["internal_gap"])]
    return [doc], payload, _csv(["L", "cm_spacing", "internal_gap"], rows)


def cmd_bo(args):
    model, doc = _grid_model(args.model)
    rows = []
    for ratio in _numbers(args.mass_ratios, "mass-ratios"):
        if not ratio > 0:
            raise UsageError("mass ratios must be positive")
        res = bo_solve(model, ratio)
        rows.append({
            "massRatio": ratio,
            "boGround": float(res.nuclear_levels[0]),
            "exactGround": float(res.exact_levels[0]),
            "absError": res.ground_error,
            "relError": res.relative_error,
            "nuclearLevels": res.nuclear_levels,
            "exactLevels": res.exact_levels,
            "surfaceMinimum": float(np.min(res.surface)),
            "sGrid": res.metadata["sGrid"],
        })
    payload = {"rows": rows, "model": model.to_json()}
    table = [[r["massRatio"], r["boGround"], r["exactGround"], r["absError"], r["relError"]] for r in rows]
    return [doc], payload, _csv(["mass_ratio", "bo_ground", "exact_ground", "abs_error", "rel_error"], table)


def cmd_spectral_function(args):
    model, doc = _grid_model(args.model)
    sf = spectral_function(model, args.variant, args.probe, args.eta, args.omega_max)
    payload = {
        "variant": sf.variant,
        "probe": sf.probe,
        "eta": sf.eta,
        "omega": sf.omega,
        "A": sf.values,
        "poles": sf.poles,
        "weights": sf.weights,
        "totalWeight": sf.total_weight,
        "integral": sf.integral(),
        "metadata": sf.metadata,
    }
    rows = [[float(w), float(a)] for w, a in zip(sf.omega, sf.values)]
    return [doc], payload, _csv(["omega", "A"], rows)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relobs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"relobs {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_text, default_format="json"):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--format", choices=("json", "csv"), default=default_format)
        p.add_argument("-o", "--output", help="write the report here instead of stdout")
        p.add_argument("--timing", action="store_true", help="include wall-clock seconds in JSON")
        return p

    p = add("classify", cmd_classify, "decide whether an operator is a physical observable")
    p.add_argument("--system", required=True)
    p.add_argument("--expr", required=True)
    p.add_argument("--no-rotations", action="store_true")

    p = add("reduce", cmd_reduce, "rewrite an operator in centre-of-mass frame coordinates")
    p.add_argument("--system", required=True)
    p.add_argument("--map", default="jacobi", help="'jacobi' or a frame-map JSON file")
    p.add_argument("--expr", required=True)
    p.add_argument("--sector-momentum", help="x component of the fixed total momentum (rational)")

    p = add("invariants", cmd_invariants, "list rotational invariants of the internal vectors")
    p.add_argument("--system", required=True)
    p.add_argument("--degree", type=int, choices=(2, 3), default=2)

    p = add("modes", cmd_modes, "normal modes of a harmonic chain")
    p.add_argument("--model", required=True)

    p = add("spectrum", cmd_spectrum, "grid spectrum of a one-dimensional few-body model")
    p.add_argument("--model", required=True)
    p.add_argument("--variant", choices=("full", "reduced"), default="reduced")
    p.add_argument("--sector", type=int, default=0)
    p.add_argument("--count", type=int)

    p = add("scaling", cmd_scaling, "box-size scaling of the centre-of-mass ladder")
    p.add_argument("--model", required=True)
    p.add_argument("--lengths", required=True)

    p = add("bo", cmd_bo, "clamped-heavy-particle levels against the exact internal solve")
    p.add_argument("--model", required=True)
    p.add_argument("--mass-ratios", required=True)

    p = add("spectral-function", cmd_spectral_function, "broadened transition-weight density",
            default_format="csv")
    p.add_argument("--model", required=True)
    p.add_argument("--variant", choices=("unreduced", "reduced", "bo"), default="reduced")
    p.add_argument("--probe", choices=("rel-position", "particle-position"), default="rel-position")
    p.add_argument("--eta", type=float)
    p.add_argument("--omega-max", type=float)
    return parser


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the documented exit code (None if it is unexpected)."""
    if isinstance(exc, RelobsError):
        return exc.exit_code
    if isinstance(exc, (ExpressionError, AlgebraError)):
        return 2
    if isinstance(exc, (FrameMapError, CMPositionDependence)):
        return 3
    if isinstance(exc, InconsistentRotationCheck):
        return 4
    return None


def _error_kind(code: int) -> str:
    return {2: "usage", 3: "model", 4: "numerical"}.get(code, "internal")


def main(argv=None) -> int:
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        documents, payload, csv_text = args.func(args)
        _emit(args, _report(args, documents, payload, started), csv_text)
        return 0
    except Exception as exc:  # noqa: BLE001 - every failure becomes a JSON error
        code = exit_code_for(exc)
        if code is None:
            code = 1
        err = {"error": {"type": type(exc).__name__, "kind": _error_kind(code),
                         "message": str(exc), "exitCode": code}}
        for attr in ("line", "column", "expected"):
            val = getattr(exc, attr, None)
            if val is not None:
                err["error"][attr] = sorted(val) if isinstance(val, (set, frozenset)) else val
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return code


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
