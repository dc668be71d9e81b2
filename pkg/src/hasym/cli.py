"""Command-line front end: ``hasym analyze | scan | irrep | certify``.

Matrices are read from JSON files of the form::

    {"format": 1, "dim": n, "entries": [[re, im], ...]}   # n*n pairs, row-major

An irrep file holds two such objects under the keys ``"A"`` and ``"B"``.
Reports are JSON with ``"format": 1``; floats use Python's shortest
round-trip repr, so identical inputs give byte-identical output.

Exit codes
----------
0  success / degeneracy forced
1  input error (unreadable, malformed, non-Hermitian, non-unitary)
2  no degeneracy found
3  irrep pair does not force degeneracy
4  symmetry precondition failure in ``certify``
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import hastheory, irrep, scanner, twolevel
from .numkernel import NotHermitianError, as_hermitian, eigh

FORMAT = 1
DEFAULT_TOL = 1e-8
FILE_HERMITIAN_TOL = 1e-10

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_DEGENERACY = 2
EXIT_NOT_FORCED = 3
EXIT_PRECONDITION = 4


class InputError(Exception):
    pass


def _f(x) -> float:
    return float(x) + 0.0  # drop negative zero


def _vec(v) -> list[float]:
    return [_f(x) for x in np.ravel(v)]


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    return {"dim": int(m.shape[0]), "entries": [[_f(z.real), _f(z.imag)] for z in m.ravel()]}


def matrix_from_json(doc, where: str) -> np.ndarray:
    if not isinstance(doc, dict):
        raise InputError(f"{where}: expected an object with 'dim' and 'entries'")
    fmt = doc.get("format", FORMAT)
    if fmt != FORMAT:
        raise InputError(f"{where}: unsupported format {fmt!r} (expected {FORMAT})")
    dim = doc.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InputError(f"{where}: 'dim' must be a positive integer, got {dim!r}")
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise InputError(f"{where}: 'entries' must be a list of [re, im] pairs")
    if len(entries) != dim * dim:
        raise InputError(f"{where}: expected {dim * dim} entries for dim {dim}, got {len(entries)}")
    vals = []
    for i, e in enumerate(entries):
        ok = (
            isinstance(e, list)
            and len(e) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in e)
        )
        if not ok:
            raise InputError(f"{where}: entries[{i}] (row {i // dim}, col {i % dim}) is not a [re, im] pair")
        z = complex(float(e[0]), float(e[1]))
        if not np.isfinite(z):
            raise InputError(f"{where}: entries[{i}] is not finite")
        vals.append(z)
    return np.array(vals, dtype=np.complex128).reshape(dim, dim)


def _load_json(path: str):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror})") from None
    try:
        return raw, json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text (byte {exc.start})") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _load_hermitian(path: str):
    raw, doc = _load_json(path)
    m = matrix_from_json(doc, path)
    try:
        h = as_hermitian(m, FILE_HERMITIAN_TOL)
    except NotHermitianError as exc:
        raise InputError(f"{path}: {exc}") from None
    return raw, h


def _digest(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def _write_text_atomic(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(report: dict, out: str | None, summary: list[str]) -> None:
    """JSON to ``out`` (plus a short human summary on stdout), or JSON to stdout."""
    text = json.dumps(report, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    _write_text_atomic(out, text)
    for line in summary:
        print(line)


def _has_json(report: hastheory.HasReport) -> dict:
    return {
        "square_residual": _f(report.square_residual),
        "commutator_residual": _f(report.commutator_residual),
    }


def _two_level_json(h) -> dict:
    pv = twolevel.pauli_decompose(h)
    return {
        "pauli_vector": dict(zip(("h0", "hx", "hy", "hz"), _vec(pv))),
        "gap": _f(twolevel.gap(pv)),
        "constraint_residual": _vec(twolevel.constraint_residual(pv)),
        "canonical_upsilon_residual": _f(twolevel.canonical_upsilon_check(h).residual),
    }


def cmd_analyze(args) -> int:
    raw, h = _load_hermitian(args.path)
    values, _ = eigh(h)
    clusters = []
    worst = 0.0
    for sub in hastheory.detect_degenerate_subspaces(h, args.tol):
        ops = []
        for j, op in enumerate(hastheory.construct_nfold_operators(sub), start=1):
            rep = hastheory.verify_has(op, h)
            worst = max(worst, *rep)
            ops.append({"pair": [0, j], "unitary_part": matrix_to_json(op.unitary_part), **_has_json(rep)})
        clusters.append(
            {
                "energy": _f(sub.energy),
                "dimension": sub.dimension,
                "residual": _f(sub.residual),
                "operators": ops,
            }
        )
    if not clusters:
        code, status = EXIT_NO_DEGENERACY, "no degeneracy"
    elif worst <= args.tol:
        code, status = EXIT_OK, "HAS verified"
    else:
        code, status = EXIT_NO_DEGENERACY, "HAS residuals exceed tolerance"
    report = {
        "format": FORMAT,
        "command": "analyze",
        "input": {"digest": _digest(raw), "dim": int(h.shape[0])},
        "tol": args.tol,
        "eigenvalues": _vec(values),
        "clusters": clusters,
    }
    if h.shape[0] == 2:
        report["two_level"] = _two_level_json(h)
    report["status"] = status
    report["exit_code"] = code
    summary = [f"{len(clusters)} degenerate cluster(s); {status}"]
    summary += [f"  E = {c['energy']!r}, dim {c['dimension']}" for c in clusters]
    _emit(report, args.out, summary)
    return code


def cmd_scan(args) -> int:
    try:
        model = scanner.get_model(args.model)
    except scanner.UnknownModelError as exc:
        raise InputError(str(exc)) from None
    try:
        if args.refine:
            result = scanner.scan(model, args.resolution, tol=args.tol, seed=args.seed, threshold=args.threshold)
            gf = result.field
        else:
            gf = scanner.grid_scan(model, args.resolution, args.threshold)
            result = None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.csv:
        _write_text_atomic(args.csv, gf.to_csv())
    report = {
        "format": FORMAT,
        "command": "scan",
        "model": {"name": model.name, "description": model.description,
                  "param_box": [[_f(lo), _f(hi)] for lo, hi in model.param_box]},
        "resolution": list(gf.resolution),
        "seed": args.seed,
        "tol": args.tol,
        "grid": {
            "nodes": int(gf.gaps.size),
            "threshold": _f(gf.threshold),
            "invalid": [{"index": list(idx), "error": msg} for idx, msg in gf.invalid],
            "minima": [{"index": list(m.index), "alpha": _vec(m.alpha), "gap": _f(m.gap)} for m in gf.minima],
        },
    }
    code = EXIT_OK
    summary = [f"{model.name}: {len(gf.minima)} grid minima"]
    if result is not None:
        points = []
        for p in result.points:
            a = scanner.analyze_point(model, p, args.tol)
            entry = {
                "alpha": _vec(p.alpha),
                "gap": _f(p.gap_value),
                "level_index": p.level_index,
                "evaluations": p.evaluations,
                "has_report": _has_json(p.has_report),
                "near_degenerate": a.near_degenerate,
                "max_residual": _f(a.max_residual()),
            }
            if a.pauli is not None:
                entry["pauli_vector"] = _vec(a.pauli)
                entry["canonical_upsilon_residual"] = _f(a.upsilon_residual)
            points.append(entry)
            summary.append(f"  degeneracy at {entry['alpha']} gap {entry['gap']:.3e}")
        report["points"] = points
        report["failures"] = [
            {"alpha": _vec(f.alpha), "gap": _f(f.gap), "evaluations": f.evaluations}
            for f in result.failures
        ]
        if not points:
            code = EXIT_NO_DEGENERACY
        summary.insert(1, f"{len(points)} degeneracy point(s), {len(result.failures)} failed refinement(s)")
    report["exit_code"] = code
    _emit(report, args.out, summary)
    return code


def cmd_irrep(args) -> int:
    raw, doc = _load_json(args.path)
    if not isinstance(doc, dict) or "A" not in doc or "B" not in doc:
        raise InputError(f"{args.path}: expected an object with keys 'A' and 'B'")
    fmt = doc.get("format", FORMAT)
    if fmt != FORMAT:
        raise InputError(f"{args.path}: unsupported format {fmt!r} (expected {FORMAT})")
    a = matrix_from_json(doc["A"], f"{args.path}:A")
    b = matrix_from_json(doc["B"], f"{args.path}:B")
    try:
        pair = irrep.from_unitary(a, b)
    except ValueError as exc:
        raise InputError(f"{args.path}: {exc}") from None
    decision = irrep.forces_degeneracy(pair)
    system = irrep.constraint_system(pair)
    code = EXIT_OK if decision.forced else EXIT_NOT_FORCED
    report = {
        "format": FORMAT,
        "command": "irrep",
        "input": {"digest": _digest(raw)},
        "a": _vec(pair.a),
        "b": _vec(pair.b),
        "lambda": _vec(decision.lam),
        "constraint_matrix": [_vec(r) for r in system.matrix],
        "rank": decision.rank,
        "null_basis": [_vec(c) for c in system.null_basis.T],
        "forced": decision.forced,
        "lambda_rank_consistent": decision.consistent,
        "exit_code": code,
    }
    verdict = "forces h = 0 (degeneracy)" if decision.forced else "does not force degeneracy"
    _emit(report, args.out, [f"rank {decision.rank}, lambda {report['lambda']}: {verdict}"])
    return code


def cmd_certify(args) -> int:
    raw_h, h = _load_hermitian(args.path)
    raw_m, doc = _load_json(args.operator)
    m = matrix_from_json(doc, args.operator)
    if m.shape != h.shape:
        raise InputError(f"operator dim {m.shape[0]} does not match H dim {h.shape[0]}")
    report = {
        "format": FORMAT,
        "command": "certify",
        "input": {"digest": _digest(raw_h), "operator_digest": _digest(raw_m), "dim": int(h.shape[0])},
        "tol": args.tol,
    }
    try:
        op = hastheory.AntiunitaryOperator(m, tol=args.tol)
        pairs = hastheory.certify_from_symmetry(op, h, args.tol)
    except hastheory.SymmetryPreconditionError as exc:
        report.update(
            status="precondition failure",
            reason=str(exc),
            square_residual=_f(exc.square_residual),
            commutator_residual=_f(exc.commutator_residual),
            exit_code=EXIT_PRECONDITION,
        )
        _emit(report, args.out, [f"precondition failure: {exc}"])
        return EXIT_PRECONDITION
    except ValueError as exc:
        report.update(status="precondition failure", reason=str(exc), exit_code=EXIT_PRECONDITION)
        _emit(report, args.out, [f"precondition failure: {exc}"])
        return EXIT_PRECONDITION
    has = hastheory.verify_has(op, h)
    ok = all(p.certified for p in pairs)
    code = EXIT_OK if ok else EXIT_PRECONDITION
    report.update(
        **_has_json(has),
        pairs=[
            {"index": p.index, "energy": _f(p.energy), "overlap": _f(p.overlap),
             "residual": _f(p.residual), "certified": p.certified}
            for p in pairs
        ],
        status="certified" if ok else "pairing not certified",
        exit_code=code,
    )
    _emit(report, args.out, [f"{sum(p.certified for p in pairs)}/{len(pairs)} levels paired"])
    return code


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's default status 2 is taken
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="hasym",
        description="Construct and verify hidden antiunitary symmetries behind degeneracies.",
    )
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="detect degeneracies of a Hermitian matrix and build its HAS operators")
    p.add_argument("path", help="MatrixFile JSON")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan", help="grid-scan a built-in model family for gap closings")
    p.add_argument("model", help="built-in model: " + ", ".join(m.name for m in scanner.builtin_models()))
    p.add_argument("--resolution", type=int, nargs="+", default=[32], help="grid points per axis")
    p.add_argument("--refine", action="store_true", help="refine grid minima to degeneracy points")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--threshold", type=float, default=None, help="seed threshold on grid gaps")
    p.add_argument("--csv", help="write the gap field as CSV")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("irrep", help="decide whether a 2x2 unitary pair forces degeneracy")
    p.add_argument("path", help="JSON with MatrixFile objects under 'A' and 'B'")
    p.add_argument("--out")
    p.set_defaults(func=cmd_irrep)

    p = sub.add_parser("certify", help="pair every level of H under a full antiunitary symmetry")
    p.add_argument("path", help="MatrixFile JSON for H")
    p.add_argument("--operator", required=True, help="MatrixFile JSON for the unitary part M")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        print("hasym: error: --tol must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"hasym: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
