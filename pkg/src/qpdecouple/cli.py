"""Command-line front end.

Exit codes are the machine contract:

====  ==========================================
0     decoupled (``analyze``) / success otherwise
1     not decouplable
2     undetermined
3     report failed verification
64    usage error (bad flags, unknown preset)
65    malformed input file
====  ==========================================
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decoupler import DecoupleOptions, DecoupleReport, Verdict, decouple
from .errors import DecouplingError
from .gaussian import (
    INTERLEAVED,
    PassiveOp,
    QuadCov,
    apply_symplectic,
    cross_corr_norm,
    is_physical,
    normalize_ordering,
    passive_to_symplectic,
    preset_cccstate,
    preset_twomode,
    random_pure_state,
    symplectic_eigenvalues,
    vacuum,
)
from .interferometer import Network, decompose, reassemble
from .matcore import is_unitary, takagi
from .oracle import oracle_min_residual

EXIT_CODES = {Verdict.DECOUPLED: 0, Verdict.NOT_DECOUPLABLE: 1, Verdict.UNDETERMINED: 2}
EXIT_VERIFY_FAILED = 3
EXIT_USAGE = 64
EXIT_MALFORMED = 65
LOAD_SYMMETRY_TOL = 1e-9
VERIFY_TOL = 1e-7
_ORDERING_TAGS = {"interleaved": "qpqp", "grouped": "qqpp"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# -- file formats -------------------------------------------------------------


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise DecouplingError(f"cannot read {path}: {exc}") from exc


def _parse_plain(text: str) -> np.ndarray:
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        arr = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DecouplingError(f"plain matrix file: {exc}") from exc
    if arr.ndim != 2:
        raise DecouplingError("plain matrix file: rows have different lengths")
    return arr


def parse_matrix_text(text: str, ordering: str | None = None, fmt: str = "auto") -> QuadCov:
    """Parse a structured (JSON) or plain matrix file into an interleaved :class:`QuadCov`."""
    if fmt == "auto":
        fmt = "structured" if text.lstrip().startswith("{") else "plain"
    if fmt == "structured":
        try:
            doc = json.loads(text)
            matrix = np.array(doc["matrix"], dtype=float)
        except (ValueError, KeyError, TypeError) as exc:
            raise DecouplingError(f"structured matrix file: {exc}") from exc
        file_ordering = doc.get("ordering", ordering or "qpqp")
        n = doc.get("n")
    elif fmt == "plain":
        matrix = _parse_plain(text)
        file_ordering, n = ordering or "qpqp", None
    else:
        raise UsageError(f"unknown format {fmt!r}")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2 or matrix.size == 0:
        raise DecouplingError(f"matrix must be square with even dimension, got shape {matrix.shape}")
    if n is not None and 2 * int(n) != matrix.shape[0]:
        raise DecouplingError(f"declared n={n} does not match a {matrix.shape[0]}x{matrix.shape[0]} matrix")
    if not np.all(np.isfinite(matrix)):
        raise DecouplingError("matrix has NaN or Inf entries")
    if np.max(np.abs(matrix - matrix.T)) > LOAD_SYMMETRY_TOL * max(1.0, np.max(np.abs(matrix))):
        raise DecouplingError("matrix is not symmetric")
    matrix = 0.5 * (matrix + matrix.T)
    return QuadCov(matrix, normalize_ordering(file_ordering)).to(INTERLEAVED)


def load_matrix_file(path, ordering: str | None = None, fmt: str = "auto") -> QuadCov:
    return parse_matrix_text(_read_text(path), ordering, fmt)


def structured_document(s: QuadCov) -> dict:
    return {"n": s.n, "ordering": _ORDERING_TAGS[s.ordering], "matrix": s.M.tolist()}


def input_digest(s: QuadCov) -> str:
    payload = json.dumps(s.to(INTERLEAVED).M.tolist()).encode()
    return "sha256:" + hashlib.sha256(payload).hexdigest()


def _complex_doc(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"real": a.real.tolist(), "imag": a.imag.tolist()}


def _complex_from_doc(d: dict) -> np.ndarray:
    return np.array(d["real"], dtype=float) + 1j * np.array(d["imag"], dtype=float)


def report_document(
    rep: DecoupleReport, s: QuadCov, opts: DecoupleOptions, with_network: bool = False
) -> dict:
    doc = {
        "tool": "qpdecouple",
        "version": __version__,
        "input_digest": input_digest(s),
        "n": s.n,
        "ordering": "qpqp",
        "verdict": rep.verdict.value,
        "E_total": None if rep.E_total is None else _complex_doc(rep.E_total),
        "quad_out": None if rep.quad_out is None else rep.quad_out.to(INTERLEAVED).M.tolist(),
        "residual": rep.residual,
        "sigma": [float(v) for v in rep.sigma],
        "degenerate_groups": rep.degenerate_groups,
        "kernel": rep.kernel,
        "rphase": None if rep.rphase is None else list(rep.rphase.labels),
        "witness": None,
        "cycle": None,
        "network": None,
        "tolerances": {"class": opts.class_tol, "out": opts.out_tol, "success": opts.success_tol},
    }
    if rep.witness is not None:
        w = rep.witness
        doc["witness"] = {"j": w.j, "k": w.k, "real": w.value.real, "imag": w.value.imag}
    if rep.cycle is not None:
        doc["cycle"] = [[j, k, rel.value] for j, k, rel in rep.cycle.constraints]
    if with_network and rep.E_total is not None:
        doc["network"] = decompose(PassiveOp(rep.E_total)).to_dict()
    return doc


def verify_report(doc: dict, s: QuadCov) -> list[str]:
    """Re-check a report against its input; returns the list of problems found."""
    problems = []
    if doc.get("input_digest") != input_digest(s):
        problems.append("input digest does not match")
    tols = doc.get("tolerances", {})
    opts = DecoupleOptions(
        class_tol=tols.get("class", 1e-8), out_tol=tols.get("out", 1e-8), success_tol=tols.get("success", 1e-7)
    )
    tau_out = opts.out_tol * max(1.0, float(np.linalg.norm(s.M)))
    verdict = Verdict(doc["verdict"])
    if doc.get("E_total") is not None:
        E = _complex_from_doc(doc["E_total"])
        if E.shape != (s.n, s.n) or not is_unitary(E, 1e-8):
            return problems + ["E_total is not a unitary of the right size"]
        out = apply_symplectic(s, passive_to_symplectic(PassiveOp(E)))
        stored = np.array(doc.get("quad_out"), dtype=float)
        if stored.shape != out.M.shape or np.max(np.abs(stored - out.M)) > VERIFY_TOL:
            problems.append("quad_out does not match E_total applied to the input")
        residual = cross_corr_norm(out)
        if doc.get("residual") is None or abs(residual - doc["residual"]) > VERIFY_TOL:
            problems.append("residual does not match the recomputed q-p correlation")
        if verdict is Verdict.DECOUPLED and residual > tau_out:
            problems.append(f"decoupled verdict but residual {residual:.3e} exceeds {tau_out:.3e}")
        if doc.get("network") is not None:
            U = reassemble(Network.from_dict(doc["network"])).E
            if np.max(np.abs(U - E)) > VERIFY_TOL:
                problems.append("network does not reassemble to E_total")
    elif verdict is Verdict.DECOUPLED:
        problems.append("decoupled verdict without E_total")
    if verdict is Verdict.NOT_DECOUPLABLE:
        if doc.get("witness") is None and doc.get("cycle") is None:
            problems.append("not-decouplable verdict without witness")
        rerun = decouple(s, opts)
        if rerun.verdict is not Verdict.NOT_DECOUPLABLE:
            problems.append(f"recomputed verdict is {rerun.verdict.value}")
        elif doc.get("witness") is not None and rerun.witness is not None:
            w, v = doc["witness"], rerun.witness.value
            if abs(abs(w["real"]) - abs(v.real)) > VERIFY_TOL or abs(abs(w["imag"]) - abs(v.imag)) > VERIFY_TOL:
                problems.append("witness entry does not match recomputation")
    return problems


def _emit(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------


def cmd_analyze(args) -> int:
    s = load_matrix_file(args.input, args.ordering, args.format)
    opts = DecoupleOptions(
        class_tol=args.tol, out_tol=args.tol, restarts=args.restarts, seed=args.seed
    )
    rep = decouple(s, opts)
    _emit(report_document(rep, s, opts, args.with_network), args.output)
    print(f"verdict: {rep.verdict.value}", file=sys.stderr)
    return EXIT_CODES[rep.verdict]


def cmd_takagi(args) -> int:
    text = _read_text(args.input)
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
            Y = _complex_from_doc(doc)
        except (ValueError, KeyError, TypeError) as exc:
            raise DecouplingError(f"takagi input: {exc}") from exc
    else:
        stacked = _parse_plain(text)
        n = stacked.shape[0] // 2
        if stacked.shape != (2 * n, n):
            raise DecouplingError("plain takagi input must stack the real rows above the imaginary rows")
        Y = stacked[:n] + 1j * stacked[n:]
    fac = takagi(Y)
    _emit(
        {
            "Z": _complex_doc(fac.Z),
            "sigma": fac.sigma.tolist(),
            "reconstruction_residual": fac.residual(Y),
        },
        args.output,
    )
    return 0


def cmd_check(args) -> int:
    s = load_matrix_file(args.input, args.ordering, args.format)
    _emit(
        {
            "physical": is_physical(s),
            "symplectic_eigenvalues": symplectic_eigenvalues(s).tolist(),
            "cross_corr_norm": cross_corr_norm(s),
        },
        args.output,
    )
    return 0


def _parse_params(text: str | None, count: int, default: list[float]) -> list[float]:
    if text is None:
        return default
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--params must be {count} comma-separated numbers") from None
    if len(vals) != count:
        raise UsageError(f"--params must be {count} comma-separated numbers")
    return vals


def cmd_generate(args) -> int:
    if args.preset == "cccstate":
        s = preset_cccstate()
    elif args.preset == "twomode":
        s = preset_twomode(*_parse_params(args.params, 4, [2.0, 1.0, 0.5, 0.5]))
    elif args.preset == "random-pure":
        s = random_pure_state(args.modes, args.seed)
    else:
        s = vacuum(args.modes)
    _emit(structured_document(s), args.output)
    return 0


def cmd_oracle(args) -> int:
    s = load_matrix_file(args.input, args.ordering, args.format)
    res = oracle_min_residual(s, restarts=args.restarts, seed=args.seed, jobs=args.jobs)
    _emit(
        {
            "min_residual": res.min_residual,
            "best_E": _complex_doc(res.best_E.E),
            "restarts_used": res.restarts_used,
        },
        args.output,
    )
    return 0


def cmd_verify(args) -> int:
    try:
        doc = json.loads(_read_text(args.report))
        Verdict(doc["verdict"])
    except (ValueError, KeyError, TypeError) as exc:
        raise DecouplingError(f"report file: {exc}") from exc
    s = load_matrix_file(args.input, args.ordering, args.format)
    try:
        problems = verify_report(doc, s)
    except (KeyError, TypeError, ValueError) as exc:
        problems = [f"report is inconsistent: {exc}"]
    for p in problems:
        print(f"verify: {p}", file=sys.stderr)
    if problems:
        return EXIT_VERIFY_FAILED
    print("verify: ok", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpdecouple", description="Remove q-p correlations with passive optics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def matrix_input(p):
        p.add_argument("input", help="covariance matrix file (structured JSON or plain text)")
        p.add_argument("--ordering", choices=["qpqp", "qqpp"], default=None,
                       help="quadrature ordering of plain files (default qpqp)")
        p.add_argument("--format", choices=["auto", "structured", "plain"], default="auto")

    p = sub.add_parser("analyze", help="decide decouplability and write a report")
    matrix_input(p)
    p.add_argument("--tol", type=float, default=1e-8, help="relative classification/output tolerance")
    p.add_argument("--with-network", action="store_true", help="include a beamsplitter network")
    p.add_argument("--restarts", type=int, default=32, help="restarts for the degenerate search")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("takagi", help="Autonne-Takagi factorization of a complex symmetric matrix")
    p.add_argument("input", help='JSON {"real": [...], "imag": [...]} or plain real-over-imag rows')
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_takagi)

    p = sub.add_parser("check", help="physicality, symplectic spectrum and q-p correlation")
    matrix_input(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("generate", help="write a fixture covariance matrix")
    p.add_argument("--preset", required=True, choices=["cccstate", "twomode", "random-pure", "vacuum"])
    p.add_argument("--params", help="m,n,c,s for twomode")
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("oracle", help="numerical minimum of q-p correlation over passive operations")
    matrix_input(p)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="re-validate a report against its input")
    p.add_argument("report")
    matrix_input(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qpdecouple: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DecouplingError as exc:
        print(f"qpdecouple: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
