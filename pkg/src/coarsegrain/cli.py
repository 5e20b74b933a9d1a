"""Command-line frontend.

Exit codes: 0 sufficient / SSA equality, 1 not sufficient / strict SSA
inequality, 2 invalid input, 3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from . import io
from . import linalg as la
from .algebra import DEFAULT_T_GRID, CLOSURE_TOL
from .entropy import (MarkovSpec, build_markov_state, random_tripartite_state, ssa_equality_structure,
                      ssa_gap, von_neumann_entropy)
from .errors import InvalidInputError, NumericalBreakdownError, PreconditionError
from .sufficiency import (Config, InstanceSpec, check_sufficiency, extract_structure,
                          pull_back_structure, random_instance, synthesize_sufficient_instance)

EXIT_OK, EXIT_NEGATIVE, EXIT_INVALID, EXIT_BREAKDOWN = 0, 1, 2, 3


class UsageError(InvalidInputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------
# flag parsing
# ----------------------------------------------------------------------


def _floats(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected finite numbers, got {text!r}")
    return vals


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _ints(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_sufficient_blocks(text: str) -> tuple:
    """``"2,2:1,3"`` -> ``((2, 2), (1, 3))``."""
    try:
        blocks = tuple(tuple(int(x) for x in part.split(",")) for part in text.split(":"))
    except ValueError:
        raise UsageError(f"bad --blocks {text!r}; expected d,m:d,m:...")
    if any(len(b) != 2 for b in blocks):
        raise UsageError(f"bad --blocks {text!r}; each block is d,m")
    return blocks


def parse_markov_blocks(text: str) -> tuple:
    """``"2x1:0.5,1x2:0.5"`` -> ``((2, 1, 0.5), (1, 2, 0.5))``."""
    out = []
    for part in text.split(","):
        try:
            shape, w = part.split(":")
            bl, br = shape.lower().split("x")
            out.append((int(bl), int(br), float(w)))
        except ValueError:
            raise UsageError(f"bad --blocks entry {part!r}; expected bLxbR:weight")
    return tuple(out)


def _config(args) -> Config:
    return Config(tol=args.tol, t_grid=tuple(args.t_grid), closure_tol=CLOSURE_TOL, seed=args.seed)


# ----------------------------------------------------------------------
# report rendering
# ----------------------------------------------------------------------


def _header(command: str) -> dict:
    return {"tool": "coarsegrain", "version": __version__, "command": command}


def _settings(args) -> dict:
    return {"tol": args.tol, "closure_tol": CLOSURE_TOL, "t_grid": list(args.t_grid),
            "seed": args.seed}


def _text_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return io.fmt_float(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_text_value(x) for x in v)
    return str(v)


def render_text(report: dict) -> str:
    lines = []
    for key, value in report.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            cols = list(value[0])
            cells = [cols] + [[_text_value(row[c]) for c in cols] for row in value]
            widths = [max(len(r[i]) for r in cells) for i in range(len(cols))]
            lines.append(f"{key}:")
            for r in cells:
                lines.append("  " + "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        elif isinstance(value, dict):
            lines.append(f"{key}:")
            lines.extend(f"  {k}: {_text_value(v)}" for k, v in value.items())
        else:
            lines.append(f"{key}: {_text_value(value)}")
    return "\n".join(lines) + "\n"


def render(report: dict, as_json: bool) -> str:
    return io.dumps_report(report) + "\n" if as_json else render_text(report)


def _emit(report: dict, args) -> None:
    text = render(report, args.json)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------
# analyses (return report and exit code)
# ----------------------------------------------------------------------


def _sufficiency_fields(rep) -> dict:
    return {
        "ns_verdict": rep.ns_verdict,
        "recovery_verdict": rep.recovery_verdict,
        "ns_max_deviation": rep.ns_max_deviation,
        "recovery_deviation_1": rep.recovery_deviation_1,
        "recovery_deviation_2": rep.recovery_deviation_2,
    }


def run_check(channel_file, state1_file, state2_file, args) -> tuple[dict, int]:
    t = io.load_channel(channel_file)
    d1, _ = io.load_state(state1_file)
    d2, _ = io.load_state(state2_file)
    report = _header("check")
    cfg = _config(args)
    try:
        rep = check_sufficiency(t, d1, d2, cfg)
    except NumericalBreakdownError as exc:
        report["verdict"] = "breakdown"
        report["error"] = str(exc)
        if getattr(exc, "report", None) is not None:
            report.update(_sufficiency_fields(exc.report))
        report["settings"] = _settings(args)
        return report, EXIT_BREAKDOWN
    report["verdict"] = "sufficient" if rep.verdict else "not sufficient"
    report.update(_sufficiency_fields(rep))
    report["settings"] = _settings(args)
    return report, EXIT_OK if rep.verdict else EXIT_NEGATIVE


def run_structure(channel_file, state1_file, state2_file, args) -> tuple[dict, int]:
    t = io.load_channel(channel_file)
    d1, _ = io.load_state(state1_file)
    d2, _ = io.load_state(state2_file)
    cfg = _config(args)
    report = _header("structure")
    try:
        rep = check_sufficiency(t, d1, d2, cfg)
        report["verdict"] = "sufficient" if rep.verdict else "not sufficient"
        report.update(_sufficiency_fields(rep))
        if not rep.verdict:
            report["structure"] = "undefined (pair is not sufficient)"
            report["settings"] = _settings(args)
            return report, EXIT_NEGATIVE
        dec = extract_structure(t, d1, d2, cfg, report=rep)
        pulled = pull_back_structure(t, dec, d1, d2, cfg)
    except NumericalBreakdownError as exc:
        report["verdict"] = "breakdown"
        report["error"] = str(exc)
        report["settings"] = _settings(args)
        return report, EXIT_BREAKDOWN
    report["blocks"] = [
        {"p": p, "d_p": b.d, "m_p": b.m, "lambda_1": b.lambda_1, "lambda_2": b.lambda_2,
         "residual": b.residual}
        for p, b in enumerate(dec.blocks)
    ]
    report["reconstruction_error_1"] = la.hs_norm(dec.reconstruct(1) - t(d1))
    report["reconstruction_error_2"] = la.hs_norm(dec.reconstruct(2) - t(d2))
    report["pullback_commutator"] = max(b.residual for b in pulled.blocks)
    report["pullback_error_1"] = la.hs_norm(pulled.reconstruct(1) - d1)
    report["pullback_error_2"] = la.hs_norm(pulled.reconstruct(2) - d2)
    if args.emit_factors:
        out = Path(args.emit_factors)
        out.mkdir(parents=True, exist_ok=True)
        for p, b in enumerate(dec.blocks):
            io.write_document(out / f"block{p}_S1.json", io.state_document(b.S_1))
            io.write_document(out / f"block{p}_S2.json", io.state_document(b.S_2))
            io.write_document(out / f"block{p}_R.json", io.state_document(b.R))
        report["factors_dir"] = str(out)
    report["settings"] = _settings(args)
    return report, EXIT_OK


def run_ssa(path, args) -> tuple[dict, int]:
    s = io.load_tripartite(path)
    scale = 1 / math.log(2) if args.bits else 1.0
    gap = ssa_gap(s)
    report = _header("ssa")
    report["dims"] = list(s.dims)
    report["units"] = "bits" if args.bits else "nats"
    report["entropies"] = {
        "S_ABC": von_neumann_entropy(s.density) * scale,
        "S_AB": von_neumann_entropy(s.d_ab) * scale,
        "S_BC": von_neumann_entropy(s.d_bc) * scale,
        "S_B": von_neumann_entropy(s.d_b) * scale,
    }
    report["gap"] = gap * scale
    equality = gap < args.tol
    report["verdict"] = "equality" if equality else "strict inequality"
    code = EXIT_OK if equality else EXIT_NEGATIVE
    if args.structure and equality:
        try:
            dec = ssa_equality_structure(s, args.tol, _config(args))
        except NumericalBreakdownError as exc:
            report["verdict"] = "breakdown"
            report["error"] = str(exc)
            report["settings"] = _settings(args)
            return report, EXIT_BREAKDOWN
        report["blocks"] = [
            {"p": p, "bL": term.bL, "bR": term.bR, "weight": term.weight}
            for p, term in enumerate(dec.terms)
        ]
        report["reassembly_error"] = la.hs_norm(dec.reassemble() - s.density)
        report["middle_overlap"] = dec.middle_overlap()
    report["settings"] = _settings(args)
    return report, code


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def _guard(fn, *a) -> tuple[dict | None, int, str | None]:
    """Run an analysis, mapping library errors to exit codes."""
    try:
        report, code = fn(*a)
        return report, code, None
    except PreconditionError as exc:
        return None, EXIT_NEGATIVE, str(exc)
    except InvalidInputError as exc:
        return None, EXIT_INVALID, str(exc)
    except NumericalBreakdownError as exc:
        return None, EXIT_BREAKDOWN, str(exc)


def _single(fn, args, *files) -> int:
    report, code, err = _guard(fn, *files, args)
    if err is not None:
        print(f"error: {err}", file=sys.stderr)
        return code
    _emit(report, args)
    return code


def _batch(jobs: list, fn, args) -> int:
    """Run independent instances; each report goes to its own file."""
    suffix = ".json" if args.json else ".txt"

    def one(job):
        name, files, out = job
        report, code, err = _guard(fn, *files, args)
        if err is not None:
            Path(f"{out}.error").write_text(err + "\n")
        else:
            Path(f"{out}{suffix}").write_text(render(report, args.json))
        return name, code

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(one, jobs))
    for name, code in results:
        print(f"{name}\t{code}")
    return max((code for _, code in results), default=EXIT_OK)


def cmd_check(args) -> int:
    if args.batch:
        root = Path(args.batch)
        jobs = [(d.name, (d / "channel.json", d / "state1.json", d / "state2.json"), d / "report")
                for d in sorted(p for p in root.iterdir() if p.is_dir())]
        return _batch(jobs, run_check, args)
    if len(args.files) != 3:
        raise UsageError("check needs CHANNEL STATE1 STATE2 (or --batch DIR)")
    return _single(run_check, args, *args.files)


def cmd_structure(args) -> int:
    return _single(run_structure, args, args.channel, args.state1, args.state2)


def cmd_ssa(args) -> int:
    if args.batch:
        root = Path(args.batch)
        files = sorted(p for p in root.glob("*.json") if ".report" not in p.name)
        jobs = [(p.name, (p,), p.with_name(p.stem + ".report")) for p in files]
        return _batch(jobs, run_ssa, args)
    if len(args.files) != 1:
        raise UsageError("ssa needs one TRIPARTITE file (or --batch DIR)")
    return _single(run_ssa, args, args.files[0])


def _write_all(out_dir: Path, docs: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, doc in docs.items():
        io.write_document(out_dir / name, doc)
        print(out_dir / name)


def _gen_sufficient(blocks, l1, l2, seed, ancilla=2, rotate=True, mismatched_r=False) -> dict:
    spec = InstanceSpec(blocks=blocks, weights=(l1, l2), ancilla=ancilla, seed=seed,
                        rotate=rotate, mismatched_R=mismatched_r).validate()
    inst = synthesize_sufficient_instance(spec)
    params = {"blocks": [list(b) for b in blocks], "l1": list(l1), "l2": list(l2),
              "ancilla": ancilla, "rotate": rotate, "mismatched_r": mismatched_r}
    return {
        "channel.json": io.channel_document(inst.channel, seed),
        "state1.json": io.state_document(inst.d1, seed=seed),
        "state2.json": io.state_document(inst.d2, seed=seed),
        "spec.json": io.instance_spec_document("sufficient", params, seed),
    }


def _gen_markov(d_a, d_c, blocks, seed, rotate=False) -> dict:
    spec = MarkovSpec(d_a, d_c, blocks, seed=seed, rotate=rotate).validate()
    s = build_markov_state(spec)
    params = {"dA": d_a, "dC": d_c, "blocks": [list(b) for b in blocks], "rotate": rotate}
    return {
        "tripartite.json": io.tripartite_document(s, seed),
        "spec.json": io.instance_spec_document("markov", params, seed),
    }


def _gen_random(in_dim, out_dim, kraus, seed) -> dict:
    if min(in_dim, out_dim, kraus) < 1 or out_dim * kraus < in_dim:
        raise UsageError("random channel needs positive dims and out_dim * kraus >= in_dim")
    t, d1, d2 = random_instance(in_dim, out_dim, kraus, seed)
    params = {"in_dim": in_dim, "out_dim": out_dim, "kraus": kraus}
    return {
        "channel.json": io.channel_document(t, seed),
        "state1.json": io.state_document(d1, seed=seed),
        "state2.json": io.state_document(d2, seed=seed),
        "spec.json": io.instance_spec_document("random", params, seed),
    }


def _gen_random_tripartite(dims, seed) -> dict:
    if len(dims) != 3:
        raise UsageError("--dims needs three entries")
    s = random_tripartite_state(dims, seed)
    return {
        "tripartite.json": io.tripartite_document(s, seed),
        "spec.json": io.instance_spec_document("random-tripartite", {"dims": list(dims)}, seed),
    }


def _gen_from_spec(doc: dict) -> dict:
    """Regenerate documents from an ``instance_spec`` document."""
    p, seed = doc["params"], doc.get("seed", 0)
    try:
        if doc["generator"] == "sufficient":
            return _gen_sufficient(tuple(tuple(b) for b in p["blocks"]), tuple(p["l1"]),
                                   tuple(p["l2"]), seed, p.get("ancilla", 2),
                                   p.get("rotate", True), p.get("mismatched_r", False))
        if doc["generator"] == "markov":
            return _gen_markov(p["dA"], p["dC"], tuple(tuple(b) for b in p["blocks"]), seed,
                               p.get("rotate", False))
        if doc["generator"] == "random":
            return _gen_random(p["in_dim"], p["out_dim"], p["kraus"], seed)
        if doc["generator"] == "random-tripartite":
            return _gen_random_tripartite(tuple(p["dims"]), seed)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"instance_spec params incomplete: {exc}") from None
    raise UsageError(f"unknown generator {doc['generator']!r}")


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "sufficient":
        docs = _gen_sufficient(parse_sufficient_blocks(args.blocks), args.l1, args.l2, args.seed,
                               args.ancilla, not args.no_rotate, args.mismatched_r)
    elif kind == "markov":
        docs = _gen_markov(args.dA, args.dC, parse_markov_blocks(args.blocks), args.seed,
                           args.rotate)
    elif kind == "random":
        docs = _gen_random(args.in_dim, args.out_dim, args.kraus, args.seed)
    elif kind == "random-tripartite":
        docs = _gen_random_tripartite(args.dims, args.seed)
    else:
        docs = _gen_from_spec(io.read_document(args.spec))
    _write_all(Path(args.out_dir), docs)
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=1e-8,
                        help="verdict tolerance (default 1e-8)")
    common.add_argument("--t-grid", type=_floats, default=DEFAULT_T_GRID,
                        help="comma-separated modular times")
    common.add_argument("--seed", type=int, default=0, help="seed for generators and generic elements")
    common.add_argument("--bits", action="store_true", help="display entropies in bits")
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for --batch")

    parser = _Parser(prog="coarsegrain",
                     description="Decide channel sufficiency and analyse strong subadditivity.",
                     epilog="exit codes: 0 sufficient/equality, 1 not, 2 invalid input, 3 breakdown")
    parser.add_argument("--version", action="version", version=f"coarsegrain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="decide sufficiency of a channel for two states")
    p.add_argument("files", nargs="*", metavar="FILE", help="CHANNEL STATE1 STATE2")
    p.add_argument("--batch", metavar="DIR", help="one instance per subdirectory")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("structure", parents=[common], help="block decomposition of a sufficient pair")
    p.add_argument("channel")
    p.add_argument("state1")
    p.add_argument("state2")
    p.add_argument("--emit-factors", metavar="DIR", help="write S and R factors as state documents")
    p.set_defaults(func=cmd_structure)

    p = sub.add_parser("ssa", parents=[common], help="strong subadditivity gap of a tripartite state")
    p.add_argument("files", nargs="*", metavar="FILE")
    p.add_argument("--structure", action="store_true", help="emit the Markov decomposition on equality")
    p.add_argument("--batch", metavar="DIR", help="every tripartite document in DIR")
    p.set_defaults(func=cmd_ssa)

    p = sub.add_parser("gen", help="deterministic instance generators")
    gen = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    g = gen.add_parser("sufficient", parents=[common], help="structured sufficient instance")
    g.add_argument("--blocks", required=True, help="d,m:d,m:...")
    g.add_argument("--l1", type=_floats, required=True, help="block weights of state 1")
    g.add_argument("--l2", type=_floats, required=True, help="block weights of state 2")
    g.add_argument("--ancilla", type=int, default=2)
    g.add_argument("--no-rotate", action="store_true")
    g.add_argument("--mismatched-r", action="store_true", help="negative control")
    g = gen.add_parser("markov", parents=[common], help="tripartite state with zero SSA gap")
    g.add_argument("--dA", type=int, required=True)
    g.add_argument("--dC", type=int, required=True)
    g.add_argument("--blocks", required=True, help="bLxbR:w,bLxbR:w,...")
    g.add_argument("--rotate", action="store_true")
    g = gen.add_parser("random", parents=[common], help="random channel and two states")
    g.add_argument("--in-dim", type=int, required=True)
    g.add_argument("--out-dim", type=int, required=True)
    g.add_argument("--kraus", type=int, default=2)
    g = gen.add_parser("random-tripartite", parents=[common], help="random tripartite state")
    g.add_argument("--dims", type=_ints, default=(2, 3, 2))
    g = gen.add_parser("spec", parents=[common], help="regenerate from an instance_spec document")
    g.add_argument("spec")
    for g in gen.choices.values():
        g.add_argument("--out-dir", default=".", help="directory for the generated documents")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalBreakdownError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN


if __name__ == "__main__":
    sys.exit(main())
