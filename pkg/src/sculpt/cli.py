"""Command-line front door.

Subcommands: preset, compile, simulate, verify, export-dot, report.
Exit codes: 0 success, 2 validation failure, 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, bigraph, circuit as circuit_mod, compiler, fock, sim

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISMATCH = 3

_EXPECTED = {
    # kind -> (p_with_ff(n), p_without_ff(n) or None)
    "ghz": (lambda n: 1.0 / 2 ** (2 * n - 1), lambda n: 1.0 / 2 ** (2 * n)),
    "w": (lambda n: 1.0 / 2 ** (2 * n), lambda n: 1.0 / (n * 2 ** (2 * n + 1))),
    "type5": (lambda n: 5.0 / 1152.0, None),
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from None


def _load_config(path: str | None) -> dict:
    """key=value lines; '#' starts a comment.  Known keys: atol, threads."""
    conf: dict = {}
    if not path:
        return conf
    for ln, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{ln}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "atol":
            conf["atol"] = float(val)
        elif key == "threads":
            conf["threads"] = int(val)
        else:
            raise CliError(f"{path}:{ln}: unknown config key {key!r}")
    return conf


def _threads(args, conf: dict) -> int | None:
    if getattr(args, "threads", None) is not None:
        return args.threads
    if "threads" in conf:
        return conf["threads"]
    env = os.environ.get("SCULPT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"SCULPT_THREADS={env!r} is not an integer") from None
    return os.cpu_count()


def _atol(args, conf: dict) -> float:
    if getattr(args, "atol", None) is not None:
        return args.atol
    return conf.get("atol", 1e-9)


def _parse_graph_file(path: str) -> bigraph.SculptingBigraph:
    try:
        return bigraph.parse_graph(_read(path))
    except bigraph.GraphSchemaError as exc:
        raise CliError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_preset(args) -> int:
    try:
        g = bigraph.preset(args.kind, args.n)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    _write(args.out, bigraph.serialize_graph(g))
    return EXIT_OK


def cmd_compile(args) -> int:
    g = _parse_graph_file(args.graph)
    try:
        c = compiler.compile_graph(g)
    except compiler.CompileError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.dual_rail:
        c = compiler.to_dual_rail(c)
    _write(args.out, circuit_mod.serialize_circuit(c))
    return EXIT_OK


def cmd_simulate(args) -> int:
    conf = _load_config(args.config)
    try:
        c = circuit_mod.parse_circuit(_read(args.circuit))
    except circuit_mod.CircuitSchemaError as exc:
        raise CliError(f"{args.circuit}: {exc}") from None
    diags = circuit_mod.validate(c)
    if diags:
        for d in diags:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    outcomes = sim.run_heralded(c, check=False)
    if args.target:
        target = analysis.target_state(args.target, args.n or len(c.output_modes))
        outcomes = sim.classify_feedforward(outcomes, target, c,
                                            atol=_atol(args, conf),
                                            threads=_threads(args, conf))
    wanted = json.loads(args.only_pattern) if args.only_pattern else None
    rows = []
    total = 0.0
    for oc in outcomes:
        pattern = {str(w): n for w, n in oc.pattern}
        if wanted is not None and pattern != {str(k): v for k, v in wanted.items()}:
            continue
        total += oc.probability
        rows.append({
            "pattern": pattern,
            "probability": oc.probability,
            "probability_rational": fock.rationalize(oc.probability),
            "correction": list(oc.correction) if oc.correction else None,
            "fidelity": oc.corrected_fidelity,
        })
    doc = {"outcomes": rows, "total_probability": total,
           "total_probability_rational": fock.rationalize(total)}
    _write(args.report, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    conf = _load_config(args.config)
    g = _parse_graph_file(args.graph)
    try:
        report = analysis.verify_scheme(g, args.target, args.n,
                                        atol=_atol(args, conf),
                                        threads=_threads(args, conf))
    except compiler.CompileError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return EXIT_VALIDATION
    for line in report.lines():
        print(line)
    atol = _atol(args, conf)
    bad = (not report.epm or not report.no_bunching or not report.genuine
           or report.oracle_target_fidelity < 1.0 - atol
           or report.n_correctable == 0
           or report.min_corrected_fidelity < 1.0 - atol)
    return EXIT_MISMATCH if bad else EXIT_OK


def cmd_export_dot(args) -> int:
    if bool(args.graph) == bool(args.circuit):
        raise CliError("pass exactly one of --graph or --circuit")
    if args.graph:
        g = _parse_graph_file(args.graph)
        _write(args.out, bigraph.graph_to_dot(g))
    else:
        try:
            c = circuit_mod.parse_circuit(_read(args.circuit))
        except circuit_mod.CircuitSchemaError as exc:
            raise CliError(f"{args.circuit}: {exc}") from None
        _write(args.out, circuit_mod.circuit_to_dot(c))
    return EXIT_OK


def cmd_report(args) -> int:
    conf = _load_config(args.config)
    threads = _threads(args, conf)
    atol = _atol(args, conf)
    jobs: list[tuple[str, int]] = []
    if args.all:
        jobs += [("ghz", n) for n in range(2, args.max_n + 1)]
        jobs += [("w", n) for n in range(2, min(args.max_n, 4) + 1)]
        jobs += [("type5", 3)]
    else:
        raise CliError("report currently requires --all")
    header = (f"{'scheme':8} {'n':>2} {'P_ff':>12} {'expected':>12} "
              f"{'P_no_ff':>12} {'expected':>12} {'fid':>6} {'ok':>4}")
    print(header)
    print("-" * len(header))
    mismatches = 0
    for kind, n in jobs:
        g = bigraph.preset(kind, n)
        rep = analysis.verify_scheme(g, kind, n, atol=atol, threads=threads)
        exp_ff_f, exp_no_f = _EXPECTED[kind]
        exp_ff = exp_ff_f(n)
        exp_no = exp_no_f(n) if exp_no_f else None
        ok = (abs(rep.p_with_ff - exp_ff) <= atol
              and (exp_no is None or abs(rep.p_without_ff - exp_no) <= atol)
              and rep.oracle_target_fidelity >= 1.0 - atol
              and rep.epm and rep.no_bunching and rep.genuine)
        if not ok:
            mismatches += 1
        print(f"{kind:8} {n:>2} "
              f"{fock.rationalize(rep.p_with_ff) or rep.p_with_ff:>12} "
              f"{fock.rationalize(exp_ff) or exp_ff:>12} "
              f"{fock.rationalize(rep.p_without_ff) or rep.p_without_ff:>12} "
              f"{(fock.rationalize(exp_no) if exp_no else '-'):>12} "
              f"{rep.oracle_target_fidelity:6.4f} {'PASS' if ok else 'FAIL':>4}")
    return EXIT_MISMATCH if mismatches else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sculpt",
                                description="compile and simulate heralded "
                                            "entanglement-generation circuits")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads for outcome classification "
                             "(default: SCULPT_THREADS or cpu count)")
        sp.add_argument("--config", default=None,
                        help="key=value file overriding tolerances")
        sp.add_argument("--atol", type=float, default=None,
                        help="comparison tolerance (default 1e-9)")

    sp = sub.add_parser("preset", help="emit a preset graph")
    sp.add_argument("--kind", required=True, choices=["ghz", "w", "type5"])
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_preset)

    sp = sub.add_parser("compile", help="lower a graph to a circuit")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--dual-rail", action="store_true")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("simulate", help="full herald enumeration")
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--report", default="-")
    sp.add_argument("--only-pattern", default=None,
                    help='JSON object {"wire": count} selecting one pattern')
    sp.add_argument("--target", choices=["ghz", "w", "type5"], default=None)
    sp.add_argument("--n", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="end-to-end oracle/circuit comparison")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--target", required=True, choices=["ghz", "w", "type5"])
    sp.add_argument("--n", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("export-dot", help="graph/circuit visualization export")
    sp.add_argument("--graph", default=None)
    sp.add_argument("--circuit", default=None)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_export_dot)

    sp = sub.add_parser("report", help="acceptance table over the presets")
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--max-n", type=int, default=5)
    common(sp)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
