"""Command-line front end: ``decisive <command> ...``.

Exit codes: 0 success, 1 usage, 2 parse error, 3 unsupported by the theory,
4 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from .chain import BOTTOM, bsccs, is_recurrent, recast_chain
from .crp import Incomplete, TraceRow, comp_prob
from .deciders import Answer, decide
from .dsl import ModelFile, format_model, model_file, parse_model
from .errors import BudgetExhausted, DecisiveError, DomainError, InputError, ParseError
from .generators import (hilbert_pcm, normalize, parse_program, program_to_ppn,
                         program_to_static_pcm)
from .model import Configuration, ZeroTarget, classify, semantics
from .numeric import format_rational, parse_polynomial, parse_rational
from .reach import DEFAULT_BUDGET, BoundedOracle, auto_oracle, compute_rq
from .sim import estimate_reach, reports_to_csv

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_BUDGET = 0, 1, 2, 3, 4


class Failure(Exception):
    def __init__(self, message: str, code: int, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _load(path: str) -> ModelFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise Failure(f"cannot read {path}: {exc.strerror}", EXIT_USAGE) from None
    return parse_model(text)


def _need_query(mf: ModelFile):
    if mf.init is None or mf.target is None:
        raise Failure("the model needs 'init' and 'target' for this command", EXIT_USAGE)
    return mf.init, mf.target


# commands -----------------------------------------------------------------------------

def cmd_check(args) -> int:
    mf = _load(args.file)
    c = mf.machine
    cls = classify(c)
    payload = {"kind": mf.kind, "name": c.name, "states": len(c.states), "counters": len(c.counters),
               "transitions": len(c.transitions), "pPN": cls.is_pPN,
               "safe_one_counter": cls.is_safe_one_counter, "pHM": cls.is_pHM,
               "polynomial": cls.is_polynomial, "static": cls.is_static,
               "warnings": list(c.warnings)}
    if cls.phm_matrix is not None:
        payload["M_C"] = {q: {q2: _frac(p) for q2, p in row.items() if p}
                          for q, row in cls.phm_matrix.items()}
    lines = [f"{c.name}: {len(c.states)} states, {len(c.counters)} counters, "
             f"{len(c.transitions)} transitions", cls.summary()]
    lines += [f"warning: {w}" for w in c.warnings]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def _oracle(args, mf: ModelFile, chain):
    choice = args.oracle
    if choice == "auto":
        return auto_oracle(mf.machine, mf.target, chain, DEFAULT_BUDGET)
    if choice.startswith("bounded"):
        budget = DEFAULT_BUDGET
        if choice.startswith("bounded:"):
            try:
                budget = int(choice.split(":", 1)[1])
            except ValueError:
                raise Failure(f"bad oracle budget in {choice!r}", EXIT_USAGE) from None
        elif choice != "bounded":
            raise Failure(f"unknown oracle {choice!r}", EXIT_USAGE)
        return BoundedOracle(chain, mf.target, budget)
    raise Failure(f"unknown oracle {choice!r} (expected auto or bounded:N)", EXIT_USAGE)


def cmd_crp(args) -> int:
    mf = _load(args.file)
    s0, A = _need_query(mf)
    theta = parse_rational(args.theta)
    chain = semantics(mf.machine)
    oracle = _oracle(args, mf, chain)
    rows: list[TraceRow] = []
    result = comp_prob(chain, s0, A, theta, oracle, args.step_cap, trace=rows.append)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "pmin", "pmax", "frontier_size", "depth"])
            for r in rows:
                w.writerow([r.step, f"{float(r.pmin):.12g}", f"{float(r.pmax):.12g}",
                            r.frontier_size, r.depth])
    interval = result.interval if isinstance(result, Incomplete) else result
    payload = {"oracle": oracle.name, "theta": _frac(theta), "steps": len(rows),
               "low": _frac(interval.low), "up": _frac(interval.up),
               "width": _frac(interval.width), "complete": not isinstance(result, Incomplete)}
    text = (f"Pr(F A) in [{format_rational(interval.low)}, {format_rational(interval.up)}]"
            f" after {len(rows)} steps (oracle: {oracle.name})")
    if isinstance(result, Incomplete):
        payload["reason"] = result.reason
        text = f"incomplete ({result.reason}): {text}"
        _emit(args, payload, text)
        return EXIT_BUDGET
    _emit(args, payload, text)
    return EXIT_OK


def cmd_decide(args) -> int:
    mf = _load(args.file)
    s0, A = _need_query(mf)
    verdict, prob = decide(mf.machine, s0, A, args.bound)
    payload = verdict.to_dict()
    text = str(verdict)
    if prob is not None:
        payload["probability"] = _frac(prob)
        text += f"\nPr(F A) = {format_rational(prob)}"
    _emit(args, payload, text)
    return EXIT_UNSUPPORTED if verdict.answer is Answer.UNSUPPORTED else EXIT_OK


def cmd_simulate(args) -> int:
    mf = _load(args.file)
    s0, A = _need_query(mf)
    report = estimate_reach(semantics(mf.machine), s0, A, args.horizon, args.trials, args.seed,
                            workers=args.workers)
    if args.csv:
        Path(args.csv).write_text(reports_to_csv([report]))
    low, high = report.wilson
    _emit(args, report.to_dict(),
          f"{report.hits}/{report.trials} paths reached A ({report.censored} censored at "
          f"horizon {report.horizon}); 99% Wilson interval [{low:.6f}, {high:.6f}]; "
          f"seed {report.seed} ({report.generator})")
    return EXIT_OK


def cmd_rq(args) -> int:
    mf = _load(args.file)
    table = compute_rq(mf.machine)
    rows = table.as_text()
    _emit(args, {"r_q": rows, "layers": list(table.layers)},
          "\n".join(f"r_{q} = {v}" for q, v in rows.items()))
    return EXIT_OK


def cmd_recast(args) -> int:
    mf = _load(args.file)
    s0, A = _need_query(mf)
    chain = semantics(mf.machine)
    oracle = auto_oracle(mf.machine, A, chain, DEFAULT_BUDGET)
    rc = recast_chain(chain, s0, A, oracle)
    fc, closed = rc.materialize(args.budget)
    if args.edges:
        Path(args.edges).write_text(fc.to_edge_list())
    bottom = fc.index(BOTTOM) if BOTTOM in fc.labels else None
    recurrent = is_recurrent(fc) if closed else None
    payload = {"states": fc.n, "closed": closed, "bottom_reached": bottom is not None,
               "bsccs": len(bsccs(fc)), "recurrent": recurrent, "oracle": oracle.name}
    if closed:
        shadow = "recurrent (decisive)" if recurrent else "not recurrent (not decisive)"
    else:
        shadow = "budget reached before closure; finite shadow inconclusive"
    _emit(args, payload, f"recast chain: {fc.n} states explored, {len(bsccs(fc))} BSCCs; {shadow}")
    return EXIT_OK if closed else EXIT_BUDGET


def _read_program(path: str):
    try:
        return parse_program(Path(path).read_text())
    except OSError as exc:
        raise Failure(f"cannot read {path}: {exc.strerror}", EXIT_USAGE) from None


def cmd_generate(args) -> int:
    what = args.what
    if what == "hilbert":
        poly = parse_polynomial(args.source)
        c = hilbert_pcm(poly)
        out = format_model(model_file(c, Configuration("q", (args.start,)), ZeroTarget(), "pcm"))
    else:
        prog = _read_program(args.source)
        if what == "normalize":
            out = normalize(prog, args.v1, args.v2).to_text()
        else:
            if args.normalize:
                prog = normalize(prog, args.v1, args.v2)
            if what == "static-pcm":
                c, s0, A = program_to_static_pcm(prog)
                out = format_model(model_file(c, s0, A, "pcm"))
            else:
                net, m0, fin, up = program_to_ppn(prog)
                out = format_model(model_file(net, m0, up if args.upward else fin, "ppn"))
    if args.json:
        print(json.dumps({"kind": what, "text": out}, indent=2, sort_keys=True))
    elif args.output:
        Path(args.output).write_text(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


# parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="decisive", description="Decisiveness checks and reachability "
                "probabilities for probabilistic counter machines.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, fn, help_text, model=True):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        if model:
            sp.add_argument("file", help="model file")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.set_defaults(func=fn)
        return sp

    command("check", cmd_check, "validate a model and print its classification")
    sp = command("crp", cmd_crp, "frame Pr(F A) within theta")
    sp.add_argument("--theta", required=True, help="interval width, e.g. 1/100")
    sp.add_argument("--step-cap", type=int, default=None)
    sp.add_argument("--oracle", default="auto", help="auto or bounded:N")
    sp.add_argument("--trace", help="write a per-step CSV trace here")
    sp = command("decide", cmd_decide, "decide decisiveness where the theory allows")
    sp.add_argument("--bound", type=int, default=None, help="regularity bound B for nets")
    sp = command("simulate", cmd_simulate, "Monte-Carlo estimate of Pr(F A)")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--horizon", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--csv", help="write the CSV report here")
    command("rq", cmd_rq, "print the r_q table of a safe one-counter machine")
    sp = command("recast", cmd_recast, "materialize the recast chain and test recurrence")
    sp.add_argument("--budget", type=int, default=10_000)
    sp.add_argument("--edges", help="write the materialized chain as an edge list")
    sp = command("generate", cmd_generate, "emit models built from programs", model=False)
    sp.add_argument("what", choices=["normalize", "static-pcm", "ppn", "hilbert"])
    sp.add_argument("source", help="program file, or a polynomial for hilbert")
    sp.add_argument("--v1", type=int, default=0)
    sp.add_argument("--v2", type=int, default=0)
    sp.add_argument("--normalize", action="store_true", help="normalize the program first")
    sp.add_argument("--upward", action="store_true", help="ppn: use the upward target")
    sp.add_argument("--start", type=int, default=1, help="hilbert: initial counter value")
    sp.add_argument("-o", "--output")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Failure as exc:
        msg, code = str(exc), exc.code
    except ParseError as exc:
        msg, code = f"parse error at {exc}", EXIT_PARSE
    except BudgetExhausted as exc:
        msg, code = str(exc), EXIT_BUDGET
    except DomainError as exc:
        msg, code = str(exc), EXIT_UNSUPPORTED
    except (InputError, DecisiveError) as exc:
        msg, code = str(exc), EXIT_USAGE
    print(f"decisive: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
