"""Command-line front end.

Exit codes: 0 on success or a positive answer, 1 for a negative answer or a
failing law, 2 for bad input (parse, validation, guardedness, signatures).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import ProcError, Summand, format_system, parse_system
from .core import copair as copair_systems
from .guardedness import (ActionGuarded, StepPositive, Total, Vacuous,
                          check_guarded, visible_actions, weaken)
from .laws import format_report, run_laws
from .procgraph import (bisimilar, bounded_unfold, dump_lts, minimize,
                        with_signature)
from .solve import (check_fixpoint, dump_trace, dump_values, epsilon_closure,
                    parse_steps, rho_outputs, rho_system, solve_banach,
                    solve_elgot, solve_kleene, solve_unique)
from .trace import (rho_trace_automaton, trace_equiv, traces_bounded,
                    upsilon_determinize)

DEFAULT_SEED = 1


class UsageError(ProcError):
    pass


def _names(text):
    return [n.strip() for n in text.split(",") if n.strip()] if text else []


def _load(paths):
    systems = []
    for path in paths:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise UsageError(f"{path}: {e.strerror}") from None
        try:
            systems.append(parse_system(text))
        except ProcError as e:
            raise ProcError(f"{path}: {e}") from e
    f = systems[0]
    for g in systems[1:]:
        f = copair_systems(f, g)
    return f


def _guard_mode(name, f, guards):
    if name == "vacuous":
        return Vacuous()
    if name == "action":
        return ActionGuarded(frozenset(_names(guards) if guards else f.action_names))
    if name == "visible":
        return visible_actions(f)
    if name == "step":
        return StepPositive()
    if name == "total":
        return Total()
    raise UsageError(f"unknown mode {name}")


def _solve(f, mode, guards=None):
    if mode == "elgot":
        return solve_elgot(f)
    gm = ActionGuarded(frozenset(_names(guards))) if guards else None
    return solve_unique(f, gm)[0]


def _root(g, name):
    return g.root(name)


def _aligned(g1, g2):
    g1 = with_signature(g1, g2.actions, g2.outputs)
    g2 = with_signature(g2, g1.actions, g1.outputs)
    return g1, g2


# ---------------------------------------------------------------------------
# commands

def cmd_check(args, out):
    f = _load(args.files)
    names = _names(args.guard_in)
    sigma = Summand.all_vars(f)
    if names:
        sigma = weaken(Summand.of(f.names), Summand.of(names))
    report = check_guarded(f, sigma, _guard_mode(args.mode, f, args.guards))
    out.write("\n".join(report.lines()) + "\n")
    if not report.guarded:
        raise ProcError(f"system is not guarded in {{{', '.join(sorted(sigma.guarded_names))}}}")
    return 0


def cmd_solve(args, out):
    f = _load(args.files)
    if args.show_closure:
        out.write(format_system(epsilon_closure(f)))
    g = _solve(f, args.mode, args.guards)
    out.write(dump_lts(minimize(g)))
    if args.verify:
        out.write("fixpoint " + ("ok" if check_fixpoint(f, g) else "FAILED") + "\n")
    if args.unfold is not None:
        for name in sorted(g.roots):
            out.write(f"unfold {name} = {bounded_unfold(g, g.roots[name], args.unfold)}\n")
    return 0


def cmd_bisim(args, out):
    g1 = _solve(_load([args.file1]), args.mode)
    g2 = _solve(_load([args.file2]), args.mode)
    g1, g2 = _aligned(g1, g2)
    res = bisimilar(g1, _root(g1, args.root1), g2, _root(g2, args.root2))
    if res.related:
        out.write("yes\n")
        return 0
    out.write(f"no (depth {res.distinguishing_depth})\n")
    return 1


def cmd_traces(args, out):
    if args.depth < 0:
        raise UsageError("depth must be non-negative")
    g = _solve(_load([args.file]), args.mode)
    out.write(traces_bounded(g, _root(g, args.root), args.depth).dump())
    return 0


def cmd_trace_equiv(args, out):
    g1 = _solve(_load([args.file1]), args.mode)
    g2 = _solve(_load([args.file2]), args.mode)
    g1, g2 = _aligned(g1, g2)
    same = trace_equiv(g1, _root(g1, args.root1), g2, _root(g2, args.root2))
    out.write("yes\n" if same else "no\n")
    return 0 if same else 1


def cmd_collapse(args, out):
    g = _solve(_load([args.file]), args.mode)
    r = _root(g, args.root)
    if args.to == "outputs":
        out.write("{" + ", ".join(sorted(rho_outputs(g, r))) + "}\n")
        return 0
    aut = rho_trace_automaton(g, r)
    out.write(aut.dump())
    if args.determinize:
        out.write(dump_lts(minimize(upsilon_determinize(aut))))
    return 0


def cmd_steps_solve(args, out):
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"{args.file}: {e.strerror}") from None
    f = parse_steps(text)
    if args.method == "banach":
        values, trace = solve_banach(f)
    else:
        values, trace = solve_kleene(rho_system(f))
    out.write(dump_values(values))
    out.write(dump_trace(trace))
    return 0


def cmd_laws(args, out):
    try:
        verdicts = run_laws(args.instance, args.mode, args.seed, args.trials, args.law)
    except (KeyError, ValueError) as e:
        raise UsageError(str(e).strip("'\"")) from None
    out.write(format_report(verdicts, args.instance, args.mode, args.seed, args.trials))
    failed = [v for v in verdicts if not v.passed and not v.informational]
    return 1 if failed else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elgot", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="decide guardedness of a system")
    c.add_argument("files", nargs="+", help="system file(s); several are copaired")
    c.add_argument("--mode", default="action", choices=["vacuous", "action", "visible", "step", "total"])
    c.add_argument("--guards", help="guard actions for --mode action (default: all)")
    c.add_argument("--guard-in", help="summand names (default: all vars)")
    c.set_defaults(run=cmd_check)

    s = sub.add_parser("solve", help="solve a system and dump the minimized graph")
    s.add_argument("files", nargs="+", help="system file(s); several are copaired")
    s.add_argument("--mode", default="unique", choices=["unique", "elgot"])
    s.add_argument("--guards", help="guard actions for unique mode (default: all)")
    s.add_argument("--show-closure", action="store_true", help="print the epsilon-closed system first")
    s.add_argument("--verify", action="store_true", help="check the fixpoint identity")
    s.add_argument("--unfold", type=int, metavar="K", help="print depth-K unfoldings of the roots")
    s.set_defaults(run=cmd_solve)

    for name, fn, help_ in (("bisim", cmd_bisim, "strong bisimilarity of two roots"),
                            ("trace-equiv", cmd_trace_equiv, "finite-trace equivalence of two roots")):
        b = sub.add_parser(name, help=help_)
        b.add_argument("file1")
        b.add_argument("root1")
        b.add_argument("file2")
        b.add_argument("root2")
        b.add_argument("--mode", default="unique", choices=["unique", "elgot"])
        b.set_defaults(run=fn)

    t = sub.add_parser("traces", help="bounded trace set of a root")
    t.add_argument("file")
    t.add_argument("root")
    t.add_argument("--depth", type=int, required=True)
    t.add_argument("--mode", default="unique", choices=["unique", "elgot"])
    t.set_defaults(run=cmd_traces)

    k = sub.add_parser("collapse", help="image of a solution under an output or trace collapse")
    k.add_argument("file")
    k.add_argument("root")
    k.add_argument("--to", default="outputs", choices=["outputs", "traces"])
    k.add_argument("--mode", default="unique", choices=["unique", "elgot"])
    k.add_argument("--determinize", action="store_true", help="also dump the determinized process")
    k.set_defaults(run=cmd_collapse)

    st = sub.add_parser("steps-solve", help="solve a step-counting system")
    st.add_argument("file")
    st.add_argument("--method", default="banach", choices=["banach", "kleene"])
    st.set_defaults(run=cmd_steps_solve)

    law = sub.add_parser("laws", help="randomized law checks")
    law.add_argument("--instance", default="set", choices=["set", "maybe", "subdist", "steps"])
    law.add_argument("--mode", default="unique", choices=["unique", "elgot"])
    law.add_argument("--seed", type=int, default=DEFAULT_SEED)
    law.add_argument("--trials", type=int, default=200)
    law.add_argument("--law", help="run a single law")
    law.set_defaults(run=cmd_laws)
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.run(args, out)
    except ProcError as e:
        err.write(f"error: {e}\n")
        return 2


def main() -> None:
    sys.exit(run())
