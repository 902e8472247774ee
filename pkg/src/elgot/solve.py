"""Solution operators.

* ``solve_unique``: guarded systems, solved by coiteration into a graph.
* ``solve_elgot``: arbitrary set/maybe systems; bare variable references are
  first eliminated by a least fixpoint, then the guarded rest is coiterated.
* ``solve_banach`` / ``solve_kleene``: step-counting and partiality systems,
  solved by iterating from the constant ``inf`` / ``bot`` function.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (Choice, EffectKind, EquationSystem, KindError, Leaf,
                   ParseError, ProcError, SignatureError, Summand)
from .guardedness import (ActionGuarded, GuardednessError, Vacuous,
                          all_actions, check_guarded)
from .procgraph import (GraphBuilder, ProcessGraph, Output,
                        bisimilar, kleisli_substitute, literal_graph,
                        with_signature)


@dataclass(frozen=True)
class SolveTrace:
    iterations: int
    stabilized_at: dict = field(default_factory=dict)


class UnsupportedModeError(ProcError):
    pass


class UnguardedSubDistError(KindError):
    """Unguarded iteration of subdistribution systems is not supported."""


# ---------------------------------------------------------------------------
# process systems

def solve_unique(f: EquationSystem, mode=None) -> tuple:
    """Unique solution of a guarded system as a graph over the params.

    One state per variable plus one per distinct prefix body; a prefix body
    that is a variable leaf steps back into that variable's state.
    """
    if mode is None:
        mode = all_actions(f)
    if not isinstance(mode, (Vacuous, ActionGuarded)):
        raise UnsupportedModeError(f"solve_unique does not support mode {mode}")
    report = check_guarded(f, Summand.all_vars(f), mode)
    if not report.guarded:
        raise GuardednessError(report)
    b = GraphBuilder(f.kind, f.action_names, f.params, system=f)
    g = b.build({x: Leaf(x, True) for x in f.vars})
    return g, SolveTrace(len(b.terms), {x: g.roots[x] for x in f.vars})


def _top_branches(term):
    """Flatten nested choices down to the first prefix/leaf layer."""
    if isinstance(term, Choice):
        for w, t in term.branches:
            for w2, t2 in _top_branches(t):
                yield w * w2, t2
    else:
        yield Fraction(1), term


def epsilon_closure(f: EquationSystem) -> EquationSystem:
    """Eliminate bare variable references by least fixpoint.

    Each top-level variable leaf is replaced in place by the top-level
    branches of the referenced equation, transitively; references that only
    lead back into visited variables contribute nothing.
    """
    if f.kind is EffectKind.SUBDIST:
        raise UnguardedSubDistError("epsilon closure is not defined for subdistributions")
    equations = {}
    for x in f.vars:
        term = f.equations[x]
        if not any(isinstance(t, Leaf) and t.var for _, t in _top_branches(term)):
            equations[x] = term
            continue
        visited = {x}
        collected = []

        def walk(t):
            for _, b in _top_branches(t):
                if isinstance(b, Leaf) and b.var:
                    if b.name not in visited:
                        visited.add(b.name)
                        walk(f.equations[b.name])
                elif b not in collected:
                    collected.append(b)

        walk(term)
        equations[x] = Choice(tuple((Fraction(1), t) for t in collected))
    return f.replace(equations=equations)


def solve_elgot(f: EquationSystem) -> ProcessGraph:
    closed = epsilon_closure(f)
    g, _ = solve_unique(closed, all_actions(closed))
    return g


def check_fixpoint(f: EquationSystem, solution: ProcessGraph) -> bool:
    """Does ``solution`` satisfy ``sol = [eta, sol]^* . f`` up to bisimilarity?"""
    if set(solution.outputs) != set(f.params) or set(solution.roots) != set(f.vars):
        raise SignatureError("solution does not match the system's params/vars")
    one_step = kleisli_substitute(literal_graph(f), solution,
                                  {x: solution.roots[x] for x in f.vars})
    lhs = with_signature(one_step, solution.actions, solution.outputs)
    rhs = with_signature(solution, lhs.actions, lhs.outputs)
    return all(bisimilar(lhs, lhs.roots[x], rhs, rhs.roots[x]).related for x in f.vars)


def rho_outputs(g: ProcessGraph, r: int) -> frozenset:
    """Output names reachable from ``r`` along finite paths."""
    if g.kind is not EffectKind.SET:
        raise KindError(f"output collapse needs a set graph, got {g.kind}")
    seen, stack, found = set(), [r], set()
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        for _, c in g.layers[s].branches:
            if isinstance(c, Output):
                found.add(c.name)
            else:
                stack.append(c.target)
    return frozenset(found)


# ---------------------------------------------------------------------------
# step-counting and maybe values

@dataclass(frozen=True)
class StepDone:
    output: str
    steps: int

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("step count must be non-negative")

    def __str__(self):
        return f"({self.output},{self.steps})"


@dataclass(frozen=True)
class _Infinity:
    def __str__(self):
        return "inf"


INFINITY = _Infinity()


@dataclass(frozen=True)
class FlatDone:
    output: str

    def __str__(self):
        return self.output


@dataclass(frozen=True)
class _Bottom:
    def __str__(self):
        return "bot"


BOTTOM = _Bottom()


def rho_steps(v):
    """Forget the step count: ``(a, k) -> a``, ``inf -> bot``."""
    if v is INFINITY:
        return BOTTOM
    return FlatDone(v.output)


def upsilon_steps(v):
    """Section of ``rho_steps``: ``a -> (a, 1)``, ``bot -> inf``."""
    if v is BOTTOM:
        return INFINITY
    return StepDone(v.output, 1)


@dataclass(frozen=True)
class StepSystem:
    """Rows ``x -> (target, k)`` or ``x -> inf``; targets range over vars + outs."""

    vars: tuple
    outputs: tuple
    table: dict

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "table", dict(self.table))
        names = set(self.vars) | set(self.outputs)
        if set(self.vars) & set(self.outputs):
            raise ProcError("vars and outputs overlap")
        for x in self.vars:
            if x not in self.table:
                raise ProcError(f"no row for {x}")
        for x, row in self.table.items():
            if x not in self.vars:
                raise ProcError(f"row for undeclared var {x}")
            if row is not INFINITY and row.output not in names:
                raise ProcError(f"{x}: undeclared target {row.output}")

    def violations(self) -> list:
        """Var-targeting rows with zero steps (not step-positive guarded)."""
        return [x for x in self.vars if self.table[x] is not INFINITY
                and self.table[x].output in self.vars and self.table[x].steps == 0]


@dataclass(frozen=True)
class FlatSystem:
    """Rows ``x -> target`` or ``x -> bot``."""

    vars: tuple
    outputs: tuple
    table: dict

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "table", dict(self.table))


def upsilon_system(f: FlatSystem) -> StepSystem:
    return StepSystem(f.vars, f.outputs, {x: upsilon_steps(v) for x, v in f.table.items()})


def rho_system(f: StepSystem) -> FlatSystem:
    return FlatSystem(f.vars, f.outputs, {x: rho_steps(v) for x, v in f.table.items()})


class StepGuardError(ProcError):
    pass


def _psi(f: StepSystem, w: dict) -> dict:
    out = {}
    for x in f.vars:
        row = f.table[x]
        if row is INFINITY:
            out[x] = INFINITY
        elif row.output in w:
            prev = w[row.output]
            out[x] = INFINITY if prev is INFINITY else StepDone(prev.output, prev.steps + row.steps)
        else:
            out[x] = row
    return out


def banach_iterates(f: StepSystem) -> list:
    """``W_0 = inf``, ``W_{n+1} = [eta, W_n]^* f`` up to the first repeat."""
    bad = f.violations()
    if bad:
        raise StepGuardError(f"zero-step recursion in {', '.join(bad)}")
    seq = [{x: INFINITY for x in f.vars}]
    while True:
        nxt = _psi(f, seq[-1])
        if nxt == seq[-1]:
            return seq
        seq.append(nxt)
        if len(seq) > len(f.vars) + 2:  # pragma: no cover - guarded systems stabilize
            raise ProcError("Banach iteration failed to stabilize")


def _stabilization(seq, xs):
    final = seq[-1]
    stab = {}
    for x in xs:
        n = len(seq) - 1
        while n > 0 and seq[n - 1][x] == final[x]:
            n -= 1
        stab[x] = n
    return stab


def solve_banach(f: StepSystem) -> tuple:
    seq = banach_iterates(f)
    return seq[-1], SolveTrace(len(seq) - 1, _stabilization(seq, f.vars))


def kleene_iterates(f: FlatSystem) -> list:
    seq = [{x: BOTTOM for x in f.vars}]
    while True:
        w = seq[-1]
        nxt = {}
        for x in f.vars:
            row = f.table[x]
            if row is BOTTOM:
                nxt[x] = BOTTOM
            elif row.output in w:
                nxt[x] = w[row.output]
            else:
                nxt[x] = row
        if nxt == w:
            return seq
        seq.append(nxt)


def solve_kleene(f: FlatSystem) -> tuple:
    seq = kleene_iterates(f)
    return seq[-1], SolveTrace(len(seq) - 1, _stabilization(seq, f.vars))


def step_distance(u, v) -> Fraction:
    """Ultrametric on ``(Y x N) + {inf}`` over the discrete metric on ``Y``."""
    half = Fraction(1, 2)
    if u is INFINITY and v is INFINITY:
        return Fraction(0)
    if u is INFINITY or v is INFINITY:
        k = v.steps if u is INFINITY else u.steps
        return half ** k
    if u.steps == v.steps:
        return half ** u.steps * (0 if u.output == v.output else 1)
    return half ** min(u.steps, v.steps)


def sup_distance(w1: dict, w2: dict) -> Fraction:
    return max((step_distance(w1[x], w2[x]) for x in w1), default=Fraction(0))


def banach_distances(f: StepSystem) -> list:
    """Sup-distance of each Banach iterate to the limit."""
    seq = banach_iterates(f)
    return [sup_distance(w, seq[-1]) for w in seq]


# ---------------------------------------------------------------------------
# text format for step systems

_ROW = re.compile(r"^(?P<x>[A-Za-z_][\w']*)\s*->\s*(?P<t>[A-Za-z_][\w']*)\s*(@\s*(?P<k>\d+))?$")


def parse_steps(text: str) -> StepSystem:
    """``steps; vars x1,x2; outs y; x1 -> x2 @ 1; x2 -> y @ 3; x3 -> inf;``

    A missing ``@ k`` means one step; ``bot`` is accepted for ``inf``.
    """
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    parts = [p.strip() for p in body.split(";")]
    if parts and parts[-1] == "":
        parts.pop()
    else:
        raise ParseError("step system must end with ';'")
    if not parts or parts[0] != "steps":
        raise ParseError("step system must start with 'steps;'")
    vs, outs, table = [], [], {}
    for p in parts[1:]:
        head, _, rest = p.partition(" ")
        if head in ("vars", "outs") and "->" not in p:
            names = [n.strip() for n in rest.split(",") if n.strip()]
            (vs if head == "vars" else outs).extend(names)
            continue
        m = _ROW.match(" ".join(p.split()))
        if not m:
            raise ParseError(f"bad row {p!r}")
        x, t = m.group("x"), m.group("t")
        if x in table:
            raise ParseError(f"duplicate row for {x}")
        if t in ("inf", "bot"):
            if m.group("k") is not None:
                raise ParseError(f"{x}: step count on divergent row")
            table[x] = INFINITY
        else:
            table[x] = StepDone(t, int(m.group("k")) if m.group("k") is not None else 1)
    return StepSystem(vs, outs, table)


def dump_values(values: dict) -> str:
    return "".join(f"{x} = {values[x]}\n" for x in sorted(values))


def dump_trace(trace: SolveTrace) -> str:
    lines = [f"iterations {trace.iterations}"]
    lines += [f"stabilized {x} at {n}" for x, n in sorted(trace.stabilized_at.items())]
    return "\n".join(lines) + "\n"
