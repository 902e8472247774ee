"""Finite-trace semantics of set-valued process graphs.

A trace is a word of actions ending either in an output name or in the
divergence marker ``*``.  Every node contributes ``*`` unconditionally, so
trace sets are prefix-closed.  Exact (unbounded) trace sets are kept as
deterministic automata; bounded explicit sets serve as an oracle.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

from .core import EffectKind, KindError, ProcError, SignatureError
from .procgraph import OneLayer, Output, ProcessGraph, Step

DIVERGENT = "*"


@dataclass(frozen=True, order=True)
class Trace:
    word: tuple
    terminal: str  # an output name or DIVERGENT

    def __str__(self):
        w = ".".join(self.word) if self.word else "-"
        return f"{w} => {self.terminal}"


@dataclass(frozen=True)
class TraceSet:
    traces: frozenset
    depth: int

    def is_prefix_closed(self) -> bool:
        for t in self.traces:
            for i in range(len(t.word) + 1):
                if Trace(t.word[:i], DIVERGENT) not in self.traces:
                    return False
        return True

    def restrict(self, depth: int) -> "TraceSet":
        return TraceSet(frozenset(t for t in self.traces if len(t.word) <= depth), depth)

    def dump(self) -> str:
        ordered = sorted(self.traces, key=lambda t: (len(t.word), t.word, t.terminal != DIVERGENT, t.terminal))
        return "".join(f"{t}\n" for t in ordered)


@dataclass(frozen=True)
class TraceAutomaton:
    actions: tuple
    output_names: tuple
    outputs: tuple  # frozenset of output names per state
    transitions: Mapping  # (state, action) -> state
    start: int = 0

    def __len__(self):
        return len(self.outputs)

    def successors(self, q):
        return {a: t for (p, a), t in self.transitions.items() if p == q}

    def dump(self) -> str:
        lines = [f"start (d)q{self.start}"]
        for q, outs in enumerate(self.outputs):
            lines += [f"(d)q{q} => out {o}" for o in sorted(outs)]
            lines += [f"(d)q{q} --{a}--> (d)q{t}" for a, t in sorted(self.successors(q).items())]
        return "\n".join(lines) + "\n"


def _require_set(g: ProcessGraph):
    if g.kind is not EffectKind.SET:
        raise KindError(f"trace semantics needs a set graph, got {g.kind}")


def traces_bounded(g: ProcessGraph, r: int, depth: int) -> TraceSet:
    """All traces of length at most ``depth`` from state ``r``."""
    _require_set(g)
    if depth < 0:
        raise ValueError("depth must be non-negative")
    memo = {}

    def rho(s, d):
        if (s, d) in memo:
            return memo[s, d]
        found = {Trace((), DIVERGENT)}
        for _, c in g.layers[s].branches:
            if isinstance(c, Output):
                found.add(Trace((), c.name))
            elif d > 0:
                found |= {Trace((c.action,) + t.word, t.terminal) for t in rho(c.target, d - 1)}
        memo[s, d] = frozenset(found)
        return memo[s, d]

    return TraceSet(rho(r, depth), depth)


def automaton_traces(aut: TraceAutomaton, depth: int) -> TraceSet:
    found = set()
    frontier = [((), aut.start)]
    for d in range(depth + 1):
        nxt = []
        for word, q in frontier:
            found.add(Trace(word, DIVERGENT))
            found |= {Trace(word, o) for o in aut.outputs[q]}
            if d < depth:
                nxt += [(word + (a,), t) for a, t in sorted(aut.successors(q).items())]
        frontier = nxt
    return TraceSet(frozenset(found), depth)


# ---------------------------------------------------------------------------
# determinization

def _canonical(actions, output_names, start, outputs: Mapping, moves: Mapping) -> TraceAutomaton:
    """Minimize (Moore) then number states breadth-first by sorted action."""
    states = list(outputs)
    cls = {q: outputs[q] for q in states}
    ncls = len(set(cls.values()))
    while True:
        sig = {q: (cls[q], tuple(sorted((a, cls[t]) for a, t in moves[q].items()))) for q in states}
        ids = {}
        new = {q: ids.setdefault(sig[q], len(ids)) for q in states}
        if len(ids) == ncls:
            break
        cls, ncls = new, len(ids)
    cls = new
    rep = {}
    for q in states:
        rep.setdefault(cls[q], q)
    order = {cls[start]: 0}
    queue = deque([cls[start]])
    trans = {}
    while queue:
        c = queue.popleft()
        for a, t in sorted(moves[rep[c]].items()):
            tc = cls[t]
            if tc not in order:
                order[tc] = len(order)
                queue.append(tc)
            trans[order[c], a] = order[tc]
    outs = [None] * len(order)
    for c, i in order.items():
        outs[i] = frozenset(outputs[rep[c]])
    return TraceAutomaton(tuple(actions), tuple(output_names), tuple(outs), trans, 0)


def _determinize(actions, output_names, starts, nfa_outputs, nfa_moves) -> TraceAutomaton:
    """Subset construction; ``nfa_moves(q)`` yields ``(action, target)``."""
    start = frozenset(starts)
    outputs, moves = {}, {}
    queue = deque([start])
    seen = {start}
    while queue:
        S = queue.popleft()
        outs = set()
        succ = {}
        for q in S:
            outs |= nfa_outputs(q)
            for a, t in nfa_moves(q):
                succ.setdefault(a, set()).add(t)
        outputs[S] = frozenset(outs)
        moves[S] = {}
        for a, ts in succ.items():
            T = frozenset(ts)
            moves[S][a] = T
            if T not in seen:
                seen.add(T)
                queue.append(T)
    return _canonical(actions, output_names, start, outputs, moves)


def rho_trace_automaton(g: ProcessGraph, r: int) -> TraceAutomaton:
    """Deterministic automaton of the full (prefix-closed) trace set of ``r``."""
    _require_set(g)
    if not 0 <= r < len(g):
        raise SignatureError(f"unknown state {r}")

    def outs(q):
        return {c.name for _, c in g.layers[q].branches if isinstance(c, Output)}

    def moves(q):
        return [(c.action, c.target) for _, c in g.layers[q].branches if isinstance(c, Step)]

    return _determinize(g.actions, g.outputs, [r], outs, moves)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def automata_equivalent(a1: TraceAutomaton, a2: TraceAutomaton) -> bool:
    """Hopcroft-Karp: union-find over state pairs of the two automata."""
    uf = _UnionFind()
    todo = [(a1.start, a2.start)]
    uf.union((1, a1.start), (2, a2.start))
    while todo:
        p, q = todo.pop()
        if a1.outputs[p] != a2.outputs[q]:
            return False
        s1, s2 = a1.successors(p), a2.successors(q)
        if set(s1) != set(s2):
            return False
        for a in s1:
            if uf.union((1, s1[a]), (2, s2[a])):
                todo.append((s1[a], s2[a]))
    return True


def trace_equiv(g1: ProcessGraph, r1: int, g2: ProcessGraph, r2: int) -> bool:
    _require_set(g1), _require_set(g2)
    if set(g1.actions) != set(g2.actions) or set(g1.outputs) != set(g2.outputs):
        raise SignatureError("trace comparison needs equal actions and outputs")
    return automata_equivalent(rho_trace_automaton(g1, r1), rho_trace_automaton(g2, r2))


def upsilon_determinize(aut: TraceAutomaton) -> ProcessGraph:
    """One graph state per automaton state: its outputs, one step per letter."""
    layers = []
    for q, outs in enumerate(aut.outputs):
        branches = [(1, Output(o)) for o in outs]
        branches += [(1, Step(a, t)) for a, t in aut.successors(q).items()]
        layers.append(OneLayer.make(EffectKind.SET, branches))
    return ProcessGraph(EffectKind.SET, aut.actions, aut.output_names, layers, {"start": aut.start})


def upsilon_morphism(auts: Mapping[str, TraceAutomaton]) -> ProcessGraph:
    """Determinized graphs for several named trace sets, as one morphism."""
    from .procgraph import copair, rename_roots
    g = None
    for name, aut in auts.items():
        h = rename_roots(upsilon_determinize(aut), {"start": name})
        g = h if g is None else copair(g, h)
    return g


# ---------------------------------------------------------------------------
# iteration directly on trace sets

def trace_iterate(auts: Mapping[str, TraceAutomaton], loop: Mapping[str, str],
                  elgot: bool = False) -> dict:
    """Solve a system given as trace automata over outputs ``Y + X'``.

    A state emitting a loop output ``x'`` continues as the start of the
    automaton for ``loop[x']``; in unique mode starts may not emit loop
    outputs, in Elgot mode such references are closed transitively.
    """
    names = list(auts)
    some = next(iter(auts.values()))
    out_names = tuple(o for o in some.output_names if o not in loop)

    def var_closure(name):
        seen, stack = {name}, [name]
        while stack:
            n = stack.pop()
            for o in auts[n].outputs[auts[n].start]:
                if o in loop:
                    if not elgot:
                        raise ProcError(f"trace system for {n} emits {o} unguarded")
                    if loop[o] not in seen:
                        seen.add(loop[o])
                        stack.append(loop[o])
        return seen

    closures = {n: var_closure(n) for n in names}

    def expand(node):
        n, q = node
        nodes = {node}
        for o in auts[n].outputs[q]:
            if o in loop:
                nodes |= {(m, auts[m].start) for m in closures[loop[o]]}
        return nodes

    def outs(node):
        found = set()
        for n, q in expand(node):
            found |= {o for o in auts[n].outputs[q] if o not in loop}
        return found

    def moves(node):
        result = []
        for n, q in expand(node):
            result += [(a, (n, t)) for a, t in auts[n].successors(q).items()]
        return result

    return {n: _determinize(some.actions, out_names, [(n, auts[n].start)], outs, moves)
            for n in names}
