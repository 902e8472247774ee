"""Finite rational process graphs.

A graph presents elements of the final coalgebra of ``T(X + A x -)``: each
state stores exactly one layer (its ``out``), a canonical list of weighted
branches that either emit an output name or take an action step into another
state.  A graph with a set of named roots doubles as a Kleisli morphism
``roots -> T_A(outputs)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .core import (EffectKind, EquationSystem, KindError, Leaf,
                   Prefix, ProcError, SignatureError, TAU)

ONE = Fraction(1)


@dataclass(frozen=True, order=True)
class Output:
    name: str

    def sort_key(self):
        return (0, self.name, -1)


@dataclass(frozen=True, order=True)
class Step:
    action: str
    target: int

    def sort_key(self):
        return (1, self.action, self.target)


@dataclass(frozen=True)
class OneLayer:
    branches: tuple = ()  # of (Fraction, Output | Step), canonical

    @classmethod
    def make(cls, kind: EffectKind, branches) -> "OneLayer":
        """Sort and merge branches: union for set/maybe, weight sum for subdist."""
        merged = {}
        for w, c in branches:
            w = Fraction(w)
            if kind is EffectKind.SUBDIST:
                if w == 0:
                    continue
                merged[c] = merged.get(c, 0) + w
            else:
                merged[c] = ONE
        items = sorted(merged.items(), key=lambda kv: kv[0].sort_key())
        if kind is EffectKind.MAYBE and len(items) > 1:
            raise KindError("maybe layer with more than one branch")
        if kind is EffectKind.SUBDIST and sum(w for _, w in items) > 1:
            raise ProcError("subdistribution weight overflow")
        return cls(tuple((w, c) for c, w in items))

    @property
    def weight(self) -> Fraction:
        return sum((w for w, _ in self.branches), Fraction(0))

    def outputs(self):
        return [(w, c.name) for w, c in self.branches if isinstance(c, Output)]

    def steps(self):
        return [(w, c) for w, c in self.branches if isinstance(c, Step)]


class UnguardedError(ProcError):
    """Unique iteration requested for a morphism with unguarded root outputs."""


@dataclass(frozen=True)
class ProcessGraph:
    kind: EffectKind
    actions: tuple
    outputs: tuple
    layers: tuple
    roots: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", EffectKind(self.kind))
        acts = tuple(self.actions)
        if TAU not in acts:
            acts = acts + (TAU,)
        object.__setattr__(self, "actions", acts)
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "roots", dict(self.roots))
        n = len(self.layers)
        outs, acts = set(self.outputs), set(self.actions)
        for s, layer in enumerate(self.layers):
            for _, c in layer.branches:
                if isinstance(c, Output):
                    if c.name not in outs:
                        raise SignatureError(f"q{s}: undeclared output {c.name}")
                else:
                    if not 0 <= c.target < n:
                        raise SignatureError(f"q{s}: step into unknown state {c.target}")
                    if c.action not in acts:
                        raise SignatureError(f"q{s}: undeclared action {c.action}")
        for name, s in self.roots.items():
            if not 0 <= s < n:
                raise SignatureError(f"root {name}: unknown state {s}")

    def __len__(self):
        return len(self.layers)

    def root(self, name: str) -> int:
        try:
            return self.roots[name]
        except KeyError:
            raise SignatureError(f"no root named {name!r}") from None

    def replace(self, **changes) -> "ProcessGraph":
        data = dict(kind=self.kind, actions=self.actions, outputs=self.outputs,
                    layers=self.layers, roots=self.roots)
        data.update(changes)
        return ProcessGraph(**data)


def out(g: ProcessGraph, s: int) -> OneLayer:
    if not 0 <= s < len(g.layers):
        raise SignatureError(f"unknown state {s}")
    return g.layers[s]


def rebuild(g: ProcessGraph) -> ProcessGraph:
    """Reconstruct ``g`` from its own layers (``out`` followed by ``out^-1``)."""
    layers = [OneLayer.make(g.kind, out(g, s).branches) for s in range(len(g))]
    return ProcessGraph(g.kind, g.actions, g.outputs, layers, g.roots)


def with_signature(g: ProcessGraph, actions=(), outputs=()) -> ProcessGraph:
    """Widen the declared actions/outputs of ``g`` (no structural change)."""
    acts = tuple(g.actions) + tuple(a for a in actions if a not in g.actions)
    outs = tuple(g.outputs) + tuple(o for o in outputs if o not in g.outputs)
    return g.replace(actions=acts, outputs=outs)


def _union_signature(*gs):
    acts, outs = [], []
    for g in gs:
        acts += [a for a in g.actions if a not in acts]
        outs += [o for o in g.outputs if o not in outs]
    return tuple(acts), tuple(outs)


def _shift(layer: OneLayer, offset: int):
    return [(w, Step(c.action, c.target + offset) if isinstance(c, Step) else c)
            for w, c in layer.branches]


def trim(g: ProcessGraph) -> ProcessGraph:
    """Drop states unreachable from the roots, keeping relative order."""
    seen = set()
    stack = list(g.roots.values())
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        stack.extend(c.target for _, c in g.layers[s].branches if isinstance(c, Step))
    if len(seen) == len(g.layers):
        return g
    keep = sorted(seen)
    index = {s: i for i, s in enumerate(keep)}
    layers = [OneLayer.make(g.kind, [(w, Step(c.action, index[c.target]) if isinstance(c, Step) else c)
                                     for w, c in g.layers[s].branches]) for s in keep]
    return g.replace(layers=layers, roots={k: index[v] for k, v in g.roots.items()})


# ---------------------------------------------------------------------------
# construction from syntax

class GraphBuilder:
    """Turns terms into layers, allocating one state per distinct prefix body.

    With ``system`` given, variable leaves are resolved against it: a prefix
    body that is a variable leaf steps straight into the variable's state and
    a bare variable leaf inside a body splices that variable's layer.
    Without it, every leaf becomes an output.
    """

    def __init__(self, kind, actions, outputs, system: EquationSystem | None = None):
        self.kind = EffectKind(kind)
        self.actions = tuple(actions)
        self.outputs = tuple(outputs)
        self.system = system
        self.terms = []
        self.index = {}
        self.layers = {}

    def state_of(self, term) -> int:
        if self.system is not None and isinstance(term, Leaf) and term.var:
            term = ("var", term.name)
        if term not in self.index:
            self.index[term] = len(self.terms)
            self.terms.append(term)
        return self.index[term]

    def flatten(self, term, weight=ONE, active=()):
        if isinstance(term, Leaf):
            if self.system is not None and term.var:
                if term.name in active:
                    raise UnguardedError(
                        f"unguarded recursion through {' -> '.join(active + (term.name,))}")
                return self.flatten(self.system.equations[term.name], weight,
                                    active + (term.name,))
            return [(weight, Output(term.name))]
        if isinstance(term, Prefix):
            return [(weight, Step(term.action, self.state_of(term.body)))]
        out = []
        for w, t in term.branches:
            out += self.flatten(t, weight * w, active)
        return out

    def _term_for(self, key):
        if isinstance(key, tuple) and key and key[0] == "var":
            return Leaf(key[1], True)
        return key

    def build(self, roots: Mapping[str, object]) -> ProcessGraph:
        """``roots`` maps root names to terms (or to already allocated keys)."""
        root_states = {name: self.state_of(t) for name, t in roots.items()}
        done = 0
        while done < len(self.terms):
            s = done
            self.layers[s] = OneLayer.make(self.kind, self.flatten(self._term_for(self.terms[s])))
            done += 1
        layers = [self.layers[s] for s in range(len(self.terms))]
        return trim(ProcessGraph(self.kind, self.actions, self.outputs, layers, root_states))


def literal_graph(system: EquationSystem) -> ProcessGraph:
    """``f : X -> T_A(Y + X)`` as a graph whose outputs are params and vars."""
    b = GraphBuilder(system.kind, system.action_names, system.params + system.vars)
    # var roots get their own states even if two equations coincide
    roots = {}
    for x in system.vars:
        key = ("root", x)
        b.index[key] = len(b.terms)
        b.terms.append(system.equations[x])
        roots[x] = b.index[key]
    while len(b.layers) < len(b.terms):
        s = len(b.layers)
        b.layers[s] = OneLayer.make(b.kind, b.flatten(b.terms[s]))
    layers = [b.layers[s] for s in range(len(b.terms))]
    return trim(ProcessGraph(b.kind, b.actions, b.outputs, layers, roots))


def term_graph(kind, actions, outputs, terms: Mapping[str, object]) -> ProcessGraph:
    """Graph with one root per entry of ``terms``; all leaves are outputs."""
    b = GraphBuilder(kind, actions, outputs)
    roots = {}
    for name, t in terms.items():
        b.index[("root", name)] = len(b.terms)
        roots[name] = len(b.terms)
        b.terms.append(t)
    while len(b.layers) < len(b.terms):
        s = len(b.layers)
        b.layers[s] = OneLayer.make(b.kind, b.flatten(b.terms[s]))
    layers = [b.layers[s] for s in range(len(b.terms))]
    return trim(ProcessGraph(kind, actions, outputs, layers, roots))


# ---------------------------------------------------------------------------
# Kleisli structure

def map_outputs(g: ProcessGraph, h: Mapping[str, object]) -> ProcessGraph:
    """Apply ``h`` to output leaves.

    Values of ``h`` are new output names (or ``Output``) or a ``Step`` into a
    state of ``g`` itself.
    """
    missing = [o for o in g.outputs if o not in h]
    if missing:
        raise SignatureError(f"renaming undefined on {', '.join(missing)}")
    new_outputs = []
    for o in g.outputs:
        v = h[o]
        name = v if isinstance(v, str) else getattr(v, "name", None)
        if name is not None and name not in new_outputs:
            new_outputs.append(name)

    def image(c):
        if not isinstance(c, Output):
            return c
        v = h[c.name]
        return Output(v) if isinstance(v, str) else v

    layers = [OneLayer.make(g.kind, [(w, image(c)) for w, c in layer.branches])
              for layer in g.layers]
    return ProcessGraph(g.kind, g.actions, new_outputs, layers, g.roots)


def rename_roots(g: ProcessGraph, renaming: Mapping[str, str]) -> ProcessGraph:
    return g.replace(roots={renaming.get(k, k): v for k, v in g.roots.items()})


def restrict_roots(g: ProcessGraph, names) -> ProcessGraph:
    return trim(g.replace(roots={k: g.roots[k] for k in names}))


def copair(f: ProcessGraph, g: ProcessGraph) -> ProcessGraph:
    """``[f, g]``: disjoint union of two morphisms with disjoint root names."""
    if f.kind is not g.kind:
        raise KindError(f"cannot copair {f.kind} with {g.kind}")
    clash = set(f.roots) & set(g.roots)
    if clash:
        raise SignatureError(f"overlapping roots: {', '.join(sorted(clash))}")
    acts, outs = _union_signature(f, g)
    n = len(f.layers)
    layers = list(f.layers) + [OneLayer.make(g.kind, _shift(l, n)) for l in g.layers]
    roots = dict(f.roots)
    roots.update({k: v + n for k, v in g.roots.items()})
    return ProcessGraph(f.kind, acts, outs, layers, roots)


def kleisli_substitute(g: ProcessGraph, h: ProcessGraph, bind: Mapping[str, int]) -> ProcessGraph:
    """Replace every ``Output(y)`` of ``g`` with ``y`` in ``bind`` by the layer of
    ``h`` at state ``bind[y]``; the remaining outputs pass through.

    This is ``[eta, h]^* . g`` with ``h`` read as a morphism from the bound
    names.
    """
    if g.kind is not h.kind:
        raise KindError(f"cannot substitute {h.kind} into {g.kind}")
    if not bind:
        return g
    for y, s in bind.items():
        if not 0 <= s < len(h.layers):
            raise SignatureError(f"binding for {y}: unknown state {s}")
    n = len(g.layers)
    h_layers = [_shift(l, n) for l in h.layers]
    layers = []
    for layer in g.layers:
        branches = []
        for w, c in layer.branches:
            if isinstance(c, Output) and c.name in bind:
                branches += [(w * w2, c2) for w2, c2 in h_layers[bind[c.name]]]
            else:
                branches.append((w, c))
        layers.append(OneLayer.make(g.kind, branches))
    layers += [OneLayer.make(h.kind, l) for l in h_layers]
    outs = [o for o in g.outputs if o not in bind]
    outs += [o for o in h.outputs if o not in outs]
    acts, _ = _union_signature(g, h)
    return trim(ProcessGraph(g.kind, acts, outs, layers, g.roots))


def compose(f: ProcessGraph, g: ProcessGraph) -> ProcessGraph:
    """``g^* . f``: substitute every output of ``f`` that is a root of ``g``."""
    return kleisli_substitute(f, g, {y: g.roots[y] for y in f.outputs if y in g.roots})


def iterate(f: ProcessGraph, loop: Mapping[str, str], elgot: bool = False) -> ProcessGraph:
    """Solve ``f : X -> T_A(Y + X')`` where ``loop`` maps each ``X'`` output to
    the root it recurs into.

    Unique mode requires root layers free of loop outputs and splices each
    root layer once.  Elgot mode first closes root layers under loop outputs
    by least fixpoint (reachability), then splices.
    """
    for o, r in loop.items():
        if r not in f.roots:
            raise SignatureError(f"loop output {o} refers to unknown root {r}")
    closure = {}
    if not elgot:
        for o, r in loop.items():
            layer = f.layers[f.roots[r]]
            bad = [c.name for _, c in layer.branches if isinstance(c, Output) and c.name in loop]
            if bad:
                raise UnguardedError(f"root {r} outputs {', '.join(bad)} unguarded")
            closure[r] = list(layer.branches)
    else:
        if f.kind is EffectKind.SUBDIST:
            raise KindError("unguarded iteration is not available for subdistributions")
        for r in set(loop.values()):
            branches, seen, stack = [], {r}, [r]
            while stack:
                q = stack.pop(0)
                for w, c in f.layers[f.roots[q]].branches:
                    if isinstance(c, Output) and c.name in loop:
                        nxt = loop[c.name]
                        if nxt not in seen:
                            seen.add(nxt)
                            stack.append(nxt)
                    else:
                        branches.append((w, c))
            closure[r] = branches
    layers = []
    for layer in f.layers:
        branches = []
        for w, c in layer.branches:
            if isinstance(c, Output) and c.name in loop:
                branches += [(w * w2, c2) for w2, c2 in closure[loop[c.name]]]
            else:
                branches.append((w, c))
        layers.append(OneLayer.make(f.kind, branches))
    outs = [o for o in f.outputs if o not in loop]
    return trim(ProcessGraph(f.kind, f.actions, outs, layers, f.roots))


# ---------------------------------------------------------------------------
# bisimilarity

def _observe(kind, layer: OneLayer):
    outs, acts = {}, {}
    for w, c in layer.branches:
        if isinstance(c, Output):
            outs[c.name] = outs.get(c.name, 0) + w
        else:
            acts[c.action] = acts.get(c.action, 0) + w
    if kind is EffectKind.SUBDIST:
        return tuple(sorted(outs.items())), tuple(sorted(acts.items()))
    return tuple(sorted(outs)), tuple(sorted(acts))


def _signature(kind, layer: OneLayer, cls):
    steps = {}
    for w, c in layer.branches:
        if isinstance(c, Step):
            key = (c.action, cls[c.target])
            steps[key] = steps.get(key, 0) + w
    if kind is EffectKind.SUBDIST:
        return tuple(sorted(steps.items()))
    return tuple(sorted(steps))


def _number(keys):
    ids = {}
    return [ids.setdefault(k, len(ids)) for k in keys]


def refine(kind: EffectKind, layers) -> list:
    """Partition refinement; returns the partition after every round.

    Round 0 groups states by their one-layer observation (output names and
    enabled actions, with total weights for subdistributions); each further
    round splits by aggregated step targets per class.
    """
    cls = _number([_observe(kind, l) for l in layers])
    history = [cls]
    while True:
        new = _number([(cls[s], _signature(kind, layers[s], cls)) for s in range(len(layers))])
        if max(new, default=-1) == max(cls, default=-1):
            return history
        cls = new
        history.append(cls)


@dataclass(frozen=True)
class BisimResult:
    related: bool
    distinguishing_depth: int | None
    partition: tuple

    def __bool__(self):
        return self.related


def _check_signature(g1, g2):
    if g1.kind is not g2.kind:
        raise SignatureError(f"effect kinds differ: {g1.kind} vs {g2.kind}")
    if set(g1.actions) != set(g2.actions):
        raise SignatureError("action sets differ")
    if set(g1.outputs) != set(g2.outputs):
        raise SignatureError("output sets differ")


def _disjoint_layers(g1, g2):
    n = len(g1.layers)
    return list(g1.layers) + [OneLayer(tuple(_shift(l, n))) for l in g2.layers], n


def bisimilar(g1: ProcessGraph, r1: int, g2: ProcessGraph, r2: int) -> BisimResult:
    _check_signature(g1, g2)
    out(g1, r1), out(g2, r2)
    layers, n = _disjoint_layers(g1, g2)
    history = refine(g1.kind, layers)
    a, b = r1, r2 + n
    depth = next((i for i, cls in enumerate(history) if cls[a] != cls[b]), None)
    final = history[-1]
    return BisimResult(final[a] == final[b], depth, tuple(final))


def morphism_diff(f: ProcessGraph, g: ProcessGraph) -> list:
    """Root names on which two morphisms are not bisimilar (after widening)."""
    if f.kind is not g.kind:
        raise SignatureError(f"effect kinds differ: {f.kind} vs {g.kind}")
    if set(f.roots) != set(g.roots):
        raise SignatureError("root sets differ")
    layers, n = _disjoint_layers(f, g)
    final = refine(f.kind, layers)[-1]
    return [r for r in f.roots if final[f.roots[r]] != final[g.roots[r] + n]]


def morphisms_bisimilar(f: ProcessGraph, g: ProcessGraph) -> bool:
    return not morphism_diff(f, g)


def minimize(g: ProcessGraph) -> ProcessGraph:
    """Quotient by bisimilarity, trim, and renumber breadth-first from the
    roots (taken in name order)."""
    if not g.layers:
        return g
    cls = refine(g.kind, g.layers)[-1]
    rep = {}
    for s, c in enumerate(cls):
        rep.setdefault(c, s)
    quotient = {c: OneLayer.make(g.kind, [(w, Step(b.action, cls[b.target]) if isinstance(b, Step) else b)
                                         for w, b in g.layers[s].branches])
                for c, s in rep.items()}
    order = {}
    queue = deque()
    for name in sorted(g.roots):
        c = cls[g.roots[name]]
        if c not in order:
            order[c] = len(order)
            queue.append(c)
    while queue:
        c = queue.popleft()
        for _, b in quotient[c].branches:
            if isinstance(b, Step) and b.target not in order:
                order[b.target] = len(order)
                queue.append(b.target)
    layers = [None] * len(order)
    for c, i in order.items():
        layers[i] = OneLayer.make(g.kind, [(w, Step(b.action, order[b.target]) if isinstance(b, Step) else b)
                                           for w, b in quotient[c].branches])
    roots = {name: order[cls[s]] for name, s in g.roots.items()}
    return ProcessGraph(g.kind, g.actions, g.outputs, layers, roots)


# ---------------------------------------------------------------------------
# bounded unfolding

@dataclass(frozen=True, order=True)
class Tree:
    """Depth-bounded unfolding; ``truncated`` marks the cut (never deadlock)."""

    truncated: bool = False
    outputs: tuple = ()  # (name, weight)
    steps: tuple = ()  # (action, weight, Tree)

    def __str__(self):
        if self.truncated:
            return "⊤"
        parts = [_weighted(w, name) for name, w in self.outputs]
        for a, w, child in self.steps:
            sub = str(child)
            if len(child.outputs) + len(child.steps) > 1:
                sub = f"({sub})"
            parts.append(_weighted(w, f"{a}.{sub}"))
        return " + ".join(parts) if parts else "0"


TRUNCATED = Tree(truncated=True)


def _weighted(w, text):
    return text if w == 1 else f"{w}·{text}"


def bounded_unfold(g: ProcessGraph, r: int, depth: int) -> Tree:
    if depth < 0:
        raise ValueError("depth must be non-negative")
    out(g, r)
    memo = {}

    def go(s, d):
        if d == 0:
            return TRUNCATED
        key = (s, d)
        if key not in memo:
            outs, steps = {}, {}
            for w, c in g.layers[s].branches:
                if isinstance(c, Output):
                    outs[c.name] = outs.get(c.name, 0) + w
                else:
                    k = (c.action, go(c.target, d - 1))
                    steps[k] = w if g.kind is not EffectKind.SUBDIST else steps.get(k, 0) + w
            memo[key] = Tree(False, tuple(sorted(outs.items())),
                             tuple(sorted((a, w, t) for (a, t), w in steps.items())))
        return memo[key]

    return go(r, depth)


# ---------------------------------------------------------------------------
# text dump

def _w(kind, w):
    return f" [w={w}]" if kind is EffectKind.SUBDIST else ""


def dump_lts(g: ProcessGraph, prefix: str = "q") -> str:
    """Deterministic dump: root lines, then each state's outputs and steps."""
    lines = [f"root {name} = {prefix}{s}" for name, s in sorted(g.roots.items())]
    for s, layer in enumerate(g.layers):
        outs = sorted(f"{prefix}{s} => out {c.name}{_w(g.kind, w)}"
                      for w, c in layer.branches if isinstance(c, Output))
        steps = sorted((c.action, c.target, w) for w, c in layer.branches if isinstance(c, Step))
        lines += outs
        lines += [f"{prefix}{s} --{a}--> {prefix}{t}{_w(g.kind, w)}" for a, t, w in steps]
    return "\n".join(lines) + "\n"
