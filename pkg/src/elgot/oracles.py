"""Naive reference implementations used to cross-check the fast paths.

Nothing here shares code with partition refinement, subset construction or
the validator; each oracle recomputes its answer from first principles.
"""
from __future__ import annotations

from fractions import Fraction

from .core import Choice, EffectKind, Leaf, Prefix
from .procgraph import Output, ProcessGraph


class _Interner:
    def __init__(self):
        self.ids = {}

    def __call__(self, key):
        return self.ids.setdefault(key, len(self.ids))


def _tree_ids(g: ProcessGraph, depth: int, intern: _Interner) -> list:
    """``ids[d][s]``: interned id of the depth-``d`` unfolding of state ``s``."""
    ids = [[intern(("cut",))] * len(g.layers)]
    for _ in range(depth):
        prev = ids[-1]
        row = []
        for layer in g.layers:
            outs, steps = {}, {}
            for w, c in layer.branches:
                if isinstance(c, Output):
                    outs[c.name] = outs.get(c.name, 0) + w
                else:
                    k = (c.action, prev[c.target])
                    steps[k] = steps.get(k, 0) + w
            if g.kind is not EffectKind.SUBDIST:
                outs = {k: 1 for k in outs}
                steps = {k: 1 for k in steps}
            row.append(intern(("node", frozenset(outs.items()), frozenset(steps.items()))))
        ids.append(row)
    return ids


def tree_bisimilar(g1: ProcessGraph, r1: int, g2: ProcessGraph, r2: int, depth=None):
    """Compare depth-``k`` unfoldings; ``k`` defaults to the total state count + 1.

    Returns ``(related, distinguishing_depth)`` where the depth counts steps
    before the first observable difference.
    """
    if depth is None:
        depth = len(g1.layers) + len(g2.layers) + 1
    intern = _Interner()
    ids1 = _tree_ids(g1, depth, intern)
    ids2 = _tree_ids(g2, depth, intern)
    for d in range(depth + 1):
        if ids1[d][r1] != ids2[d][r2]:
            return False, d - 1
    return True, None


def naive_validate(system) -> bool:
    """True iff ``system`` satisfies every term invariant (recursive check)."""
    declared_actions = [a.name for a in system.actions]
    if len(set(declared_actions)) != len(declared_actions):
        return False
    if len(set(system.params)) != len(system.params) or len(set(system.vars)) != len(system.vars):
        return False
    if set(system.params) & set(system.vars):
        return False
    if set(system.equations) != set(system.vars):
        return False

    def ok(t) -> bool:
        if isinstance(t, Leaf):
            if t.var:
                return t.name in system.vars
            return t.name in system.params
        if isinstance(t, Prefix):
            return t.action in declared_actions and ok(t.body)
        if isinstance(t, Choice):
            ws = [w for w, _ in t.branches]
            if any(w < 0 for w in ws):
                return False
            if system.kind is EffectKind.SUBDIST:
                if sum(ws, Fraction(0)) > 1:
                    return False
            elif any(w != 1 for w in ws):
                return False
            if system.kind is EffectKind.MAYBE and len(ws) > 1:
                return False
            return all(ok(b) for _, b in t.branches)
        return False

    return all(ok(t) for t in system.equations.values())


def closure_by_iteration(system) -> dict:
    """Top-level branch sets of the least solution of the bare-reference
    equations, computed by Kleene iteration from the empty assignment."""
    def direct(x):
        found, todo = [], [system.equations[x]]
        while todo:
            t = todo.pop(0)
            if isinstance(t, Choice):
                todo[:0] = [b for _, b in t.branches]
            else:
                found.append(t)
        return found

    current = {x: frozenset() for x in system.vars}
    while True:
        nxt = {}
        for x in system.vars:
            acc = set()
            for t in direct(x):
                if isinstance(t, Leaf) and t.var:
                    acc |= current[t.name]
                else:
                    acc.add(t)
            nxt[x] = frozenset(acc)
        if nxt == current:
            return current
        current = nxt
