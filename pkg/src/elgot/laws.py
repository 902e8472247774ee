"""Randomized checks of the iteration laws and retraction identities.

Every check draws its instances from a per-trial RNG derived from
``(seed, trial)``, so any failure replays deterministically.  Process-level
equalities are decided up to bisimilarity, flat ones exactly.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

from .core import (Choice, EffectKind, EquationSystem, Leaf, Prefix, Summand,
                   TAU, copair as copair_systems, format_system, substitute)
from .guardedness import (ActionGuarded, StepPositive, Total, Vacuous,
                          check_guarded, weaken)
from .oracles import tree_bisimilar
from .procgraph import (OneLayer, Output, ProcessGraph, Step, bisimilar,
                        compose, copair, dump_lts, iterate, kleisli_substitute,
                        literal_graph, map_outputs, morphism_diff,
                        rename_roots, restrict_roots)
from .solve import (BOTTOM, INFINITY, FlatDone, FlatSystem, StepDone,
                    StepSystem, banach_distances, banach_iterates,
                    kleene_iterates, rho_outputs, rho_steps, solve_banach,
                    solve_elgot, solve_kleene, solve_unique, upsilon_system)
from .trace import (automata_equivalent, rho_trace_automaton,
                    trace_equiv, trace_iterate, traces_bounded,
                    upsilon_determinize, upsilon_morphism)

ACTION_NAMES = "abcdefgh"


@dataclass(frozen=True)
class GenParams:
    seed: int = 1
    max_vars: int = 3
    max_params: int = 3
    max_actions: int = 2
    max_depth: int = 3
    max_branching: int = 3
    kind: EffectKind = EffectKind.SET
    mode: object = field(default_factory=lambda: ActionGuarded(frozenset(ACTION_NAMES) | {TAU}))
    trials: int = 200

    def __post_init__(self):
        object.__setattr__(self, "kind", EffectKind(self.kind))
        for name in ("max_vars", "max_params", "max_actions", "max_depth", "max_branching"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    @property
    def elgot(self) -> bool:
        return isinstance(self.mode, Total)


@dataclass
class Failure:
    trial: int
    systems: str
    lhs: str
    rhs: str


@dataclass
class LawVerdict:
    law: str
    trials: int = 0
    failures: list = field(default_factory=list)
    note: str = ""
    informational: bool = False

    @property
    def passed(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.informational:
            status = "INFO"
        text = f"{status} {self.law} trials={self.trials} failures={len(self.failures)}"
        return text + (f" ({self.note})" if self.note else "")


def trial_rng(seed: int, trial: int) -> random.Random:
    """Per-trial generator: blake2b of ``"seed:trial"`` as a 64-bit seed."""
    digest = hashlib.blake2b(f"{seed}:{trial}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


# ---------------------------------------------------------------------------
# generation

class TermGen:
    def __init__(self, rng: random.Random, p: GenParams, actions, vars=()):
        self.rng = rng
        self.p = p
        self.actions = list(actions)
        self.vars = set(vars)

    def guards(self, mode):
        if isinstance(mode, ActionGuarded):
            return [a for a in self.actions if a in mode.guards]
        return list(self.actions)

    def action(self):
        if self.rng.random() < 0.1:
            return TAU
        return self.rng.choice([a for a in self.actions if a != TAU] or [TAU])

    def weights(self, k):
        if self.p.kind is not EffectKind.SUBDIST:
            return [Fraction(1)] * k
        d = self.rng.choice([2, 3, 4, 6])
        nums = [self.rng.randint(1, d) for _ in range(k)]
        total = max(sum(nums), d)
        den = total * self.rng.choice([1, 1, 2])
        return [Fraction(n, den) for n in nums]

    def term(self, leaves, guarded, mode, depth, safe=False):
        """Random term over ``leaves``; names in ``guarded`` obey ``mode``."""
        rng = self.rng
        if isinstance(mode, Vacuous) or (isinstance(mode, ActionGuarded) and not self.guards(mode)):
            leaves = [l for l in leaves if l not in guarded]
        roll = rng.random()
        if depth <= 0 or roll < 0.25:
            if not leaves or rng.random() < 0.08:
                return Choice(())
            name = rng.choice(leaves)
            leaf = Leaf(name, name in self.vars)
            if name in guarded and not safe and not isinstance(mode, Total):
                return Prefix(rng.choice(self.guards(mode)), leaf)
            return leaf
        if roll < 0.55:
            a = self.action()
            now_safe = safe or (a in self.guards(mode) if isinstance(mode, ActionGuarded) else True)
            if isinstance(mode, Total):
                now_safe = True
            return Prefix(a, self.term(leaves, guarded, mode, depth - 1, now_safe))
        top = 1 if self.p.kind is EffectKind.MAYBE else self.p.max_branching
        k = 0 if rng.random() < 0.1 else rng.randint(1, top)
        ws = self.weights(k)
        return Choice(tuple((w, self.term(leaves, guarded, mode, depth - 1, safe)) for w in ws))


def _names(prefix, n):
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def _actions(rng, p):
    return list(ACTION_NAMES[:rng.randint(1, p.max_actions)])


def make_system(rng, p, vars, params, leaves=None, guarded=None, mode=None, actions=None):
    """Random system: one equation per var over ``leaves`` (default all names)."""
    actions = actions if actions is not None else _actions(rng, p)
    leaves = list(leaves) if leaves is not None else list(params) + list(vars)
    guarded = set(guarded) if guarded is not None else set(vars)
    mode = mode if mode is not None else p.mode
    gen = TermGen(rng, p, actions + [TAU], vars)
    eqs = {x: gen.term(leaves, guarded, mode, rng.randint(2, p.max_depth + 1)) for x in vars}
    return EquationSystem(p.kind, actions, params, vars, eqs)


def gen_system(p: GenParams, trial: int) -> EquationSystem:
    rng = trial_rng(p.seed, trial)
    vars = _names("x", rng.randint(1, p.max_vars))
    params = _names("y", rng.randint(1, p.max_params))
    return make_system(rng, p, vars, params)


def gen_flat_system(rng, max_vars=8, max_outputs=3) -> FlatSystem:
    vars = _names("x", rng.randint(1, max_vars))
    outs = _names("y", rng.randint(1, max_outputs))
    table = {}
    for x in vars:
        r = rng.random()
        if r < 0.15:
            table[x] = BOTTOM
        elif r < 0.6:
            table[x] = FlatDone(rng.choice(vars))
        else:
            table[x] = FlatDone(rng.choice(outs))
    return FlatSystem(vars, outs, table)


def gen_step_system(rng, max_vars=8, max_outputs=3, max_steps=5) -> StepSystem:
    flat = gen_flat_system(rng, max_vars, max_outputs)
    table = {}
    for x, v in flat.table.items():
        if v is BOTTOM:
            table[x] = INFINITY
        elif v.output in flat.vars:
            table[x] = StepDone(v.output, rng.randint(1, max_steps))
        else:
            table[x] = StepDone(v.output, rng.randint(0, max_steps))
    return StepSystem(flat.vars, flat.outputs, table)


def gen_graph(rng, kind, n, actions, outputs, max_branching=3) -> ProcessGraph:
    """Random graph on ``n`` states rooted at state 0 (no trimming)."""
    layers = []
    for _ in range(n):
        k = rng.randint(0, 1 if kind is EffectKind.MAYBE else max_branching)
        branches = []
        for _ in range(k):
            c = (Output(rng.choice(outputs)) if outputs and rng.random() < 0.3
                 else Step(rng.choice(actions), rng.randrange(n)))
            branches.append(c)
        if kind is EffectKind.SUBDIST:
            den = max(k, 1) * rng.choice([1, 2])
            ws = [Fraction(rng.randint(1, 2), 2 * den) for _ in branches]
        else:
            ws = [1] * len(branches)
        layers.append(OneLayer.make(kind, list(zip(ws, branches))))
    return ProcessGraph(kind, actions, outputs, layers, {"r": 0})


def duplicate_state(rng, g: ProcessGraph) -> ProcessGraph:
    """Bisimilar variant: copy one state and redirect some edges into the copy."""
    s = rng.randrange(len(g.layers))
    n = len(g.layers)
    layers = []
    for layer in list(g.layers) + [g.layers[s]]:
        branches = [(w, Step(c.action, n) if isinstance(c, Step) and c.target == s and rng.random() < 0.5 else c)
                    for w, c in layer.branches]
        layers.append(OneLayer.make(g.kind, branches))
    return g.replace(layers=layers)


def mutate_graph(rng, g: ProcessGraph) -> ProcessGraph:
    """Usually non-bisimilar variant: drop or redirect one branch."""
    s = rng.randrange(len(g.layers))
    branches = list(g.layers[s].branches)
    if branches and rng.random() < 0.5:
        branches.pop(rng.randrange(len(branches)))
    elif branches:
        i = rng.randrange(len(branches))
        w, c = branches[i]
        if isinstance(c, Step):
            branches[i] = (w, Step(c.action, rng.randrange(len(g.layers))))
        else:
            branches[i] = (w, Step(rng.choice(g.actions), s))
    else:
        branches = [(Fraction(1, 2) if g.kind is EffectKind.SUBDIST else 1,
                     Step(g.actions[0], rng.randrange(len(g.layers))))]
    layers = list(g.layers)
    layers[s] = OneLayer.make(g.kind, branches)
    return g.replace(layers=layers)


def gen_graph_pair(rng, kind, max_total=12):
    actions = list(ACTION_NAMES[:rng.randint(1, 2)])
    outputs = _names("y", rng.randint(1, 2))
    n1 = rng.randint(1, max_total // 2)
    g1 = gen_graph(rng, kind, n1, actions, outputs)
    r = rng.random()
    if r < 0.4 and n1 < max_total:
        g2 = duplicate_state(rng, g1)
    elif r < 0.7:
        g2 = mutate_graph(rng, g1)
    else:
        g2 = gen_graph(rng, kind, rng.randint(1, max_total - n1), actions, outputs)
    g1 = g1.replace(actions=tuple(actions) + (TAU,))
    g2 = g2.replace(actions=g1.actions)
    return g1, g2


# ---------------------------------------------------------------------------
# helpers for process laws

def _mode_for(p: GenParams, f: EquationSystem):
    """``p.mode`` cut down to the actions ``f`` declares."""
    if isinstance(p.mode, ActionGuarded):
        return ActionGuarded(p.mode.guards & frozenset(f.action_names))
    return p.mode


def _solve_graph(f: EquationSystem, p: GenParams) -> ProcessGraph:
    return solve_elgot(f) if p.elgot else solve_unique(f, _mode_for(p, f))[0]


def _drop_branch(g: ProcessGraph, root: str) -> ProcessGraph:
    """Deliberate bug: forget the first branch of one root's layer, or add a
    deadlocking step when the layer is empty."""
    s = g.roots[root]
    branches = list(g.layers[s].branches)
    if branches:
        branches = branches[1:]
    else:
        w = Fraction(1, 2) if g.kind is EffectKind.SUBDIST else 1
        branches = [(w, Step(g.actions[0], s))]
    layers = list(g.layers)
    # give the root its own copy so other references are unaffected
    layers.append(OneLayer.make(g.kind, branches))
    roots = dict(g.roots)
    roots[root] = len(layers) - 1
    return g.replace(layers=layers, roots=roots)


def _identity_loop(names):
    return {n: n for n in names}


class _Law:
    """Runs ``check(rng, trial) -> (systems_text, lhs, rhs)`` over trials."""

    def __init__(self, name, p: GenParams):
        self.verdict = LawVerdict(name)
        self.p = p

    def record(self, trial, ok, systems, lhs, rhs):
        self.verdict.trials += 1
        if not ok:
            self.verdict.failures.append(Failure(trial, systems, lhs, rhs))


def _compare(law: _Law, trial, lhs: ProcessGraph, rhs: ProcessGraph, systems):
    diff = morphism_diff(lhs, rhs)
    law.record(trial, not diff, systems, dump_lts(lhs), dump_lts(rhs))


def _text(*systems):
    return "\n".join(format_system(s) for s in systems)


def _run(name, p: GenParams, body: Callable, trials=None) -> LawVerdict:
    law = _Law(name, p)
    for t in range(p.trials if trials is None else trials):
        body(law, trial_rng(p.seed, t), t)
    return law.verdict


# ---------------------------------------------------------------------------
# iteration laws

def law_fixpoint(p: GenParams, bug: bool = False) -> LawVerdict:
    """``f^dagger = [eta, f^dagger]^* . f``."""
    def body(law, rng, t):
        f = gen_system(p, t)
        sol = _solve_graph(f, p)
        lit = literal_graph(f)
        if bug:
            lit = _drop_branch(lit, f.vars[0])
        rhs = kleisli_substitute(lit, sol, {x: sol.roots[x] for x in f.vars})
        _compare(law, t, sol, rhs, _text(f))
    return _run("fixpoint", p, body)


def _fresh(rng, p, prefix, hi):
    return _names(prefix, rng.randint(1, hi))


def law_naturality(p: GenParams, bug: bool = False) -> LawVerdict:
    """``g^* . f^dagger = ([(T inl) . g, eta inr]^* . f)^dagger``."""
    def body(law, rng, t):
        xs, ys, zs = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "y", p.max_params), _fresh(rng, p, "z", 2)
        acts = _actions(rng, p)
        fs = make_system(rng, p, xs, ys, actions=acts)
        gs = make_system(rng, p, ys, zs, leaves=zs, guarded=(), actions=acts)
        f, g = literal_graph(fs), literal_graph(gs)
        if bug:
            g = _drop_branch(g, ys[0])
        lhs = compose(iterate(f, _identity_loop(xs), p.elgot), g)
        rhs = iterate(compose(literal_graph(fs), literal_graph(gs)), _identity_loop(xs), p.elgot)
        _compare(law, t, lhs, rhs, _text(fs, gs))
    return _run("naturality", p, body)


def law_codiagonal(p: GenParams, bug: bool = False) -> LawVerdict:
    """``(T[id, inr] . f)^dagger = f^dagger^dagger`` for ``f : X -> T((Y+X)+X)``."""
    def body(law, rng, t):
        xs, ys = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "y", p.max_params)
        copies = [x + "_2" for x in xs]
        fs = make_system(rng, p, xs, ys + copies, guarded=set(xs) | set(copies))
        f = literal_graph(fs)
        merge = {o: o for o in f.outputs}
        merge.update({c: x for c, x in zip(copies, xs)})
        lhs = iterate(map_outputs(f, merge), _identity_loop(xs), p.elgot)
        inner = iterate(f, dict(zip(copies, xs)), p.elgot)
        if bug:
            inner = _drop_branch(inner, xs[0])
        rhs = iterate(inner, _identity_loop(xs), p.elgot)
        _compare(law, t, lhs, rhs, _text(fs))
    return _run("codiagonal", p, body)


def law_uniformity(p: GenParams, bug: bool = False) -> LawVerdict:
    """``f . h = T(id + h) . g`` implies ``f^dagger . h = g^dagger``."""
    def body(law, rng, t):
        n = rng.randint(1, p.max_vars)
        zs = _fresh(rng, p, "z", n)
        xs = _names("x", rng.randint(len(zs), len(zs) + 2))
        ys = _fresh(rng, p, "y", p.max_params)
        acts = _actions(rng, p)
        image = rng.sample(xs, len(zs))
        h = dict(zip(zs, image))
        gs = make_system(rng, p, zs, ys, actions=acts)
        g = literal_graph(gs)
        ren = {o: h.get(o, o) for o in g.outputs}
        f = rename_roots(map_outputs(g, ren), h)
        systems = [gs]
        off = [x for x in xs if x not in image]
        if off:
            offs = make_system(rng, p, off, ys + image, guarded=set(xs), actions=acts)
            systems.append(offs)
            f = copair(f, literal_graph(offs))
        fdag = iterate(f, _identity_loop(xs), p.elgot)
        if bug:
            fdag = _drop_branch(fdag, image[0])
        lhs = rename_roots(restrict_roots(fdag, image), {v: k for k, v in h.items()})
        rhs = iterate(g, _identity_loop(zs), p.elgot)
        _compare(law, t, lhs, rhs, _text(*systems))
    return _run("uniformity", p, body)


def law_dinaturality(p: GenParams, variant: int = 1, bug: bool = False) -> LawVerdict:
    """``([eta inl, h]^* . g)^dagger = [eta, ([eta inl, g]^* . h)^dagger]^* . g``.

    Variant 1 guards ``g`` (in ``Z``), variant 2 guards ``h`` (in ``X``).
    """
    def body(law, rng, t):
        xs, zs = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "z", p.max_vars)
        ys = _fresh(rng, p, "y", p.max_params)
        acts = _actions(rng, p)
        total = Total()
        gs = make_system(rng, p, xs, ys + zs, leaves=ys + zs, guarded=zs,
                         mode=p.mode if variant == 1 else total, actions=acts)
        hs = make_system(rng, p, zs, ys + xs, leaves=ys + xs, guarded=xs,
                         mode=p.mode if variant == 2 else total, actions=acts)
        g, h = literal_graph(gs), literal_graph(hs)
        lhs = iterate(kleisli_substitute(g, h, {z: h.roots[z] for z in zs}), _identity_loop(xs), p.elgot)
        k = iterate(kleisli_substitute(h, g, {x: g.roots[x] for x in xs}), _identity_loop(zs), p.elgot)
        if bug:
            k = _drop_branch(k, zs[0])
        rhs = kleisli_substitute(g, k, {z: k.roots[z] for z in zs})
        _compare(law, t, lhs, rhs, _text(gs, hs))
    return _run(f"dinaturality-{variant}", p, body)


def law_bekic(p: GenParams, bug: bool = False) -> LawVerdict:
    """``(T[id+inl, inr.inr] . [f, g])^dagger = [h^dagger, [eta, h^dagger]^* . g^dagger]``
    with ``h = [eta, g^dagger]^* . f``."""
    def body(law, rng, t):
        xs, zs = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "z", 2)
        ys = _fresh(rng, p, "y", p.max_params)
        acts = _actions(rng, p)
        both = set(xs) | set(zs)
        fs = make_system(rng, p, xs, ys + zs, guarded=both, actions=acts)
        gs = make_system(rng, p, zs, ys + xs, guarded=both, actions=acts)
        f, g = literal_graph(fs), literal_graph(gs)
        lhs = iterate(copair(f, g), _identity_loop(xs + zs), p.elgot)
        gdag = iterate(g, _identity_loop(zs), p.elgot)
        hh = kleisli_substitute(f, gdag, {z: gdag.roots[z] for z in zs})
        hdag = iterate(hh, _identity_loop(xs), p.elgot)
        if bug:
            hdag = _drop_branch(hdag, xs[0])
        zpart = kleisli_substitute(gdag, hdag, {x: hdag.roots[x] for x in xs})
        rhs = copair(hdag, restrict_roots(zpart, zs))
        _compare(law, t, lhs, rhs, _text(fs, gs))
    return _run("bekic", p, body)


# ---------------------------------------------------------------------------
# retractions



def _output_closure(lit: ProcessGraph, vars) -> dict:
    """Least fixpoint over the output-collapsed system ``rho . f``."""
    direct = {x: rho_outputs(lit, lit.roots[x]) for x in vars}
    current = {x: frozenset() for x in vars}
    while True:
        nxt = {}
        for x in vars:
            acc = {o for o in direct[x] if o not in current}
            for o in direct[x]:
                if o in current:
                    acc |= current[o]
            nxt[x] = frozenset(acc)
        if nxt == current:
            return current
        current = nxt


def retraction_outputs(p: GenParams) -> LawVerdict:
    """``rho(f^dagger) = (rho f)^dagger`` with ``rho`` = output reachability."""
    def body(law, rng, t):
        f = gen_system(p, t)
        sol = _solve_graph(f, p)
        lhs = {x: rho_outputs(sol, sol.roots[x]) for x in f.vars}
        rhs = _output_closure(literal_graph(f), f.vars)
        law.record(t, lhs == rhs, _text(f), repr(lhs), repr(rhs))
    return _run("retraction-outputs", p, body)


def _trace_images(lit: ProcessGraph, vars) -> dict:
    return {x: rho_trace_automaton(lit, lit.roots[x]) for x in vars}


def retraction_traces(p: GenParams, bug: bool = False) -> LawVerdict:
    """``rho(f^dagger) = (rho f)^dagger`` with ``rho`` = trace automaton."""
    def body(law, rng, t):
        f = gen_system(p, t)
        sol = _solve_graph(f, p)
        lit = literal_graph(f)
        if bug:
            lit = _drop_branch(lit, f.vars[0])
        direct = trace_iterate(_trace_images(lit, f.vars), _identity_loop(f.vars), elgot=p.elgot)
        ok = all(automata_equivalent(rho_trace_automaton(sol, sol.roots[x]), direct[x]) for x in f.vars)
        law.record(t, ok, _text(f), dump_lts(sol), "".join(a.dump() for a in direct.values()))
    return _run("retraction-traces", p, body)


def rho_upsilon_identity(p: GenParams, bug: bool = False) -> LawVerdict:
    """``rho . upsilon = id`` on trace automata of generated solutions."""
    def body(law, rng, t):
        f = gen_system(p, t)
        sol = _solve_graph(f, p)
        x = f.vars[0]
        aut = rho_trace_automaton(sol, sol.roots[x])
        det = upsilon_determinize(aut)
        if bug:
            det = _drop_branch(det, "start")
        back = rho_trace_automaton(det, det.roots["start"])
        ok = back == aut and trace_equiv(det, det.roots["start"], sol, sol.roots[x])
        law.record(t, ok, _text(f), aut.dump(), back.dump())
    return _run("rho-upsilon", p, body)


def congruence_traces(p: GenParams, bug: bool = False) -> LawVerdict:
    """``rho (upsilon rho f)^dagger = rho f^dagger``: replacing ``f`` by a
    trace-equivalent deterministic system leaves the solution's traces intact."""
    def body(law, rng, t):
        f = gen_system(p, t)
        sol = _solve_graph(f, p)
        lit = literal_graph(f)
        det = upsilon_morphism(_trace_images(lit, f.vars))
        if bug:
            det = _drop_branch(det, f.vars[0])
        dsol = iterate(det, _identity_loop(f.vars), p.elgot)
        ok = all(automata_equivalent(rho_trace_automaton(sol, sol.roots[x]),
                                     rho_trace_automaton(dsol, dsol.roots[x])) for x in f.vars)
        law.record(t, ok, _text(f), dump_lts(sol), dump_lts(dsol))
    return _run("congruence-traces", p, body)


def coincidence_steps(p: GenParams, trials: int | None = None, bug: bool = False) -> LawVerdict:
    """``rho . banach(upsilon f) = kleene(f)``, and iterate-wise ``W'_n = rho W_n``."""
    def body(law, rng, t):
        f = gen_flat_system(rng, max_vars=8)
        g = upsilon_system(f)
        if bug:
            x = f.vars[0]
            row = g.table[x]
            table = dict(g.table)
            table[x] = INFINITY if row is not INFINITY else StepDone(f.outputs[0], 1)
            g = replace(g, table=table)
        banach = banach_iterates(g)
        kleene = kleene_iterates(f)
        lhs = [{x: rho_steps(v) for x, v in w.items()} for w in banach]
        ok = lhs == kleene and lhs[-1] == solve_kleene(f)[0]
        law.record(t, ok, repr(f.table), repr(lhs[-1]), repr(kleene[-1]))
    return _run("coincidence", p, body, trials)


def banach_contraction(p: GenParams, trials: int | None = None, bug: bool = False) -> LawVerdict:
    """Each Banach iterate at least halves the sup-distance to the limit."""
    def body(law, rng, t):
        f = gen_step_system(rng)
        ds = banach_distances(f)
        if bug:
            ds = [d * 2 if i else d for i, d in enumerate(ds)]
        ok = all(ds[i + 1] <= ds[i] / 2 for i in range(len(ds) - 1)) and ds[-1] == 0
        law.record(t, ok, repr(f.table), repr(ds), "")
    return _run("banach-contraction", p, body, trials)


def congruence_steps(p: GenParams, trials: int | None = None, bug: bool = False) -> LawVerdict:
    """Perturbing step counts (``rho f = rho g``) preserves ``rho`` of solutions."""
    def body(law, rng, t):
        f = gen_step_system(rng)
        table = {}
        for x, v in f.table.items():
            if v is INFINITY:
                table[x] = v
            else:
                lo = 1 if v.output in f.vars else 0
                table[x] = StepDone(v.output, max(lo, v.steps + rng.randint(-2, 3)))
        g = replace(f, table=table)
        if bug:
            g = replace(g, table={x: INFINITY for x in g.vars})
        lhs = {x: rho_steps(v) for x, v in solve_banach(f)[0].items()}
        rhs = {x: rho_steps(v) for x, v in solve_banach(g)[0].items()}
        law.record(t, lhs == rhs, repr(f.table) + "\n" + repr(g.table), repr(lhs), repr(rhs))
    return _run("congruence-steps", p, body, trials)


def check_retraction_elgot(p: GenParams, bug: bool = False) -> LawVerdict:
    """All retraction instances folded into one verdict.

    Output and trace collapses need set systems; the step instance runs for
    every kind.
    """
    parts = []
    if p.kind is EffectKind.SET:
        parts += [retraction_outputs(p), retraction_traces(p, bug=bug), congruence_traces(p, bug=bug)]
    parts += [coincidence_steps(p, bug=bug), congruence_steps(p, bug=bug)]
    v = LawVerdict("retraction", sum(x.trials for x in parts))
    v.note = ", ".join(f"{x.law} {x.trials - len(x.failures)}/{x.trials}" for x in parts)
    for x in parts:
        v.failures += [replace(f, systems=f"[{x.law}]\n{f.systems}") for f in x.failures]
    return v


def upsilon_kleisli_report(p: GenParams) -> LawVerdict:
    """How often ``upsilon rho`` commutes with substitution up to bisimilarity.

    Reported only: monad-morphism status of the section is open.
    """
    agree = 0

    def body(law, rng, t):
        nonlocal agree
        zs = _fresh(rng, p, "z", 2)
        fs = gen_system(p, t)
        gs = make_system(rng, p, list(fs.params), zs, leaves=zs, guarded=())
        f, g = literal_graph(fs), literal_graph(gs)
        ur = lambda m: upsilon_morphism(_trace_images(m, list(m.roots)))
        lhs = ur(compose(f, g))
        rhs = compose(ur(f), ur(g))
        law.verdict.trials += 1
        agree += not morphism_diff(lhs, rhs)

    v = _run("upsilon-kleisli", p, body)
    v.informational = True
    v.note = f"bisimilar in {agree}/{v.trials} samples; report only"
    return v


# ---------------------------------------------------------------------------
# delay monad algebra

NEVER = INFINITY


@dataclass(frozen=True)
class Outer:
    steps: int
    inner: object  # StepDone | NEVER


@dataclass(frozen=True)
class _NeverOuter:
    def __str__(self):
        return "never"


NEVER_OUTER = _NeverOuter()


def delay_eta(x: str) -> StepDone:
    return StepDone(x, 0)


def delay_triangle(v):
    """One extra delay step."""
    return NEVER if v is NEVER else StepDone(v.output, v.steps + 1)


def delay_bmu(v):
    """Flatten two delay layers by adding step counts."""
    if v is NEVER_OUTER or v.inner is NEVER:
        return NEVER
    return StepDone(v.inner.output, v.steps + v.inner.steps)


def rho_inner(v):
    """``rho`` applied below the outer delay layer, then collapsed."""
    if v is NEVER_OUTER:
        return BOTTOM
    return rho_steps(v.inner)


def _delay_values(outputs, max_steps):
    yield NEVER
    for y in outputs:
        for k in range(max_steps + 1):
            yield StepDone(y, k)


def _delay_delay_values(outputs, max_steps):
    yield NEVER_OUTER
    for k in range(max_steps + 1):
        for v in _delay_values(outputs, max_steps):
            yield Outer(k, v)


def _random_delay(rng, outputs, big):
    if rng.random() < 0.1:
        return NEVER
    return StepDone(rng.choice(outputs), rng.randint(0, big))


def check_nu_algebra(p: GenParams, samples: int = 1000, max_steps: int = 4,
                     bug: bool = False) -> LawVerdict:
    """``rho . eta = id``, ``rho . triangle = rho``, ``rho . mu = rho . rho_inner``."""
    outputs = ["y", "z"]
    v = LawVerdict("nu-algebra", note="delay instance only")
    rho = rho_steps
    tri = (lambda d: NEVER if d is NEVER else StepDone("z", d.steps + 1)) if bug else delay_triangle

    def check(ok, what, lhs, rhs):
        v.trials += 1
        if not ok:
            v.failures.append(Failure(v.trials - 1, what, str(lhs), str(rhs)))

    for y in outputs:
        check(rho(delay_eta(y)) == FlatDone(y), f"eta {y}", rho(delay_eta(y)), y)
    for d in _delay_values(outputs, max_steps):
        check(rho(tri(d)) == rho(d), f"triangle {d}", rho(tri(d)), rho(d))
    for dd in _delay_delay_values(outputs, max_steps):
        check(rho(delay_bmu(dd)) == rho_inner(dd), f"mu {dd}", rho(delay_bmu(dd)), rho_inner(dd))
    rng = trial_rng(p.seed, 0)
    big = 10 ** 9
    for _ in range(samples):
        d = _random_delay(rng, outputs, big)
        check(rho(tri(d)) == rho(d), f"triangle {d}", rho(tri(d)), rho(d))
        dd = NEVER_OUTER if rng.random() < 0.05 else Outer(rng.randint(0, big), _random_delay(rng, outputs, big))
        check(rho(delay_bmu(dd)) == rho_inner(dd), f"mu {dd}", rho(delay_bmu(dd)), rho_inner(dd))
    return v


# ---------------------------------------------------------------------------
# guardedness calculus

MODES = ("vacuous", "action", "step", "total")


def _random_mode(rng, actions):
    kind = rng.choice(MODES)
    if kind == "vacuous":
        return Vacuous()
    if kind == "action":
        acts = list(actions) + [TAU]
        return ActionGuarded(frozenset(rng.sample(acts, rng.randint(1, len(acts)))))
    if kind == "step":
        return StepPositive()
    return Total()


def _all_modes(actions):
    return [Vacuous(), ActionGuarded(frozenset(actions) | {TAU}), StepPositive(), Total()]


def law_trv(p: GenParams, bug: bool = False) -> LawVerdict:
    """A system never mentioning summand names is guarded in every mode."""
    def body(law, rng, t):
        xs, ys = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "y", p.max_params)
        gen_mode = Total() if bug else Vacuous()
        f = make_system(rng, p, xs, ys, mode=gen_mode)
        sigma = Summand.of(xs)
        acts = list(f.action_names)
        ok = all(check_guarded(f, sigma, m).guarded for m in _all_modes(acts))
        law.record(t, ok, _text(f), "", "")
    return _run("trv", p, body)


def _strip_prefix(f: EquationSystem) -> EquationSystem:
    """Deliberately broken: remove every prefix above leaves of the first equation."""
    def strip(t):
        if isinstance(t, Prefix):
            return strip(t.body)
        if isinstance(t, Choice):
            return Choice(tuple((w, strip(b)) for w, b in t.branches))
        return t
    x = f.vars[0]
    eqs = dict(f.equations)
    eqs[x] = strip(eqs[x])
    return f.replace(equations=eqs)


def law_par(p: GenParams, bug: bool = False) -> LawVerdict:
    def body(law, rng, t):
        ys = _names("y", rng.randint(1, p.max_params))
        acts = _actions(rng, p)
        mode = _random_mode(rng, acts)
        sigma = Summand.of(rng.sample(ys, rng.randint(1, len(ys))))
        f = make_system(rng, p, _fresh(rng, p, "x", p.max_vars), ys,
                        guarded=sigma.guarded_names, mode=mode, actions=acts)
        g = make_system(rng, p, _fresh(rng, p, "x", p.max_vars), ys,
                        guarded=sigma.guarded_names, mode=mode, actions=acts)
        pre = check_guarded(f, sigma, mode).guarded and check_guarded(g, sigma, mode).guarded
        fg = copair_systems(f, g)
        if bug:
            fg = _strip_prefix(fg)
        ok = (not pre) or check_guarded(fg, sigma, mode).guarded
        law.record(t, ok, _text(f, g), str(mode), "")
    return _run("par", p, body)


def law_cmp(p: GenParams, bug: bool = False) -> LawVerdict:
    """``f : X ->_Z Y+Z``, ``g : Y ->_sigma V``, ``h : Z -> V`` give
    ``[g, h] . f`` guarded in ``sigma`` (action-guardedness)."""
    def body(law, rng, t):
        acts = _actions(rng, p)
        mode = ActionGuarded(frozenset(rng.sample(acts, rng.randint(1, len(acts)))))
        xs, ys, zs = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "y", 2), _fresh(rng, p, "z", 2)
        vs = _names("v", rng.randint(1, 3))
        sigma = Summand.of(rng.sample(vs, rng.randint(1, len(vs))))
        fs = make_system(rng, p, xs, ys + zs, guarded=zs, mode=Total() if bug else mode, actions=acts)
        gs = make_system(rng, p, ys, vs, leaves=vs, guarded=sigma.guarded_names, mode=mode, actions=acts)
        hs = make_system(rng, p, zs, vs, leaves=vs, guarded=(), mode=Total(), actions=acts)
        pre = (check_guarded(fs, Summand.of(zs), mode).guarded
               and check_guarded(gs, sigma, mode).guarded)
        if bug:
            pre = check_guarded(gs, sigma, mode).guarded
        bindings = dict(gs.equations)
        bindings.update(hs.equations)
        composed = substitute(fs, bindings, params=vs)
        ok = (not pre) or check_guarded(composed, sigma, mode).guarded
        law.record(t, ok, _text(fs, gs, hs), format_system(composed), "")
    return _run("cmp", p, body)


def law_wkn(p: GenParams, bug: bool = False) -> LawVerdict:
    def body(law, rng, t):
        xs, ys = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "y", p.max_params)
        acts = _actions(rng, p)
        mode = _random_mode(rng, acts)
        names = xs + ys
        big = Summand.of(rng.sample(names, rng.randint(1, len(names))))
        small = weaken(big, Summand.of(rng.sample(sorted(big.guarded_names),
                                                  rng.randint(0, len(big.guarded_names)))))
        gen_sigma = small.guarded_names if bug else big.guarded_names
        f = make_system(rng, p, xs, ys, guarded=gen_sigma, mode=mode if rng.random() < 0.8 else Total(),
                        actions=acts)
        if bug:
            ok = (not check_guarded(f, small, mode).guarded) or check_guarded(f, big, mode).guarded
        else:
            ok = (not check_guarded(f, big, mode).guarded) or check_guarded(f, small, mode).guarded
        law.record(t, ok, _text(f), str(mode), "")
    return _run("wkn", p, body)


def law_chain(p: GenParams, bug: bool = False) -> LawVerdict:
    """vacuous => action => step => total, for any guard set."""
    def body(law, rng, t):
        xs, ys = _fresh(rng, p, "x", p.max_vars), _fresh(rng, p, "y", p.max_params)
        acts = _actions(rng, p)
        f = make_system(rng, p, xs, ys, mode=_random_mode(rng, acts), actions=acts)
        sigma = Summand.of(xs)
        guards = ActionGuarded(frozenset(rng.sample(list(f.action_names), rng.randint(1, len(f.action_names)))))
        chain = [Vacuous(), guards, StepPositive(), Total()]
        if bug:
            chain.reverse()
        res = [check_guarded(f, sigma, m).guarded for m in chain]
        ok = all((not a) or b for a, b in zip(res, res[1:]))
        law.record(t, ok, _text(f), repr(res), "")
    return _run("chain", p, body)


# ---------------------------------------------------------------------------
# oracle agreement

def bisim_oracle(p: GenParams, trials: int = 300) -> LawVerdict:
    """Partition refinement vs naive depth-``k`` tree comparison."""
    def body(law, rng, t):
        g1, g2 = gen_graph_pair(rng, p.kind)
        res = bisimilar(g1, 0, g2, 0)
        related, depth = tree_bisimilar(g1, 0, g2, 0)
        ok = res.related == related and res.distinguishing_depth == depth
        law.record(t, ok, dump_lts(g1) + "\n" + dump_lts(g2),
                   f"{res.related} {res.distinguishing_depth}", f"{related} {depth}")
    return _run("bisim-oracle", p, body, trials)


def trace_oracle(p: GenParams, trials: int = 300, depth: int = 6) -> LawVerdict:
    """DFA equivalence vs comparison of bounded trace sets."""
    def body(law, rng, t):
        g1, g2 = gen_graph_pair(rng, EffectKind.SET)
        fast = trace_equiv(g1, 0, g2, 0)
        slow = traces_bounded(g1, 0, depth) == traces_bounded(g2, 0, depth)
        law.record(t, fast == slow, dump_lts(g1) + "\n" + dump_lts(g2), str(fast), str(slow))
    return _run("trace-oracle", p, body, trials)


# ---------------------------------------------------------------------------
# registry

PROCESS_LAWS = {
    "fixpoint": law_fixpoint,
    "naturality": law_naturality,
    "codiagonal": law_codiagonal,
    "uniformity": law_uniformity,
    "dinaturality-1": lambda p, bug=False: law_dinaturality(p, 1, bug),
    "dinaturality-2": lambda p, bug=False: law_dinaturality(p, 2, bug),
    "bekic": law_bekic,
}

SET_LAWS = {
    "retraction": check_retraction_elgot,
    "rho-upsilon": rho_upsilon_identity,
    "upsilon-kleisli": lambda p, bug=False: upsilon_kleisli_report(p),
}

GUARD_LAWS = {
    "trv": law_trv, "par": law_par, "cmp": law_cmp, "wkn": law_wkn, "chain": law_chain,
}

ORACLE_LAWS = {
    "bisim-oracle": lambda p, bug=False: bisim_oracle(p, trials=p.trials),
    "trace-oracle": lambda p, bug=False: trace_oracle(p, trials=p.trials),
}

STEP_LAWS = {
    "coincidence": lambda p, bug=False: coincidence_steps(p, bug=bug),
    "banach-contraction": lambda p, bug=False: banach_contraction(p, bug=bug),
    "congruence-steps": lambda p, bug=False: congruence_steps(p, bug=bug),
    "nu-algebra": lambda p, bug=False: check_nu_algebra(p, bug=bug),
}


def laws_for(instance: str, mode: str) -> dict:
    """Applicable checks for an ``(instance, mode)`` pair."""
    if instance == "steps":
        return dict(STEP_LAWS)
    table = dict(PROCESS_LAWS)
    if instance == "set":
        table.update(SET_LAWS)
        if mode == "unique":
            table.update(GUARD_LAWS)
        table.update(ORACLE_LAWS)
    elif instance == "subdist":
        table["bisim-oracle"] = ORACLE_LAWS["bisim-oracle"]
    return table


def params_for(instance: str, mode: str, seed: int = 1, trials: int = 200) -> GenParams:
    kind = {"set": EffectKind.SET, "maybe": EffectKind.MAYBE,
            "subdist": EffectKind.SUBDIST, "steps": EffectKind.SET}[instance]
    if mode == "elgot":
        if kind is EffectKind.SUBDIST:
            raise ValueError("subdist systems admit only unique (guarded) iteration")
        m = Total()
    else:
        m = ActionGuarded(frozenset(ACTION_NAMES) | {TAU})
    return GenParams(seed=seed, kind=kind, mode=m, trials=trials)


def run_laws(instance: str, mode: str, seed: int = 1, trials: int = 200, law: str | None = None,
             bug: bool = False) -> list:
    p = params_for(instance, mode, seed, trials)
    table = laws_for(instance, mode)
    if law is not None:
        if law not in table:
            raise KeyError(f"law {law!r} not applicable to {instance}/{mode}; "
                           f"choose from {', '.join(table)}")
        table = {law: table[law]}
    return [fn(p, bug=bug) for fn in table.values()]


def format_report(verdicts, instance, mode, seed, trials) -> str:
    lines = [f"laws instance={instance} mode={mode} seed={seed} trials={trials}"]
    for v in verdicts:
        lines.append(v.line())
        for fail in v.failures[:3]:
            lines.append(f"  counterexample trial={fail.trial}")
            for label, text in (("input", fail.systems), ("lhs", fail.lhs), ("rhs", fail.rhs)):
                for l in text.strip().splitlines():
                    lines.append(f"    {label}| {l}")
    return "\n".join(lines) + "\n"
