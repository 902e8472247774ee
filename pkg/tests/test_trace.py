import random

import pytest
from hypothesis import given, settings, strategies as st

from elgot.core import EffectKind, KindError, parse_system
from elgot.laws import gen_graph, gen_graph_pair
from elgot.procgraph import bisimilar, dump_lts, literal_graph, minimize
from elgot.solve import solve_elgot, solve_unique
from elgot.trace import (DIVERGENT, Trace, TraceAutomaton, automata_equivalent,
                         automaton_traces, rho_trace_automaton, trace_equiv,
                         trace_iterate, traces_bounded, upsilon_determinize)

LOOP = solve_unique(parse_system("actions a; params y; vars x; x = { y, a.x };"))[0]
ACTS = "actions a, b, c; params y; "
SPLIT = solve_unique(parse_system(ACTS + "vars p; p = { a.b.y, a.c.y };"))[0]
MERGED = solve_unique(parse_system(ACTS + "vars q; q = a.{ b.y, c.y };"))[0]
DEAD = solve_unique(parse_system("vars x; x = 0;"))[0]
AOMEGA = solve_elgot(parse_system("actions a; vars x; x = {x, a.x};"))


def words(ts):
    return {("".join(t.word), t.terminal) for t in ts.traces}


def test_bounded_examples():
    assert words(traces_bounded(LOOP, 0, 2)) == {
        ("", "*"), ("", "y"), ("a", "*"), ("a", "y"), ("aa", "*"), ("aa", "y")}
    assert words(traces_bounded(DEAD, 0, 5)) == {("", "*")}
    assert words(traces_bounded(AOMEGA, 0, 3)) == {("", "*"), ("a", "*"), ("aa", "*"), ("aaa", "*")}


def test_trace_dump():
    assert traces_bounded(LOOP, 0, 1).dump() == "- => *\n- => y\na => *\na => y\n"
    assert str(Trace(("a", "b"), DIVERGENT)) == "a.b => *"


def test_kind_mismatch():
    g = solve_unique(parse_system("effect maybe; vars x; x = 0;"))[0]
    with pytest.raises(KindError):
        traces_bounded(g, 0, 1)
    with pytest.raises(KindError):
        rho_trace_automaton(g, 0)


def test_automaton_examples():
    aut = rho_trace_automaton(LOOP, 0)
    assert aut.dump() == "start (d)q0\n(d)q0 => out y\n(d)q0 --a--> (d)q0\n"
    a1, a2 = rho_trace_automaton(SPLIT, 0), rho_trace_automaton(MERGED, 0)
    assert a1 == a2 and len(a1) == 3
    dead = rho_trace_automaton(DEAD, 0)
    assert len(dead) == 1 and not dead.transitions and dead.outputs == (frozenset(),)


def test_trace_equiv_examples():
    assert trace_equiv(LOOP, 0, minimize(LOOP), 0)
    assert trace_equiv(SPLIT, 0, MERGED, 0)
    assert not bisimilar(SPLIT, 0, MERGED, 0).related
    ay = solve_unique(parse_system("actions a, b; params y; vars x; x = a.y;"))[0]
    by = solve_unique(parse_system("actions a, b; params y; vars x; x = b.y;"))[0]
    assert not trace_equiv(ay, 0, by, 0)


def test_upsilon_examples():
    g = upsilon_determinize(rho_trace_automaton(LOOP, 0))
    assert dump_lts(g) == "root start = q0\nq0 => out y\nq0 --a--> q0\n"
    empty = TraceAutomaton(("a",), ("y",), (frozenset(),), {}, 0)
    assert dump_lts(upsilon_determinize(empty)) == "root start = q0\n"
    det = upsilon_determinize(rho_trace_automaton(SPLIT, 0))
    assert bisimilar(det, 0, MERGED, 0).related
    assert not bisimilar(det, 0, SPLIT, 0).related
    assert trace_equiv(det, 0, SPLIT, 0)


def test_trace_iterate_loop():
    lit = literal_graph(parse_system("actions a; params y; vars x; x = { y, a.x };"))
    sol = trace_iterate({"x": rho_trace_automaton(lit, lit.roots["x"])}, {"x": "x"})
    assert automata_equivalent(sol["x"], rho_trace_automaton(LOOP, 0))
    lit = literal_graph(parse_system("actions a; vars x; x = { x, a.x };"))
    sol = trace_iterate({"x": rho_trace_automaton(lit, lit.roots["x"])}, {"x": "x"}, elgot=True)
    assert automata_equivalent(sol["x"], rho_trace_automaton(AOMEGA, 0))


def _graph(seed):
    rng = random.Random(seed)
    return gen_graph(rng, EffectKind.SET, rng.randint(1, 7), ["a", "b"], ["y", "z"])


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 6))
def test_prefix_closed_and_monotone(seed, d):
    g = _graph(seed)
    ts = traces_bounded(g, 0, d)
    assert ts.is_prefix_closed()
    assert traces_bounded(g, 0, d + 1).restrict(d) == ts


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 6))
def test_automaton_consistent_with_bounded(seed, d):
    g = _graph(seed)
    assert automaton_traces(rho_trace_automaton(g, 0), d) == traces_bounded(g, 0, d)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_rho_upsilon_retraction(seed):
    g = _graph(seed)
    aut = rho_trace_automaton(g, 0)
    det = upsilon_determinize(aut)
    assert rho_trace_automaton(det, 0) == aut
    assert trace_equiv(det, 0, g, 0)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_bisimilar_implies_trace_equivalent(seed):
    g1, g2 = gen_graph_pair(random.Random(seed), EffectKind.SET)
    if bisimilar(g1, 0, g2, 0).related:
        assert trace_equiv(g1, 0, g2, 0)
    assert trace_equiv(g1, 0, g2, 0) == (traces_bounded(g1, 0, 6) == traces_bounded(g2, 0, 6))
