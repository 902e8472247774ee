import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from elgot.core import (EffectKind, ParseError, ProcError, Summand,
                        format_equation, parse_system)
from elgot.guardedness import (ActionGuarded, GuardednessError, StepPositive,
                               Vacuous, check_guarded)
from elgot.laws import (gen_flat_system, gen_step_system, make_system,
                        params_for, trial_rng)
from elgot.oracles import closure_by_iteration
from elgot.procgraph import (Output, bounded_unfold, dump_lts,
                             minimize, morphism_diff, term_graph)
from elgot.solve import (BOTTOM, INFINITY, FlatDone, FlatSystem, StepDone,
                         StepGuardError, StepSystem, UnguardedSubDistError,
                         UnsupportedModeError, _top_branches, banach_distances,
                         banach_iterates, check_fixpoint, dump_trace,
                         dump_values, epsilon_closure, kleene_iterates,
                         parse_steps, rho_outputs, rho_steps, solve_banach,
                         solve_elgot, solve_kleene, solve_unique, step_distance,
                         upsilon_steps, upsilon_system)

from .strategies import generated_systems

LOOP_EQ = "effect set; actions a; params y; vars x; x = { y, a.x };"


def test_unique_loop():
    g, trace = solve_unique(parse_system(LOOP_EQ))
    assert dump_lts(minimize(g)) == "root x = q0\nq0 => out y\nq0 --a--> q0\n"
    assert trace.iterations >= max(trace.stabilized_at.values())


def test_vacuous_solution_is_literal():
    f = parse_system("params y; vars x; x = {y};")
    g, _ = solve_unique(f, Vacuous())
    assert dump_lts(g) == "root x = q0\nq0 => out y\n"
    literal = term_graph(f.kind, f.action_names, f.params, f.equations)
    assert g == literal


def test_mutual_recursion():
    f = parse_system("actions a, b; params z; vars x1, x2; x1 = {a.x2}; x2 = {b.x1, z};")
    g = minimize(solve_unique(f)[0])
    assert dump_lts(g) == ("root x1 = q0\nroot x2 = q1\nq0 --a--> q1\n"
                           "q1 => out z\nq1 --b--> q0\n")
    assert str(bounded_unfold(g, 0, 4)) == "a.(z + b.a.(z + b.⊤))"


def test_unique_rejects_unguarded_and_modes():
    with pytest.raises(GuardednessError) as e:
        solve_unique(parse_system("actions a; vars x; x = {x, a.x};"))
    assert not e.value.report.guarded
    with pytest.raises(UnsupportedModeError):
        solve_unique(parse_system(LOOP_EQ), StepPositive())


def test_closure_examples():
    f = parse_system("actions a; vars x; x = {x, a.x};")
    assert format_equation(epsilon_closure(f), "x") == "x = {a.x};"
    assert format_equation(epsilon_closure(parse_system("vars x; x = {x};")), "x") == "x = {};"
    g = epsilon_closure(parse_system("actions b; params y; vars x1, x2; x1 = {x2, y}; x2 = {b.x1};"))
    assert format_equation(g, "x1") == "x1 = {b.x1, y};"
    assert format_equation(g, "x2") == "x2 = {b.x1};"


def test_closure_rejects_subdist():
    with pytest.raises(UnguardedSubDistError):
        epsilon_closure(parse_system("effect subdist; vars x; x = x;"))


def test_elgot_examples():
    g = minimize(solve_elgot(parse_system("actions a; vars x; x = {x, a.x};")))
    assert dump_lts(g) == "root x = q0\nq0 --a--> q0\n"
    dead = solve_elgot(parse_system("vars x; x = {x};"))
    assert dump_lts(dead) == "root x = q0\n"


def test_check_fixpoint_negative():
    f = parse_system("actions a, b; params y; vars x; x = { y, a.x };")
    g, _ = solve_unique(f)
    assert check_fixpoint(f, g)
    wrong = solve_unique(parse_system("actions a, b; params y; vars x; x = { y, b.x };"))[0]
    assert not check_fixpoint(f, wrong)


def test_rho_outputs():
    assert rho_outputs(solve_unique(parse_system(LOOP_EQ))[0], 0) == {"y"}
    assert rho_outputs(solve_elgot(parse_system("actions a; vars x; x = {x, a.x};")), 0) == set()
    assert rho_outputs(solve_elgot(parse_system("vars x; x = 0;")), 0) == set()


def test_banach_examples():
    f = StepSystem(["x"], ["y"], {"x": StepDone("y", 2)})
    assert solve_banach(f)[0] == {"x": StepDone("y", 2)}
    loop = StepSystem(["x"], [], {"x": StepDone("x", 1)})
    values, trace = solve_banach(loop)
    assert values == {"x": INFINITY} and trace.stabilized_at == {"x": 0}
    chain = StepSystem(["x1", "x2"], ["y"], {"x1": StepDone("x2", 1), "x2": StepDone("y", 3)})
    assert solve_banach(chain)[0] == {"x1": StepDone("y", 4), "x2": StepDone("y", 3)}
    with pytest.raises(StepGuardError):
        solve_banach(StepSystem(["x"], [], {"x": StepDone("x", 0)}))


def test_kleene_examples():
    assert solve_kleene(FlatSystem(["x"], ["y"], {"x": FlatDone("y")}))[0] == {"x": FlatDone("y")}
    assert solve_kleene(FlatSystem(["x"], [], {"x": FlatDone("x")}))[0] == {"x": BOTTOM}
    two = FlatSystem(["x1", "x2"], ["z"], {"x1": FlatDone("x2"), "x2": FlatDone("z")})
    values, trace = solve_kleene(two)
    assert values == {"x1": FlatDone("z"), "x2": FlatDone("z")} and trace.iterations == 2


def test_rho_upsilon_steps():
    assert rho_steps(StepDone("y", 7)) == FlatDone("y")
    assert rho_steps(INFINITY) is BOTTOM
    assert upsilon_steps(FlatDone("y")) == StepDone("y", 1)
    assert upsilon_steps(BOTTOM) is INFINITY
    for v in (FlatDone("y"), BOTTOM):
        assert rho_steps(upsilon_steps(v)) == v


def test_step_distance():
    h = Fraction(1, 2)
    assert step_distance(INFINITY, StepDone("y", 3)) == h ** 3
    assert step_distance(StepDone("y", 2), StepDone("z", 2)) == h ** 2
    assert step_distance(StepDone("y", 2), StepDone("y", 2)) == 0
    assert step_distance(StepDone("y", 1), StepDone("y", 4)) == h


def test_step_format():
    f = parse_steps("steps; vars x1,x2,x3; outs y; x1 -> x2 @ 1; x2 -> y @ 3; x3 -> inf;")
    values, trace = solve_banach(f)
    assert dump_values(values) == "x1 = (y,4)\nx2 = (y,3)\nx3 = inf\n"
    assert dump_trace(trace) == "iterations 2\nstabilized x1 at 2\nstabilized x2 at 1\nstabilized x3 at 0\n"
    assert parse_steps("steps; vars x; outs y; x -> y;").table["x"] == StepDone("y", 1)
    for bad in ("vars x; x -> y;", "steps; vars x; x -> ;", "steps; vars x; outs y; x -> y; x -> y;"):
        with pytest.raises(ParseError):
            parse_steps(bad)
    with pytest.raises(ProcError):
        parse_steps("steps; vars x; x -> q;")


@settings(max_examples=200, deadline=None)
@given(generated_systems())
def test_fixpoint_identity(f):
    g = solve_elgot(f) if f.kind is not EffectKind.SUBDIST and not check_guarded(f).guarded \
        else solve_unique(f)[0]
    assert check_fixpoint(f, g)


@settings(max_examples=200, deadline=None)
@given(generated_systems(instance=("set", "maybe"), mode=("unique",)))
def test_elgot_agrees_with_unique_on_guarded(f):
    assert not morphism_diff(solve_unique(f)[0], solve_elgot(f))


@settings(max_examples=200, deadline=None)
@given(generated_systems(instance=("set", "maybe"), mode=("elgot",)))
def test_closure_idempotent_guarded_and_least(f):
    c = epsilon_closure(f)
    assert epsilon_closure(c) == c
    assert check_guarded(c, Summand.all_vars(c), ActionGuarded(frozenset(c.action_names))).guarded
    expect = closure_by_iteration(f)
    assert {x: frozenset(t for _, t in _top_branches(c[x])) for x in f.vars} == expect


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_guardedness_preserved(seed):
    rng = trial_rng(seed, 0)
    p = params_for("set", "unique")
    params = ["y1", "y2", "y3"]
    sigma = rng.sample(params, rng.randint(1, 3))
    f = make_system(rng, p, ["x1", "x2"], params, guarded=set(sigma) | {"x1", "x2"})
    g, _ = solve_unique(f)
    for r in g.roots.values():
        assert not [c for _, c in g.layers[r].branches if isinstance(c, Output) and c.name in sigma]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_banach_stabilizes_and_contracts(seed):
    f = gen_step_system(random.Random(seed))
    seq = banach_iterates(f)
    assert len(seq) - 1 <= len(f.vars) + 1
    ds = banach_distances(f)
    assert ds[-1] == 0 and all(b <= a / 2 for a, b in zip(ds, ds[1:]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_banach_kleene_coincide(seed):
    f = gen_flat_system(random.Random(seed))
    lhs = {x: rho_steps(v) for x, v in solve_banach(upsilon_system(f))[0].items()}
    assert lhs == solve_kleene(f)[0]
    assert len(kleene_iterates(f)) - 1 <= len(f.vars) + 1
