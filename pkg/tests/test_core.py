from fractions import Fraction

import pytest
from hypothesis import given, settings

from elgot.core import (Choice, DEADLOCK, EffectKind, EquationSystem, KindError,
                        Leaf, ParseError, Prefix, TAU, ValidationError, copair,
                        format_system, parse_system, validate)
from elgot.oracles import naive_validate
from elgot.procgraph import bisimilar
from elgot.solve import solve_unique

from .strategies import generated_systems, raw_systems

LOOP_EQ = "effect set; actions a; params y; vars x; x = { y, a.x };"


def test_parse_loop_equation():
    s = parse_system(LOOP_EQ)
    assert s.vars == ("x",) and s.params == ("y",)
    assert s["x"] == Choice(((1, Leaf("y", False)), (1, Prefix("a", Leaf("x", True)))))


def test_parse_deadlock():
    s = parse_system("effect set; vars x; x = {};")
    assert s["x"] == DEADLOCK
    assert parse_system("effect set; vars x; x = 0;")["x"] == DEADLOCK


def test_parse_subdist_weights():
    s = parse_system("effect subdist; actions a; params y; vars x; x = { 1/2: y, 1/4: a.x };")
    assert s.kind is EffectKind.SUBDIST
    assert [w for w, _ in s["x"].branches] == [Fraction(1, 2), Fraction(1, 4)]


def test_tau_always_declared():
    s = parse_system("vars x; x = tau.x;")
    assert TAU in s.action_names
    assert not [a for a in s.actions if a.name == TAU][0].visible


def test_default_effect_is_set():
    assert parse_system("vars x; x = x;").kind is EffectKind.SET


def test_comments_ignored():
    s = parse_system("# header\neffect set; # trailing\nvars x;\nx = 0;\n")
    assert s["x"] == DEADLOCK


@pytest.mark.parametrize("text, line, col, fragment", [
    ("vars x; x = z;", 1, 13, "undeclared identifier"),
    ("vars x; x = 0; x = 0;", 1, 16, "duplicate equation"),
    ("vars x;\n x = {a.x};", 2, 7, "undeclared action"),
    ("vars x;\n x = { 0 ;", 2, 10, ""),
])
def test_parse_errors_have_position(text, line, col, fragment):
    with pytest.raises(ParseError) as e:
        parse_system(text)
    assert (e.value.line, e.value.col) == (line, col)
    assert fragment in str(e.value)


def test_parse_rejects_overweight():
    with pytest.raises(ValidationError) as e:
        parse_system("effect subdist; params y; vars x; x = { 3/4: y, 1/2: y };")
    assert "weight sum 5/4 > 1" in str(e.value)


def test_validate_clean_system():
    assert validate(parse_system(LOOP_EQ)) == []


def test_validate_weight_sum():
    s = EquationSystem(EffectKind.SUBDIST, ["a"], ["y"], ["x"], {
        "x": Choice(((Fraction(3, 4), Leaf("y", False)), (Fraction(1, 2), Prefix("a", Leaf("x", True)))))})
    v = validate(s)
    assert len(v) == 1 and v[0].message == "weight sum 5/4 > 1"


def test_validate_maybe_arity():
    s = EquationSystem(EffectKind.MAYBE, ["a"], ["y"], ["x"], {
        "x": Choice(((1, Leaf("y", False)), (1, Prefix("a", Leaf("x", True)))))})
    assert len(validate(s)) == 1


def test_validate_reports_paths():
    s = EquationSystem(EffectKind.SET, ["a"], ["y"], ["x"], {
        "x": Choice(((1, Leaf("y", False)), (1, Prefix("b", Leaf("z", True)))))})
    paths = {v.path for v in validate(s)}
    assert "x/1" in paths and "x/1/." in paths


def test_copair_disjoint():
    f = parse_system("actions a; params y; vars x1; x1 = a.y;")
    g = parse_system("actions b; params y; vars x2; x2 = b.y;")
    fg = copair(f, g)
    assert fg.vars == ("x1", "x2") and validate(fg) == []


def test_copair_renames_clash():
    f = parse_system("actions a; params y; vars x; x = a.x;")
    g = parse_system("actions b; params y; vars x; x = {y, b.x};")
    fg = copair(f, g)
    assert fg.vars == ("x", "x'")
    assert fg["x'"] == Choice(((1, Leaf("y", False)), (1, Prefix("b", Leaf("x'", True)))))


def test_copair_self_gives_bisimilar_copies():
    f = parse_system(LOOP_EQ)
    g, _ = solve_unique(copair(f, f))
    assert bisimilar(g, g.roots["x"], g, g.roots["x'"]).related


def test_copair_kind_mismatch():
    f = parse_system("effect set; vars x; x = 0;")
    g = parse_system("effect maybe; vars z; z = 0;")
    with pytest.raises(KindError):
        copair(f, g)


def test_printer_orders_headers():
    s = parse_system("vars x; params y; actions a; effect set; x = {a.x, y};")
    assert format_system(s) == "effect set;\nactions a;\nparams y;\nvars x;\nx = {a.x, y};\n"


@settings(max_examples=200, deadline=None)
@given(generated_systems())
def test_round_trip(s):
    once = parse_system(format_system(s))
    assert parse_system(format_system(once)) == once
    assert format_system(once) == format_system(s)


@settings(max_examples=400, deadline=None)
@given(raw_systems())
def test_validate_agrees_with_naive_checker(s):
    assert (validate(s) == []) == naive_validate(s)


@settings(max_examples=100, deadline=None)
@given(generated_systems(), generated_systems())
def test_copair_preserves_validity_and_associates(f, g):
    if f.kind is not g.kind:
        return
    fg = copair(f, g)
    assert validate(fg) == []
    left = copair(copair(f, g), f)
    right = copair(f, copair(g, f))
    assert len(left.vars) == len(right.vars) == 2 * len(f.vars) + len(g.vars)
    assert validate(left) == [] and validate(right) == []
