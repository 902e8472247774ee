"""Syntactic guardedness checks for equation systems.

A leaf occurrence is guarded when some qualifying prefix lies strictly above
it on its path from the equation root; a system is guarded in a summand when
every occurrence of a summand name passes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import (EquationSystem, ProcError, Summand, iter_leaves,
                   format_path)


@dataclass(frozen=True)
class Vacuous:
    """Guarded only if summand names never occur at all."""

    def __str__(self):
        return "vacuous"


@dataclass(frozen=True)
class ActionGuarded:
    guards: frozenset = frozenset()

    def __str__(self):
        return "action{" + ",".join(sorted(self.guards)) + "}"


@dataclass(frozen=True)
class StepPositive:
    """Any prefix counts as a guard (each prefix costs one step)."""

    def __str__(self):
        return "step"


@dataclass(frozen=True)
class Total:
    def __str__(self):
        return "total"


GuardMode = (Vacuous, ActionGuarded, StepPositive, Total)


def all_actions(system: EquationSystem) -> ActionGuarded:
    return ActionGuarded(frozenset(system.action_names))


def visible_actions(system: EquationSystem) -> ActionGuarded:
    return ActionGuarded(frozenset(a.name for a in system.actions if a.visible))


class GuardednessError(ProcError):
    def __init__(self, report):
        self.report = report
        super().__init__("not guarded: " + "; ".join(
            f"{format_path(v, p)} leaf {leaf}" for v, p, leaf in report.violations))


@dataclass(frozen=True)
class GuardReport:
    violations: tuple = field(default_factory=tuple)  # (var, path, leaf name)

    @property
    def guarded(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.guarded

    def lines(self) -> list:
        if self.guarded:
            return ["guarded"]
        return ["not guarded"] + [
            f"violation {format_path(v, p)} leaf {leaf}" for v, p, leaf in self.violations]


def _leaf_ok(mode, guards_above) -> bool:
    if isinstance(mode, Total):
        return True
    if isinstance(mode, Vacuous):
        return False
    if isinstance(mode, StepPositive):
        return bool(guards_above)
    if isinstance(mode, ActionGuarded):
        return any(a in mode.guards for a in guards_above)
    raise TypeError(f"unknown guard mode {mode!r}")


def check_guarded(f: EquationSystem, sigma: Summand | None = None, mode=None) -> GuardReport:
    """Decide whether ``f`` is guarded in ``sigma`` under ``mode``.

    ``sigma`` defaults to all variables, ``mode`` to action-guardedness with
    every declared action as a guard.
    """
    if sigma is None:
        sigma = Summand.all_vars(f)
    if mode is None:
        mode = all_actions(f)
    unknown = sigma.guarded_names - f.names
    if unknown:
        raise ProcError(f"unknown summand names: {', '.join(sorted(unknown))}")
    if isinstance(mode, ActionGuarded):
        bad = mode.guards - set(f.action_names)
        if bad:
            raise ProcError(f"undeclared guard actions: {', '.join(sorted(bad))}")
    violations = []
    for x in f.vars:
        term = f.equations.get(x)
        if term is None:
            continue
        for leaf, path, above in iter_leaves(term):
            if leaf.name in sigma.guarded_names and not _leaf_ok(mode, above):
                violations.append((x, path, leaf.name))
    return GuardReport(tuple(violations))


def weaken(sigma: Summand, subset: Summand) -> Summand:
    if not subset.guarded_names <= sigma.guarded_names:
        extra = ", ".join(sorted(subset.guarded_names - sigma.guarded_names))
        raise ProcError(f"not a subsummand: {extra} not in the summand")
    return subset


def require_guarded(f: EquationSystem, sigma=None, mode=None) -> GuardReport:
    report = check_guarded(f, sigma, mode)
    if not report.guarded:
        raise GuardednessError(report)
    return report
