"""Term syntax for systems of recursive process definitions.

A system assigns to every variable ``x`` a finite term over

* parameter leaves (free process names, the ``Y`` part),
* variable leaves (recursive references, the ``X`` part),
* action prefixes ``a.t``,
* effect branching ``{t1, ..., tn}`` (weighted for subdistributions).

The concrete syntax is::

    effect set; actions a, b; params y; vars x;
    x = { y, a.x };
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Mapping, Union

TAU = "tau"


class ProcError(Exception):
    """Base class for all input errors (exit code 2 in the CLI)."""


class ParseError(ProcError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class ValidationError(ProcError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class KindError(ProcError):
    """Operation not available for this effect kind."""


class SignatureError(ProcError):
    """Mismatched actions, outputs or roots between two objects."""


class EffectKind(str, Enum):
    SET = "set"
    SUBDIST = "subdist"
    MAYBE = "maybe"

    def __str__(self):
        return self.value


@dataclass(frozen=True, order=True)
class Action:
    name: str

    @property
    def visible(self) -> bool:
        return self.name != TAU


@dataclass(frozen=True)
class Leaf:
    name: str
    var: bool = False

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Prefix:
    action: str
    body: "Term"

    def __str__(self):
        return f"{self.action}.{self.body}"


@dataclass(frozen=True)
class Choice:
    branches: tuple = ()  # of (Fraction, Term)

    def __str__(self):
        return "{" + ", ".join(str(t) for _, t in self.branches) + "}"


Term = Union[Leaf, Prefix, Choice]

DEADLOCK = Choice(())


def choice(*terms, weights=None) -> Choice:
    if weights is None:
        weights = [Fraction(1)] * len(terms)
    return Choice(tuple((Fraction(w), t) for w, t in zip(weights, terms)))


@dataclass(frozen=True)
class Summand:
    """Names in whose coproduct component guardedness is claimed."""

    guarded_names: frozenset

    @classmethod
    def of(cls, names) -> "Summand":
        return cls(frozenset(names))

    @classmethod
    def all_vars(cls, system: "EquationSystem") -> "Summand":
        return cls(frozenset(system.vars))


@dataclass(frozen=True)
class EquationSystem:
    kind: EffectKind
    actions: tuple  # of Action, tau always included
    params: tuple
    vars: tuple
    equations: Mapping[str, Term] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", EffectKind(self.kind))
        acts = [a if isinstance(a, Action) else Action(a) for a in self.actions]
        if Action(TAU) not in acts:
            acts.append(Action(TAU))
        object.__setattr__(self, "actions", tuple(acts))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "equations", dict(self.equations))

    @property
    def action_names(self) -> tuple:
        return tuple(a.name for a in self.actions)

    @property
    def names(self) -> frozenset:
        return frozenset(self.params) | frozenset(self.vars)

    def __getitem__(self, var: str) -> Term:
        return self.equations[var]

    def replace(self, **changes) -> "EquationSystem":
        data = dict(kind=self.kind, actions=self.actions, params=self.params,
                    vars=self.vars, equations=self.equations)
        data.update(changes)
        return EquationSystem(**data)


# ---------------------------------------------------------------------------
# traversal helpers

def iter_leaves(term: Term, path=(), guards=()) -> Iterator[tuple]:
    """Yield ``(leaf, path, prefix_actions_above)`` for every leaf occurrence.

    ``path`` indexes Choice branches; a Prefix body contributes ``'.'``.
    """
    if isinstance(term, Leaf):
        yield term, path, guards
    elif isinstance(term, Prefix):
        yield from iter_leaves(term.body, path + (".",), guards + (term.action,))
    else:
        for i, (_, t) in enumerate(term.branches):
            yield from iter_leaves(t, path + (i,), guards)


def format_path(var: str, path) -> str:
    return "/".join([var] + [str(p) for p in path])


def map_leaves(term: Term, fn) -> Term:
    """Rebuild ``term`` with every leaf replaced by ``fn(leaf)`` (a term)."""
    if isinstance(term, Leaf):
        return fn(term)
    if isinstance(term, Prefix):
        return Prefix(term.action, map_leaves(term.body, fn))
    return Choice(tuple((w, map_leaves(t, fn)) for w, t in term.branches))


def term_actions(term: Term) -> set:
    if isinstance(term, Leaf):
        return set()
    if isinstance(term, Prefix):
        return {term.action} | term_actions(term.body)
    out = set()
    for _, t in term.branches:
        out |= term_actions(t)
    return out


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


def validate(system: EquationSystem) -> list:
    """Return every invariant violation of ``system`` (empty when valid)."""
    out = []
    names = [a.name for a in system.actions]
    for dup in sorted({n for n in names if names.count(n) > 1}):
        out.append(Violation("actions", f"duplicate action {dup}"))
    for label, seq in (("params", system.params), ("vars", system.vars)):
        for dup in sorted({n for n in seq if seq.count(n) > 1}):
            out.append(Violation(label, f"duplicate name {dup}"))
    for n in sorted(set(system.params) & set(system.vars)):
        out.append(Violation("params", f"{n} declared as both param and var"))
    for x in system.vars:
        if x not in system.equations:
            out.append(Violation(x, f"no equation for {x}"))
    for x in system.equations:
        if x not in system.vars:
            out.append(Violation(x, f"equation for undeclared var {x}"))
    acts = set(names)
    for x, term in system.equations.items():
        _check_term(system, acts, term, x, (), out)
    return out


def _check_term(system, acts, term, var, path, out):
    where = format_path(var, path)
    if isinstance(term, Leaf):
        if term.name not in system.names:
            out.append(Violation(where, f"undeclared name {term.name}"))
        elif term.var != (term.name in system.vars):
            kind = "var" if term.var else "param"
            out.append(Violation(where, f"{term.name} marked {kind} inconsistently"))
    elif isinstance(term, Prefix):
        if term.action not in acts:
            out.append(Violation(where, f"undeclared action {term.action}"))
        _check_term(system, acts, term.body, var, path + (".",), out)
    elif isinstance(term, Choice):
        total = Fraction(0)
        for w, _ in term.branches:
            if w < 0:
                out.append(Violation(where, f"negative weight {w}"))
            if system.kind is not EffectKind.SUBDIST and w != 1:
                out.append(Violation(where, f"weight {w} in {system.kind} system"))
            total += w
        if system.kind is EffectKind.SUBDIST and total > 1:
            out.append(Violation(where, f"weight sum {total} > 1"))
        if system.kind is EffectKind.MAYBE and len(term.branches) > 1:
            out.append(Violation(
                where, f"{len(term.branches)}-branch choice in maybe system"))
        for i, (_, t) in enumerate(term.branches):
            _check_term(system, acts, t, var, path + (i,), out)
    else:
        out.append(Violation(where, f"not a term: {term!r}"))


def check_valid(system: EquationSystem) -> EquationSystem:
    violations = validate(system)
    if violations:
        raise ValidationError(violations)
    return system


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>[0-9]+)
  | (?P<punct>[{}(),;:/.=])
""", re.VERBOSE)

HEADERS = ("effect", "actions", "params", "vars")


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, m.group(), line, col))
            col += m.end() - m.start()
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, text=None, kind=None) -> Token:
        tok = self.tok
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text is not None else kind
            self.fail(f"expected {want}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def ident_list(self) -> list:
        names = [self.expect(kind="ident").text]
        while self.tok.text == ",":
            self.i += 1
            names.append(self.expect(kind="ident").text)
        self.expect(";")
        return names

    def parse(self) -> EquationSystem:
        kind = EffectKind.SET
        decl = {"actions": [], "params": [], "vars": []}
        seen = set()
        while self.tok.kind == "ident" and self.tok.text in HEADERS and self.peek().text != "=":
            head = self.expect(kind="ident")
            if head.text in seen:
                self.fail(f"duplicate {head.text} header", head)
            seen.add(head.text)
            if head.text == "effect":
                val = self.expect(kind="ident")
                try:
                    kind = EffectKind(val.text)
                except ValueError:
                    self.fail(f"unknown effect {val.text!r}", val)
                self.expect(";")
            else:
                decl[head.text] = self.ident_list()
        self.kind = kind
        self.actions = set(decl["actions"]) | {TAU}
        self.params = set(decl["params"])
        self.vars = set(decl["vars"])
        equations = {}
        if self.tok.kind == "eof":
            self.fail("expected at least one equation")
        while self.tok.kind != "eof":
            lhs = self.expect(kind="ident")
            if lhs.text not in self.vars:
                self.fail(f"undeclared var {lhs.text!r}", lhs)
            if lhs.text in equations:
                self.fail(f"duplicate equation for {lhs.text!r}", lhs)
            self.expect("=")
            equations[lhs.text] = self.term()
            self.expect(";")
        return EquationSystem(kind, decl["actions"], decl["params"], decl["vars"], equations)

    def term(self) -> Term:
        tok = self.tok
        if tok.kind == "ident":
            if self.peek().text == ".":
                if tok.text not in self.actions:
                    self.fail(f"undeclared action {tok.text!r}")
                self.i += 2
                return Prefix(tok.text, self.term())
            self.i += 1
            if tok.text in self.vars:
                return Leaf(tok.text, True)
            if tok.text in self.params:
                return Leaf(tok.text, False)
            self.fail(f"undeclared identifier {tok.text!r}", tok)
        if tok.kind == "int" and tok.text == "0":
            self.i += 1
            return DEADLOCK
        if tok.text == "{":
            self.i += 1
            branches = []
            if self.tok.text != "}":
                branches.append(self.branch())
                while self.tok.text == ",":
                    self.i += 1
                    branches.append(self.branch())
            self.expect("}")
            return Choice(tuple(branches))
        self.fail(f"expected a term, found {tok.text or 'end of input'!r}")

    def branch(self):
        tok = self.tok
        if tok.kind == "int" and self.peek().text in (":", "/"):
            num = int(tok.text)
            self.i += 1
            den = 1
            if self.tok.text == "/":
                self.i += 1
                dtok = self.expect(kind="int")
                den = int(dtok.text)
                if den == 0:
                    self.fail("zero denominator", dtok)
            self.expect(":")
            weight = Fraction(num, den)
            if self.kind is not EffectKind.SUBDIST:
                weight = Fraction(1)
            return weight, self.term()
        return Fraction(1), self.term()


def parse_system(text: str) -> EquationSystem:
    """Parse and validate a system; raises ParseError or ValidationError."""
    return check_valid(_Parser(text).parse())


# ---------------------------------------------------------------------------
# printing

def format_term(term: Term, kind: EffectKind = EffectKind.SET) -> str:
    if isinstance(term, Leaf):
        return term.name
    if isinstance(term, Prefix):
        return f"{term.action}.{format_term(term.body, kind)}"
    parts = []
    for w, t in term.branches:
        body = format_term(t, kind)
        parts.append(f"{w}: {body}" if kind is EffectKind.SUBDIST else body)
    return "{" + ", ".join(parts) + "}"


def format_equation(system: EquationSystem, var: str) -> str:
    return f"{var} = {format_term(system.equations[var], system.kind)};"


def format_system(system: EquationSystem) -> str:
    lines = [f"effect {system.kind};"]
    visible = [a.name for a in system.actions if a.visible]
    if visible:
        lines.append("actions " + ", ".join(visible) + ";")
    if system.params:
        lines.append("params " + ", ".join(system.params) + ";")
    if system.vars:
        lines.append("vars " + ", ".join(system.vars) + ";")
    for x in system.vars:
        if x in system.equations:
            lines.append(format_equation(system, x))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# combinators

def fresh_name(base: str, taken) -> str:
    name = base + "'"
    while name in taken:
        name += "'"
    return name


def rename_vars(system: EquationSystem, renaming: Mapping[str, str]) -> EquationSystem:
    """Rename variables (left-hand sides and Var leaves)."""
    def leaf(l):
        return Leaf(renaming.get(l.name, l.name), True) if l.var else l
    equations = {renaming.get(x, x): map_leaves(t, leaf) for x, t in system.equations.items()}
    return system.replace(vars=tuple(renaming.get(x, x) for x in system.vars),
                          equations=equations)


def copair(f: EquationSystem, g: EquationSystem) -> EquationSystem:
    """The system ``[f, g]`` over the disjoint union of both variable sets.

    Variables of ``g`` clashing with names of ``f`` are renamed apart.
    """
    if f.kind is not g.kind:
        raise KindError(f"cannot copair {f.kind} with {g.kind}")
    taken = set(f.names) | set(g.names)
    renaming = {}
    for x in g.vars:
        if x in f.names:
            new = fresh_name(x, taken)
            taken.add(new)
            renaming[x] = new
    g = rename_vars(g, renaming)
    params = list(f.params) + [p for p in g.params if p not in f.params]
    actions = list(f.actions) + [a for a in g.actions if a not in f.actions]
    equations = dict(f.equations)
    equations.update(g.equations)
    return EquationSystem(f.kind, actions, params, list(f.vars) + list(g.vars), equations)


def substitute(system: EquationSystem, bindings: Mapping[str, Term], params=None,
               vars=None) -> EquationSystem:
    """Syntactic Kleisli substitution: replace leaves named in ``bindings``.

    ``params``/``vars`` give the declarations of the resulting system; by
    default substituted names are dropped from the declared params.
    """
    def leaf(l):
        return bindings.get(l.name, l)
    equations = {x: map_leaves(t, leaf) for x, t in system.equations.items()}
    new_params = params if params is not None else [p for p in system.params if p not in bindings]
    new_vars = vars if vars is not None else system.vars
    result = system.replace(params=tuple(new_params), vars=tuple(new_vars), equations=equations)
    return _relabel_leaves(result)


def _relabel_leaves(system: EquationSystem) -> EquationSystem:
    vs = set(system.vars)
    eqs = {x: map_leaves(t, lambda l: Leaf(l.name, l.name in vs))
           for x, t in system.equations.items()}
    return system.replace(equations=eqs)
