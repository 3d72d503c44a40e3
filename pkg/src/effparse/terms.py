"""Lambda-term IR for word and combinator denotations.

Terms are immutable trees.  Effect operations (fmap, unit, join, ap,
counit, internalisation, lowering, named transformations) appear as
explicit nodes whose functor arguments are effect names resolved against
the registry at evaluation time.  ``Coerce`` is internal: the type checker
inserts it where a literal carrier term (a lambda over assignments,
states, or continuations) stands for an effect-typed value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Term:
    pass


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Lam(Term):
    param: str
    body: Term


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Pred(Term):
    name: str
    args: tuple


@dataclass(frozen=True)
class Const(Term):
    entity: str


@dataclass(frozen=True)
class BoolLit(Term):
    value: bool


@dataclass(frozen=True)
class Not(Term):
    arg: Term


@dataclass(frozen=True)
class And(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Or(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Eq(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    other: Term


@dataclass(frozen=True)
class Forall(Term):
    var: str
    body: Term


@dataclass(frozen=True)
class Exists(Term):
    var: str
    body: Term


@dataclass(frozen=True)
class SetBuilder(Term):
    """{ yields | var ranges over entities, guard holds }"""

    var: str
    guard: Term
    yields: Term


@dataclass(frozen=True)
class Push(Term):
    """Prepend an element to a discourse-state sequence."""

    item: Term
    seq: Term


@dataclass(frozen=True)
class Idx(Term):
    """Read a position of an assignment/state sequence."""

    seq: Term
    index: int


@dataclass(frozen=True)
class Fmap(Term):
    functor: str
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Eta(Term):
    functor: str
    arg: Term


@dataclass(frozen=True)
class Mu(Term):
    functor: str
    arg: Term


@dataclass(frozen=True)
class ApOp(Term):
    functor: str
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Eps(Term):
    left: str
    right: str
    arg: Term


@dataclass(frozen=True)
class Upsilon(Term):
    functor: str
    fn: Term


@dataclass(frozen=True)
class Lower(Term):
    arg: Term


@dataclass(frozen=True)
class ApplyNat(Term):
    """Apply a registered natural transformation (handlers included)."""

    name: str
    arg: Term


@dataclass(frozen=True)
class Coerce(Term):
    """Internal: wrap the value of ``body`` as the carrier of ``functor``."""

    functor: str
    body: Term


_counter = itertools.count()


def fresh_var(stem: str = "v") -> str:
    """A variable name that cannot collide with language-file symbols."""
    return f"_{stem}{next(_counter)}"


def free_vars(term: Term) -> frozenset:
    if isinstance(term, Var):
        return frozenset([term.name])
    if isinstance(term, Lam):
        return free_vars(term.body) - {term.param}
    if isinstance(term, (Forall, Exists)):
        return free_vars(term.body) - {term.var}
    if isinstance(term, SetBuilder):
        return (free_vars(term.guard) | free_vars(term.yields)) - {term.var}
    out = frozenset()
    for child in _children(term):
        out |= free_vars(child)
    return out


def _children(term: Term):
    if isinstance(term, App):
        return (term.fn, term.arg)
    if isinstance(term, Pair):
        return (term.left, term.right)
    if isinstance(term, Pred):
        return term.args
    if isinstance(term, Not):
        return (term.arg,)
    if isinstance(term, (And, Or, Eq)):
        return (term.left, term.right)
    if isinstance(term, If):
        return (term.cond, term.then, term.other)
    if isinstance(term, Push):
        return (term.item, term.seq)
    if isinstance(term, Idx):
        return (term.seq,)
    if isinstance(term, (Fmap, ApOp)):
        return (term.fn, term.arg)
    if isinstance(term, (Eta, Mu, Eps, Lower, ApplyNat)):
        return (term.arg,)
    if isinstance(term, Upsilon):
        return (term.fn,)
    if isinstance(term, Coerce):
        return (term.body,)
    return ()
