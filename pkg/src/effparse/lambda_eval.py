"""Call-by-value evaluator for denotation terms.

Evaluation is deterministic and left-to-right; quantifiers and set
builders range over the model's entities; predicates read the model's
extensions.  Each registered effect functor is backed by a value carrier:

    G  reader over assignments          ReaderV
    W  writer with (t, and, true)       PairV(value, B)
    S  finite nondeterminism            SetV
    C  continuation into truth values   ContV
    D  state over discourse sequences   StateV (state -> set of pairs)
    M  optionality with absent #        MaybeV
    P  pairing with an assignment       PairV(value, SeqV)

``P`` is the left adjoint of ``G``; the counit applies the reader inside
a pair to the paired assignment.  Functors registered under other names
type-check and appear in diagrams but have no runtime carrier, and
evaluating them raises.
"""

from __future__ import annotations

from . import terms as T
from .model import Model
from .typesys import CapabilityError, NatDef, Registry, UnknownEffectError
from .values import (ABSENT, B, ContV, E, Fn, MaybeV, PairV, ReaderV, SeqV,
                     SetV, StateV, Value, render, structural_key)


class EvalError(Exception):
    pass


class UnboundVariableError(EvalError):
    pass


class NotAFunctionError(EvalError):
    pass


class ShapeError(EvalError):
    """A value does not have the carrier shape an operation expects."""


def apply_value(fn, arg):
    if isinstance(fn, Fn):
        return fn.run(arg)
    raise NotAFunctionError(f"cannot apply non-function value {render(fn)}")


def _as_bool(v) -> bool:
    if not isinstance(v, B):
        raise ShapeError(f"expected a truth value, got {render(v)}")
    return v.value


def _as_entity(v) -> str:
    if not isinstance(v, E):
        raise ShapeError(f"expected an entity, got {render(v)}")
    return v.name


# -- the interpreter -----------------------------------------------------

def eval_term(term, env: dict, model: Model, reg: Registry):
    """Evaluate a closed-under-env term to a value."""
    if isinstance(term, T.Var):
        try:
            return env[term.name]
        except KeyError:
            raise UnboundVariableError(f"unbound variable {term.name}") from None
    if isinstance(term, T.Lam):
        def run(v, _t=term, _env=env):
            return eval_term(_t.body, {**_env, _t.param: v}, model, reg)
        return Fn(run, label=f"\\{term.param}")
    if isinstance(term, T.App):
        fn = eval_term(term.fn, env, model, reg)
        arg = eval_term(term.arg, env, model, reg)
        return apply_value(fn, arg)
    if isinstance(term, T.Pair):
        return PairV(eval_term(term.left, env, model, reg),
                     eval_term(term.right, env, model, reg))
    if isinstance(term, T.Pred):
        args = tuple(_as_entity(eval_term(a, env, model, reg)) for a in term.args)
        ext = model.extension(term.name, len(args))
        return B(args in ext)
    if isinstance(term, T.Const):
        model.entity_index(term.entity)
        return E(term.entity)
    if isinstance(term, T.BoolLit):
        return B(term.value)
    if isinstance(term, T.Not):
        return B(not _as_bool(eval_term(term.arg, env, model, reg)))
    if isinstance(term, T.And):
        return B(_as_bool(eval_term(term.left, env, model, reg))
                 and _as_bool(eval_term(term.right, env, model, reg)))
    if isinstance(term, T.Or):
        return B(_as_bool(eval_term(term.left, env, model, reg))
                 or _as_bool(eval_term(term.right, env, model, reg)))
    if isinstance(term, T.Eq):
        from .values import values_equal
        return B(values_equal(eval_term(term.left, env, model, reg),
                              eval_term(term.right, env, model, reg), model))
    if isinstance(term, T.If):
        if _as_bool(eval_term(term.cond, env, model, reg)):
            return eval_term(term.then, env, model, reg)
        return eval_term(term.other, env, model, reg)
    if isinstance(term, T.Forall):
        return B(all(_as_bool(eval_term(term.body, {**env, term.var: E(e)}, model, reg))
                     for e in model.entities))
    if isinstance(term, T.Exists):
        return B(any(_as_bool(eval_term(term.body, {**env, term.var: E(e)}, model, reg))
                     for e in model.entities))
    if isinstance(term, T.SetBuilder):
        out = []
        for e in model.entities:
            inner = {**env, term.var: E(e)}
            if _as_bool(eval_term(term.guard, inner, model, reg)):
                out.append(eval_term(term.yields, inner, model, reg))
        return SetV(out)
    if isinstance(term, T.Push):
        item = eval_term(term.item, env, model, reg)
        seq = eval_term(term.seq, env, model, reg)
        if not isinstance(seq, SeqV):
            raise ShapeError("push expects a sequence")
        return SeqV((item,) + seq.items)
    if isinstance(term, T.Idx):
        seq = eval_term(term.seq, env, model, reg)
        if not isinstance(seq, SeqV):
            raise ShapeError("idx expects a sequence")
        if term.index >= len(seq.items):
            raise EvalError(f"sequence has no position {term.index}")
        return seq.items[term.index]
    if isinstance(term, T.Fmap):
        fn = eval_term(term.fn, env, model, reg)
        return fmap_apply(reg, term.functor, fn, eval_term(term.arg, env, model, reg))
    if isinstance(term, T.Eta):
        return eta(reg, term.functor, eval_term(term.arg, env, model, reg))
    if isinstance(term, T.Mu):
        return join(reg, term.functor, eval_term(term.arg, env, model, reg))
    if isinstance(term, T.ApOp):
        fn = eval_term(term.fn, env, model, reg)
        return ap(reg, term.functor, fn, eval_term(term.arg, env, model, reg))
    if isinstance(term, T.Eps):
        return counit(reg, term.left, term.right, eval_term(term.arg, env, model, reg))
    if isinstance(term, T.Upsilon):
        return upsilon(reg, term.functor, eval_term(term.fn, env, model, reg))
    if isinstance(term, T.Lower):
        return lower(eval_term(term.arg, env, model, reg))
    if isinstance(term, T.ApplyNat):
        nat = reg.nat(term.name)
        return apply_nat(reg, nat, eval_term(term.arg, env, model, reg), model)
    if isinstance(term, T.Coerce):
        return _coerce(term.functor, eval_term(term.body, env, model, reg))
    raise EvalError(f"cannot evaluate {term!r}")


def _coerce(functor: str, v):
    """Wrap a literal carrier term's value as the proper carrier."""
    if isinstance(v, Fn):
        if functor == "G":
            return ReaderV(v.run)
        if functor == "D":
            run = v.run

            def run_state(s, _run=run):
                out = _run(s)
                if not isinstance(out, SetV):
                    raise ShapeError("a state carrier must yield a set of outcomes")
                return out
            return StateV(run_state)
        if functor == "C":
            def run_cont(c, _run=v.run):
                return _run(Fn(c, label="cont"))
            return ContV(run_cont)
    return v


# -- carrier shape checks ------------------------------------------------

_CARRIER_CLASS = {"G": ReaderV, "W": PairV, "S": SetV, "C": ContV,
                  "D": StateV, "M": MaybeV, "P": PairV}


def _expect(f: str, v, cls):
    if not isinstance(v, cls):
        raise ShapeError(f"value {render(v)} is not a {f}-carrier")
    return v


def check_shape(f: str, v) -> None:
    cls = _CARRIER_CLASS.get(f)
    if cls is None:
        raise UnknownEffectError(f"functor {f} has no runtime carrier")
    _expect(f, v, cls)


def _run_state(v, s):
    out = _expect("D", v, StateV).run(s)
    if not isinstance(out, SetV):
        raise ShapeError("a state carrier must yield a set of outcomes")
    for pr in out.elems:
        if not isinstance(pr, PairV) or not isinstance(pr.right, SeqV):
            raise ShapeError("state outcomes must be (value, state) pairs")
    return out


# -- functor operations --------------------------------------------------

def fmap_apply(reg: Registry, f: str, fn, v):
    """Map a function over an effectful value, per carrier."""
    reg.require_cap(f, "functor")
    if f == "G":
        r = _expect(f, v, ReaderV)
        return ReaderV(lambda g: apply_value(fn, r.run(g)))
    if f == "W":
        p = _expect(f, v, PairV)
        return PairV(apply_value(fn, p.left), p.right)
    if f == "P":
        p = _expect(f, v, PairV)
        return PairV(apply_value(fn, p.left), p.right)
    if f == "S":
        s = _expect(f, v, SetV)
        return SetV(apply_value(fn, x) for x in s.elems)
    if f == "C":
        k = _expect(f, v, ContV)
        return ContV(lambda c: k.run(lambda a: c(apply_value(fn, a))))
    if f == "M":
        m = _expect(f, v, MaybeV)
        if m.absent:
            return m
        return MaybeV(apply_value(fn, m.payload))
    if f == "D":
        st = _expect(f, v, StateV)

        # writes pass through unmapped: mapping them too would break the
        # monad unit law on the full carrier
        def run(s):
            return SetV(PairV(apply_value(fn, pr.left), pr.right)
                        for pr in _run_state(st, s).elems)
        return StateV(run)
    raise UnknownEffectError(f"functor {f} has no runtime carrier")


def eta(reg: Registry, f: str, v):
    reg.require_cap(f, "applicative")
    if f == "G":
        return ReaderV(lambda g: v)
    if f == "W":
        return PairV(v, B(True))
    if f == "S":
        return SetV([v])
    if f == "C":
        return ContV(lambda c: c(v))
    if f == "M":
        return MaybeV(v)
    if f == "D":
        return StateV(lambda s: SetV([PairV(v, s)]))
    raise UnknownEffectError(f"functor {f} has no runtime carrier")


def join(reg: Registry, f: str, vv):
    reg.require_cap(f, "monad")
    if f == "G":
        r = _expect(f, vv, ReaderV)

        def run(g):
            inner = _expect(f, r.run(g), ReaderV)
            return inner.run(g)
        return ReaderV(run)
    if f == "W":
        outer = _expect(f, vv, PairV)
        inner = _expect(f, outer.left, PairV)
        p, q = _as_bool(outer.right), _as_bool(inner.right)
        return PairV(inner.left, B(p and q))
    if f == "S":
        s = _expect(f, vv, SetV)
        out = []
        for x in s.elems:
            out.extend(_expect(f, x, SetV).elems)
        return SetV(out)
    if f == "C":
        k = _expect(f, vv, ContV)
        return ContV(lambda c: k.run(lambda m: _expect(f, m, ContV).run(c)))
    if f == "M":
        m = _expect(f, vv, MaybeV)
        if m.absent:
            return m
        return _expect(f, m.payload, MaybeV)
    if f == "D":
        st = _expect(f, vv, StateV)

        def run(s):
            out = []
            for pr in _run_state(st, s).elems:
                out.extend(_run_state(pr.left, pr.right).elems)
            return SetV(out)
        return StateV(run)
    raise UnknownEffectError(f"functor {f} has no runtime carrier")


def ap(reg: Registry, f: str, vf, vx):
    """Left-to-right applicative combination: join . fmap (fmap)."""
    reg.require_cap(f, "applicative")
    if not reg.has_cap(f, "monad"):
        raise CapabilityError(
            f"functor {f} is applicative-only and ships no bespoke ap")
    applied = fmap_apply(
        reg, f, Fn(lambda fn: fmap_apply(reg, f, fn, vx), label="ap-inner"), vf)
    return join(reg, f, applied)


def counit(reg: Registry, left: str, right: str, v):
    """Adjunction counit; the shipped pair is (P, G)."""
    if not reg.is_adjunction(left, right):
        raise UnknownEffectError(f"({left}, {right}) is not a registered adjunction")
    if (left, right) == ("P", "G"):
        p = _expect("P", v, PairV)
        r = _expect("G", p.left, ReaderV)
        return r.run(p.right)
    raise UnknownEffectError(f"no value-level counit for ({left}, {right})")


def adjunction_unit(reg: Registry, left: str, right: str, v):
    """Adjunction unit into R(L tau); dual of :func:`counit`."""
    if not reg.is_adjunction(left, right):
        raise UnknownEffectError(f"({left}, {right}) is not a registered adjunction")
    if (left, right) == ("P", "G"):
        return ReaderV(lambda g: PairV(v, g))
    raise UnknownEffectError(f"no value-level unit for ({left}, {right})")


def upsilon(reg: Registry, r: str, fnv):
    """Internalise R(a -> b) as a -> R b."""
    check_shape(r, fnv)

    def run(a):
        return fmap_apply(reg, r, Fn(lambda f: apply_value(f, a), label="ups"), fnv)
    return Fn(run, label=f"ups_{r}")


def lower(v):
    """Apply a continuation computation to the identity continuation."""
    k = _expect("C", v, ContV)

    def ident(p):
        if not isinstance(p, B):
            raise ShapeError("lowering a computation whose core is not a truth value")
        return p
    out = k.run(ident)
    if not isinstance(out, B):
        raise ShapeError("lowering produced a non-truth value")
    return out


# -- natural transformations and handlers --------------------------------

def _nat_lower(reg, nat, v, model):
    return lower(v)


def _nat_identity(reg, nat, v, model):
    return v


def _choice_key(v, model: Model):
    if isinstance(v, E):
        return (0, model.entity_index(v.name))
    return (1, render(v))


def _nat_choose_min(reg, nat, v, model):
    s = _expect("S", v, SetV)
    if not s.elems:
        raise EvalError("cannot choose from an empty outcome set")
    return min(s.elems, key=lambda x: _choice_key(x, model))


def _nat_choose_min_state(reg, nat, v, model):
    s0 = SeqV(tuple(E(e) for e in model.initial_state))
    outcomes = _run_state(v, s0).elems
    if not outcomes:
        raise EvalError("cannot choose from an empty outcome set")
    best = min(outcomes, key=lambda pr: _choice_key(pr.left, model))
    return best.left


def _nat_maybe_default(reg, nat, v, model):
    m = _expect("M", v, MaybeV)
    if not m.absent:
        return m.payload
    if nat.default is None:
        raise EvalError(f"handler {nat.name} hit # and declares no default")
    return eval_term(nat.default, {}, model, reg)


def _nat_iota(reg, nat, v, model):
    """Definedness selection: a singleton set yields its member, anything
    else yields the absent marker."""
    s = _expect("S", v, SetV)
    if len(s.elems) == 1:
        return MaybeV(s.elems[0])
    return MaybeV(ABSENT)


def _nat_set_to_cont(reg, nat, v, model):
    s = _expect("S", v, SetV)
    return ContV(lambda c: B(any(_as_bool(c(x)) for x in s.elems)))


BUILTIN_NATS = {
    "lower": _nat_lower,
    "identity": _nat_identity,
    "choose-min": _nat_choose_min,
    "choose-min-state": _nat_choose_min_state,
    "maybe-default": _nat_maybe_default,
    "iota": _nat_iota,
    "set-to-cont": _nat_set_to_cont,
}

# payloads each builtin's handler law is spot-checked on at load time
SPOT_PAYLOADS = {
    "lower": lambda model: [B(True), B(False), B(True)],
    None: lambda model: [B(True), B(False),
                         E(model.entities[0]) if model.entities else B(True)],
}


def apply_nat(reg: Registry, nat: NatDef, v, model: Model):
    """Apply a registered transformation's component to a value."""
    if nat.source:
        check_shape(nat.source[0], v)
    try:
        impl = BUILTIN_NATS[nat.component]
    except KeyError:
        raise UnknownEffectError(
            f"nat {nat.name}: no builtin named {nat.component}") from None
    return impl(reg, nat, v, model)


def run_handler(reg: Registry, h: NatDef, v, model: Model):
    """Apply a handler (a nat into the identity functor)."""
    if not h.is_handler:
        raise CapabilityError(f"nat {h.name} is not a handler")
    return apply_nat(reg, h, v, model)
