"""Runtime values, extensional equality, and deterministic rendering.

Plain data (booleans, entities, pairs, finite sets, optionals, entity
sequences) compares structurally.  Function-like carriers (closures,
readers, state transformers, continuations) compare extensionally over a
finite probe domain derived from the model: all entities, both booleans,
characteristic predicates over entity subsets, and every assignment/state
sequence of length at most two.  That truncation makes value equality
decidable at desk scale, which the law suites rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .model import Model


class ValueError_(Exception):
    """Raised when values cannot be compared or are shape-mismatched."""


class _Absent:
    __slots__ = ()

    def __repr__(self):
        return "#"


ABSENT = _Absent()


@dataclass(frozen=True)
class Value:
    pass


@dataclass(frozen=True)
class B(Value):
    value: bool


@dataclass(frozen=True)
class E(Value):
    name: str


@dataclass(frozen=True)
class PairV(Value):
    left: Value
    right: Value


@dataclass(frozen=True)
class MaybeV(Value):
    payload: object  # Value or ABSENT

    @property
    def absent(self) -> bool:
        return self.payload is ABSENT


@dataclass(frozen=True)
class SeqV(Value):
    """Assignment / discourse-state sequence."""

    items: tuple = ()


class SetV(Value):
    """Finite set with structural dedup where elements are hashable."""

    __slots__ = ("elems",)

    def __init__(self, elems=()):
        keyed = {}
        rest = []
        for v in elems:
            k = structural_key(v)
            if k is None:
                rest.append(v)
            elif k not in keyed:
                keyed[k] = v
        ordered = sorted(keyed.items(), key=lambda kv: repr(kv[0]))
        object.__setattr__(self, "elems", tuple(v for _, v in ordered) + tuple(rest))

    def __setattr__(self, *a):
        raise AttributeError("SetV is immutable")

    def __repr__(self):
        return f"SetV({list(self.elems)!r})"

    def __eq__(self, other):
        if not isinstance(other, SetV):
            return NotImplemented
        return self.elems == other.elems

    def __hash__(self):
        return hash(self.elems)


@dataclass(frozen=True, eq=False)
class Fn(Value):
    run: object  # Value -> Value
    label: str = "fn"

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


@dataclass(frozen=True, eq=False)
class ReaderV(Value):
    run: object  # SeqV -> Value

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


@dataclass(frozen=True, eq=False)
class StateV(Value):
    run: object  # SeqV -> SetV of PairV(Value, SeqV)

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


@dataclass(frozen=True, eq=False)
class ContV(Value):
    run: object  # (Value -> B) -> B

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)


def structural_key(v):
    """Hashable identity for plain data; None for function-like values."""
    if isinstance(v, B):
        return ("B", v.value)
    if isinstance(v, E):
        return ("E", v.name)
    if isinstance(v, MaybeV):
        if v.absent:
            return ("M", None)
        k = structural_key(v.payload)
        return None if k is None else ("M", k)
    if isinstance(v, PairV):
        kl, kr = structural_key(v.left), structural_key(v.right)
        if kl is None or kr is None:
            return None
        return ("P", kl, kr)
    if isinstance(v, SeqV):
        ks = tuple(structural_key(x) for x in v.items)
        return None if any(k is None for k in ks) else ("Q", ks)
    if isinstance(v, SetV):
        ks = tuple(structural_key(x) for x in v.elems)
        return None if any(k is None for k in ks) else ("S", frozenset(ks))
    return None


def render(v) -> str:
    """Deterministic human-readable form (used by the CLI)."""
    if isinstance(v, B):
        return "T" if v.value else "F"
    if isinstance(v, E):
        return v.name
    if isinstance(v, MaybeV):
        return "#" if v.absent else render(v.payload)
    if isinstance(v, PairV):
        return f"<{render(v.left)}, {render(v.right)}>"
    if isinstance(v, SeqV):
        return "[" + " ".join(render(x) for x in v.items) + "]"
    if isinstance(v, SetV):
        return "{" + ", ".join(sorted(render(x) for x in v.elems)) + "}"
    if isinstance(v, Fn):
        return f"<{v.label}>"
    if isinstance(v, ReaderV):
        return "<reader>"
    if isinstance(v, StateV):
        return "<state>"
    if isinstance(v, ContV):
        return "<cont>"
    return repr(v)


# -- probe domains -------------------------------------------------------

_MAX_PROBE_DEPTH = 4


def probe_sequences(model: Model) -> tuple:
    """All entity sequences of length <= 2, plus the model's own."""
    seqs = [SeqV(())]
    ents = model.entities
    seqs.extend(SeqV((E(e),)) for e in ents)
    seqs.extend(SeqV((E(a), E(b))) for a, b in product(ents, repeat=2))
    for extra in (model.initial_assignment, model.initial_state):
        s = SeqV(tuple(E(e) for e in extra))
        if s not in seqs:
            seqs.append(s)
    return tuple(seqs)


def probe_continuations(model: Model) -> tuple:
    """Constant continuations, boolean passthrough, and characteristic
    predicates of every entity subset (entity domains are tiny)."""
    conts = [lambda v: B(True), lambda v: B(False),
             lambda v: v if isinstance(v, B) else B(False)]
    ents = model.entities
    if len(ents) <= 5:
        for mask in range(1 << len(ents)):
            chosen = frozenset(e for i, e in enumerate(ents) if mask >> i & 1)
            conts.append(lambda v, s=chosen: B(isinstance(v, E) and v.name in s))
    return tuple(conts)


def probe_arguments(model: Model) -> tuple:
    args = [B(True), B(False)]
    args.extend(E(e) for e in model.entities)
    for c in probe_continuations(model):
        args.append(Fn(c, label="probe"))
    return tuple(args)


def values_equal(a, b, model: Model, depth: int = 0) -> bool:
    """Structural on data, extensional (over the model probes) on
    function-like carriers."""
    if depth > _MAX_PROBE_DEPTH:
        raise ValueError_("value comparison exceeded probe depth")
    if isinstance(a, B) and isinstance(b, B):
        return a == b
    if isinstance(a, E) and isinstance(b, E):
        return a == b
    if isinstance(a, MaybeV) and isinstance(b, MaybeV):
        if a.absent or b.absent:
            return a.absent and b.absent
        return values_equal(a.payload, b.payload, model, depth)
    if isinstance(a, PairV) and isinstance(b, PairV):
        return (values_equal(a.left, b.left, model, depth)
                and values_equal(a.right, b.right, model, depth))
    if isinstance(a, SeqV) and isinstance(b, SeqV):
        return (len(a.items) == len(b.items)
                and all(values_equal(x, y, model, depth) for x, y in zip(a.items, b.items)))
    if isinstance(a, SetV) and isinstance(b, SetV):
        return (_set_includes(a, b, model, depth)
                and _set_includes(b, a, model, depth))
    if isinstance(a, ReaderV) and isinstance(b, ReaderV):
        return _probes_agree(a.run, b.run, probe_sequences(model), model, depth)
    if isinstance(a, StateV) and isinstance(b, StateV):
        return _probes_agree(a.run, b.run, probe_sequences(model), model, depth)
    if isinstance(a, ContV) and isinstance(b, ContV):
        return _probes_agree(a.run, b.run, probe_continuations(model), model, depth)
    if isinstance(a, Fn) and isinstance(b, Fn):
        return _probes_agree(a.run, b.run, probe_arguments(model), model, depth)
    return False


def _probed(f, x):
    """Apply a probe; collapse any evaluation error to a comparable token."""
    try:
        return f(x)
    except Exception as exc:  # noqa: BLE001 - probes may be ill-typed on purpose
        return f"!{type(exc).__name__}"


def _probes_agree(fa, fb, probes, model, depth) -> bool:
    for x in probes:
        ra, rb = _probed(fa, x), _probed(fb, x)
        if isinstance(ra, str) or isinstance(rb, str):
            if ra != rb:
                return False
        elif not values_equal(ra, rb, model, depth + 1):
            return False
    return True


def _set_includes(a: SetV, b: SetV, model, depth) -> bool:
    return all(any(values_equal(x, y, model, depth + 1) for y in a.elems)
               for x in b.elems)
