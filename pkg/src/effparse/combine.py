"""Combination modes, pruning, chart parsing, and derivation denotations.

A combination of two adjacent constituents is a mode sequence: wrapper
modes (ML/MR/A strip an outer effect off a child, UL/UR feed a unit into
an effectful-domain function, EL/ER internalise an effect-wrapped
function) around exactly one base mode (forward/backward application,
pointwise conjunction/disjunction), possibly under postfix shrinking
modes (J joins a doubled effect, DN lowers a continuation, C cancels an
adjacent adjoint pair).  Sequences are stored outermost-first.

Parsing is CKY over a packed chart keyed by (category, type); an optional
syntactic CFG is intersected with the type grammar by the product
construction.  Unpacking a packed forest is capped and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import sexpr
from . import terms as T
from .lexicon import LexEntry, Lexicon
from .typesys import Arrow, Base, Eff, Prod, Registry, Ty, deep_effect_count


class ModeError(Exception):
    pass


class UnknownTokenError(Exception):
    def __init__(self, token: str, position: int):
        super().__init__(f"unknown token {token!r} at position {position}")
        self.token = token
        self.position = position


BASE_KINDS = ("fwd", "bwd", "conj", "disj")
_BASE_RENDER = {"fwd": ">", "bwd": "<", "conj": "&", "disj": "|"}
_RENDER_BASE = {v: k for k, v in _BASE_RENDER.items()}


@dataclass(frozen=True)
class Mode:
    kind: str
    functor: str | None = None
    pair: tuple | None = None
    rendered: str = field(init=False, compare=False, repr=False, default="")

    def __post_init__(self):
        if self.kind in _BASE_RENDER:
            text = _BASE_RENDER[self.kind]
        elif self.kind == "dn":
            text = "DN"
        elif self.kind == "c":
            text = f"C_{self.pair[0]}:{self.pair[1]}"
        else:
            text = f"{self.kind.upper()}_{self.functor}"
        object.__setattr__(self, "rendered", text)

    def render(self) -> str:
        return self.rendered

    def __str__(self) -> str:
        return self.rendered


def parse_mode(text: str) -> Mode:
    if text in _RENDER_BASE:
        return Mode(_RENDER_BASE[text])
    if text == "DN":
        return Mode("dn")
    if text.startswith("C_") and ":" in text:
        left, right = text[2:].split(":", 1)
        return Mode("c", pair=(left, right))
    if "_" in text:
        kind, functor = text.split("_", 1)
        kind = kind.lower()
        if kind in ("ml", "mr", "a", "ul", "ur", "el", "er", "j"):
            return Mode(kind, functor=functor)
    raise ModeError(f"cannot parse mode {text!r}")


def render_modes(seq) -> str:
    return " ".join(m.render() for m in seq)


def parse_modes(text: str):
    return tuple(parse_mode(tok) for tok in text.split())


# -- enumeration -----------------------------------------------------------

def _pure(ty: Ty) -> bool:
    return deep_effect_count(ty) == 0


def _structural_cap(lty: Ty, rty: Ty) -> int:
    def nodes(ty):
        if isinstance(ty, Base):
            return 0
        if isinstance(ty, (Arrow, Prod)):
            a, b = (ty.dom, ty.cod) if isinstance(ty, Arrow) else (ty.left, ty.right)
            return 1 + nodes(a) + nodes(b)
        if isinstance(ty, Eff):
            return 1 + nodes(ty.inner)
        return 0
    return 2 * (nodes(lty) + nodes(rty)) + 2


def _seq_sort_key(seq) -> tuple:
    return tuple(m.render() for m in seq)


def modes_by_type(reg: Registry, left: Ty, right: Ty, budget: int,
                  pruned: bool = False, seq_cap: int | None = None) -> dict:
    """Mode sequences combining two constituent types, grouped by result
    type; each group is sorted and holds at most ``seq_cap`` sequences.

    With ``pruned`` the normal-form rules are applied inside the recursion
    (each rule is local to a bounded window, so prefix filtering equals
    post-filtering while skipping the discarded interleavings).  A group
    cap never hides a result type, because every type keeps at least one
    witness sequence; it bounds the work on deeply stacked effects, where
    the number of interleavings grows combinatorially.
    """
    if budget < 1:
        return {}
    budget = min(budget, _structural_cap(left, right))
    right_adjoints = tuple(r for _, r in reg.adjunctions())
    cache = reg._combo_cache

    def keep(mode: Mode, seq: tuple) -> bool:
        if not pruned:
            return True
        return not _banned_prefix(mode, seq, reg)

    def go(lty: Ty, rty: Ty, b: int) -> dict:
        key = (lty, rty, b, pruned, seq_cap)
        hit = cache.get(key)
        if hit is not None:
            return hit
        out: dict = {}

        def add(seq, ty) -> bool:
            bucket = out.setdefault(ty, set())
            before = len(bucket)
            bucket.add(seq)
            return len(bucket) != before

        if b >= 1:
            # base modes: the argument side must be pure
            if isinstance(lty, Arrow) and rty == lty.dom and _pure(lty.dom):
                add((Mode("fwd"),), lty.cod)
            if isinstance(rty, Arrow) and lty == rty.dom and _pure(rty.dom):
                add((Mode("bwd"),), rty.cod)
            if (isinstance(lty, Arrow) and lty == rty and _pure(lty.dom)
                    and lty.cod == Base("t")):
                add((Mode("conj"),), lty)
                add((Mode("disj"),), lty)
        if b >= 2:
            def wrap(mode, inner, result_of):
                for ty, seqs in inner.items():
                    res = result_of(ty)
                    if res is None:
                        continue
                    for seq in seqs:
                        if keep(mode, seq):
                            add((mode,) + seq, res)

            if isinstance(lty, Eff):
                f = lty.functor
                wrap(Mode("ml", f), go(lty.inner, rty, b - 1),
                     lambda ty, f=f: Eff(f, ty) if reg.applicable(f, ty) else None)
            if isinstance(rty, Eff):
                f = rty.functor
                wrap(Mode("mr", f), go(lty, rty.inner, b - 1),
                     lambda ty, f=f: Eff(f, ty) if reg.applicable(f, ty) else None)
            if (isinstance(lty, Eff) and isinstance(rty, Eff)
                    and lty.functor == rty.functor
                    and reg.has_cap(lty.functor, "applicative")):
                f = lty.functor
                wrap(Mode("a", f), go(lty.inner, rty.inner, b - 1),
                     lambda ty, f=f: Eff(f, ty) if reg.applicable(f, ty) else None)
            if (isinstance(lty, Arrow) and isinstance(lty.dom, Eff)
                    and reg.has_cap(lty.dom.functor, "applicative")):
                wrap(Mode("ur", lty.dom.functor),
                     go(Arrow(lty.dom.inner, lty.cod), rty, b - 1), lambda ty: ty)
            if (isinstance(rty, Arrow) and isinstance(rty.dom, Eff)
                    and reg.has_cap(rty.dom.functor, "applicative")):
                wrap(Mode("ul", rty.dom.functor),
                     go(lty, Arrow(rty.dom.inner, rty.cod), b - 1), lambda ty: ty)
            if (isinstance(lty, Eff) and isinstance(lty.inner, Arrow)
                    and lty.functor in right_adjoints):
                r, inner = lty.functor, lty.inner
                wrap(Mode("el", r),
                     go(Arrow(inner.dom, Eff(r, inner.cod)), rty, b - 1), lambda ty: ty)
            if (isinstance(rty, Eff) and isinstance(rty.inner, Arrow)
                    and rty.functor in right_adjoints):
                r, inner = rty.functor, rty.inner
                wrap(Mode("er", r),
                     go(lty, Arrow(inner.dom, Eff(r, inner.cod)), b - 1), lambda ty: ty)
            # postfix modes shrink existing results; close under chains
            frontier = [(ty, seq) for ty, seqs in out.items() for seq in seqs]
            while frontier:
                ty, seq = frontier.pop()
                if len(seq) + 1 > b:
                    continue
                candidates = []
                if (isinstance(ty, Eff) and isinstance(ty.inner, Eff)
                        and ty.functor == ty.inner.functor
                        and reg.has_cap(ty.functor, "monad")):
                    candidates.append((Mode("j", ty.functor), ty.inner))
                if (isinstance(ty, Eff) and ty.inner == Base("t")
                        and reg.lowering_for(ty.functor) is not None):
                    candidates.append((Mode("dn"), ty.inner))
                if isinstance(ty, Eff) and isinstance(ty.inner, Eff):
                    pair = (ty.functor, ty.inner.functor)
                    if reg.is_adjunction(*pair):
                        candidates.append((Mode("c", pair=pair), ty.inner.inner))
                for mode, res in candidates:
                    if keep(mode, seq):
                        new = (mode,) + seq
                        if add(new, res):
                            frontier.append((res, new))
        result = {ty: tuple(sorted(seqs, key=_seq_sort_key)[:seq_cap])
                  for ty, seqs in out.items()}
        cache[key] = result
        return result

    return go(left, right, budget)


def enumerate_modes(reg: Registry, left: Ty, right: Ty, budget: int,
                    pruned: bool = False) -> frozenset:
    """Every (mode sequence, result type) combining two constituent types
    within the length budget.  Sequences replay to their paired type."""
    grouped = modes_by_type(reg, left, right, budget, pruned=pruned)
    return frozenset((seq, ty) for ty, seqs in grouped.items() for seq in seqs)


def replay_modes(reg: Registry, seq, lty: Ty, rty: Ty) -> Ty:
    """Replay a mode sequence on child types; raises if it does not fit."""

    def fail(m, why):
        raise ModeError(f"mode {m.render()} does not apply: {why}")

    def go(i, l, r):
        m = seq[i]
        if m.kind in BASE_KINDS:
            if i != len(seq) - 1:
                raise ModeError("base mode must be innermost")
            if m.kind == "fwd":
                if not (isinstance(l, Arrow) and r == l.dom and _pure(l.dom)):
                    fail(m, f"({l}, {r})")
                return l.cod
            if m.kind == "bwd":
                if not (isinstance(r, Arrow) and l == r.dom and _pure(r.dom)):
                    fail(m, f"({l}, {r})")
                return r.cod
            if not (isinstance(l, Arrow) and l == r and _pure(l.dom)
                    and l.cod == Base("t")):
                fail(m, f"({l}, {r})")
            return l
        if m.kind == "ml":
            if not (isinstance(l, Eff) and l.functor == m.functor):
                fail(m, str(l))
            return Eff(m.functor, go(i + 1, l.inner, r))
        if m.kind == "mr":
            if not (isinstance(r, Eff) and r.functor == m.functor):
                fail(m, str(r))
            return Eff(m.functor, go(i + 1, l, r.inner))
        if m.kind == "a":
            reg.require_cap(m.functor, "applicative")
            if not (isinstance(l, Eff) and isinstance(r, Eff)
                    and l.functor == r.functor == m.functor):
                fail(m, f"({l}, {r})")
            return Eff(m.functor, go(i + 1, l.inner, r.inner))
        if m.kind == "ur":
            reg.require_cap(m.functor, "applicative")
            if not (isinstance(l, Arrow) and isinstance(l.dom, Eff)
                    and l.dom.functor == m.functor):
                fail(m, str(l))
            return go(i + 1, Arrow(l.dom.inner, l.cod), r)
        if m.kind == "ul":
            reg.require_cap(m.functor, "applicative")
            if not (isinstance(r, Arrow) and isinstance(r.dom, Eff)
                    and r.dom.functor == m.functor):
                fail(m, str(r))
            return go(i + 1, l, Arrow(r.dom.inner, r.cod))
        if m.kind == "el":
            if not (isinstance(l, Eff) and l.functor == m.functor
                    and isinstance(l.inner, Arrow)):
                fail(m, str(l))
            a = l.inner
            return go(i + 1, Arrow(a.dom, Eff(m.functor, a.cod)), r)
        if m.kind == "er":
            if not (isinstance(r, Eff) and r.functor == m.functor
                    and isinstance(r.inner, Arrow)):
                fail(m, str(r))
            a = r.inner
            return go(i + 1, l, Arrow(a.dom, Eff(m.functor, a.cod)))
        if m.kind == "j":
            reg.require_cap(m.functor, "monad")
            inner = go(i + 1, l, r)
            if not (isinstance(inner, Eff) and isinstance(inner.inner, Eff)
                    and inner.functor == inner.inner.functor == m.functor):
                fail(m, str(inner))
            return inner.inner
        if m.kind == "dn":
            inner = go(i + 1, l, r)
            if not (isinstance(inner, Eff) and inner.inner == Base("t")
                    and reg.lowering_for(inner.functor)):
                fail(m, str(inner))
            return inner.inner
        if m.kind == "c":
            inner = go(i + 1, l, r)
            if not (isinstance(inner, Eff) and isinstance(inner.inner, Eff)
                    and (inner.functor, inner.inner.functor) == m.pair
                    and reg.is_adjunction(*m.pair)):
                fail(m, str(inner))
            return inner.inner.inner
        raise ModeError(f"unknown mode kind {m.kind}")

    if not seq:
        raise ModeError("empty mode sequence")
    return go(0, lty, rty)


# -- pruning ----------------------------------------------------------------

def _commutative(reg, f) -> bool:
    return f is not None and reg.has_cap(f, "monad") and reg.functor(f).commutative


def _banned_pair(a: Mode, b: Mode, reg: Registry) -> bool:
    """Adjacent pair (a outer, b inner) discarded by the rewrite rules."""
    # a unit applied right on top of ML/MR on the same effect is void
    if a.kind in ("ul", "ur") and b.kind in ("ml", "mr") and a.functor == b.functor:
        return True
    # when both orders yield the same stack, take the left effect first
    if a.kind == "mr" and b.kind == "ml" and a.functor == b.functor:
        return True
    # a counit directly under another counit or an applicative merge
    if b.kind == "c" and a.kind in ("c", "a"):
        return True
    if _commutative(reg, a.functor) and a.functor == b.functor:
        if (a.kind, b.kind) in (("mr", "a"), ("a", "ml")):
            return True
    return False


_TRIPLE_FLANKS = (("ml", "ml"), ("mr", "mr"), ("ml", "mr"), ("a", "mr"), ("ml", "a"))


def _banned_triple(a: Mode, mid: Mode, b: Mode, reg: Registry) -> bool:
    """Triple (a, mid, b) with a shrinking move in the middle, discarded by
    the earliest-point normalisation.

    For scope-taking effects (those with a registered lowering) the order
    of joins and lowerings encodes scope, so the orders are genuinely
    distinct readings and survive.
    """
    f = a.functor
    if f is None or f != b.functor:
        return False
    shrinks = mid.kind == "c" or (mid.kind == "j" and mid.functor == f)
    if shrinks:
        pair = (a.kind, b.kind)
        if reg.lowering_for(f) is None and pair in _TRIPLE_FLANKS:
            return True
        if _commutative(reg, f) and pair in (("mr", "ml"), ("a", "a")):
            return True
    if (mid.kind == "dn" and reg.lowering_for(f) is None
            and (a.kind, b.kind) in _TRIPLE_FLANKS):
        return True
    return False


def _banned_prefix(mode: Mode, seq: tuple, reg: Registry) -> bool:
    """Would prepending ``mode`` create a discarded window?  All rules are
    local to pairs/triples except the lowering/counit co-occurrence ban."""
    if seq and _banned_pair(mode, seq[0], reg):
        return True
    if len(seq) >= 2 and _banned_triple(mode, seq[0], seq[1], reg):
        return True
    if mode.kind == "dn" and any(m.kind == "c" for m in seq):
        return True
    if mode.kind == "c" and any(m.kind == "dn" for m in seq):
        return True
    return False


def prune(seq, reg: Registry) -> bool:
    """True iff the sequence survives the normal-form pruning rules.

    Patterns are matched as contiguous windows of the outermost-first mode
    list; triple patterns carry a shrinking move (a join on the same
    functor, or any counit) in the middle.
    """
    for i in range(len(seq) - 1):
        if _banned_pair(seq[i], seq[i + 1], reg):
            return False
    for i in range(len(seq) - 2):
        if _banned_triple(seq[i], seq[i + 1], seq[i + 2], reg):
            return False
    if any(m.kind == "dn" for m in seq) and any(m.kind == "c" for m in seq):
        return False
    return True


# -- denotations -------------------------------------------------------------

def mode_denotation(reg: Registry, m: Mode):
    """The figure term for a base mode, or a term transformer for a
    unary/postfix mode."""
    V, L, A = T.Var, T.Lam, T.App

    def lam2(f):
        x, y = T.fresh_var("x"), T.fresh_var("y")
        return L(x, L(y, f(V(x), V(y))))

    if m.kind == "fwd":
        return lam2(lambda phi, x: A(phi, x))
    if m.kind == "bwd":
        return lam2(lambda x, phi: A(phi, x))
    if m.kind in ("conj", "disj"):
        op = T.And if m.kind == "conj" else T.Or
        p, q, x = (T.fresh_var(s) for s in "pqx")
        return L(p, L(q, L(x, op(A(V(p), V(x)), A(V(q), V(x))))))

    f = m.functor
    if m.kind == "a":
        reg.require_cap(f, "applicative")
    if m.kind in ("ul", "ur"):
        reg.require_cap(f, "applicative")
    if m.kind == "j":
        reg.require_cap(f, "monad")
    if m.kind == "c" and not reg.is_adjunction(*m.pair):
        raise ModeError(f"({m.pair[0]}, {m.pair[1]}) is not a registered adjunction")

    if m.kind == "ml":
        def tr(M):
            a = T.fresh_var("a")
            return lam2(lambda x, y: T.Fmap(f, L(a, A(A(M, V(a)), y)), x))
        return tr
    if m.kind == "mr":
        def tr(M):
            b = T.fresh_var("b")
            return lam2(lambda x, y: T.Fmap(f, L(b, A(A(M, x), V(b))), y))
        return tr
    if m.kind == "a":
        def tr(M):
            a, b = T.fresh_var("a"), T.fresh_var("b")
            return lam2(lambda x, y: T.ApOp(
                f, T.Fmap(f, L(a, L(b, A(A(M, V(a)), V(b)))), x), y))
        return tr
    if m.kind == "ul":
        def tr(M):
            b = T.fresh_var("b")
            return lam2(lambda x, phi: A(A(M, x), L(b, A(phi, T.Eta(f, V(b))))))
        return tr
    if m.kind == "ur":
        def tr(M):
            a = T.fresh_var("a")
            return lam2(lambda phi, y: A(A(M, L(a, A(phi, T.Eta(f, V(a))))), y))
        return tr
    if m.kind == "el":
        def tr(M):
            return lam2(lambda phi, y: A(A(M, T.Upsilon(f, phi)), y))
        return tr
    if m.kind == "er":
        def tr(M):
            return lam2(lambda x, phi: A(A(M, x), T.Upsilon(f, phi)))
        return tr
    if m.kind == "j":
        def tr(M):
            return lam2(lambda x, y: T.Mu(f, A(A(M, x), y)))
        return tr
    if m.kind == "dn":
        def tr(M):
            return lam2(lambda x, y: T.Lower(A(A(M, x), y)))
        return tr
    if m.kind == "c":
        left, right = m.pair

        def tr(M):
            return lam2(lambda x, y: T.Eps(left, right, A(A(M, x), y)))
        return tr
    raise ModeError(f"unknown mode kind {m.kind}")


# -- derivations -------------------------------------------------------------

@dataclass(frozen=True)
class Derivation:
    pass


@dataclass(frozen=True)
class Leaf(Derivation):
    entry: LexEntry

    @property
    def ty(self) -> Ty:
        return self.entry.ty


@dataclass(frozen=True)
class Branch(Derivation):
    ty: Ty
    modes: tuple
    left: Derivation
    right: Derivation


def derivation_term(reg: Registry, d: Derivation) -> T.Term:
    """Fold mode denotations over a derivation into one closed term."""
    if isinstance(d, Leaf):
        return d.entry.term
    term = mode_denotation(reg, d.modes[-1])
    for m in reversed(d.modes[:-1]):
        term = mode_denotation(reg, m)(term)
    return T.App(T.App(term, derivation_term(reg, d.left)),
                 derivation_term(reg, d.right))


def derivation_key(d: Derivation):
    if isinstance(d, Leaf):
        return ("L", d.entry.surface, str(d.entry.ty))
    return ("B", str(d.ty), render_modes(d.modes),
            derivation_key(d.left), derivation_key(d.right))


def mode_count(d: Derivation) -> int:
    if isinstance(d, Leaf):
        return 0
    return len(d.modes) + mode_count(d.left) + mode_count(d.right)


# -- syntax CFG ---------------------------------------------------------------

@dataclass(frozen=True)
class SyntaxCFG:
    binary: dict  # (cat, cat) -> frozenset of LHS
    unary: dict   # terminal category -> frozenset of categories (closure, incl. self)

    def leaf_categories(self, cat):
        if cat is None:
            return frozenset([None])
        return self.unary.get(cat, frozenset([cat]))


def load_syntax_text(text: str) -> SyntaxCFG:
    forms = sexpr.parse(text)
    binary: dict = {}
    edges: dict = {}
    for form in forms:
        if not isinstance(form, sexpr.Node) or not form.items or form.items[0] != "rule":
            raise ModeError("syntax files contain only (rule ...) forms")
        items = form.items
        if len(items) == 4:
            key = (items[2], items[3])
            binary.setdefault(key, set()).add(items[1])
        elif len(items) == 3:
            edges.setdefault(items[2], set()).add(items[1])
        else:
            raise ModeError("rule forms are (rule LHS RHS1 RHS2) or (rule LHS CAT)")
    unary = {}
    for cat in set(edges) | {c for tgts in edges.values() for c in tgts}:
        seen = {cat}
        frontier = [cat]
        while frontier:
            nxt = frontier.pop()
            for lhs in edges.get(nxt, ()):
                if lhs not in seen:
                    seen.add(lhs)
                    frontier.append(lhs)
        unary[cat] = frozenset(seen)
    return SyntaxCFG(binary={k: frozenset(v) for k, v in binary.items()}, unary=unary)


def load_syntax(path) -> SyntaxCFG:
    with open(path, encoding="utf-8") as fh:
        return load_syntax_text(fh.read())


# -- chart parsing -------------------------------------------------------------

@dataclass
class _Item:
    span: tuple
    cat: object
    ty: Ty
    sources: list = field(default_factory=list)

    def key(self):
        return (self.span, "" if self.cat is None else str(self.cat), str(self.ty))


@dataclass(frozen=True)
class _LeafSrc:
    entry: LexEntry


@dataclass(frozen=True)
class _BinSrc:
    """One packed back-pointer: every mode sequence in ``seqs`` combines
    the two child items into this item's type."""

    seqs: tuple
    left: _Item
    right: _Item


@dataclass
class Forest:
    n: int
    chart: dict
    budget_used: dict

    def cells(self):
        return self.chart

    def cell_count(self) -> int:
        return self.n * (self.n + 1) // 2

    def items(self, i, j):
        return list(self.chart.get((i, j), {}).values())

    def root_items(self):
        return self.items(0, self.n)

    def packed_node_count(self) -> int:
        return sum(len(item.sources)
                   for cell in self.chart.values() for item in cell.values())

    def derivations(self, limit: int = 64):
        memo: dict = {}
        roots = sorted(self.root_items(), key=lambda it: it.key())
        out = []
        for item in roots:
            out.extend(_unpack(item, limit, memo))
        out.sort(key=derivation_key)
        return tuple(out[:limit])


def _unpack(item: _Item, limit: int, memo: dict):
    key = id(item)
    if key in memo:
        return memo[key]
    memo[key] = []  # cycle guard; charts are acyclic but be safe
    out = []
    leaf_srcs = sorted((s for s in item.sources if isinstance(s, _LeafSrc)),
                       key=lambda s: s.entry.surface)
    bin_srcs = sorted((s for s in item.sources if isinstance(s, _BinSrc)),
                      key=lambda s: (render_modes(s.seqs[0]), s.left.key(), s.right.key()))
    for src in leaf_srcs:
        out.append(Leaf(src.entry))
        if len(out) >= limit:
            break
    for src in bin_srcs:
        if len(out) >= limit:
            break
        for seq in src.seqs:
            for l in _unpack(src.left, limit, memo):
                for r in _unpack(src.right, limit, memo):
                    out.append(Branch(item.ty, seq, l, r))
                    if len(out) >= limit:
                        break
                if len(out) >= limit:
                    break
            if len(out) >= limit:
                break
    memo[key] = out[:limit]
    return memo[key]


def default_budget(lex: Lexicon, span: int) -> int:
    c = len(lex.registry.adjunctions())
    m = max(lex.max_effect_rank, 1)
    return (2 + c) * m * (span + 1) + 1


def parse_forest(tokens, lex: Lexicon, syntax: SyntaxCFG | None = None,
                 prune_seqs: bool = True, budget_override: int | None = None,
                 seq_cap: int | None = None) -> Forest:
    reg = lex.registry
    n = len(tokens)
    folded = [t.casefold() for t in tokens]
    chart: dict = {(i, j): {} for j in range(1, n + 1) for i in range(j)}
    budget_used: dict = {}

    def add_item(i, j, cat, ty, source):
        cell = chart[(i, j)]
        it = cell.get((cat, ty))
        if it is None:
            it = _Item(span=(i, j), cat=cat, ty=ty)
            cell[(cat, ty)] = it
        it.sources.append(source)

    covered = [False] * n
    for i, tok in enumerate(folded):
        for e in lex.lookup(tok):
            cats = syntax.leaf_categories(e.category) if syntax else [e.category]
            for cat in sorted(cats, key=lambda c: "" if c is None else str(c)):
                add_item(i, i + 1, cat, e.ty, _LeafSrc(e))
            covered[i] = True
    for e in lex.multi_token_entries():
        k = len(e.tokens)
        for i in range(n - k + 1):
            if tuple(folded[i:i + k]) == e.tokens:
                cats = syntax.leaf_categories(e.category) if syntax else [e.category]
                for cat in sorted(cats, key=lambda c: "" if c is None else str(c)):
                    add_item(i, i + k, cat, e.ty, _LeafSrc(e))
                for p in range(i, i + k):
                    covered[p] = True
    for p, ok in enumerate(covered):
        if not ok:
            raise UnknownTokenError(tokens[p], p)

    sorted_targets: dict = {}

    def targets_for(lcat, rcat):
        if syntax is None:
            return (None,)
        key = (lcat, rcat)
        hit = sorted_targets.get(key)
        if hit is None:
            raw = syntax.binary.get(key, frozenset())
            hit = tuple(sorted(raw, key=str))
            sorted_targets[key] = hit
        return hit

    for span in range(2, n + 1):
        budget = budget_override or default_budget(lex, span)
        for i in range(n - span + 1):
            j = i + span
            budget_used[(i, j)] = budget
            cell = chart[(i, j)]
            for k in range(i + 1, j):
                left_cell = chart.get((i, k), {})
                right_cell = chart.get((k, j), {})
                for (lcat, lty), litem in left_cell.items():
                    for (rcat, rty), ritem in right_cell.items():
                        targets = targets_for(lcat, rcat)
                        if not targets:
                            continue
                        combos = modes_by_type(reg, lty, rty, budget,
                                               pruned=prune_seqs, seq_cap=seq_cap)
                        if not combos:
                            continue
                        for ty, seqs in combos.items():
                            src = _BinSrc(seqs, litem, ritem)
                            for cat in targets:
                                it = cell.get((cat, ty))
                                if it is None:
                                    it = _Item(span=(i, j), cat=cat, ty=ty)
                                    cell[(cat, ty)] = it
                                it.sources.append(src)
    return Forest(n=n, chart=chart, budget_used=budget_used)


def parse(tokens, lex: Lexicon, syntax: SyntaxCFG | None = None,
          prune_seqs: bool = True, max_derivations: int = 64,
          budget_override: int | None = None):
    """CKY parse; returns the (capped, deterministically ordered) tuple of
    whole-input derivations.

    Sequence groups inside the forest are capped at ``max_derivations``
    too: the output can never contain more alternatives than that, so
    larger groups are unreachable anyway.
    """
    if not tokens:
        return ()
    forest = parse_forest(tokens, lex, syntax=syntax, prune_seqs=prune_seqs,
                          budget_override=budget_override,
                          seq_cap=max_derivations)
    return forest.derivations(limit=max_derivations)
