"""Language and model file loading.

A language file declares base types, effect functors, adjunctions,
natural transformations, and words; a model file declares entities,
predicate extensions, and the initial assignment and discourse state.
Both are s-expression dialects (see the README for the grammar).  Loading
is strict: every word's term must check against its declared type, every
adjunction partner must exist, and every handler passes a spot check of
``h . eta = id`` on generated values.

Token lookup is case-insensitive (Unicode casefold).  Surfaces containing
spaces are multi-token entries: they never answer single-token lookup and
are seeded into the chart over their full span by the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import sexpr
from . import terms as T
from .lambda_eval import SPOT_PAYLOADS, eta, run_handler
from .model import Model, ModelError
from .typecheck import TypeCheckError, check_term
from .typesys import (Arrow, Base, Eff, FunctorDef, NatDef, Prod, Registry,
                      Ty, TypeSysError, deep_effect_count)
from .values import values_equal


class LanguageParseError(Exception):
    def __init__(self, message, line=0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class LanguageSemanticError(Exception):
    pass


@dataclass(frozen=True)
class LexEntry:
    surface: str
    tokens: tuple
    ty: Ty
    term: T.Term
    category: str | None = None


@dataclass
class Lexicon:
    registry: Registry
    entries: list = field(default_factory=list)
    max_effect_rank: int = 0

    def lookup(self, token: str) -> list:
        folded = token.casefold()
        return [e for e in self.entries if e.tokens == (folded,)]

    def multi_token_entries(self) -> list:
        return [e for e in self.entries if len(e.tokens) > 1]


# -- type and term expression parsing --------------------------------------

def parse_type(form, reg: Registry, line=0) -> Ty:
    if isinstance(form, str):
        return reg.base_type(form)
    if isinstance(form, sexpr.Node):
        items = form.items
        if not items:
            raise LanguageParseError("empty type expression", form.line)
        head = items[0]
        if head == "->" and len(items) == 3:
            return Arrow(parse_type(items[1], reg, form.line),
                         parse_type(items[2], reg, form.line))
        if head == "*" and len(items) == 3:
            return Prod(parse_type(items[1], reg, form.line),
                        parse_type(items[2], reg, form.line))
        if isinstance(head, str) and len(items) == 2:
            inner = parse_type(items[1], reg, form.line)
            return reg.apply_functor(head, inner)
    raise LanguageParseError(f"bad type expression {sexpr.unparse(form)}", line)


def type_to_sexpr(ty: Ty):
    if isinstance(ty, Base):
        return ty.name
    if isinstance(ty, Arrow):
        return ("->", type_to_sexpr(ty.dom), type_to_sexpr(ty.cod))
    if isinstance(ty, Prod):
        return ("*", type_to_sexpr(ty.left), type_to_sexpr(ty.right))
    if isinstance(ty, Eff):
        return (ty.functor, type_to_sexpr(ty.inner))
    raise TypeSysError(f"not a type: {ty!r}")


def parse_term(form, line=0) -> T.Term:
    if isinstance(form, str):
        if form == "true":
            return T.BoolLit(True)
        if form == "false":
            return T.BoolLit(False)
        return T.Var(form)
    if not isinstance(form, sexpr.Node) or not form.items:
        raise LanguageParseError(f"bad term {sexpr.unparse(form)}", line)
    items, line = form.items, form.line
    head = items[0]

    def arity(n):
        if len(items) != n + 1:
            raise LanguageParseError(f"{head} expects {n} arguments", line)

    if head == "lam":
        arity(2)
        return T.Lam(_symbol(items[1], line), parse_term(items[2], line))
    if head == "app":
        arity(2)
        return T.App(parse_term(items[1], line), parse_term(items[2], line))
    if head == "pair":
        arity(2)
        return T.Pair(parse_term(items[1], line), parse_term(items[2], line))
    if head == "pred":
        if len(items) < 2:
            raise LanguageParseError("pred needs a name", line)
        return T.Pred(_symbol(items[1], line),
                      tuple(parse_term(a, line) for a in items[2:]))
    if head == "const":
        arity(1)
        return T.Const(_symbol(items[1], line))
    if head == "set":
        kw = _keywords(items[2:], line)
        _expect_keys(kw, {":where", ":yield"}, "set", line)
        return T.SetBuilder(_symbol(items[1], line),
                            parse_term(kw[":where"], line),
                            parse_term(kw[":yield"], line))
    if head == "if":
        arity(3)
        return T.If(*(parse_term(x, line) for x in items[1:]))
    if head == "forall":
        arity(2)
        return T.Forall(_symbol(items[1], line), parse_term(items[2], line))
    if head == "exists":
        arity(2)
        return T.Exists(_symbol(items[1], line), parse_term(items[2], line))
    if head == "not":
        arity(1)
        return T.Not(parse_term(items[1], line))
    if head == "and":
        arity(2)
        return T.And(parse_term(items[1], line), parse_term(items[2], line))
    if head == "or":
        arity(2)
        return T.Or(parse_term(items[1], line), parse_term(items[2], line))
    if head == "eq":
        arity(2)
        return T.Eq(parse_term(items[1], line), parse_term(items[2], line))
    if head == "push":
        arity(2)
        return T.Push(parse_term(items[1], line), parse_term(items[2], line))
    if head == "idx":
        arity(2)
        if not isinstance(items[2], int):
            raise LanguageParseError("idx expects a literal position", line)
        return T.Idx(parse_term(items[1], line), items[2])
    if head == "fmap":
        arity(3)
        return T.Fmap(_symbol(items[1], line), parse_term(items[2], line),
                      parse_term(items[3], line))
    if head == "eta":
        arity(2)
        return T.Eta(_symbol(items[1], line), parse_term(items[2], line))
    if head == "mu":
        arity(2)
        return T.Mu(_symbol(items[1], line), parse_term(items[2], line))
    if head == "ap":
        arity(3)
        return T.ApOp(_symbol(items[1], line), parse_term(items[2], line),
                      parse_term(items[3], line))
    if head == "eps":
        arity(3)
        return T.Eps(_symbol(items[1], line), _symbol(items[2], line),
                     parse_term(items[3], line))
    if head == "upsilon":
        arity(2)
        return T.Upsilon(_symbol(items[1], line), parse_term(items[2], line))
    if head == "lower":
        arity(1)
        return T.Lower(parse_term(items[1], line))
    if head == "handler":
        arity(2)
        return T.ApplyNat(_symbol(items[1], line), parse_term(items[2], line))
    raise LanguageParseError(f"unknown term head {head}", line)


def term_to_sexpr(term: T.Term):
    tts = term_to_sexpr
    if isinstance(term, T.Var):
        return term.name
    if isinstance(term, T.BoolLit):
        return "true" if term.value else "false"
    if isinstance(term, T.Lam):
        return ("lam", term.param, tts(term.body))
    if isinstance(term, T.App):
        return ("app", tts(term.fn), tts(term.arg))
    if isinstance(term, T.Pair):
        return ("pair", tts(term.left), tts(term.right))
    if isinstance(term, T.Pred):
        return ("pred", term.name, *map(tts, term.args))
    if isinstance(term, T.Const):
        return ("const", term.entity)
    if isinstance(term, T.SetBuilder):
        return ("set", term.var, ":where", tts(term.guard), ":yield", tts(term.yields))
    if isinstance(term, T.If):
        return ("if", tts(term.cond), tts(term.then), tts(term.other))
    if isinstance(term, T.Forall):
        return ("forall", term.var, tts(term.body))
    if isinstance(term, T.Exists):
        return ("exists", term.var, tts(term.body))
    if isinstance(term, T.Not):
        return ("not", tts(term.arg))
    if isinstance(term, T.And):
        return ("and", tts(term.left), tts(term.right))
    if isinstance(term, T.Or):
        return ("or", tts(term.left), tts(term.right))
    if isinstance(term, T.Eq):
        return ("eq", tts(term.left), tts(term.right))
    if isinstance(term, T.Push):
        return ("push", tts(term.item), tts(term.seq))
    if isinstance(term, T.Idx):
        return ("idx", tts(term.seq), term.index)
    if isinstance(term, T.Fmap):
        return ("fmap", term.functor, tts(term.fn), tts(term.arg))
    if isinstance(term, T.Eta):
        return ("eta", term.functor, tts(term.arg))
    if isinstance(term, T.Mu):
        return ("mu", term.functor, tts(term.arg))
    if isinstance(term, T.ApOp):
        return ("ap", term.functor, tts(term.fn), tts(term.arg))
    if isinstance(term, T.Eps):
        return ("eps", term.left, term.right, tts(term.arg))
    if isinstance(term, T.Upsilon):
        return ("upsilon", term.functor, tts(term.fn))
    if isinstance(term, T.Lower):
        return ("lower", tts(term.arg))
    if isinstance(term, T.ApplyNat):
        return ("handler", term.name, tts(term.arg))
    if isinstance(term, T.Coerce):
        return tts(term.body)
    raise LanguageParseError(f"cannot serialize {term!r}")


def _symbol(x, line):
    if isinstance(x, str):
        return x
    raise LanguageParseError(f"expected a symbol, found {sexpr.unparse(x)}", line)


def _keywords(items, line) -> dict:
    if len(items) % 2:
        raise LanguageParseError("dangling keyword argument", line)
    kw = {}
    for k, v in zip(items[::2], items[1::2]):
        if not (isinstance(k, str) and k.startswith(":")):
            raise LanguageParseError(f"expected a keyword, found {sexpr.unparse(k)}", line)
        kw[k] = v
    return kw


def _expect_keys(kw, required, what, line):
    missing = required - kw.keys()
    if missing:
        raise LanguageParseError(f"{what} is missing {sorted(missing)}", line)


def _bool(x, line) -> bool:
    if x == "true":
        return True
    if x == "false":
        return False
    raise LanguageParseError(f"expected true/false, found {sexpr.unparse(x)}", line)


# -- language loading ------------------------------------------------------

def load_language_text(text: str, spot_model: Model | None = None) -> Lexicon:
    try:
        forms = sexpr.parse(text)
    except sexpr.SexprError as exc:
        raise LanguageParseError(str(exc), exc.line) from exc
    reg = Registry()
    raw_words = []
    for form in forms:
        if not isinstance(form, sexpr.Node) or not form.items:
            raise LanguageParseError("top-level forms must be lists",
                                     getattr(form, "line", 0))
        head, line = form.items[0], form.line
        try:
            if head == "base-type":
                reg.add_base_type(_symbol(form.items[1], line))
            elif head == "functor":
                reg.add_functor(_parse_functor(form, reg))
            elif head == "adjunction":
                reg.add_adjunction(_symbol(form.items[1], line),
                                   _symbol(form.items[2], line))
            elif head == "nat":
                reg.add_nat(_parse_nat(form))
            elif head == "word":
                raw_words.append(form)
            else:
                raise LanguageParseError(f"unknown form {head}", line)
        except (TypeSysError, ModelError) as exc:
            raise LanguageSemanticError(f"line {line}: {exc}") from exc
        except IndexError:
            raise LanguageParseError(f"malformed {head} form", line) from None

    entries = []
    for form in raw_words:
        entries.append(_parse_word(form, reg))
    lex = Lexicon(registry=reg, entries=entries,
                  max_effect_rank=max((deep_effect_count(e.ty) for e in entries),
                                      default=0))
    _spot_check_handlers(reg, spot_model)
    return lex


def load_language(path, spot_model: Model | None = None) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return load_language_text(fh.read(), spot_model)


def _parse_functor(form, reg) -> FunctorDef:
    line = form.line
    name = _symbol(form.items[1], line)
    kw = _keywords(form.items[2:], line)
    caps = frozenset()
    if ":caps" in kw:
        node = kw[":caps"]
        if not isinstance(node, sexpr.Node):
            raise LanguageParseError(":caps expects a list", line)
        caps = frozenset(_symbol(c, line) for c in node.items)
    applies = None
    if ":applies-to" in kw and kw[":applies-to"] != "*":
        applies = (parse_type(kw[":applies-to"], reg, line),)
    return FunctorDef(
        id=name,
        capabilities=caps,
        commutative=_bool(kw[":commutative"], line) if ":commutative" in kw else False,
        applies_to=applies,
        external=_bool(kw[":external"], line) if ":external" in kw else False,
    )


def _parse_nat(form) -> NatDef:
    line = form.line
    name = _symbol(form.items[1], line)
    kw = _keywords(form.items[2:], line)
    _expect_keys(kw, {":from", ":to", ":handler", ":impl"}, "nat", line)
    src = tuple(_symbol(f, line) for f in kw[":from"].items)
    tgt = tuple(_symbol(f, line) for f in kw[":to"].items)
    default = parse_term(kw[":default"], line) if ":default" in kw else None
    return NatDef(name=name, source=src, target=tgt,
                  is_handler=_bool(kw[":handler"], line),
                  component=_symbol(kw[":impl"], line),
                  default=default)


def _parse_word(form, reg) -> LexEntry:
    line = form.line
    if len(form.items) < 2 or not isinstance(form.items[1], sexpr.String):
        raise LanguageParseError("word needs a quoted surface", line)
    surface = form.items[1].value
    kw = _keywords(form.items[2:], line)
    _expect_keys(kw, {":type", ":term"}, f'word "{surface}"', line)
    try:
        ty = parse_type(kw[":type"], reg, line)
        term = parse_term(kw[":term"], line)
        checked = check_term(reg, term, ty)
    except (TypeCheckError, TypeSysError) as exc:
        raise LanguageSemanticError(f'word "{surface}" (line {line}): {exc}') from exc
    cat = _symbol(kw[":cat"], line) if ":cat" in kw else None
    tokens = tuple(surface.casefold().split())
    if not tokens:
        raise LanguageParseError(f'word "{surface}" has an empty surface', line)
    return LexEntry(surface=surface, tokens=tokens, ty=ty, term=checked, category=cat)


def _spot_check_handlers(reg: Registry, spot_model: Model | None) -> None:
    model = spot_model or Model(entities=("_spot0", "_spot1"))
    for nat in reg.nats():
        if not nat.is_handler or len(nat.source) != 1:
            continue
        f = nat.source[0]
        if not reg.has_cap(f, "applicative"):
            continue
        payloads = SPOT_PAYLOADS.get(nat.component, SPOT_PAYLOADS[None])(model)
        for v in payloads[:3]:
            try:
                out = run_handler(reg, nat, eta(reg, f, v), model)
                ok = values_equal(out, v, model)
            except Exception as exc:
                raise LanguageSemanticError(
                    f"handler {nat.name} failed its unit law on {v}: {exc}") from exc
            if not ok:
                raise LanguageSemanticError(
                    f"handler {nat.name} violates h . eta = id on {v}")


# -- language serialization ------------------------------------------------

def language_to_text(lex: Lexicon) -> str:
    reg = lex.registry
    out = []
    for name in reg.base_names():
        out.append(sexpr.unparse(("base-type", name)))
    for fname in reg.functor_names():
        f = reg.functor(fname)
        form = ["functor", f.id, ":caps", tuple(sorted(f.capabilities)),
                ":commutative", "true" if f.commutative else "false"]
        if f.applies_to is None:
            form += [":applies-to", "*"]
        else:
            form += [":applies-to", type_to_sexpr(f.applies_to[0])]
        if f.external:
            form += [":external", "true"]
        out.append(sexpr.unparse(tuple(form)))
    for left, right in reg.adjunctions():
        out.append(sexpr.unparse(("adjunction", left, right)))
    for nat in reg.nats():
        form = ["nat", nat.name, ":from", tuple(nat.source), ":to", tuple(nat.target),
                ":handler", "true" if nat.is_handler else "false",
                ":impl", nat.component]
        if nat.default is not None:
            form += [":default", term_to_sexpr(nat.default)]
        out.append(sexpr.unparse(tuple(form)))
    for e in lex.entries:
        form = ["word", sexpr.String(e.surface), ":type", type_to_sexpr(e.ty),
                ":term", term_to_sexpr(e.term)]
        if e.category is not None:
            form += [":cat", e.category]
        out.append(sexpr.unparse(tuple(form)))
    return "\n".join(out) + "\n"


# -- model loading ----------------------------------------------------------

def load_model_text(text: str) -> Model:
    try:
        forms = sexpr.parse(text)
    except sexpr.SexprError as exc:
        raise LanguageParseError(str(exc), exc.line) from exc
    entities = []
    predicates = {}
    assignment = ()
    state = ()
    for form in forms:
        if not isinstance(form, sexpr.Node) or not form.items:
            raise LanguageParseError("top-level forms must be lists")
        head, line = form.items[0], form.line
        if head == "entity":
            entities.append(_symbol(form.items[1], line))
        elif head == "pred":
            name = _symbol(form.items[1], line)
            if not isinstance(form.items[2], int):
                raise LanguageParseError("pred needs a literal arity", line)
            arity = form.items[2]
            rows = set()
            for row in form.items[3:]:
                if not isinstance(row, sexpr.Node):
                    raise LanguageParseError("extension rows must be lists", line)
                rows.add(tuple(_symbol(e, line) for e in row.items))
            key = (name, arity)
            predicates[key] = frozenset(predicates.get(key, frozenset()) | rows)
        elif head == "assignment":
            assignment = tuple(_symbol(e, line) for e in form.items[1:])
        elif head == "state":
            state = tuple(_symbol(e, line) for e in form.items[1:])
        else:
            raise LanguageParseError(f"unknown model form {head}", line)
    try:
        return Model(entities=tuple(entities), predicates=predicates,
                     initial_assignment=assignment, initial_state=state)
    except ModelError as exc:
        raise LanguageSemanticError(str(exc)) from exc


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return load_model_text(fh.read())


def model_to_text(model: Model) -> str:
    out = [sexpr.unparse(("entity", e)) for e in model.entities]
    for (name, arity), rows in sorted(model.predicates.items()):
        form = ["pred", name, arity, *[tuple(r) for r in sorted(rows)]]
        out.append(sexpr.unparse(tuple(form)))
    out.append(sexpr.unparse(("assignment", *model.initial_assignment)))
    out.append(sexpr.unparse(("state", *model.initial_state)))
    return "\n".join(out) + "\n"
