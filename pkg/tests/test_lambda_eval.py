import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from effparse import terms as T
from effparse.combine import derivation_term, parse
from effparse.lambda_eval import (EvalError, ShapeError, adjunction_unit, ap,
                                  apply_nat, apply_value, counit, eta,
                                  eval_term, fmap_apply, join, lower,
                                  run_handler, upsilon)
from effparse.model import Model
from effparse.typesys import NatDef, UnknownEffectError
from effparse.values import (ABSENT, B, ContV, E, Fn, MaybeV, PairV, ReaderV,
                             SeqV, SetV, StateV, values_equal)

from . import strategies as S

FUNCTORS = ("G", "W", "S", "C", "D", "M")
MONADS = ("G", "W", "S", "C", "D", "M")


def ident():
    return Fn(lambda v: v, label="id")


@pytest.fixture(scope="module")
def one_cat_model():
    return Model(entities=("c1", "c2"),
                 predicates={("cat", 1): frozenset({("c1",)}),
                             ("sleep", 1): frozenset({("c1",)})},
                 initial_assignment=("c1",))


@pytest.fixture(scope="module")
def two_cat_model():
    return Model(entities=("c1", "c2"),
                 predicates={("cat", 1): frozenset({("c1",), ("c2",)})},
                 initial_assignment=("c1",))


def the_applied_to_cat(english):
    [the] = english.lookup("the")
    [cat] = english.lookup("cat")
    return T.App(the.term, cat.term)


def test_eval_the_cat_unique(english, one_cat_model):
    v = eval_term(the_applied_to_cat(english), {}, one_cat_model, english.registry)
    assert v == MaybeV(E("c1"))


def test_eval_the_cat_nonunique_is_absent(english, two_cat_model):
    v = eval_term(the_applied_to_cat(english), {}, two_cat_model, english.registry)
    assert v == MaybeV(ABSENT)


def test_eval_identity_application(registry, law_model):
    term = T.App(T.Lam("x", T.Var("x")), T.Const("a"))
    assert eval_term(term, {}, law_model, registry) == E("a")


def test_eval_unbound_variable(registry, law_model):
    with pytest.raises(EvalError):
        eval_term(T.Var("nope"), {}, law_model, registry)


def test_eval_is_deterministic(english, solar):
    reg = english.registry
    d = parse("the cat eats a mouse".split(), english, max_derivations=8)[0]
    term = derivation_term(reg, d)
    a = eval_term(term, {}, solar, reg)
    b = eval_term(term, {}, solar, reg)
    assert values_equal(a, b, solar)


# -- per-carrier operation examples ------------------------------------------

def test_fmap_maybe_preserves_absent(registry):
    out = fmap_apply(registry, "M", ident(), MaybeV(ABSENT))
    assert out == MaybeV(ABSENT)


def test_fmap_set_id(registry):
    s = SetV([E("a"), E("b")])
    assert fmap_apply(registry, "S", ident(), s) == s


def test_fmap_writer_maps_first_component(registry):
    fn = Fn(lambda v: B(True), label="k")
    out = fmap_apply(registry, "W", fn, PairV(E("a"), B(True)))
    assert out == PairV(B(True), B(True))


def test_eta_examples(registry, law_model):
    assert eta(registry, "S", E("a")) == SetV([E("a")])
    assert eta(registry, "M", E("a")) == MaybeV(E("a"))
    assert lower(eta(registry, "C", B(True))) == B(True)


def test_eta_requires_applicative(registry):
    with pytest.raises(Exception):
        eta(registry, "P", E("a"))


def test_join_examples(registry):
    assert join(registry, "S", SetV([SetV([E("a")]), SetV([E("b")])])) == SetV([E("a"), E("b")])
    assert join(registry, "M", MaybeV(MaybeV(ABSENT))) == MaybeV(ABSENT)


def test_join_state_matches_explicit_two_layer_run(registry, law_model):
    mice = ("a", "b")

    def amouse_run(s):
        return SetV([PairV(E(m), SeqV((E(m),) + s.items)) for m in mice])
    amouse = StateV(amouse_run)

    def eats(m):
        return StateV(lambda s: SetV([PairV(B(m.name == "a"), s)]))

    nested = fmap_apply(registry, "D", Fn(eats, label="eats"), amouse)
    joined = join(registry, "D", nested)

    def oracle(s):
        out = []
        for pr in nested.run(s).elems:
            out.extend(pr.left.run(pr.right).elems)
        return SetV(out)

    s0 = SeqV(())
    got = joined.run(s0)
    want = oracle(s0)
    assert values_equal(got, want, law_model)
    assert len(got.elems) == 2


def test_ap_examples(registry, law_model):
    fn = MaybeV(ident())
    assert ap(registry, "M", fn, MaybeV(ABSENT)) == MaybeV(ABSENT)
    fns = SetV([ident(), Fn(lambda v: E("b"), label="kb")])
    out = ap(registry, "S", fns, SetV([E("a")]))
    assert values_equal(out, SetV([E("a"), E("b")]), law_model)


def test_counit_reads_paired_assignment(registry):
    v = PairV(ReaderV(lambda g: g.items[0]), SeqV((E("j"),)))
    with pytest.raises(Exception):
        counit(registry, "M", "S", v)
    # entity j is not in the law model; plain structural check suffices
    assert counit(registry, "P", "G", v) == E("j")


def test_counit_after_unit_is_identity(registry, law_model):
    x = PairV(E("a"), SeqV((E("b"),)))
    lifted = fmap_apply(registry, "P",
                        Fn(lambda v: adjunction_unit(registry, "P", "G", v)), x)
    assert values_equal(counit(registry, "P", "G", lifted), x, law_model)


def test_snake_dual_on_reader(registry, law_model):
    y = ReaderV(lambda g: B(len(g.items) % 2 == 0))
    unit_at = adjunction_unit(registry, "P", "G", y)
    collapsed = fmap_apply(registry, "G",
                           Fn(lambda p: counit(registry, "P", "G", p)), unit_at)
    assert values_equal(collapsed, y, law_model)


def test_upsilon_internalises_reader_function(registry, law_model):
    fn = Fn(lambda v: B(isinstance(v, E) and v.name == "a"), label="is-a")
    r = ReaderV(lambda g: fn)
    internal = upsilon(registry, "G", r)
    out = apply_value(internal, E("a"))
    assert values_equal(out, ReaderV(lambda g: B(True)), law_model)


def test_upsilon_on_unit_commutes_with_application(registry, law_model):
    fn = Fn(lambda v: B(isinstance(v, E) and v.name == "b"), label="is-b")
    internal = upsilon(registry, "G", eta(registry, "G", fn))
    lhs = apply_value(internal, E("b"))
    rhs = eta(registry, "G", apply_value(fn, E("b")))
    assert values_equal(lhs, rhs, law_model)


def test_upsilon_rejects_non_function_payload(registry):
    out = apply_value(upsilon(registry, "G", ReaderV(lambda g: E("a"))), E("a"))
    with pytest.raises(EvalError):
        out.run(SeqV(()))


def test_lower_quantified_continuation(law_model, registry):
    passes = frozenset({"a", "b", "c", "d"})
    v = ContV(lambda c: B(all(c(B(x in passes)).value
                              for x in law_model.entities)))
    assert lower(v) == B(True)
    assert lower(eta(registry, "C", B(False))) == B(False)
    with pytest.raises(ShapeError):
        lower(MaybeV(E("a")))


def test_run_handler_choose_min(english, law_model):
    reg = english.registry
    h = reg.nat("choose-min")
    assert run_handler(reg, h, SetV([E("b"), E("a")]), law_model) == E("a")
    assert run_handler(reg, h, eta(reg, "S", E("c")), law_model) == E("c")


def test_run_handler_maybe_default(english, solar):
    reg = english.registry
    h = reg.nat("maybe-default")
    assert run_handler(reg, h, MaybeV(ABSENT), solar) == E("j")
    assert run_handler(reg, h, MaybeV(E("c1")), solar) == E("c1")


def test_run_handler_rejects_non_handler(english, law_model):
    reg = english.registry
    with pytest.raises(Exception):
        run_handler(reg, reg.nat("iota"), SetV([E("a")]), law_model)


def test_apply_nat_set_to_cont(english, law_model):
    reg = english.registry
    out = apply_nat(reg, reg.nat("exists-cont"), SetV([E("a")]), law_model)
    direct = ContV(lambda c: c(E("a")))
    assert values_equal(out, direct, law_model)


def test_apply_nat_identity(english, law_model):
    reg = english.registry
    nat = NatDef(name="idm", source=("M",), target=("M",), component="identity")
    v = MaybeV(E("a"))
    assert apply_nat(reg, nat, v, law_model) == v


def test_handler_as_nat_matches_run_handler(english, law_model):
    reg = english.registry
    h = reg.nat("choose-min")
    v = SetV([E("b"), E("d")])
    assert apply_nat(reg, h, v, law_model) == run_handler(reg, h, v, law_model)


# -- law suites ---------------------------------------------------------------

@pytest.mark.parametrize("functor", FUNCTORS)
@given(data=st.data())
@settings(max_examples=30, deadline=None)
def test_functor_identity_law(registry, law_model, functor, data):
    # fmap id == id
    v = data.draw(S.carrier_values(functor))
    assert values_equal(fmap_apply(registry, functor, ident(), v), v, law_model)


@pytest.mark.parametrize("functor", FUNCTORS)
@given(data=st.data())
@settings(max_examples=30, deadline=None)
def test_functor_composition_law(registry, law_model, functor, data):
    # fmap (f . g) == fmap f . fmap g
    v = data.draw(S.carrier_values(functor, payload=S.entity_values()))
    g = data.draw(S.entity_endos())
    f = data.draw(S.entity_funs())
    comp = Fn(lambda x: f.run(g.run(x)), label="f.g")
    lhs = fmap_apply(registry, functor, comp, v)
    rhs = fmap_apply(registry, functor, f, fmap_apply(registry, functor, g, v))
    assert values_equal(lhs, rhs, law_model)


@pytest.mark.parametrize("functor", MONADS)
@given(data=st.data())
@settings(max_examples=30, deadline=None)
def test_monad_left_unit(registry, law_model, functor, data):
    # join . eta == id
    v = data.draw(S.carrier_values(functor))
    assert values_equal(join(registry, functor, eta(registry, functor, v)),
                        v, law_model)


@pytest.mark.parametrize("functor", MONADS)
@given(data=st.data())
@settings(max_examples=30, deadline=None)
def test_monad_right_unit(registry, law_model, functor, data):
    # join . fmap eta == id
    v = data.draw(S.carrier_values(functor))
    lifted = fmap_apply(registry, functor,
                        Fn(lambda x: eta(registry, functor, x), label="eta"), v)
    assert values_equal(join(registry, functor, lifted), v, law_model)


@pytest.mark.parametrize("functor", MONADS)
@given(data=st.data())
@settings(max_examples=20, deadline=None)
def test_monad_associativity(registry, law_model, functor, data):
    # join . join == join . fmap join
    inner = S.carrier_values(functor, payload=S.payloads())
    middle = S.carrier_values(functor, payload=inner)
    vvv = data.draw(S.carrier_values(functor, payload=middle))
    lhs = join(registry, functor, join(registry, functor, vvv))
    rhs = join(registry, functor,
               fmap_apply(registry, functor,
                          Fn(lambda m: join(registry, functor, m), label="join"), vvv))
    assert values_equal(lhs, rhs, law_model)


@pytest.mark.parametrize("functor", MONADS)
@given(data=st.data())
@settings(max_examples=20, deadline=None)
def test_ap_agrees_with_join_fmap_oracle(registry, law_model, functor, data):
    fn = data.draw(S.entity_funs())
    vf = data.draw(S.carrier_values(functor, payload=st.just(fn)))
    vx = data.draw(S.carrier_values(functor, payload=S.entity_values()))
    got = ap(registry, functor, vf, vx)
    # oracle: collapse the function layer by hand, one fmap at a time
    applied = fmap_apply(registry, functor,
                         Fn(lambda g: fmap_apply(registry, functor, g, vx),
                            label="o"), vf)
    want = join(registry, functor, applied)
    assert values_equal(got, want, law_model)


@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_snake_laws_value_level(registry, law_model, data):
    x = data.draw(S.env_pair_values())
    lifted = fmap_apply(registry, "P",
                        Fn(lambda v: adjunction_unit(registry, "P", "G", v)), x)
    assert values_equal(counit(registry, "P", "G", lifted), x, law_model)
    y = data.draw(S.reader_values())
    unit_at = adjunction_unit(registry, "P", "G", y)
    collapsed = fmap_apply(registry, "G",
                           Fn(lambda p: counit(registry, "P", "G", p)), unit_at)
    assert values_equal(collapsed, y, law_model)
