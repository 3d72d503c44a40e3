"""Acceptance suite: figure reproduction at desk scale, law suites,
confluence and complexity of diagram normalisation, parsing scale,
pruning soundness, and the equality decision.

Each criterion prints one PASS/FAIL line; run with ``pytest -s`` to see
them.  Tolerances and bounds are pinned here, not configurable.
"""

import itertools
import math
import random
import time
from contextlib import contextmanager

import pytest

from effparse.cli import main as cli_main
from effparse.combine import (Branch, Leaf, derivation_key, derivation_term,
                              load_syntax, mode_count, parse, parse_forest,
                              render_modes)
from effparse.diagrams import (Diagram, PlanarityError, all_normal_forms,
                               diagrams_equal, enumerate_diagrams, eq_normalize,
                               eta_adj_cell, eta_cell, epsilon_cell,
                               from_derivation, handler_cell, mu_cell, validate)
from effparse.lambda_eval import (EvalError, _run_state, adjunction_unit, ap,
                                  counit, eta, eval_term, fmap_apply, join,
                                  run_handler)
from effparse.lexicon import load_language, load_model
from effparse.model import Model
from effparse.typesys import Base, Eff
from effparse.values import (ABSENT, B, ContV, E, Fn, MaybeV, PairV, ReaderV,
                             SeqV, SetV, StateV, values_equal)

from .conftest import DATA


@contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number}: FAIL - {description}")
        raise
    print(f"ACCEPTANCE {number}: PASS - {description}")


def _fit_exponent(sizes, values):
    xs = [math.log(s) for s in sizes]
    ys = [math.log(v) for v in values]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return (sum((x - mx) * (y - my) for x, y in zip(xs, ys))
            / sum((x - mx) ** 2 for x in xs))


# -- criterion 1: the cat sleeps ------------------------------------------------

def test_criterion_1_the_cat_sleeps(english, syntax):
    with criterion(1, "'the cat sleeps' is M t; unique cat gives T, two cats give #"):
        t0 = time.perf_counter()
        one_cat = Model(entities=("c1", "c2"),
                        predicates={("cat", 1): frozenset({("c1",)}),
                                    ("sleep", 1): frozenset({("c1",)})})
        two_cats = Model(entities=("c1", "c2"),
                         predicates={("cat", 1): frozenset({("c1",), ("c2",)}),
                                     ("sleep", 1): frozenset({("c1",)})})
        derivs = parse("the cat sleeps".split(), english, syntax=syntax)
        target = [d for d in derivs if d.ty == Eff("M", Base("t"))]
        assert target, "no derivation with root type M t"
        d = target[0]
        term = derivation_term(english.registry, d)
        assert eval_term(term, {}, one_cat, english.registry) == MaybeV(B(True))
        assert eval_term(term, {}, two_cats, english.registry) == MaybeV(ABSENT)
        assert time.perf_counter() - t0 < 1.0


# -- criterion 2: the cat eats a mouse ------------------------------------------

def test_criterion_2_the_cat_eats_a_mouse(english, syntax):
    with criterion(2, "'the cat eats a mouse' is M D t; outcomes match the state-thread oracle"):
        t0 = time.perf_counter()
        model = Model(entities=("c1", "m1", "m2"),
                      predicates={("cat", 1): frozenset({("c1",)}),
                                  ("mouse", 1): frozenset({("m1",), ("m2",)}),
                                  ("eats", 2): frozenset({("m1", "c1")})})
        reg = english.registry
        derivs = parse("the cat eats a mouse".split(), english, syntax=syntax)
        target = [d for d in derivs if d.ty == Eff("M", Eff("D", Base("t")))]
        assert target, "no derivation with root type M D t"
        v = eval_term(derivation_term(reg, target[0]), {}, model, reg)
        assert isinstance(v, MaybeV) and not v.absent
        outcomes = _run_state(v.payload, SeqV(()))

        # standalone oracle: walk the state threads directly off the model
        mice = sorted(m for (m,) in model.predicates[("mouse", 1)])
        oracle_pairs = [PairV(B((m, "c1") in model.predicates[("eats", 2)]),
                              SeqV((E(m),))) for m in mice]
        oracle = SetV(oracle_pairs)
        assert values_equal(outcomes, oracle, model)
        got_values = {("T" if p.left.value else "F") for p in outcomes.elems}
        want_values = {("T" if b.left.value else "F") for b in oracle_pairs}
        assert got_values == want_values == {"T", "F"}
        assert time.perf_counter() - t0 < 1.0


# -- criterion 3: a cat in a box -------------------------------------------------

def test_criterion_3_a_cat_in_a_box(english):
    with criterion(3, "'a cat in a box' is D e; entity set equals brute force"):
        model = Model(entities=("c1", "c2", "b1"),
                      predicates={("cat", 1): frozenset({("c1",), ("c2",)}),
                                  ("box", 1): frozenset({("b1",)}),
                                  ("in", 2): frozenset({("b1", "c1")})})
        reg = english.registry
        derivs = parse("a cat in a box".split(), english, max_derivations=128)
        target = [d for d in derivs if d.ty == Eff("D", Base("e"))]
        assert target, "no derivation with root type D e"

        brute = {x for x in model.entities
                 if (x,) in model.predicates[("cat", 1)]
                 and any((b,) in model.predicates[("box", 1)]
                         and (b, x) in model.predicates[("in", 2)]
                         for b in model.entities)}
        assert brute == {"c1"}
        entity_sets = []
        for d in target:
            v = eval_term(derivation_term(reg, d), {}, model, reg)
            entity_sets.append({p.left.name for p in _run_state(v, SeqV(())).elems})
        assert brute in entity_sets


# -- criterion 4: law suites ------------------------------------------------------

_PAYLOADS = [B(True), B(False), E("a"), E("b"), E("c"), E("d")]


def _sample(rng, functor, payload):
    draw = lambda: rng.choice(payload)
    if functor == "M":
        return MaybeV(ABSENT) if rng.random() < 0.25 else MaybeV(draw())
    if functor == "S":
        return SetV([draw() for _ in range(rng.randint(0, 3))])
    if functor == "W":
        return PairV(draw(), B(rng.random() < 0.5))
    if functor == "P":
        seq = SeqV(tuple(E(rng.choice("abcd")) for _ in range(rng.randint(0, 2))))
        return PairV(draw(), seq)
    if functor == "G":
        options = [draw() for _ in range(rng.randint(1, 3))]

        def run(g, options=options):
            return options[len(g.items) % len(options)]
        return ReaderV(run)
    if functor == "D":
        options = [draw() for _ in range(rng.randint(1, 3))]
        push = rng.random() < 0.5

        def run(s, options=options, push=push):
            outs = []
            for i, v in enumerate(options):
                s2 = SeqV((E("abcd"[i % 4]),) + s.items) if push else s
                outs.append(PairV(v, s2))
            return SetV(outs)
        return StateV(run)
    if functor == "C":
        options = [draw() for _ in range(rng.randint(1, 3))]
        agg = all if rng.random() < 0.5 else any

        def run(c, options=options, agg=agg):
            return B(agg(c(v).value for v in options))
        return ContV(run)
    raise AssertionError(functor)


def _sample_nested(rng, functor, depth, payload):
    if depth == 0:
        return rng.choice(payload)
    return _sample(rng, functor, [_sample_nested(rng, functor, depth - 1, payload)
                                  for _ in range(3)] or payload)


_FUNS = [Fn(lambda v: v, label="id"),
         Fn(lambda v: E("abcd"[("abcd".index(v.name) + 1) % 4])
            if isinstance(v, E) else v, label="rot"),
         Fn(lambda v: B(isinstance(v, E) and v.name in ("a", "b")), label="ab?"),
         Fn(lambda v: E("a"), label="ka")]
_ENDOS = [_FUNS[0], _FUNS[1], _FUNS[3]]


def test_criterion_4_law_suites(registry, law_model):
    monads = ("G", "W", "S", "C", "D", "M")
    rng = random.Random(20260808)
    cases = 110
    with criterion(4, f"functor/monad/handler/snake laws, {cases} cases each, zero failures"):
        reg = registry
        for f in monads:
            for i in range(cases):
                v = _sample(rng, f, _PAYLOADS)
                # functor identity and composition
                assert values_equal(fmap_apply(reg, f, _FUNS[0], v), v, law_model)
                g1, g2 = rng.choice(_ENDOS), rng.choice(_FUNS)
                comp = Fn(lambda x, a=g2, b=g1: a.run(b.run(x)), label="comp")
                assert values_equal(
                    fmap_apply(reg, f, comp, v),
                    fmap_apply(reg, f, g2, fmap_apply(reg, f, g1, v)), law_model)
                # monad unit laws
                assert values_equal(join(reg, f, eta(reg, f, v)), v, law_model)
                lifted = fmap_apply(reg, f, Fn(lambda x, f=f: eta(reg, f, x)), v)
                assert values_equal(join(reg, f, lifted), v, law_model)
            for i in range(cases // 4):
                vvv = _sample_nested(rng, f, 3, _PAYLOADS)
                lhs = join(reg, f, join(reg, f, vvv))
                rhs = join(reg, f, fmap_apply(
                    reg, f, Fn(lambda m, f=f: join(reg, f, m)), vvv))
                assert values_equal(lhs, rhs, law_model)
        # handler law on every shipped handler
        for nat in reg.nats():
            if not nat.is_handler:
                continue
            f = nat.source[0]
            for i in range(cases):
                v = (B(i % 2 == 0) if nat.component == "lower"
                     else rng.choice(_PAYLOADS))
                out = run_handler(reg, nat, eta(reg, f, v), law_model)
                assert values_equal(out, v, law_model)
        # snake identities for the shipped adjunction
        for i in range(cases):
            x = _sample(rng, "P", _PAYLOADS)
            lifted = fmap_apply(reg, "P",
                                Fn(lambda v: adjunction_unit(reg, "P", "G", v)), x)
            assert values_equal(counit(reg, "P", "G", lifted), x, law_model)
            y = _sample(rng, "G", _PAYLOADS)
            unit_at = adjunction_unit(reg, "P", "G", y)
            collapsed = fmap_apply(reg, "G",
                                   Fn(lambda p: counit(reg, "P", "G", p)), unit_at)
            assert values_equal(collapsed, y, law_model)


# -- criterion 5: confluence oracle ------------------------------------------------

def test_criterion_5_confluence_oracle():
    words = [(), ("F1",), ("F1", "F1"), ("F1", "F1", "F1"), ("R",), ("L",)]
    with criterion(5, "all <=6-cell diagrams over {2 monads, 1 adjunction, 1 handler} confluent"):
        t0 = time.perf_counter()
        memo = {}
        count = 0
        for d in enumerate_diagrams(words, max_cells=6, up_to_exchange=True):
            nfs = all_normal_forms(d, memo)
            assert len(nfs) == 1, f"divergent reduction orders for {d}"
            if count % 101 == 0:
                assert next(iter(nfs)) == eq_normalize(d)
            count += 1
        elapsed = time.perf_counter() - t0
        assert count > 100_000
        assert elapsed < 60.0, f"confluence sweep took {elapsed:.1f}s"


# -- criterion 6: normalization complexity ------------------------------------------

def _deletion_family(n):
    """Alternating unit-join, snake, and handler-unit pairs; every pair is
    one deletion."""
    nodes = []
    k = 0
    while len(nodes) + 2 <= n:
        which = k % 3
        if which == 0:
            nodes += [eta_cell(1, "F1"), mu_cell(1, "F1")]
        elif which == 1:
            nodes += [eta_adj_cell(1, "L", "R"), epsilon_cell(0, "L", "R")]
        else:
            nodes += [eta_cell(0, "F1"), handler_cell(0, "h1", "F1")]
        k += 1
    return Diagram(inputs=("F1", "R"), nodes=tuple(nodes))


def _assoc_family(n):
    """Independent two-join left nestings; each block is one associativity
    rewrite."""
    m = n // 2
    nodes = []
    for j in range(m):
        nodes += [mu_cell(j + 1, "F1"), mu_cell(j, "F1")]
    return Diagram(inputs=("F1",) * (3 * m), nodes=tuple(nodes))


def test_criterion_6_normalization_complexity():
    sizes = (10, 20, 40, 80, 160, 200)
    with criterion(6, "reduction count <= 2N and fitted runtime exponent <= 2.3"):
        for build in (_deletion_family, _assoc_family):
            times = []
            for n in sizes:
                d = build(n)
                assert validate(d)
                reps = []
                stats = {}
                for _ in range(3):
                    stats = {}
                    t0 = time.perf_counter()
                    eq_normalize(d, stats=stats)
                    reps.append(time.perf_counter() - t0)
                assert stats["reductions"] <= 2 * d.node_count, (build.__name__, n)
                times.append(sorted(reps)[1])
            exponent = _fit_exponent(sizes, times)
            assert exponent <= 2.3, (build.__name__, exponent)


# -- criterion 7: parsing scale -------------------------------------------------------

def test_criterion_7_parsing_scale(english, syntax):
    sents = [("a cat" + " in a box" * k).split() for k in range(1, 9)]
    with criterion(7, "chart is n(n+1)/2 cells, trees quadratic, wall-clock degree <= 3"):
        reg = english.registry
        c = len(reg.adjunctions())
        m = max(english.max_effect_rank, 1)
        # one pass to build the type-pair closure (the product grammar is a
        # property of the language, built lazily and shared)
        for toks in sents:
            parse_forest(toks, english, syntax=syntax, seq_cap=64)
        times, sizes = [], []
        for toks in sents:
            n = len(toks)
            # batch the timing so every point costs ~the same wall clock;
            # the smallest inputs are otherwise dominated by timer noise
            t0 = time.perf_counter()
            forest = parse_forest(toks, english, syntax=syntax, seq_cap=64)
            est = max(time.perf_counter() - t0, 1e-5)
            runs = max(1, int(0.03 / est))
            samples = []
            for _ in range(5):
                t0 = time.perf_counter()
                for _ in range(runs):
                    forest = parse_forest(toks, english, syntax=syntax, seq_cap=64)
                samples.append((time.perf_counter() - t0) / runs)
            times.append(min(samples))
            sizes.append(n)
            assert forest.cell_count() == n * (n + 1) // 2
            derivs = forest.derivations(limit=64)
            assert derivs
            lemma_bound = (2 + c) * m * (n + 1) * (n - 1) + (n - 1)
            for d in derivs:
                assert mode_count(d) <= lemma_bound
            # packed size stays quadratic with the frozen constant
            assert forest.packed_node_count() <= 5 * n * n
        exponent = _fit_exponent(sizes, times)
        assert exponent <= 3.0, f"wall-clock exponent {exponent:.2f}"


# -- criterion 8: pruning soundness -----------------------------------------------------

def test_criterion_8_pruning_soundness(english, solar):
    reps = ["cat", "jupiter", "eats", "the", "a", "no", "it",
            "skillful", "be", "everyone"]
    with criterion(8, "every pruned evaluable planar derivation matches a retained normal form"):
        reg = english.registry
        cap = 4096
        unmatched = 0
        checked = 0
        for n in range(1, 6):
            for toks in itertools.product(reps, repeat=n):
                full = parse(list(toks), english, prune_seqs=False,
                             max_derivations=cap)
                if not full:
                    continue
                kept = parse(list(toks), english, prune_seqs=True,
                             max_derivations=cap)
                kept_keys = {derivation_key(d) for d in kept}
                pruned = [d for d in full if derivation_key(d) not in kept_keys]
                if not pruned:
                    continue
                kept_nfs = set()
                for r in kept:
                    try:
                        kept_nfs.add(eq_normalize(from_derivation(reg, r)))
                    except PlanarityError:
                        pass
                for d in pruned:
                    try:
                        eval_term(derivation_term(reg, d), {}, solar, reg)
                    except EvalError:
                        continue
                    try:
                        nf = eq_normalize(from_derivation(reg, d))
                    except PlanarityError:
                        continue  # no planar diagram to compare
                    checked += 1
                    if nf not in kept_nfs:
                        unmatched += 1
        assert checked > 5000
        assert unmatched == 0


# -- criterion 9: equality decision ------------------------------------------------------

def test_criterion_9_equality_decision(english, capsys):
    sentence = "a cat in a box in a box"
    with criterion(9, "equality of exchange-variant derivations decided as 'equal' in < 1 s"):
        reg = english.registry
        derivs = parse(sentence.split(), english, max_derivations=1024)
        pair = None
        nfs = {}
        for idx, d in enumerate(derivs):
            try:
                dg = from_derivation(reg, d)
            except PlanarityError:
                continue
            nf = eq_normalize(dg)
            if nf in nfs and from_derivation(reg, derivs[nfs[nf]]) != dg:
                pair = (nfs[nf], idx)
                break
            nfs.setdefault(nf, idx)
        assert pair, "no equal-normal-form pair with distinct raw diagrams"
        i, j = pair
        t0 = time.perf_counter()
        code = cli_main(["equal", "--language", str(DATA / "english.lang"),
                         "--model", str(DATA / "solar.model"),
                         "--max-derivations", "1024",
                         "--indices", str(i), str(j), sentence])
        elapsed = time.perf_counter() - t0
        out = capsys.readouterr().out
        assert code == 0
        assert out.strip() == "equal"
        assert elapsed < 1.0
