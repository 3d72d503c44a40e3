import pathlib

import pytest

from effparse.cli import main

ROOT = pathlib.Path(__file__).resolve().parent.parent
LANG = str(ROOT / "data" / "english.lang")
MODEL = str(ROOT / "data" / "solar.model")
CFG = str(ROOT / "data" / "english.cfg")


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def base(cmd, *extra):
    return [cmd, "--language", LANG, "--model", MODEL, *extra]


def test_parse_prints_one_tree(capsys):
    code, out, _ = run(capsys, *base("parse", "--syntax", CFG, "--eval"),
                       "the cat sleeps")
    assert code == 0
    assert "derivation 0: M t" in out
    assert "ML_M <" in out
    assert "= T" in out


def test_parse_unknown_token_exit_4(capsys):
    code, _, err = run(capsys, *base("parse"), "colorless xyzzy")
    assert code == 4
    assert "colorless" in err and "position 0" in err


def test_parse_empty_sentence_exit_1(capsys):
    code, out, _ = run(capsys, *base("parse"))
    assert code == 1
    assert "no parse" in out


def test_parse_no_parse_exit_1(capsys):
    code, out, _ = run(capsys, *base("parse", "--syntax", CFG), "cat sleeps the")
    assert code == 1
    assert "no parse" in out


def test_language_parse_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.lang"
    bad.write_text("(base-type e")
    code, _, err = run(capsys, "check", "--language", str(bad), "--model", MODEL)
    assert code == 2
    assert "error" in err


def test_language_semantic_error_exit_3(capsys, tmp_path):
    bad = tmp_path / "bad.lang"
    bad.write_text(pathlib.Path(LANG).read_text()
                   + '(word "dog" :type (-> e t) :term (lam x x))\n')
    code, _, err = run(capsys, "check", "--language", str(bad), "--model", MODEL)
    assert code == 3
    assert "dog" in err


def test_check_ok(capsys):
    code, out, _ = run(capsys, *base("check"))
    assert code == 0
    assert "language ok" in out and "model ok" in out


def test_eval_command(capsys):
    code, out, _ = run(capsys, *base("eval", "--syntax", CFG), "the cat sleeps")
    assert code == 0
    assert "M t = T" in out


def test_diagram_command_sexpr(capsys):
    code, out, _ = run(capsys, *base("diagram", "--syntax", CFG), "the cat sleeps")
    assert code == 0
    assert out.startswith("(diagram :inputs (M)")


def test_diagram_index_out_of_range_exit_5(capsys):
    code, _, err = run(capsys, *base("diagram", "--syntax", CFG, "--index", "99"),
                       "the cat sleeps")
    assert code == 5
    assert "out of range" in err


def test_normalize_rewrites_left_nested_joins(capsys):
    # find a derivation whose raw diagram is a left-nested double join and
    # check the CLI emits its right-nested normal form
    from effparse.combine import parse
    from effparse.diagrams import from_derivation, diagram_to_sexpr, PlanarityError
    from effparse.lexicon import load_language

    lex = load_language(LANG)
    sentence = "a cat in a box in a box"
    derivs = parse(sentence.split(), lex, max_derivations=1024)
    idx = None
    for i, d in enumerate(derivs):
        try:
            dg = from_derivation(lex.registry, d)
        except PlanarityError:
            continue
        if [c.pos for c in dg.nodes if c.kind == "mu"] == [1, 0]:
            idx = i
            break
    assert idx is not None
    code, raw_out, _ = run(capsys, *base("diagram", "--max-derivations", "1024",
                                         "--index", str(idx)), sentence)
    assert code == 0
    code, norm_out, _ = run(capsys, *base("normalize", "--max-derivations", "1024",
                                          "--index", str(idx)), sentence)
    assert code == 0
    assert raw_out != norm_out
    assert "(1 (mu D)" in raw_out
    assert "(1 (mu D)" not in norm_out


def test_normalize_command(capsys):
    code, out, _ = run(capsys, *base("normalize", "--syntax", CFG), "no cat sleeps")
    assert code == 0
    assert out.startswith("(diagram")


def test_equal_same_index_reflexive(capsys):
    code, out, _ = run(capsys, *base("equal", "--indices", "0", "0"),
                       "the cat sleeps")
    assert code == 0
    assert out.strip() == "equal"


def test_equal_bad_indices_exit_5(capsys):
    code, _, err = run(capsys, *base("equal", "--indices", "0", "99", "--syntax", CFG),
                       "the cat sleeps")
    assert code == 5


def test_equal_distinct_derivations(capsys):
    # an M t root and an M e root differ already at the boundary
    code, out, _ = run(capsys, *base("equal", "--indices", "0", "2",
                                     "--max-derivations", "16"),
                       "the cat sleeps")
    assert code == 0
    assert out.strip() in {"equal", "distinct"}


def test_render_dot(capsys):
    code, out, _ = run(capsys, *base("parse", "--syntax", CFG, "--render", "dot"),
                       "the cat sleeps")
    assert code == 0
    assert "digraph derivation" in out


def test_diagram_render_dot(capsys):
    code, out, _ = run(capsys, *base("diagram", "--render", "dot", "--syntax", CFG),
                       "no cat sleeps")
    assert code == 0
    assert "digraph effect_diagram" in out


def test_byte_identical_reruns(capsys):
    a = run(capsys, *base("parse", "--all-parses", "--eval"), "the cat eats a mouse")
    b = run(capsys, *base("parse", "--all-parses", "--eval"), "the cat eats a mouse")
    assert a == b
