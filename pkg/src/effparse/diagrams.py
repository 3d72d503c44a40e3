"""Combinatorial string diagrams of effect computations.

A diagram is the triple (number of cells, input string word, cell list):
cells are listed bottom to top, each logging its horizontal position as
the count of strings strictly to its right at its input interface, plus
the effect words it consumes and produces.  Validity is a single
bottom-up scan of interfaces.

Two normalisation layers exist.  Right (exchange) normalisation bubbles
independent cells so that the ones further right sit lower; it is the
canonical representative of the planar-isotopy class.  Equational
normalisation interleaves exchange with left-to-right passes applying the
snake cancellation, the (co)monadic unit and associativity laws, and the
handler-unit law; the combined system is confluent, so diagram equality
is data equality of normal forms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import sexpr
from .combine import Branch, Derivation, Leaf
from .typesys import Registry, positive_effects


class DiagramError(Exception):
    pass


class PlanarityError(DiagramError):
    """A derivation routes effects in a way no planar diagram realises."""


@dataclass(frozen=True)
class TwoCell:
    pos: int
    kind: str
    params: tuple
    ins: tuple
    outs: tuple

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((self.pos, self.kind, self.params))
            object.__setattr__(self, "_hash", h)
            return h

    def render(self) -> str:
        inside = " ".join(self.params)
        return f"{self.kind}({inside})@{self.pos}"


def _cell(pos: int, kind: str, params: tuple) -> TwoCell:
    if kind == "eta":
        ins, outs = (), (params[0],)
    elif kind == "mu":
        ins, outs = (params[0], params[0]), (params[0],)
    elif kind == "coeta":
        ins, outs = (params[0],), ()
    elif kind == "comu":
        ins, outs = (params[0],), (params[0], params[0])
    elif kind == "epsilon":
        ins, outs = (params[0], params[1]), ()
    elif kind == "eta-adj":
        ins, outs = (), (params[1], params[0])
    elif kind == "ap":
        ins, outs = (params[0], params[0]), (params[0],)
    elif kind == "handler":
        ins, outs = (params[1],), ()
    elif kind == "lower":
        ins, outs = (params[0],), ()
    else:
        raise DiagramError(f"unknown cell kind {kind}")
    return TwoCell(pos=pos, kind=kind, params=tuple(params), ins=ins, outs=outs)


def eta_cell(pos, f):
    return _cell(pos, "eta", (f,))


def mu_cell(pos, f):
    return _cell(pos, "mu", (f,))


def coeta_cell(pos, f):
    return _cell(pos, "coeta", (f,))


def comu_cell(pos, f):
    return _cell(pos, "comu", (f,))


def epsilon_cell(pos, left, right):
    return _cell(pos, "epsilon", (left, right))


def eta_adj_cell(pos, left, right):
    return _cell(pos, "eta-adj", (left, right))


def ap_cell(pos, f):
    return _cell(pos, "ap", (f,))


def handler_cell(pos, name, f):
    return _cell(pos, "handler", (name, f))


def lower_cell(pos, f):
    return _cell(pos, "lower", (f,))


@dataclass(frozen=True)
class Diagram:
    inputs: tuple
    nodes: tuple

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((self.inputs, self.nodes))
            object.__setattr__(self, "_hash", h)
            return h

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def output_word(self) -> tuple:
        word = list(self.inputs)
        for c in self.nodes:
            i = _block_start(word, c)
            word[i:i + len(c.ins)] = list(c.outs)
        return tuple(word)


def _block_start(word, cell: TwoCell) -> int:
    """Leftmost index of the consumed block; raises on mismatch."""
    k = len(cell.ins)
    i = len(word) - cell.pos - k
    if i < 0 or cell.pos < 0:
        raise DiagramError(f"cell {cell.render()} falls off the word {word}")
    if tuple(word[i:i + k]) != cell.ins:
        raise DiagramError(
            f"cell {cell.render()} expects {cell.ins}, word has {tuple(word[i:i + k])}")
    return i


def validate(d: Diagram) -> bool:
    return first_violation(d) is None


def first_violation(d: Diagram):
    word = list(d.inputs)
    for n, c in enumerate(d.nodes):
        try:
            i = _block_start(word, c)
        except DiagramError as exc:
            return f"node {n}: {exc}"
        word[i:i + len(c.ins)] = list(c.outs)
    return None


# -- construction from derivations -----------------------------------------

class _Str:
    __slots__ = ("eff",)

    def __init__(self, eff):
        self.eff = eff


def from_derivation(reg: Registry, d: Derivation) -> Diagram:
    """The effect diagram of a derivation.

    Bottom boundary: concatenated positive-position effects of the leaf
    types, leftmost leaf leftmost.  J emits a join cell, A an applicative
    merge, DN a lowering, C an adjunction counit; ML/MR/EL/ER only route
    strings and UL/UR feed units consumed inside a function application,
    so none of them shows up as a cell.
    """
    cells, live, logical, bottom = _build(reg, d)
    dg = Diagram(inputs=tuple(s.eff for s in bottom), nodes=tuple(cells))
    bad = first_violation(dg)
    if bad is not None:
        raise DiagramError(f"internal construction fault: {bad}")
    return dg


def _build(reg, d):
    if isinstance(d, Leaf):
        strs = [_Str(e) for e in positive_effects(d.ty)]
        return [], list(strs), list(strs), list(strs)
    if not isinstance(d, Branch):
        raise DiagramError(f"not a derivation: {d!r}")
    cells_l, live_l, logical_l, bot_l = _build(reg, d.left)
    cells_r, live_r, logical_r, bot_r = _build(reg, d.right)
    cells = [replace(c, pos=c.pos + len(bot_r)) for c in cells_l]
    cells += cells_r
    live = live_l + live_r
    seq = d.modes

    def emit(consumed, kind, params, created):
        idxs = [live.index(s) for s in consumed]
        i0 = min(idxs)
        if sorted(idxs) != list(range(i0, i0 + len(consumed))):
            raise PlanarityError(
                f"mode {kind} must merge adjacent strings; derivation is not planar")
        ins_word = tuple(live[i].eff for i in range(i0, i0 + len(consumed)))
        cell = _cell(len(live) - i0 - len(consumed), kind, params)
        if cell.ins != ins_word:
            raise PlanarityError(
                f"mode {kind} expects strings {cell.ins}, found {ins_word}")
        live[i0:i0 + len(consumed)] = created
        cells.append(cell)

    def go(idx, wl, wr):
        m = seq[idx]
        if m.kind in ("fwd", "bwd", "conj", "disj"):
            return wl + wr
        if m.kind == "ml":
            s, rest = wl[0], wl[1:]
            return [s] + go(idx + 1, rest, wr)
        if m.kind == "mr":
            s, rest = wr[0], wr[1:]
            return [s] + go(idx + 1, wl, rest)
        if m.kind == "a":
            sl, sr = wl[0], wr[0]
            logical = go(idx + 1, wl[1:], wr[1:])
            created = _Str(m.functor)
            emit([sl, sr], "ap", (m.functor,), [created])
            return [created] + logical
        if m.kind in ("ul", "ur", "el", "er"):
            return go(idx + 1, wl, wr)
        if m.kind == "j":
            logical = go(idx + 1, wl, wr)
            s1, s2 = logical[0], logical[1]
            created = _Str(m.functor)
            emit([s1, s2] if live.index(s1) < live.index(s2) else [s2, s1],
                 "mu", (m.functor,), [created])
            return [created] + logical[2:]
        if m.kind == "dn":
            logical = go(idx + 1, wl, wr)
            s = logical[0]
            emit([s], "lower", (s.eff,), [])
            return logical[1:]
        if m.kind == "c":
            logical = go(idx + 1, wl, wr)
            s1, s2 = logical[0], logical[1]
            emit([s1, s2], "epsilon", m.pair, [])
            return logical[2:]
        raise DiagramError(f"unknown mode kind {m.kind}")

    logical = go(0, logical_l, logical_r)
    # wire runs of same-effect strings without braiding: within a run the
    # strings are indistinguishable, so the physically monotone assignment
    # is the planar-canonical one
    i = 0
    while i < len(logical):
        j = i
        while j + 1 < len(logical) and logical[j + 1].eff == logical[i].eff:
            j += 1
        if j > i:
            logical[i:j + 1] = sorted(logical[i:j + 1], key=live.index)
        i = j + 1
    return cells, live, logical, bot_l + bot_r


# -- exchange (right) normalisation -----------------------------------------

def _can_swap(lower: TwoCell, upper: TwoCell) -> bool:
    """True when the upper cell's input block lies entirely right of the
    lower cell's output block, so the two commute.

    A creating cell (no inputs) touching a purely consuming cell (no
    outputs) at the same position is exchangeable in both directions; the
    consumer-below orientation is the canonical representative, so that
    direction never swaps (otherwise bubbling would oscillate).
    """
    if upper.pos + len(upper.ins) > lower.pos:
        return False
    if not upper.ins and not lower.outs and upper.pos == lower.pos:
        return False
    return True


def _swap(lower: TwoCell, upper: TwoCell):
    """Exchange two independent cells; the one moving down keeps its
    position, the one moving up re-counts the other's string delta."""
    moved_up = replace(lower, pos=lower.pos + len(upper.outs) - len(upper.ins))
    return upper, moved_up


def right_normalize(d: Diagram) -> Diagram:
    if first_violation(d) is not None:
        raise DiagramError(f"cannot normalise an invalid diagram: {first_violation(d)}")
    nodes = list(d.nodes)
    changed = True
    while changed:
        changed = False
        for i in range(len(nodes) - 1):
            if _can_swap(nodes[i], nodes[i + 1]):
                nodes[i], nodes[i + 1] = _swap(nodes[i], nodes[i + 1])
                changed = True
    return Diagram(inputs=d.inputs, nodes=tuple(nodes))


# -- equational reduction -----------------------------------------------------

def _match_rule(c1: TwoCell, c2: TwoCell):
    """A reduction applying to the adjacent pair (c1 below, c2 above), or
    None.  Returns ("delete",) or ("assoc", new_c1, new_c2)."""
    # snake: unit then counit of one adjunction, interleaved positions
    if (c1.kind == "eta-adj" and c2.kind == "epsilon" and c1.params == c2.params
            and c1.pos in (c2.pos - 1, c2.pos + 1)):
        return ("delete",)
    # monadic unit: eta consumed by a join on a shared string
    if (c1.kind == "eta" and c2.kind == "mu" and c1.params == c2.params
            and c2.pos in (c1.pos - 1, c1.pos)):
        return ("delete",)
    # comonadic unit: coeta consuming one output of a duplicate
    if (c1.kind == "comu" and c2.kind == "coeta" and c1.params == c2.params
            and c2.pos in (c1.pos, c1.pos + 1)):
        return ("delete",)
    # handler unit: eta consumed directly by a handler or lowering
    if (c1.kind == "eta" and c2.kind in ("handler", "lower")
            and c2.ins == c1.outs and c2.pos == c1.pos):
        return ("delete",)
    # monad associativity, left-nested to right-nested
    if (c1.kind == "mu" and c2.kind == "mu" and c1.params == c2.params
            and c1.pos == c2.pos + 1):
        return ("assoc", replace(c1, pos=c2.pos), c2)
    # comonad coassociativity, mirrored
    if (c1.kind == "comu" and c2.kind == "comu" and c1.params == c2.params
            and c2.pos == c1.pos + 1):
        return ("assoc", c1, replace(c2, pos=c1.pos))
    return None


def _one_pass(nodes: list) -> int:
    """One left-to-right equational pass, applying every match found."""
    applied = 0
    i = 0
    while i < len(nodes) - 1:
        m = _match_rule(nodes[i], nodes[i + 1])
        if m is None:
            i += 1
        elif m[0] == "delete":
            del nodes[i:i + 2]
            applied += 1
            i = max(i - 1, 0)
        else:
            nodes[i], nodes[i + 1] = m[1], m[2]
            applied += 1
            i += 1
    return applied


def eq_normalize(d: Diagram, stats: dict | None = None) -> Diagram:
    """Alternate exchange normalisation with equational passes until no
    rule applies; the result is the unique equational normal form."""
    d = right_normalize(d)
    total = 0
    guard = 4 * (d.node_count + 1) * (d.node_count + 1) + 8
    while True:
        nodes = list(d.nodes)
        applied = _one_pass(nodes)
        if applied == 0:
            break
        total += applied
        d = right_normalize(Diagram(inputs=d.inputs, nodes=tuple(nodes)))
        guard -= 1
        if guard <= 0:
            raise DiagramError("equational normalisation failed to terminate")
    if stats is not None:
        stats["reductions"] = stats.get("reductions", 0) + total
    return d


def diagrams_equal(a: Diagram, b: Diagram) -> bool:
    if first_violation(a) is not None or first_violation(b) is not None:
        raise DiagramError("cannot compare invalid diagrams")
    return eq_normalize(a) == eq_normalize(b)


# -- exhaustive reduction oracle ---------------------------------------------

def _steps_of_normal(d: Diagram):
    """Single equational steps on an already exchange-normal diagram."""
    out = []
    nodes = d.nodes
    for i in range(len(nodes) - 1):
        m = _match_rule(nodes[i], nodes[i + 1])
        if m is None:
            continue
        if m[0] == "delete":
            new = nodes[:i] + nodes[i + 2:]
        else:
            new = nodes[:i] + (m[1], m[2]) + nodes[i + 2:]
        out.append((f"{m[0]}@{i}", Diagram(inputs=d.inputs, nodes=new)))
    return out


def applicable_reductions(d: Diagram):
    """Every single equational step applicable to the exchange-normal form
    of ``d``; used by the confluence oracle, not by the normaliser."""
    return _steps_of_normal(right_normalize(d))


def all_normal_forms(d: Diagram, _memo=None) -> frozenset:
    """Normal forms reachable by every maximal reduction order."""
    if _memo is None:
        _memo = {}
    return _anf(right_normalize(d), _memo)


def _anf(d: Diagram, memo) -> frozenset:
    hit = memo.get(d)
    if hit is not None:
        return hit
    memo[d] = frozenset()  # cycle guard
    steps = _steps_of_normal(d)
    if not steps:
        result = frozenset([d])
    else:
        result = frozenset()
        for _, nxt in steps:
            result |= _anf(right_normalize(nxt), memo)
    memo[d] = result
    return result


# -- exhaustive generation ------------------------------------------------------

def cell_menu(monads=("F1", "F2"), adjunctions=(("L", "R"),), handlers=(("h1", "F1"),),
              lowerings=()):
    """The (kind, params) alphabet a registry makes available."""
    menu = []
    for f in monads:
        menu.append(("eta", (f,)))
        menu.append(("mu", (f,)))
    for left, right in adjunctions:
        menu.append(("eta-adj", (left, right)))
        menu.append(("epsilon", (left, right)))
    for name, f in handlers:
        menu.append(("handler", (name, f)))
    for f in lowerings:
        menu.append(("lower", (f,)))
    return tuple(menu)


def enumerate_diagrams(input_words, max_cells, menu=None, up_to_exchange=False):
    """Every valid diagram over the given bottom words with at most
    ``max_cells`` cells drawn from the menu.  Exhaustive, so keep the
    bounds small.

    With ``up_to_exchange`` only exchange-normal representatives are
    produced (prefixes of right-normal diagrams are right-normal, so the
    enumeration stays complete up to planar isotopy while skipping every
    reordering of independent cells).
    """
    menu = cell_menu() if menu is None else menu

    def extensions(word):
        for kind, params in menu:
            probe = _cell(0, kind, params)
            k = len(probe.ins)
            if k == 0:
                for i in range(len(word) + 1):
                    yield _cell(len(word) - i, kind, params)
            else:
                for i in range(len(word) - k + 1):
                    if tuple(word[i:i + k]) == probe.ins:
                        yield _cell(len(word) - i - k, kind, params)

    def grow(word, cells):
        yield Diagram(inputs=tuple(word0), nodes=tuple(cells))
        if len(cells) >= max_cells:
            return
        for cell in extensions(word):
            if up_to_exchange and cells and _can_swap(cells[-1], cell):
                continue
            i = len(word) - cell.pos - len(cell.ins)
            nxt = word[:i] + list(cell.outs) + word[i + len(cell.ins):]
            yield from grow(nxt, cells + [cell])

    for word0 in input_words:
        yield from grow(list(word0), [])


# -- serialization -------------------------------------------------------------

def diagram_to_sexpr(d: Diagram) -> str:
    nodes = tuple((c.pos, (c.kind, *c.params), tuple(c.ins), tuple(c.outs))
                  for c in d.nodes)
    return sexpr.unparse(("diagram", ":inputs", tuple(d.inputs), ":nodes", nodes))


def diagram_from_sexpr(text: str) -> Diagram:
    forms = sexpr.parse(text)
    if len(forms) != 1 or not isinstance(forms[0], sexpr.Node):
        raise DiagramError("expected a single (diagram ...) form")
    form = forms[0]
    if not form.items or form.items[0] != "diagram":
        raise DiagramError("expected a (diagram ...) form")
    kw = dict(zip(form.items[1::2], form.items[2::2]))
    inputs = tuple(kw[":inputs"].items) if ":inputs" in kw else ()
    nodes = []
    for node in kw.get(":nodes", sexpr.Node((), 0)).items:
        pos, kindform = node.items[0], node.items[1]
        kind, params = kindform.items[0], tuple(kindform.items[1:])
        nodes.append(_cell(pos, kind, params))
    return Diagram(inputs=inputs, nodes=tuple(nodes))


def diagram_to_dot(d: Diagram) -> str:
    """Render cells as boxes and string segments as edges, bottom to top."""
    lines = ["digraph effect_diagram {", "  rankdir=BT;",
             '  node [shape=box, fontname="monospace"];']
    word = [f"in{i}" for i in range(len(d.inputs))]
    labels = {f"in{i}": d.inputs[i] for i in range(len(d.inputs))}
    for name in word:
        lines.append(f'  {name} [shape=plaintext, label="{labels[name]}"];')
    for n, c in enumerate(d.nodes):
        i = len(word) - c.pos - len(c.ins)
        me = f"cell{n}"
        label = c.kind + ("" if not c.params else "_" + ",".join(c.params))
        lines.append(f'  {me} [label="{label}"];')
        for src in word[i:i + len(c.ins)]:
            lines.append(f"  {src} -> {me};")
        outs = []
        for k, eff in enumerate(c.outs):
            port = f"cell{n}out{k}"
            labels[port] = eff
            outs.append(port)
        word[i:i + len(c.ins)] = outs
        # emitted ports become plain carriers of the produced strings
        for port in outs:
            lines.append(f'  {port} [shape=plaintext, label="{labels[port]}"];')
            lines.append(f"  cell{n} -> {port};")
    for i, name in enumerate(word):
        if name.startswith("in"):
            lines.append(f'  out{i} [shape=plaintext, label="{labels[name]}"];')
            lines.append(f"  {name} -> out{i};")
    lines.append("}")
    return "\n".join(lines) + "\n"
