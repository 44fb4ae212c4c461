"""Finite presheaves over finite posets.

Stage sets are finite and explicitly materialized; restriction maps are stored
for every strictly comparable pair.  Monos are stage-wise injections, which is
the standard characterization in a presheaf category.  The diagonal-filler
search is exhaustive over a fixed deterministic order, so verdicts and
witnesses are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InternalCheckError, PreconditionError, UnsupportedError
from .words import (
    EPSILON,
    TAU,
    TAU_BAR,
    LassoTrace,
    StretchPoint,
    Word,
    element_key,
    hide,
)

# ---------------------------------------------------------------------------
# Posets


@dataclass(frozen=True)
class FinPoset:
    """A finite poset; the relation is stored reflexively closed."""

    elements: tuple
    relation: frozenset
    dialect: str = ""

    def leq(self, a, b) -> bool:
        return (a, b) in self.relation

    def down(self, e) -> tuple:
        return tuple(x for x in self.elements if self.leq(x, e))

    def strictly_below(self, e) -> tuple:
        return tuple(x for x in self.elements if x != e and self.leq(x, e))

    def up(self, e) -> tuple:
        return tuple(x for x in self.elements if self.leq(e, x))

    def comparable(self, a, b) -> bool:
        return self.leq(a, b) or self.leq(b, a)

    def meet(self, a, b):
        """Greatest common lower bound, or None if there is no greatest one."""
        lower = [x for x in self.elements if self.leq(x, a) and self.leq(x, b)]
        best = None
        for x in lower:
            if all(self.leq(y, x) for y in lower):
                best = x
        return best

    def violations(self) -> list:
        """Poset-law violations (empty for a genuine poset)."""
        bad = []
        elems = set(self.elements)
        for (a, b) in self.relation:
            if a not in elems or b not in elems:
                bad.append(("element", a, b))
        for a in self.elements:
            if (a, a) not in self.relation:
                bad.append(("reflexive", a))
        for (a, b) in self.relation:
            if a != b and (b, a) in self.relation:
                bad.append(("antisymmetric", a, b))
        for (a, b) in self.relation:
            for c in self.elements:
                if (b, c) in self.relation and (a, c) not in self.relation:
                    bad.append(("transitive", a, b, c))
        return bad


def poset_from_leq(elements, leq, dialect="") -> FinPoset:
    elements = tuple(sorted(elements, key=element_key))
    rel = frozenset((a, b) for a in elements for b in elements if leq(a, b))
    return FinPoset(elements, rel, dialect)


def _all_words(labels, depth):
    words = [EPSILON]
    frontier = [EPSILON]
    for _ in range(depth):
        frontier = [w.append(l) for w in frontier for l in labels]
        words.extend(frontier)
    return words


def word_poset(labels, depth: int, dialect: str = "words") -> FinPoset:
    """All words over the labels up to the depth, prefix-ordered."""
    return poset_from_leq(
        _all_words(tuple(labels), depth),
        lambda a, b: a.is_prefix_of(b),
        dialect,
    )


def barred_source_poset(labels, depth: int) -> FinPoset:
    """Words over the labels plus one stretch point per positive tick; only
    the empty word sits below the stretch points."""
    elems = _all_words(tuple(labels), depth) + [StretchPoint(n) for n in range(1, depth + 1)]

    def leq(a, b):
        if isinstance(a, Word) and isinstance(b, Word):
            return a.is_prefix_of(b)
        if isinstance(a, Word) and isinstance(b, StretchPoint):
            return a == EPSILON
        if isinstance(a, StretchPoint) and isinstance(b, StretchPoint):
            return a.tick <= b.tick
        return False

    return poset_from_leq(elems, leq, "barred-words")


def branching_target_poset(labels, depth: int) -> FinPoset:
    """Visible words up to the depth plus the stretchable observation, which
    sits above exactly the empty word."""
    if any(l is TAU for l in labels):
        raise PreconditionError("target poset is over visible labels only")
    elems = _all_words(tuple(labels), depth) + [TAU_BAR]

    def leq(a, b):
        if isinstance(a, Word) and isinstance(b, Word):
            return a.is_prefix_of(b)
        if isinstance(a, Word) and b is TAU_BAR:
            return a == EPSILON
        if a is TAU_BAR and b is TAU_BAR:
            return True
        return False

    return poset_from_leq(elems, leq, "barred-visible-words")


def fair_target_poset(labels, depth: int, traces) -> FinPoset:
    """Visible words up to the depth plus one point per ultimately periodic
    trace, each sitting above its finite prefixes."""
    elems = _all_words(tuple(labels), depth) + sorted(set(traces), key=element_key)

    def leq(a, b):
        if isinstance(a, Word) and isinstance(b, Word):
            return a.is_prefix_of(b)
        if isinstance(a, Word) and isinstance(b, LassoTrace):
            return a == b.word_prefix(len(a))
        if isinstance(a, LassoTrace) and isinstance(b, LassoTrace):
            return a == b
        return False

    return poset_from_leq(elems, leq, "words-with-limits")


def time_poset(depth: int) -> FinPoset:
    return poset_from_leq(range(depth + 1), lambda a, b: a <= b, "time")


# ---------------------------------------------------------------------------
# Presheaves and natural transformations


def _stage_sorted(xs):
    return tuple(sorted(xs, key=lambda x: (str(x), repr(x))))


@dataclass(frozen=True)
class FinPresheaf:
    """Stage sets indexed by poset elements, with restriction maps for every
    strictly comparable pair (identities are implicit)."""

    base: FinPoset
    stages: dict
    res: dict

    def stage(self, e) -> tuple:
        return self.stages.get(e, ())

    def restrict(self, x, frm, to):
        if frm == to:
            return x
        return self.res[(to, frm)][x]

    def support(self) -> tuple:
        return tuple(e for e in self.base.elements if self.stages[e])

    def total_elements(self) -> int:
        return sum(len(s) for s in self.stages.values())


def make_presheaf(base: FinPoset, stage_of, restrict_to) -> FinPresheaf:
    """Materialize a presheaf from a stage function and a restriction rule
    ``restrict_to(x, frm, to)`` for strictly comparable pairs."""
    stages = {e: _stage_sorted(stage_of(e)) for e in base.elements}
    res = {}
    for hi in base.elements:
        for lo in base.strictly_below(hi):
            table = {}
            lo_stage = set(stages[lo])
            for x in stages[hi]:
                y = restrict_to(x, hi, lo)
                if y not in lo_stage:
                    raise PreconditionError(
                        f"restriction of {x} from {hi} to {lo} leaves its stage"
                    )
                table[x] = y
            res[(lo, hi)] = table
    return FinPresheaf(base, stages, res)


def empty_presheaf(base: FinPoset) -> FinPresheaf:
    return FinPresheaf(base, {}, {})


@dataclass(frozen=True)
class PresheafReport:
    ok: bool
    violations: tuple


def validate(F: FinPresheaf) -> PresheafReport:
    """Check the identity and composition laws at every comparable triple."""
    bad = []
    base = F.base
    for hi in base.elements:
        for lo in base.strictly_below(hi):
            table = F.res.get((lo, hi))
            if table is None:
                if F.stage(hi):
                    bad.append(("missing-restriction", lo, hi))
                continue
            if set(table) != set(F.stages[hi]):
                bad.append(("domain", lo, hi))
            for x, y in table.items():
                if y not in set(F.stages[lo]):
                    bad.append(("codomain", lo, hi, x))
    for top in base.elements:
        for mid in base.strictly_below(top):
            for low in base.strictly_below(mid):
                for x in F.stages[top]:
                    direct = F.restrict(x, top, low)
                    via = F.restrict(F.restrict(x, top, mid), mid, low)
                    if direct != via:
                        bad.append(("composition", low, mid, top, x))
    return PresheafReport(not bad, tuple(bad))


@dataclass(frozen=True)
class NatTrans:
    source: FinPresheaf
    target: FinPresheaf
    comp: dict

    def at(self, e, x):
        return self.comp[e][x]


def nat_trans(source: FinPresheaf, target: FinPresheaf, component) -> NatTrans:
    comp = {
        e: {x: component(e, x) for x in source.stage(e)}
        for e in source.base.elements
        if source.stage(e)
    }
    return NatTrans(source, target, comp)


def naturality_violations(nt: NatTrans) -> list:
    bad = []
    base = nt.source.base
    for e, table in nt.comp.items():
        tgt_stage = set(nt.target.stage(e))
        for x, y in table.items():
            if y not in tgt_stage:
                bad.append(("codomain", e, x))
    for hi, table in nt.comp.items():
        if not table:
            continue
        for lo in base.strictly_below(hi):
            for x in table:
                left = nt.at(lo, nt.source.restrict(x, hi, lo))
                right = nt.target.restrict(table[x], hi, lo)
                if left != right:
                    bad.append(("naturality", lo, hi, x))
    return bad


def is_mono(g: NatTrans) -> bool:
    """Stage-wise injectivity."""
    for e, table in g.comp.items():
        if len(set(table.values())) != len(table):
            return False
    return True


def identity_trans(F: FinPresheaf) -> NatTrans:
    return nat_trans(F, F, lambda e, x: x)


def compose_trans(outer: NatTrans, inner: NatTrans) -> NatTrans:
    if outer.source is not inner.target and outer.source != inner.target:
        raise PreconditionError("composition mismatch")
    return nat_trans(inner.source, outer.target, lambda e, x: outer.at(e, inner.at(e, x)))


def sub_presheaf(F: FinPresheaf, generators) -> FinPresheaf:
    """Down-closure of the given (element, value) generators inside F."""
    stages = {}
    for (e, x) in generators:
        for lo in F.base.down(e):
            stages.setdefault(lo, set()).add(F.restrict(x, e, lo))
    res = {}
    for hi in stages:
        for lo in F.base.strictly_below(hi):
            if lo in stages:
                res[(lo, hi)] = {x: F.restrict(x, hi, lo) for x in stages[hi]}
    return FinPresheaf(F.base, {e: _stage_sorted(s) for e, s in stages.items()}, res)


def inclusion(sub: FinPresheaf, sup: FinPresheaf) -> NatTrans:
    return nat_trans(sub, sup, lambda e, x: x)


# ---------------------------------------------------------------------------
# Squares and the diagonal-filler search


@dataclass(frozen=True)
class MonoSquare:
    """A commuting square over f: the mono g: P -> Q, with m: P -> F and
    n: Q -> G satisfying f.m = n.g."""

    g: NatTrans
    m: NatTrans
    n: NatTrans
    f: NatTrans
    family: str = "adhoc"
    about: tuple = ()

    def describe(self) -> str:
        extra = f" [{', '.join(str(a) for a in self.about)}]" if self.about else ""
        return f"{self.family} square{extra}"


def _check_square(square: MonoSquare):
    g, m, n, f = square.g, square.m, square.n, square.f
    if g.source is not m.source and g.source != m.source:
        raise PreconditionError("square legs disagree on P")
    if g.target is not n.source and g.target != n.source:
        raise PreconditionError("square legs disagree on Q")
    if not is_mono(g):
        raise PreconditionError("g is not a mono")
    for e in g.source.base.elements:
        for p in g.source.stage(e):
            if f.at(e, m.at(e, p)) != n.at(e, g.at(e, p)):
                raise PreconditionError(f"square does not commute at {e}")


def find_filler(square: MonoSquare, _fiber_cache: dict = None):
    """Search for k: Q -> F with k.g = m and f.k = n.

    The search is exhaustive backtracking over stage functions, constrained by
    naturality and the two triangle identities, visiting stages and elements in
    a fixed deterministic order; it returns the first filler found or None.
    """
    _check_square(square)
    g, m, n, f = square.g, square.m, square.n, square.f
    Q, F = g.target, f.source
    base = Q.base

    forced = {}
    for e in base.elements:
        if not g.source.stage(e):
            continue
        table = {}
        for p in g.source.stage(e):
            table[g.at(e, p)] = m.at(e, p)
        forced[e] = table

    fibers = _fiber_cache if _fiber_cache is not None else {}

    def fiber_at(e):
        fib = fibers.get(e)
        if fib is None:
            fib = {}
            for v in F.stage(e):
                fib.setdefault(f.at(e, v), []).append(v)
            fibers[e] = fib
        return fib

    slots = [
        (e, q)
        for e in sorted(base.elements, key=element_key)
        for q in Q.stage(e)
    ]
    assign = {}

    def candidates(e, q):
        if e in forced and q in forced[e]:
            opts = [forced[e][q]]
        else:
            opts = fiber_at(e).get(n.at(e, q), [])
        out = []
        for v in opts:
            ok = True
            for lo in base.strictly_below(e):
                if assign[(lo, Q.restrict(q, e, lo))] != F.restrict(v, e, lo):
                    ok = False
                    break
            if ok:
                out.append(v)
        return out

    def search(i):
        if i == len(slots):
            return True
        e, q = slots[i]
        for v in candidates(e, q):
            assign[(e, q)] = v
            if search(i + 1):
                return True
            del assign[(e, q)]
        return False

    if not search(0):
        return None
    comp = {
        e: {q: assign[(e, q)] for q in Q.stage(e)}
        for e in base.elements
        if Q.stage(e)
    }
    k = NatTrans(Q, F, comp)
    if naturality_violations(k):
        raise InternalCheckError("filler search produced a non-natural map")
    for e in base.elements:
        for p in g.source.stage(e):
            if k.at(e, g.at(e, p)) != m.at(e, p):
                raise InternalCheckError("filler breaks the lower triangle")
        for q in Q.stage(e):
            if f.at(e, k.at(e, q)) != n.at(e, q):
                raise InternalCheckError("filler breaks the upper triangle")
    return k


def enumerate_mono_squares(f: NatTrans, stage_bound: int = 2, support_bound: int = 6):
    """A deterministic stream of commuting mono squares over f.

    Three families are always produced, independent of the bounds, because
    they decide the reflection content of the checker cheaply:

    * ``fiber``: Q is the history chain of a single target element, P empty --
      a filler is a coherent preimage, so these test stage surjectivity;
    * ``extension``: additionally P is the history chain of a source element
      matching a proper restriction of the target element -- a filler extends
      the matched part (when the top stage is a limit point this is the
      prefix-chain square of an infinite run, tagged ``chain-limit``);
    * ``pair``: Q is generated by two incomparable target elements, P empty --
      a filler jointly lifts both consistently.  Only this family is subject
      to the stage/support bounds.

    Extension squares whose shortest conceivable filler already overflows the
    base's word-length budget are dropped: they are unfillable for every map
    (the anchor's trace plus the missing visible letters exceeds the
    truncation), so a failure there would reflect the depth, not f.
    """
    if stage_bound < 1:
        raise PreconditionError("stage bound must be >= 1")
    if support_bound < 1:
        raise PreconditionError("support bound must be >= 1")
    F, G = f.source, f.target
    base = G.base
    P0 = empty_presheaf(base)
    word_budget = max(
        (len(e) for e in base.elements if isinstance(e, Word)), default=0
    )

    def beyond_budget(e, e2, x):
        if not (isinstance(e, Word) and isinstance(e2, Word)):
            return False
        trace = getattr(x, "trace", None)
        if trace is None:
            return False
        return len(trace) + (len(e) - len(e2)) > word_budget

    def empty_to(Q):
        return NatTrans(P0, Q, {})

    gens = [
        (e, w)
        for e in sorted(base.elements, key=element_key)
        for w in G.stage(e)
    ]

    for (e, w) in gens:
        Q = sub_presheaf(G, [(e, w)])
        nQ = inclusion(Q, G)
        yield MonoSquare(
            g=empty_to(Q), m=empty_to(F), n=nQ, f=f,
            family="fiber", about=(e, w),
        )
        limit_top = isinstance(e, LassoTrace)
        below = sorted(base.strictly_below(e), key=element_key)
        max_below = below[-1] if below else None
        for e2 in below:
            w2 = G.restrict(w, e, e2)
            for x in F.stage(e2):
                if f.at(e2, x) != w2 or beyond_budget(e, e2, x):
                    continue
                P = sub_presheaf(F, [(e2, x)])
                mP = inclusion(P, F)
                gP = nat_trans(P, Q, lambda lo, p, _e2=e2, _x=x, _e=e, _w=w:
                               G.restrict(w, _e, lo))
                family = "chain-limit" if (limit_top and e2 == max_below) else "extension"
                yield MonoSquare(g=gP, m=mP, n=nQ, f=f, family=family, about=(e, w, e2, x))

    for i, (e1, w1) in enumerate(gens):
        hist1 = set(base.down(e1))
        for (e2, w2) in gens[i + 1:]:
            if base.comparable(e1, e2):
                continue
            support = hist1 | set(base.down(e2))
            if len(support) > support_bound:
                continue
            stage_sizes_ok = True
            for s in support:
                vals = set()
                if base.leq(s, e1):
                    vals.add(G.restrict(w1, e1, s))
                if base.leq(s, e2):
                    vals.add(G.restrict(w2, e2, s))
                if len(vals) > stage_bound:
                    stage_sizes_ok = False
                    break
            if not stage_sizes_ok:
                continue
            Q = sub_presheaf(G, [(e1, w1), (e2, w2)])
            yield MonoSquare(
                g=empty_to(Q), m=empty_to(F), n=inclusion(Q, G), f=f,
                family="pair", about=(e1, w1, e2, w2),
            )


def is_bisim_map_bounded(f: NatTrans, stage_bound: int = 2, support_bound: int = 6):
    """Run the filler search over the enumerated square stream.

    A ``False`` verdict is definitive for the truncated semantics: the witness
    square has no filler at this depth.  A ``True`` verdict certifies only the
    enumerated squares within the bounds.  For presheaves whose stage elements
    carry silent padding (branching semantics), a refusal near the depth
    boundary can reflect an exhausted padding budget rather than a genuine
    reflection failure, so exact verdicts come from the concrete
    characterizations.  Returns (verdict, witness square or None).
    """
    fiber_cache = {}
    for square in enumerate_mono_squares(f, stage_bound, support_bound):
        if find_filler(square, _fiber_cache=fiber_cache) is None:
            return False, square
    return True, None


# ---------------------------------------------------------------------------
# Filtered colimits and the left Kan extension


@dataclass(frozen=True)
class ColimitClass:
    members: frozenset
    rep: tuple


def _component_meets_exist(base: FinPoset, comp) -> bool:
    """Cheap sufficient condition: a least element plus chain-shaped down-sets
    make every common-lower-bound set a nonempty finite chain."""
    if not any(all(base.leq(e, x) for x in comp) for e in comp):
        return False
    for e in comp:
        below = [x for x in comp if base.leq(x, e)]
        if any(
            not base.comparable(a, b)
            for i, a in enumerate(below)
            for b in below[i + 1:]
        ):
            return False
    return True


def _components(poset: FinPoset, subset):
    subset = list(subset)
    seen = set()
    comps = []
    for e in subset:
        if e in seen:
            continue
        comp = {e}
        stack = [e]
        while stack:
            u = stack.pop()
            for v in subset:
                if v not in comp and poset.comparable(u, v):
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        comps.append(sorted(comp, key=element_key))
    return comps


def filtered_colimit(F: FinPresheaf) -> tuple:
    """Quotient the disjoint union of the stages by identifying elements that
    agree after restriction below both indices.

    The index poset (F's base) must be meet-closed within each connected
    component; the canonical representative of a class is its restriction to
    the minimal index occurring in the class.
    """
    base = F.base
    for comp in _components(base, base.elements):
        if _component_meets_exist(base, comp):
            continue
        for i, a in enumerate(comp):
            for b in comp[i + 1:]:
                if base.meet(a, b) is None:
                    raise PreconditionError(
                        f"index not meet-closed: {a} and {b} have no meet"
                    )

    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    nodes = [(e, x) for e in base.elements for x in F.stage(e)]
    for node in nodes:
        parent[node] = node
    for hi in base.elements:
        for lo in base.strictly_below(hi):
            for x in F.stage(hi):
                union((hi, x), (lo, F.restrict(x, hi, lo)))

    groups = {}
    for node in nodes:
        groups.setdefault(find(node), []).append(node)

    classes = []
    for members in groups.values():
        minimal = [
            (e, x) for (e, x) in members
            if not any(base.leq(e2, e) and e2 != e for (e2, _) in members)
        ]
        if len({e for (e, _) in minimal}) != 1:
            raise PreconditionError("class has no unique minimal index")
        classes.append(ColimitClass(frozenset(members), minimal[0]))
    classes.sort(key=lambda c: (element_key(c.rep[0]), str(c.rep[1])))
    return tuple(classes)


@dataclass(frozen=True)
class MonotoneMap:
    source: FinPoset
    target: FinPoset
    mapping: dict

    def __post_init__(self):
        for a in self.source.elements:
            if self.mapping[a] not in set(self.target.elements):
                raise PreconditionError("map leaves the target poset")
        for (a, b) in self.source.relation:
            if not self.target.leq(self.mapping[a], self.mapping[b]):
                raise PreconditionError(f"map not order-preserving at ({a}, {b})")

    def __call__(self, e):
        return self.mapping[e]


def hiding_map(source: FinPoset, target: FinPoset) -> MonotoneMap:
    """The monotone map that deletes silent letters (and collapses stretch
    points onto the stretchable observation, when present)."""
    barred = any(e is TAU_BAR for e in target.elements)
    mapping = {e: hide(e, barred=barred) for e in source.elements}
    return MonotoneMap(source, target, mapping)


def identity_map(poset: FinPoset) -> MonotoneMap:
    return MonotoneMap(poset, poset, {e: e for e in poset.elements})


def restrict_presheaf(F: FinPresheaf, elems) -> FinPresheaf:
    """The restriction of a presheaf to a subset of its base (the induced
    sub-poset keeps the original order)."""
    sub = poset_from_leq(elems, F.base.leq, F.base.dialect)
    stages = {e: F.stages[e] for e in sub.elements}
    res = {}
    for hi in sub.elements:
        for lo in sub.strictly_below(hi):
            res[(lo, hi)] = dict(F.res[(lo, hi)])
    return FinPresheaf(sub, stages, res)


def _check_hiding_shape(h: MonotoneMap):
    if h.source == h.target and all(h.mapping[e] == e for e in h.source.elements):
        return
    for e in h.source.elements:
        if isinstance(e, Word):
            expected = e.visible()
        elif isinstance(e, StretchPoint):
            expected = TAU_BAR
        else:
            raise UnsupportedError(f"unsupported source element {e!r}")
        if h.mapping[e] != expected:
            raise UnsupportedError("only truncations of hiding maps are supported")


def left_kan(h: MonotoneMap, F: FinPresheaf) -> FinPresheaf:
    """The left Kan extension of F along a hiding-map truncation.

    The stage at a target element is the colimit over everything whose image
    lies above it, computed component-wise (one component per minimal source
    element) through ``filtered_colimit``; elements are (root, value) pairs
    where the root is the component's minimal index and the value the class
    representative there.  The action restricts the representative to the
    unique minimal prefix with the requested image.
    """
    _check_hiding_shape(h)
    if F.base != h.source:
        raise PreconditionError("presheaf base and map source disagree")
    target = h.target

    stage_classes = {}
    for rho in target.elements:
        index = [s for s in h.source.elements if target.leq(rho, h(s))]
        elems = []
        for comp in _components(h.source, index):
            roots = [e for e in comp if not any(h.source.leq(e2, e) and e2 != e for e2 in comp)]
            if len(roots) != 1:
                raise UnsupportedError(f"index component at {rho} has no unique root")
            for cls in filtered_colimit(restrict_presheaf(F, comp)):
                elems.append(cls.rep)
        stage_classes[rho] = _stage_sorted(elems)

    def minimal_prefix(root, rho2):
        cands = [s for s in h.source.down(root) if h(s) == rho2]
        if not cands:
            raise PreconditionError(f"no prefix of {root} hides to {rho2}")
        best = cands[0]
        for s in cands[1:]:
            if h.source.leq(s, best):
                best = s
        return best

    def act(pair, frm, to):
        root, value = pair
        s2 = minimal_prefix(root, to)
        return (s2, F.restrict(value, root, s2))

    return make_presheaf(target, lambda e: stage_classes[e], act)


# ---------------------------------------------------------------------------
# Category of elements


@dataclass(frozen=True)
class ElementsPosetResult:
    raw: FinPoset
    simplified: FinPoset
    simplify: dict


def elements_poset(F: FinPresheaf) -> ElementsPosetResult:
    """The poset of (stage index, element) pairs of a presheaf over a time
    poset, together with the canonical simplification that drops the index
    wherever the element alone already determines it."""
    if not all(isinstance(e, int) for e in F.base.elements):
        raise PreconditionError("category of elements is built over a time poset")
    objs = [(e, x) for e in F.base.elements for x in F.stage(e)]

    def leq(a, b):
        (ea, xa), (eb, xb) = a, b
        return F.base.leq(ea, eb) and F.restrict(xb, eb, ea) == xa

    raw = poset_from_leq_generic(objs, leq, "elements")

    occurrences = {}
    for (e, x) in objs:
        occurrences.setdefault(x, set()).add(e)
    simplify = {}
    for (e, x) in objs:
        if len(occurrences[x]) == 1:
            simplify[(e, x)] = x
        elif x is TAU_BAR:
            simplify[(e, x)] = StretchPoint(e)
        else:
            simplify[(e, x)] = (e, x)
    simple_elems = list(simplify.values())
    if len(set(simple_elems)) != len(simple_elems):
        raise PreconditionError("simplification collapsed distinct objects")
    inverse = {v: k for k, v in simplify.items()}
    simplified = poset_from_leq_generic(
        simple_elems, lambda a, b: leq(inverse[a], inverse[b]), "elements-simplified"
    )
    return ElementsPosetResult(raw, simplified, simplify)


def poset_from_leq_generic(elements, leq, dialect="") -> FinPoset:
    """Like poset_from_leq but for element types outside the sort-key family
    (pairs from the category of elements); ordering falls back to repr."""

    def key(e):
        try:
            return (0,) + element_key(e)
        except PreconditionError:
            return (1, str(e), repr(e))

    elements = tuple(sorted(elements, key=key))
    rel = frozenset((a, b) for a in elements for b in elements if leq(a, b))
    return FinPoset(elements, rel, dialect)


def order_isomorphic(P: FinPoset, Q: FinPoset, mapping=None) -> bool:
    """Check order-isomorphism; with ``mapping`` verify that specific bijection,
    otherwise try the canonical sort-order pairing."""
    if len(P.elements) != len(Q.elements):
        return False
    if mapping is None:
        mapping = dict(zip(P.elements, Q.elements))
    fwd = mapping
    if len(set(fwd.values())) != len(fwd):
        return False
    return all(
        P.leq(a, b) == Q.leq(fwd[a], fwd[b])
        for a in P.elements
        for b in P.elements
    )


# ---------------------------------------------------------------------------
# Observation presheaves over the time poset


def word_length_presheaf(labels, depth: int) -> FinPresheaf:
    """Stage n holds the words of length exactly n; the action truncates."""
    labels = tuple(labels)
    by_len = {0: [EPSILON]}
    for n in range(1, depth + 1):
        by_len[n] = [w.append(l) for w in by_len[n - 1] for l in labels]
    return make_presheaf(
        time_poset(depth),
        lambda n: by_len[n],
        lambda w, frm, to: w.prefix(to),
    )


def stretch_word_presheaf(labels, depth: int) -> FinPresheaf:
    """As word_length_presheaf, plus the stretchable observation at every
    positive tick; it truncates to the empty word at tick zero and stays put
    otherwise."""
    labels = tuple(labels)
    by_len = {0: [EPSILON]}
    for n in range(1, depth + 1):
        by_len[n] = [w.append(l) for w in by_len[n - 1] for l in labels]

    def stage(n):
        return by_len[n] + ([TAU_BAR] if n > 0 else [])

    def act(x, frm, to):
        if x is TAU_BAR:
            return EPSILON if to == 0 else TAU_BAR
        return x.prefix(to)

    return make_presheaf(time_poset(depth), stage, act)


# ---------------------------------------------------------------------------
# Debug dump


def dump_presheaf(F: FinPresheaf) -> str:
    """Stable textual dump: one line per stage, one per restriction entry."""
    lines = []
    elems = sorted(F.base.elements, key=element_key)
    for e in elems:
        inner = ", ".join(str(x) for x in F.stage(e))
        lines.append(f"stage {e}: {{{inner}}}")
    for hi in elems:
        for lo in sorted(F.base.strictly_below(hi), key=element_key):
            for x in F.stage(hi):
                lines.append(f"res {hi} -> {lo}: {x} |-> {F.restrict(x, hi, lo)}")
    return "\n".join(lines) + "\n"
