"""Equivalence checkers, quotient constructions, and independent oracles.

Every check returns a ``Verdict``; a failed verdict carries a witness that can
be re-evaluated against the violated condition.  Fairness-sensitive conditions
over infinite runs are decided exactly for Streett and positional fairness by
end-component analysis on a product graph, and by bounded lasso enumeration
otherwise (such verdicts carry their bounds).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import PreconditionError, UnsupportedError
from .lts import (
    Execution,
    FairLts,
    Lasso,
    Lts,
    StreettSpec,
    AlwaysAfterSpec,
    adjacency,
    enumerate_graph_lassos,
    eps_closure,
    fair_lassos,
    is_simulation,
    transition_str,
)
from .presheaf import is_bisim_map_bounded
from .semantics import (
    branching_sem_map,
    branching_simulation_violation,
    fair_sem_map,
    fair_simulation_violation,
    strong_sem_map,
)
from .words import TAU, Word, label_key

# ---------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class Verdict:
    """Outcome of a check; a witness is present exactly when it fails."""

    check: str
    holds: bool
    witness: object = None
    certified_bounds: dict = None
    notes: tuple = ()

    def __post_init__(self):
        if self.holds and self.witness is not None:
            raise PreconditionError("a holding verdict carries no witness")

    def to_record(self) -> dict:
        return {
            "check": self.check,
            "holds": self.holds,
            "witness": None if self.witness is None else format_witness(self.witness),
            "certified_bounds": self.certified_bounds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def format_witness(w) -> str:
    if isinstance(w, tuple):
        if len(w) == 3 and isinstance(w[0], str) and isinstance(w[2], str) and not isinstance(w[1], tuple):
            return transition_str(*w)
        if len(w) == 2 and isinstance(w[0], str):
            return f"{w[0]}: {format_witness(w[1])}"
        return "; ".join(format_witness(part) for part in w)
    return str(w)


# ---------------------------------------------------------------------------
# Relations on states


@dataclass(frozen=True)
class PartitionRelation:
    """A binary relation over a fixed state universe; its kind (raw, symmetric
    or equivalence) is computed, never assumed."""

    universe: tuple
    pairs: frozenset

    def __post_init__(self):
        known = set(self.universe)
        for (a, b) in self.pairs:
            if a not in known or b not in known:
                raise PreconditionError(f"relation mentions unknown state in {(a, b)}")

    @property
    def kind(self) -> str:
        sym = all((b, a) in self.pairs for (a, b) in self.pairs)
        if not sym:
            return "raw"
        refl = all((s, s) in self.pairs for s in self.universe)
        trans = all(
            (a, d) in self.pairs
            for (a, b) in self.pairs
            for (c, d) in self.pairs
            if b == c
        )
        return "equivalence" if (refl and trans) else "symmetric"

    def contains(self, a, b) -> bool:
        return (a, b) in self.pairs

    def symmetric_closure(self) -> "PartitionRelation":
        return PartitionRelation(
            self.universe, self.pairs | {(b, a) for (a, b) in self.pairs}
        )

    def reflexive_closure(self) -> "PartitionRelation":
        return PartitionRelation(
            self.universe, self.pairs | {(s, s) for s in self.universe}
        )

    def equivalence_closure(self) -> "PartitionRelation":
        pairs = set(self.pairs) | {(b, a) for (a, b) in self.pairs}
        pairs |= {(s, s) for s in self.universe}
        changed = True
        while changed:
            changed = False
            for (a, b) in list(pairs):
                for (c, d) in list(pairs):
                    if b == c and (a, d) not in pairs:
                        pairs.add((a, d))
                        changed = True
        return PartitionRelation(self.universe, frozenset(pairs))

    def after(self, other: "PartitionRelation") -> "PartitionRelation":
        """Relational composition self . other (other applies first)."""
        if self.universe != other.universe:
            raise PreconditionError("composition over different universes")
        pairs = {
            (a, c)
            for (a, b) in other.pairs
            for (b2, c) in self.pairs
            if b == b2
        }
        return PartitionRelation(self.universe, frozenset(pairs))

    def blocks(self) -> tuple:
        if self.kind != "equivalence":
            raise PreconditionError("blocks exist only for equivalences")
        out = []
        seen = set()
        for s in self.universe:
            if s in seen:
                continue
            block = frozenset(t for t in self.universe if (s, t) in self.pairs)
            seen |= block
            out.append(block)
        return tuple(sorted(out, key=lambda b: sorted(b)))

    @staticmethod
    def kernel_of(f: dict, universe) -> "PartitionRelation":
        pairs = frozenset(
            (a, b) for a in universe for b in universe if f[a] == f[b]
        )
        return PartitionRelation(tuple(universe), pairs)

    @staticmethod
    def identity(universe) -> "PartitionRelation":
        return PartitionRelation(tuple(universe), frozenset((s, s) for s in universe))


# ---------------------------------------------------------------------------
# Graph machinery for exact fairness analysis


@dataclass(frozen=True)
class NodeStreett:
    pairs: tuple


@dataclass(frozen=True)
class NodeAlwaysAfter:
    offset: int
    allowed: frozenset
    gate: tuple


def _lift_fairness(spec, nodes, proj):
    """Reinterpret a state-level fairness condition over graph nodes via a
    projection; None when the kind is not supported exactly."""
    if isinstance(spec, StreettSpec):
        return NodeStreett(tuple(
            (
                frozenset(n for n in nodes if proj(n) in L),
                frozenset(n for n in nodes if proj(n) in U),
            )
            for (L, U) in spec.pairs
        ))
    if isinstance(spec, AlwaysAfterSpec):
        return NodeAlwaysAfter(
            spec.offset,
            frozenset(n for n in nodes if proj(n) in spec.allowed),
            tuple(spec.gate),
        )
    return None


def _aa_init(spec: NodeAlwaysAfter, node):
    bad = spec.offset == 0 and node not in spec.allowed
    if max(len(spec.gate), spec.offset) == 0:
        return "fail" if bad else "live"
    return ("pre", 0, bad)


def _aa_step(spec: NodeAlwaysAfter, state, label, node):
    if state in ("ok", "fail"):
        return state
    if state == "live":
        return "live" if node in spec.allowed else "fail"
    _, i, bad = state
    if i < len(spec.gate) and label != spec.gate[i]:
        return "ok"
    pos = i + 1
    bad = bad or (pos >= spec.offset and node not in spec.allowed)
    if pos >= max(len(spec.gate), spec.offset):
        return "fail" if bad else "live"
    return ("pre", pos, bad)


def _node_key(n):
    return (str(n), repr(n))


def _sccs(nodes, adj):
    """Strongly connected components of the induced subgraph, Kosaraju-style,
    in deterministic order."""
    nodes = sorted(set(nodes), key=_node_key)
    inside = set(nodes)
    order = []
    seen = set()
    for root in nodes:
        if root in seen:
            continue
        stack = [(root, iter([v for (_, v) in adj.get(root, ()) if v in inside]))]
        seen.add(root)
        while stack:
            u, it = stack[-1]
            advanced = False
            for v in it:
                if v not in seen:
                    seen.add(v)
                    stack.append((v, iter([w for (_, w) in adj.get(v, ()) if w in inside])))
                    advanced = True
                    break
            if not advanced:
                order.append(u)
                stack.pop()
    rev = {}
    for u in nodes:
        for (_, v) in adj.get(u, ()):
            if v in inside:
                rev.setdefault(v, []).append(u)
    comps = []
    assigned = set()
    for root in reversed(order):
        if root in assigned:
            continue
        comp = {root}
        stack = [root]
        assigned.add(root)
        while stack:
            u = stack.pop()
            for v in rev.get(u, ()):
                if v not in assigned:
                    assigned.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(frozenset(comp))
    return comps


def _nontrivial(comp, adj):
    if len(comp) > 1:
        return True
    (n,) = comp
    return any(v == n for (_, v) in adj.get(n, ()))


def _find_streett_ec(span, adj, pairs, want):
    """A nontrivial sub-component inside span satisfying every Streett pair
    and the extra predicate, or None."""
    for comp in _sccs(span, adj):
        if not _nontrivial(comp, adj):
            continue
        bad = [(L, U) for (L, U) in pairs if (comp & L) and not (comp & U)]
        if bad:
            removed = set()
            for (L, _) in bad:
                removed |= L
            found = _find_streett_ec(comp - removed, adj, pairs, want)
            if found is not None:
                return found
        elif want(comp):
            return comp
    return None


def _bfs_path(src, dst, adj, inside, require_step):
    """Shortest path src -> dst through ``inside`` as a list of (label, node);
    [] when src == dst and a step is not required."""
    if src == dst and not require_step:
        return []
    seen = {src}
    queue = [(src, [])]
    while queue:
        u, path = queue.pop(0)
        for (lab, v) in adj.get(u, ()):
            if v not in inside:
                continue
            npath = path + [(lab, v)]
            if v == dst:
                return npath
            if v not in seen:
                seen.add(v)
                queue.append((v, npath))
    return None


def _closed_walk(comp, adj):
    """A closed walk visiting every node of a nontrivial component."""
    order = sorted(comp, key=_node_key)
    start = order[0]
    walk = []
    cur = start
    for tgt in order[1:] + [start]:
        seg = _bfs_path(cur, tgt, adj, comp, require_step=False)
        walk.extend(seg)
        cur = tgt
    if not walk:
        walk = _bfs_path(start, start, adj, comp, require_step=True)
    return start, walk


def _reach_with_parents(inits, adj):
    parents = {}
    queue = list(inits)
    for n in inits:
        parents.setdefault(n, None)
    i = 0
    while i < len(queue):
        u = queue[i]
        i += 1
        for (lab, v) in adj.get(u, ()):
            if v not in parents:
                parents[v] = (u, lab)
                queue.append(v)
    return parents


def _stem_to(node, parents):
    labels = []
    nodes = [node]
    while parents[nodes[0]] is not None:
        prev, lab = parents[nodes[0]]
        labels.insert(0, lab)
        nodes.insert(0, prev)
    return nodes, labels


@dataclass(frozen=True)
class GraphLasso:
    """A lasso inside an analysis graph (stem node list, stem labels, cycle)."""

    stem_nodes: tuple
    stem_labels: tuple
    cycle: tuple

    def project(self, proj) -> Lasso:
        stem = Execution(
            Word(tuple(self.stem_labels)),
            tuple(proj(n) for n in self.stem_nodes),
        )
        return Lasso(stem, tuple((lab, proj(n)) for (lab, n) in self.cycle)).canonical()


def _product_with_automata(nodes, adj, fair_a, unfair_b):
    a_aa = isinstance(fair_a, NodeAlwaysAfter)
    b_aa = isinstance(unfair_b, NodeAlwaysAfter)

    def init(v):
        sa = _aa_init(fair_a, v) if a_aa else None
        sb = _aa_init(unfair_b, v) if b_aa else None
        return (v, sa, sb)

    inits = []
    for v in sorted(nodes, key=_node_key):
        st = init(v)
        if st[1] != "fail":
            inits.append(st)
    prod_adj = {}
    parents = {}
    queue = list(inits)
    for st in inits:
        parents.setdefault(st, None)
    i = 0
    while i < len(queue):
        u = queue[i]
        i += 1
        v, sa, sb = u
        steps = []
        for (lab, v2) in adj.get(v, ()):
            sa2 = _aa_step(fair_a, sa, lab, v2) if a_aa else None
            if sa2 == "fail":
                continue
            sb2 = _aa_step(unfair_b, sb, lab, v2) if b_aa else None
            nxt = (v2, sa2, sb2)
            steps.append((lab, nxt))
            if nxt not in parents:
                parents[nxt] = (u, lab)
                queue.append(nxt)
        prod_adj[u] = tuple(steps)
    return inits, prod_adj, parents


def _lift_pairs_to_product(pairs, prod_nodes):
    return tuple(
        (
            frozenset(p for p in prod_nodes if p[0] in L),
            frozenset(p for p in prod_nodes if p[0] in U),
        )
        for (L, U) in pairs
    )


def exists_violating_run(nodes, adj, fair_a, unfair_b):
    """A lasso witnessing an infinite run that satisfies ``fair_a`` while
    violating ``unfair_b`` (both node-level conditions), or None.

    Exact for any mix of Streett and positional conditions: end-component
    analysis over the graph extended with the positional automata.
    """
    inits, prod_adj, parents = _product_with_automata(nodes, adj, fair_a, unfair_b)
    prod_nodes = list(parents)
    a_pairs = ()
    if isinstance(fair_a, NodeStreett):
        a_pairs = _lift_pairs_to_product(fair_a.pairs, prod_nodes)

    def witness(entry_comp):
        entry, walk = _closed_walk(entry_comp, prod_adj)
        stem_nodes, stem_labels = _stem_to(entry, parents)
        return GraphLasso(tuple(stem_nodes), tuple(stem_labels), tuple(walk)).project(
            lambda p: p[0]
        )

    if isinstance(unfair_b, NodeAlwaysAfter):
        targets = sorted((p for p in prod_nodes if p[2] == "fail"), key=_node_key)
        for t in targets:
            span = set()
            stack = [t]
            while stack:
                u = stack.pop()
                if u in span:
                    continue
                span.add(u)
                stack.extend(v for (_, v) in prod_adj.get(u, ()))
            comp = _find_streett_ec(span, prod_adj, a_pairs, lambda D: True)
            if comp is not None:
                entry, walk = _closed_walk(comp, prod_adj)
                seg = _bfs_path(t, entry, prod_adj, span, require_step=False)
                stem_nodes, stem_labels = _stem_to(t, parents)
                for (lab, n) in seg:
                    stem_nodes.append(n)
                    stem_labels.append(lab)
                return GraphLasso(
                    tuple(stem_nodes), tuple(stem_labels), tuple(walk)
                ).project(lambda p: p[0])
    else:
        for (L, U) in _lift_pairs_to_product(unfair_b.pairs, prod_nodes):
            span = set(prod_nodes) - U
            comp = _find_streett_ec(span, prod_adj, a_pairs, lambda D: bool(D & L))
            if comp is not None:
                return witness(comp)
    return None


def exists_fair_run(nodes, adj, spec, starts=None):
    """A lasso witnessing an infinite run satisfying the node-level condition,
    started from ``starts`` (default: anywhere), or None."""
    if starts is None:
        starts = list(nodes)
    if isinstance(spec, NodeAlwaysAfter):
        prod = {}
        inits = []
        for v in sorted(starts, key=_node_key):
            st = (v, _aa_init(spec, v))
            if st[1] != "fail":
                inits.append(st)
        parents = {}
        queue = list(inits)
        for st in inits:
            parents.setdefault(st, None)
        i = 0
        while i < len(queue):
            u = queue[i]
            i += 1
            v, sa = u
            steps = []
            for (lab, v2) in adj.get(v, ()):
                sa2 = _aa_step(spec, sa, lab, v2)
                if sa2 == "fail":
                    continue
                nxt = (v2, sa2)
                steps.append((lab, nxt))
                if nxt not in parents:
                    parents[nxt] = (u, lab)
                    queue.append(nxt)
            prod[u] = tuple(steps)
        comp = _find_streett_ec(list(parents), prod, (), lambda D: True)
        if comp is None:
            return None
        entry, walk = _closed_walk(comp, prod)
        stem_nodes, stem_labels = _stem_to(entry, parents)
        return GraphLasso(tuple(stem_nodes), tuple(stem_labels), tuple(walk)).project(
            lambda p: p[0]
        )
    parents = _reach_with_parents(sorted(starts, key=_node_key), adj)
    span = list(parents)
    pairs = spec.pairs if isinstance(spec, NodeStreett) else ()
    comp = _find_streett_ec(span, adj, pairs, lambda D: True)
    if comp is None:
        return None
    entry, walk = _closed_walk(comp, adj)
    stem_nodes, stem_labels = _stem_to(entry, parents)
    return GraphLasso(tuple(stem_nodes), tuple(stem_labels), tuple(walk)).project(
        lambda n: n
    )


# ---------------------------------------------------------------------------
# Image fairness (quotient systems)


def _lasso_position_graph(lasso: Lasso):
    """Unrolls a lasso into a finite position graph: stem positions followed
    by a cycle of positions; returns (nodes, adj, state_of, start)."""
    k = len(lasso.stem.trace)
    nodes = [("s", i) for i in range(k + 1)] + [("c", j) for j in range(len(lasso.cycle))]
    state_of = {("s", i): lasso.stem.states[i] for i in range(k + 1)}
    for j, (_, st) in enumerate(lasso.cycle):
        state_of[("c", j)] = st
    adj = {}
    for i in range(k):
        adj[("s", i)] = ((lasso.stem.trace[i], ("s", i + 1)),)
    adj[("s", k)] = ((lasso.cycle[0][0], ("c", 0)),)
    for j in range(len(lasso.cycle)):
        nxt = ("c", (j + 1) % len(lasso.cycle))
        lab = lasso.cycle[(j + 1) % len(lasso.cycle)][0]
        adj[("c", j)] = ((lab, nxt),)
    return nodes, adj, state_of, ("s", 0)


@dataclass(frozen=True)
class ImageFairness:
    """Fairness of a quotient system: a lasso is fair iff some fair run of the
    source maps pointwise onto its unrolling (decided exactly on the
    synchronized product)."""

    source: FairLts
    mapping_items: tuple

    kind = "image"

    @property
    def mapping(self) -> dict:
        return dict(self.mapping_items)

    def states_mentioned(self):
        return set()

    def is_fair(self, lasso: Lasso) -> bool:
        f = self.mapping
        pos_nodes, pos_adj, state_of, start = _lasso_position_graph(lasso)
        adjX = adjacency(self.source.lts)
        nodes = [
            (x, pos)
            for x in self.source.lts.states
            for pos in pos_nodes
            if f[x] == state_of[pos]
        ]
        node_set = set(nodes)
        adj = {}
        for (x, pos) in nodes:
            (lab, pos2) = pos_adj[pos][0]
            steps = tuple(
                (lab, (x2, pos2))
                for (l, x2) in adjX[x]
                if l == lab and (x2, pos2) in node_set
            )
            adj[(x, pos)] = steps
        starts = [(x, start) for x in self.source.lts.states if f[x] == state_of[start]]
        spec = _lift_fairness(self.source.fairness, nodes, lambda n: n[0])
        if spec is None:
            raise UnsupportedError("nested quotient fairness is not supported")
        return exists_fair_run(nodes, adj, spec, starts) is not None


# ---------------------------------------------------------------------------
# Strong checks


def check_strong_bisim_fn(f: dict, source: Lts, target: Lts) -> Verdict:
    """Surjectivity plus reflection of the target's transitions along f."""
    ok, witness = is_simulation(f, source, target)
    if not ok:
        raise PreconditionError(f"not a simulation: violates {transition_str(*witness)}")
    image = {f[s] for s in source.states}
    for y in target.states:
        if y not in image:
            return Verdict("strong-bisim-fn", False, ("not-surjective", y))
    w = _reflection_violation(f, source, target)
    if w is not None:
        return Verdict("strong-bisim-fn", False, ("no-reflection", w))
    return Verdict("strong-bisim-fn", True)


def _reflection_violation(f: dict, source: Lts, target: Lts):
    adjY = adjacency(target)
    adjX = adjacency(source)
    for x in source.states:
        for (a, y) in adjY[f[x]]:
            if not any(l == a and f[x2] == y for (l, x2) in adjX[x]):
                return (x, a, y)
    return None


# ---------------------------------------------------------------------------
# Fair checks


def check_fair_sim(f: dict, source: FairLts, target: FairLts,
                   stem_bound: int = 4, cycle_bound: int = 4) -> Verdict:
    """Transition preservation plus preservation of fair lassos in bounds."""
    violation = fair_simulation_violation(f, source, target, stem_bound, cycle_bound)
    bounds = {"stem_bound": stem_bound, "cycle_bound": cycle_bound}
    if violation is None:
        return Verdict("fair-sim", True, certified_bounds=bounds)
    return Verdict("fair-sim", False, violation)


def check_fair_reflection(f: dict, source: FairLts, target: FairLts,
                          mode: str = "exact_streett",
                          stem_bound: int = 4, cycle_bound: int = 4) -> Verdict:
    """No run of the source may have a fair image without being fair itself
    (limits of increasing execution chains, by Kleene equality: both sides
    undefined counts as satisfied)."""
    if fair_simulation_violation(f, source, target, stem_bound, cycle_bound) is not None:
        raise PreconditionError("reflection is only defined for fair simulations")
    notes = ()
    if mode == "exact_streett":
        nodes = list(source.lts.states)
        adj = adjacency(source.lts)
        fair_img = _lift_fairness(target.fairness, nodes, lambda x: f[x])
        unfair_src = _lift_fairness(source.fairness, nodes, lambda x: x)
        if fair_img is not None and unfair_src is not None:
            w = exists_violating_run(nodes, adj, fair_img, unfair_src)
            if w is None:
                return Verdict("fair-reflection", True)
            return Verdict(
                "fair-reflection", False,
                ("chain-with-fair-image-but-no-fair-limit", (w, w.map_states(f).canonical())),
            )
        notes = ("fairness kind unsupported in exact mode; falling back to bounded",)
        mode = "bounded"
    if mode != "bounded":
        raise PreconditionError(f"unknown mode {mode!r}")
    bounds = {"stem_bound": stem_bound, "cycle_bound": cycle_bound}
    for (lasso, fair) in sorted(fair_lassos(source, stem_bound, cycle_bound),
                                key=lambda lw: str(lw[0])):
        if fair:
            continue
        image = lasso.map_states(f).canonical()
        if target.fairness.is_fair(image):
            return Verdict(
                "fair-reflection", False,
                ("chain-with-fair-image-but-no-fair-limit", (lasso, image)),
                notes=notes,
            )
    return Verdict("fair-reflection", True, certified_bounds=bounds, notes=notes)


def check_fair_bisim_fn(f: dict, source: FairLts, target: FairLts,
                        mode: str = "exact_streett",
                        stem_bound: int = 4, cycle_bound: int = 4) -> Verdict:
    """Fair simulation + surjectivity + transition reflection + limit
    reflection, in that order."""
    violation = fair_simulation_violation(f, source, target, stem_bound, cycle_bound)
    if violation is not None:
        return Verdict("fair-bisim-fn", False, violation)
    image = {f[s] for s in source.lts.states}
    for y in target.lts.states:
        if y not in image:
            return Verdict("fair-bisim-fn", False, ("not-surjective", y))
    w = _reflection_violation(f, source.lts, target.lts)
    if w is not None:
        return Verdict("fair-bisim-fn", False, ("no-reflection", w))
    sub = check_fair_reflection(f, source, target, mode, stem_bound, cycle_bound)
    if not sub.holds:
        return Verdict("fair-bisim-fn", False, sub.witness, notes=sub.notes)
    return Verdict("fair-bisim-fn", True, certified_bounds=sub.certified_bounds,
                   notes=sub.notes)


def check_hildebrandt_open(f: dict, source: FairLts, target: FairLts,
                           stem_bound: int = 4, cycle_bound: int = 4) -> Verdict:
    """Transition reflection plus lifting of fair target runs anchored at an
    image state (finite runs exactly, infinite runs over lassos in bounds)."""
    if fair_simulation_violation(f, source, target, stem_bound, cycle_bound) is not None:
        raise PreconditionError("only fair simulations are checked for openness")
    w = _reflection_violation(f, source.lts, target.lts)
    if w is not None:
        return Verdict("hildebrandt-open", False, ("no-reflection", w))
    bounds = {"stem_bound": stem_bound, "cycle_bound": cycle_bound}
    fair_targets = sorted(
        (l for (l, ok) in fair_lassos(target, stem_bound, cycle_bound) if ok),
        key=str,
    )
    adjX = adjacency(source.lts)
    for x in source.lts.states:
        for q in fair_targets:
            if q.stem.start != f[x]:
                continue
            pos_nodes, pos_adj, state_of, start = _lasso_position_graph(q)
            nodes = [
                (z, pos)
                for z in source.lts.states
                for pos in pos_nodes
                if f[z] == state_of[pos]
            ]
            node_set = set(nodes)
            adj = {}
            for (z, pos) in nodes:
                (lab, pos2) = pos_adj[pos][0]
                adj[(z, pos)] = tuple(
                    (lab, (z2, pos2))
                    for (l, z2) in adjX[z]
                    if l == lab and (z2, pos2) in node_set
                )
            spec = _lift_fairness(source.fairness, nodes, lambda n: n[0])
            if spec is None:
                raise UnsupportedError("source fairness kind unsupported")
            if exists_fair_run(nodes, adj, spec, [(x, start)]) is None:
                return Verdict("hildebrandt-open", False, ("unliftable-fair-run", (x, q)))
    return Verdict("hildebrandt-open", True, certified_bounds=bounds)


def _relation_product(lts: Lts, pairs):
    adjX = adjacency(lts)
    nodes = sorted(pairs)
    pair_set = set(pairs)
    adj = {}
    for (x, y) in nodes:
        steps = []
        for (a, x2) in adjX[x]:
            for (b, y2) in adjX[y]:
                if a == b and (x2, y2) in pair_set:
                    steps.append((a, (x2, y2)))
        adj[(x, y)] = tuple(sorted(steps, key=lambda s: (label_key(s[0]), s[1])))
    return nodes, adj


def check_forall_fair_bisim(R: PartitionRelation, system: FairLts,
                            mode: str = "exact_streett",
                            stem_bound: int = 4, cycle_bound: int = 4,
                            require_equivalence: bool = True) -> Verdict:
    """The two transfer properties of a fairness-respecting equivalence.

    Condition (1): related states match transitions into related states.
    Condition (2): no pair of pointwise-related infinite runs where the left
    is fair and the right is not; decided on the synchronized product of
    related pairs (exactly for Streett/positional fairness, by bounded lasso
    pairs otherwise).  With ``require_equivalence=False`` only symmetry is
    demanded (nonstandard; for reproducing the closure discussion).
    """
    wanted = "equivalence" if require_equivalence else "symmetric"
    kind = R.kind
    if kind != wanted and not (wanted == "symmetric" and kind == "equivalence"):
        return Verdict("forall-fair-bisim", False, ("not-" + wanted, kind))
    adjX = adjacency(system.lts)
    for (x, y) in sorted(R.pairs):
        for (a, x2) in adjX[x]:
            if not any(b == a and R.contains(x2, y2) for (b, y2) in adjX[y]):
                return Verdict("forall-fair-bisim", False,
                               ("no-transfer", ((x, y), (x, a, x2))))
    nodes, adj = _relation_product(system.lts, R.pairs)
    notes = ()
    if mode == "exact_streett":
        fair_left = _lift_fairness(system.fairness, nodes, lambda n: n[0])
        unfair_right = _lift_fairness(system.fairness, nodes, lambda n: n[1])
        if fair_left is not None and unfair_right is not None:
            w = exists_violating_run(nodes, adj, fair_left, unfair_right)
            if w is None:
                return Verdict("forall-fair-bisim", True)
            left, right = _split_pair_lasso(w)
            return Verdict("forall-fair-bisim", False,
                           ("fairness-not-transferred", (left, right)))
        notes = ("fairness kind unsupported in exact mode; falling back to bounded",)
        mode = "bounded"
    if mode != "bounded":
        raise PreconditionError(f"unknown mode {mode!r}")
    bounds = {"stem_bound": stem_bound, "cycle_bound": cycle_bound}
    for lasso in enumerate_graph_lassos(nodes, adj, stem_bound, cycle_bound):
        left, right = _split_pair_lasso(lasso)
        if system.fairness.is_fair(left) and not system.fairness.is_fair(right):
            return Verdict("forall-fair-bisim", False,
                           ("fairness-not-transferred", (left, right)), notes=notes)
    return Verdict("forall-fair-bisim", True, certified_bounds=bounds, notes=notes)


def _split_pair_lasso(lasso: Lasso):
    left = lasso.map_states({p: p[0] for p in set(lasso.stem.states) | {s for (_, s) in lasso.cycle}})
    right = lasso.map_states({p: p[1] for p in set(lasso.stem.states) | {s for (_, s) in lasso.cycle}})
    return left.canonical(), right.canonical()


def forall_fair_quotient(R: PartitionRelation, system: FairLts,
                         mode: str = "exact_streett",
                         stem_bound: int = 4, cycle_bound: int = 4):
    """Quotient by a fairness-respecting equivalence: block transitions are
    induced, and a quotient lasso is fair iff some related source run maps
    onto it.  Returns (quotient system, quotient map)."""
    verdict = check_forall_fair_bisim(R, system, mode, stem_bound, cycle_bound)
    if not verdict.holds:
        raise PreconditionError(f"not a fairness-respecting equivalence: {verdict.witness}")
    blocks = R.blocks()
    name = {}
    for b in blocks:
        bname = "+".join(sorted(b))
        for s in b:
            name[s] = bname
    transitions = {
        (name[x], a, name[y]) for (x, a, y) in system.lts.transitions
    }
    quotient = Lts.make(
        tuple("+".join(sorted(b)) for b in blocks),
        system.lts.alphabet,
        transitions,
    )
    f = {s: name[s] for s in system.lts.states}
    fair = ImageFairness(system, tuple(sorted(f.items())))
    return FairLts(quotient, fair), f


# ---------------------------------------------------------------------------
# Branching checks


def check_branching_sim(f: dict, source: Lts, target: Lts) -> Verdict:
    violation = branching_simulation_violation(f, source, target)
    if violation is None:
        return Verdict("branching-sim", True)
    return Verdict("branching-sim", False, violation)


def check_branching_bisim_fn(f: dict, source: Lts, target: Lts) -> Verdict:
    """Branching simulation + surjectivity + weak reflection of target steps."""
    violation = branching_simulation_violation(f, source, target)
    if violation is not None:
        return Verdict("branching-bisim-fn", False, violation)
    image = {f[s] for s in source.states}
    for y in target.states:
        if y not in image:
            return Verdict("branching-bisim-fn", False, ("not-surjective", y))
    adjY = adjacency(target)
    adjX = adjacency(source)
    eps = eps_closure(source)
    for x in source.states:
        for (a, y) in adjY[f[x]]:
            found = any(
                f[x1] == f[x] and l == a and f[x2] == y
                for x1 in eps[x]
                for (l, x2) in adjX[x1]
            )
            if not found:
                return Verdict("branching-bisim-fn", False,
                               ("no-weak-reflection", (f[x], a, y)))
    return Verdict("branching-bisim-fn", True)


def _branching_transfer(x1, y1, pairs, adjX, eps):
    for (a, x2) in adjX[x1]:
        if a is TAU and (x2, y1) in pairs:
            continue
        ok = False
        for y in eps[y1]:
            if (x1, y) not in pairs:
                continue
            for (b, y2) in adjX[y]:
                if b == a and (x2, y2) in pairs:
                    ok = True
                    break
            if ok:
                break
        if not ok:
            return False
    return True


def branching_bisimilarity(lts: Lts) -> PartitionRelation:
    """Greatest fixpoint on the pair lattice: start from the universal
    relation and discard pairs whose transfer property fails, until stable."""
    adjX = adjacency(lts)
    eps = eps_closure(lts)
    pairs = {(x, y) for x in lts.states for y in lts.states}
    changed = True
    while changed:
        changed = False
        for (x, y) in sorted(pairs):
            if not (_branching_transfer(x, y, pairs, adjX, eps)
                    and _branching_transfer(y, x, pairs, adjX, eps)):
                pairs.discard((x, y))
                pairs.discard((y, x))
                changed = True
    return PartitionRelation(tuple(lts.states), frozenset(pairs))


def branching_quotient(lts: Lts):
    """Quotient by branching bisimilarity, dropping silent steps inside a
    block (they are stutter steps of the quotient map).  Returns (quotient,
    map); the map's kernel is the bisimilarity."""
    R = branching_bisimilarity(lts)
    blocks = R.blocks()
    name = {}
    for b in blocks:
        bname = "+".join(sorted(b))
        for s in b:
            name[s] = bname
    transitions = set()
    for (x, a, y) in lts.transitions:
        if a is TAU and name[x] == name[y]:
            continue
        transitions.add((name[x], a, name[y]))
    quotient = Lts.make(
        tuple("+".join(sorted(b)) for b in blocks),
        lts.alphabet,
        transitions,
    )
    return quotient, {s: name[s] for s in lts.states}


def extend_reduction(g: dict, source: Lts, mid: Lts):
    """Compose a reduction with the quotient map of its target, yielding a
    stuttering-respecting quotient map.  Returns (target system, composite)."""
    quotient, q = branching_quotient(mid)
    return quotient, {s: q[g[s]] for s in source.states}


# ---------------------------------------------------------------------------
# Abstract bisimulation-map check


@dataclass(frozen=True)
class BisimMapReport:
    """Both verdicts for one morphism: the square-filler check on the semantic
    presheaves, and the concrete characterization."""

    mode: str
    presheaf_verdict: Verdict
    concrete_verdict: Verdict

    @property
    def agreement(self) -> bool:
        return self.presheaf_verdict.holds == self.concrete_verdict.holds


def check_bisim_map(f: dict, source, target, mode: str,
                    depth: int = 4, stem_bound: int = 4, cycle_bound: int = 4,
                    stage_bound: int = 2, support_bound: int = 6) -> BisimMapReport:
    """Lift f to the mode's semantic presheaves, run the bounded square-filler
    check, and evaluate the concrete characterization alongside.

    A concrete refusal is always matched by a failing square within the depth.
    In the silent-step modes the converse is depth-sensitive: anchors carrying
    silent padding can exhaust the truncation and make the filler check refuse
    conservatively, which is why both verdicts are reported side by side."""
    bounds = {
        "depth": depth,
        "stage_bound": stage_bound,
        "support_bound": support_bound,
    }
    if mode == "strong":
        if not isinstance(source, Lts) or not isinstance(target, Lts):
            raise PreconditionError("strong mode takes plain systems")
        if source.has_tau or target.has_tau:
            raise PreconditionError("strong mode takes systems without silent steps")
        lifted = strong_sem_map(f, source, target, depth)
        concrete = check_strong_bisim_fn(f, source, target)
    elif mode == "fair":
        if not isinstance(source, FairLts) or not isinstance(target, FairLts):
            raise PreconditionError("fair mode takes fair systems")
        lifted = fair_sem_map(f, source, target, depth, stem_bound, cycle_bound)
        concrete = check_fair_bisim_fn(f, source, target,
                                       stem_bound=stem_bound, cycle_bound=cycle_bound)
        bounds.update({"stem_bound": stem_bound, "cycle_bound": cycle_bound})
    elif mode in ("branching", "branching_failed"):
        if isinstance(source, FairLts) or isinstance(target, FairLts):
            raise PreconditionError("branching modes take plain systems")
        lifted = branching_sem_map(f, source, target, depth,
                                   with_stretch=(mode == "branching"))
        concrete = check_branching_bisim_fn(f, source, target)
    else:
        raise PreconditionError(f"unknown mode {mode!r}")
    ok, square = is_bisim_map_bounded(lifted, stage_bound, support_bound)
    if ok:
        presheaf_verdict = Verdict(f"bisim-map-{mode}", True, certified_bounds=bounds)
    else:
        presheaf_verdict = Verdict(f"bisim-map-{mode}", False, square)
    return BisimMapReport(mode, presheaf_verdict, concrete)


# ---------------------------------------------------------------------------
# Brute-force oracle


def _strong_obligation_options(x, y, move, adjX):
    (a, x2) = move
    return [
        frozenset({(x2, y2), (y2, x2)})
        for (b, y2) in adjX[y]
        if b == a
    ]


def _branching_obligation_options(x, y, move, adjX, eps):
    (a, x2) = move
    options = []
    if a is TAU:
        options.append(frozenset({(x2, y), (y, x2)}))
    for ymid in sorted(eps[y]):
        for (b, y2) in adjX[ymid]:
            if b == a:
                options.append(
                    frozenset({(x, ymid), (ymid, x), (x2, y2), (y2, x2)})
                )
    return options


def brute_force_largest(lts: Lts, kind: str) -> PartitionRelation:
    """Independent oracle: for each state pair, search by backtracking for a
    symmetric relation containing it that is closed under the transfer
    property; the union of all witnesses is the largest such relation."""
    if len(lts.states) > 7:
        raise PreconditionError("oracle is guarded to at most 7 states")
    if kind not in ("strong", "branching"):
        raise PreconditionError(f"unknown kind {kind!r}")
    adjX = adjacency(lts)
    eps = eps_closure(lts) if kind == "branching" else None
    identity = frozenset((s, s) for s in lts.states)

    def options_for(x, y, move):
        if kind == "strong":
            return _strong_obligation_options(x, y, move, adjX)
        return _branching_obligation_options(x, y, move, adjX, eps)

    def solve(pairs, pending):
        if not pending:
            return True
        (x, y) = pending[0]
        rest = pending[1:]
        return satisfy_moves(pairs, list(adjX[x]), x, y, rest)

    def satisfy_moves(pairs, moves, x, y, rest):
        if not moves:
            return solve(pairs, rest)
        move = moves[0]
        for opt in options_for(x, y, move):
            new = opt - pairs
            grown = pairs | new
            extra = [p for p in sorted(new)]
            if satisfy_moves(grown, moves[1:], x, y, rest + extra):
                return True
        return False

    winners = set(identity)
    for x in lts.states:
        for y in lts.states:
            if x >= y or (x, y) in winners:
                continue
            seed = frozenset({(x, y), (y, x)}) | identity
            if solve(seed, [(x, y), (y, x)]):
                winners.add((x, y))
                winners.add((y, x))
    return PartitionRelation(tuple(lts.states), frozenset(winners))


# ---------------------------------------------------------------------------
# Plain quotients (used by tests and the sampler)


def quotient_lts(lts: Lts, R: PartitionRelation):
    """Quotient with induced transitions (no silent-step special casing)."""
    blocks = R.blocks()
    name = {}
    for b in blocks:
        bname = "+".join(sorted(b))
        for s in b:
            name[s] = bname
    transitions = {(name[x], a, name[y]) for (x, a, y) in lts.transitions}
    quotient = Lts.make(
        tuple("+".join(sorted(b)) for b in blocks), lts.alphabet, transitions
    )
    return quotient, {s: name[s] for s in lts.states}
