import random

import pytest

from bisimap import PreconditionError
from bisimap.equiv import (
    PartitionRelation,
    branching_bisimilarity,
    branching_quotient,
    brute_force_largest,
    check_bisim_map,
    check_branching_bisim_fn,
    check_branching_sim,
    check_fair_bisim_fn,
    check_fair_reflection,
    check_fair_sim,
    check_forall_fair_bisim,
    check_hildebrandt_open,
    check_strong_bisim_fn,
    extend_reduction,
    forall_fair_quotient,
    quotient_lts,
)
from bisimap.lts import FairLts, StreettSpec, adjacency, eps_closure

from conftest import lts_of, random_lts


# ---------------------------------------------------------------------------
# Relations


def test_partition_relation_kinds():
    universe = ("a", "b", "c")
    raw = PartitionRelation(universe, frozenset({("a", "b")}))
    assert raw.kind == "raw"
    sym = raw.symmetric_closure()
    assert sym.kind == "symmetric"
    eq = sym.equivalence_closure()
    assert eq.kind == "equivalence"
    assert eq.blocks() == (frozenset({"a", "b"}), frozenset({"c"}))


def test_partition_relation_composition_order():
    universe = ("a", "b", "c")
    first = PartitionRelation(universe, frozenset({("a", "b")}))
    second = PartitionRelation(universe, frozenset({("b", "c")}))
    # second.after(first): apply first, then second
    assert second.after(first).pairs == frozenset({("a", "c")})
    assert first.after(second).pairs == frozenset()


def test_kernel_is_equivalence():
    k = PartitionRelation.kernel_of({"a": 1, "b": 1, "c": 2}, ("a", "b", "c"))
    assert k.kind == "equivalence"
    assert ("a", "b") in k.pairs and ("a", "c") not in k.pairs


# ---------------------------------------------------------------------------
# Strong checks


def test_strong_identity_holds(chain):
    lts = lts_of([("s", "a", "t"), ("t", "b", "s")])
    v = check_strong_bisim_fn({s: s for s in lts.states}, lts, lts)
    assert v.holds


def test_strong_collapse_fails_reflection():
    # the silent-then-visible chain with the silent step made visible
    src = lts_of([("x0", "b", "x1"), ("x1", "a", "x2")])
    tgt = lts_of([("q0", "b", "q1"), ("q1", "a", "q1")])
    f = {"x0": "q0", "x1": "q1", "x2": "q1"}
    v = check_strong_bisim_fn(f, src, tgt)
    assert not v.holds
    kind, (x, a, y) = v.witness
    assert kind == "no-reflection"
    # the witness is re-checkable: the image step exists, no source step matches
    assert tgt.has_transition(f[x], a, y)
    assert not any(
        lab == a and f[x2] == y for (lab, x2) in adjacency(src)[x]
    )


def test_strong_quotient_by_largest_bisimulation_holds():
    rng = random.Random(11)
    for _ in range(15):
        lts = random_lts(rng, 5, ("a", "b"), density=1.5)
        largest = brute_force_largest(lts, "strong")
        assert largest.kind == "equivalence"
        quotient, f = quotient_lts(lts, largest)
        assert check_strong_bisim_fn(f, lts, quotient).holds


def test_strong_requires_simulation(chain):
    lts = lts_of([("s", "a", "t")])
    with pytest.raises(PreconditionError):
        check_strong_bisim_fn({"s": "t", "t": "t"}, lts, lts)


# ---------------------------------------------------------------------------
# Fair checks


def test_fair_identity_holds_on_corpus(corpus):
    for system in corpus.fair_systems().values():
        ident = {s: s for s in system.lts.states}
        assert check_fair_sim(ident, system, system).holds
        assert check_fair_reflection(ident, system, system).holds
        assert check_fair_bisim_fn(ident, system, system).holds
        assert check_hildebrandt_open(ident, system, system).holds


def test_hildebrandt_fails_without_reflection():
    X = FairLts(lts_of([("u", "a", "u")]), StreettSpec(()))
    Y = FairLts(
        lts_of([("p", "a", "p"), ("p", "a", "q"), ("q", "a", "q")]),
        StreettSpec(()),
    )
    f = {"u": "p"}
    v = check_hildebrandt_open(f, X, Y)
    assert not v.holds
    assert v.witness[0] == "no-reflection"


def test_fair_reflection_witness_is_recheckable(corpus):
    entry = corpus.fair_rem
    v = check_fair_reflection(entry.mapping, entry.source, entry.target)
    assert not v.holds
    lasso, image = v.witness[1]
    assert not entry.source.fairness.is_fair(lasso)
    assert entry.target.fairness.is_fair(image)
    assert image == lasso.map_states(entry.mapping).canonical()


def test_forall_fair_identity_relation(corpus):
    sys = corpus.union_sys.system
    ident = PartitionRelation.identity(sys.lts.states)
    assert check_forall_fair_bisim(ident, sys).holds


def test_forall_fair_rejects_non_equivalence(corpus):
    sys = corpus.union_sys.system
    lopsided = PartitionRelation(sys.lts.states, frozenset({("x1", "y1")}))
    v = check_forall_fair_bisim(lopsided, sys)
    assert not v.holds and v.witness[0] == "not-equivalence"


def test_forall_fair_relaxed_symmetric_mode(corpus):
    # the raw symmetric halves of the composition counterexample pass the
    # relaxed check, mirroring the discussion of non-equivalence variants
    comp = corpus.comp
    for name in ("T", "TPRIME"):
        rel = comp.relations[name]  # symmetric, irreflexive
        assert rel.kind == "symmetric"
        v = check_forall_fair_bisim(rel, comp.system, require_equivalence=False)
        assert v.holds, (name, v.witness)


def test_fair_sim_fails_on_unfair_image(corpus):
    # a map sending the fair alternating run onto the unfair constant loop
    sys = corpus.union_sys.system
    f = {"x1": "x2", "y1": "x2", "x2": "x2", "y2": "y2"}
    v = check_fair_sim(f, sys, sys)
    assert not v.holds
    kind, (lasso, image) = v.witness
    assert kind == "unfair-image"
    assert sys.fairness.is_fair(lasso)
    assert not sys.fairness.is_fair(image)
    from bisimap.lts import is_lasso_of

    assert is_lasso_of(sys.lts, lasso) and is_lasso_of(sys.lts, image)


def test_forall_fair_union_witness_is_recheckable(corpus):
    sys = corpus.union_sys.system
    r1 = corpus.union_sys.relations["R1"].reflexive_closure()
    r2 = corpus.union_sys.relations["R2"].reflexive_closure()
    merged = PartitionRelation(r1.universe, r1.pairs | r2.pairs).equivalence_closure()
    v = check_forall_fair_bisim(merged, sys)
    assert not v.holds
    left, right = v.witness[1]
    assert sys.fairness.is_fair(left)
    assert not sys.fairness.is_fair(right)
    # pointwise related along the run
    n = len(left.stem.trace) + 2 * len(left.cycle) + len(right.stem.trace) + 2 * len(right.cycle)
    lu, ru = left.unroll(n), right.unroll(n)
    assert all(merged.contains(a, b) for a, b in zip(lu.states, ru.states))
    assert lu.trace == ru.trace


def test_forall_fair_quotient_identity(corpus):
    sys = corpus.union_sys.system
    ident = PartitionRelation.identity(sys.lts.states)
    quotient, f = forall_fair_quotient(ident, sys)
    assert len(quotient.lts.states) == len(sys.lts.states)
    assert len(set(f.values())) == len(sys.lts.states)
    assert check_fair_bisim_fn(f, sys, quotient).holds


def test_forall_fair_quotient_requires_valid_relation(corpus):
    sys = corpus.union_sys.system
    bad = PartitionRelation(sys.lts.states, frozenset({("x1", "x2")}))
    with pytest.raises(PreconditionError):
        forall_fair_quotient(bad, sys)


def test_fair_bisim_kernel_passes_forall_fair(corpus):
    sys = corpus.union_sys.system
    r2 = corpus.union_sys.relations["R2"].reflexive_closure()
    _, f = forall_fair_quotient(r2, sys)
    kernel = PartitionRelation.kernel_of(f, sys.lts.states)
    assert check_forall_fair_bisim(kernel, sys).holds


# ---------------------------------------------------------------------------
# Branching checks


def test_fair_reflection_exact_handles_mixed_kinds():
    # positional source fairness against Streett target fairness, exactly
    from bisimap.lts import AlwaysAfterSpec

    X = FairLts(lts_of([("u", "a", "u")]), AlwaysAfterSpec(0, frozenset()))
    Y = FairLts(lts_of([("v", "a", "v")]), StreettSpec(()))
    f = {"u": "v"}
    exact = check_fair_reflection(f, X, Y, "exact_streett")
    bounded = check_fair_reflection(f, X, Y, "bounded")
    assert not exact.holds and not bounded.holds
    assert exact.notes == ()  # genuinely exact, no fallback
    lasso, image = exact.witness[1]
    assert not X.fairness.is_fair(lasso)
    assert Y.fairness.is_fair(image)


def test_branching_identity_checks_hold(corpus):
    for X in corpus.plain_systems().values():
        ident = {s: s for s in X.states}
        assert check_branching_sim(ident, X, X).holds
        assert check_branching_bisim_fn(ident, X, X).holds


def test_branching_weak_reflection_witness_is_recheckable(corpus):
    entry = corpus.branch
    v = check_branching_bisim_fn(entry.mapping, entry.source, entry.target)
    kind, (w_src, a, y) = v.witness
    assert kind == "no-weak-reflection"
    assert entry.target.has_transition(w_src, a, y)
    eps = eps_closure(entry.source)
    f = entry.mapping
    anchors = [x for x in entry.source.states if f[x] == w_src]
    assert anchors
    for x in anchors:
        assert not any(
            f[x1] == f[x] and lab == a and f[x2] == y
            for x1 in eps[x]
            for (lab, x2) in adjacency(entry.source)[x1]
        )


def _random_streett_system(rng, max_states=4):
    lts = random_lts(rng, max_states, ("a",), density=1.8)
    pairs = []
    for _ in range(rng.randint(0, 2)):
        L = frozenset(s for s in lts.states if rng.random() < 0.5)
        U = frozenset(s for s in lts.states if rng.random() < 0.5)
        pairs.append((L, U))
    return FairLts(lts, StreettSpec(tuple(pairs)))


def test_exact_transfer_check_refutes_whenever_bounded_does():
    # a bounded lasso-pair witness is a genuine run pair, so the exact
    # end-component analysis must refuse too (the converse can differ when
    # the only witnesses need longer lassos than the bounds)
    rng = random.Random(1331)
    compared = refuted = 0
    for _ in range(60):
        system = _random_streett_system(rng)
        states = system.lts.states
        k = rng.randint(1, len(states))
        blocks = {s: rng.randrange(k) for s in states}
        rel = PartitionRelation(
            states,
            frozenset((a, b) for a in states for b in states if blocks[a] == blocks[b]),
        )
        exact = check_forall_fair_bisim(rel, system, mode="exact_streett")
        bounded = check_forall_fair_bisim(rel, system, mode="bounded",
                                          stem_bound=3, cycle_bound=3)
        compared += 1
        if not bounded.holds:
            refuted += 1
            assert exact.witness is None or exact.witness[0] != "not-equivalence"
            assert not exact.holds, (system, rel.pairs)
        if exact.holds:
            assert bounded.holds, (system, rel.pairs)
    assert compared == 60 and refuted > 0


def test_image_fairness_agrees_with_bounded_preimage_search(corpus):
    # whenever a bounded enumeration finds a fair source lasso mapping onto a
    # quotient lasso, the exact product analysis must call the lasso fair
    from bisimap.lts import enumerate_graph_lassos, fair_lassos

    sys = corpus.union_sys.system
    r2 = corpus.union_sys.relations["R2"].reflexive_closure()
    quotient, f = forall_fair_quotient(r2, sys)
    qadj = adjacency(quotient.lts)
    checked = fair_found = 0
    for lasso in enumerate_graph_lassos(quotient.lts.states, qadj, 2, 2):
        checked += 1
        exact = quotient.fairness.is_fair(lasso)
        witnessed = False
        for (src_lasso, ok) in fair_lassos(sys, 4, 4):
            if not ok:
                continue
            if src_lasso.map_states(f).canonical() == lasso.canonical():
                witnessed = True
                break
        if witnessed:
            fair_found += 1
            assert exact
        if not exact:
            assert not witnessed
    assert checked > 0 and fair_found > 0


def test_branching_sim_stutter_violation():
    src = lts_of([("x1", "tau", "x2"), ("x2", "tau", "x3")])
    tgt = lts_of([("u", "tau", "v"), ("v", "tau", "u")])
    f = {"x1": "u", "x2": "v", "x3": "u"}
    v = check_branching_sim(f, src, tgt)
    assert not v.holds
    assert v.witness[0] == "stutter"
    x1, x2, x3 = v.witness[1]
    assert f[x1] == f[x3] and f[x1] != f[x2]


def test_branching_bisimilarity_chain():
    lts = lts_of([("x1", "tau", "x2"), ("x2", "a", "x3")])
    R = branching_bisimilarity(lts)
    assert R.contains("x1", "x2")
    assert not R.contains("x2", "x3")
    assert R.kind == "equivalence"


def test_branching_bisimilarity_self_loops_single_block():
    lts = lts_of([("u", "a", "u"), ("v", "a", "v"), ("w", "a", "w")])
    R = branching_bisimilarity(lts)
    assert R.blocks() == (frozenset({"u", "v", "w"}),)


def test_branching_branch_states_not_bisimilar(corpus):
    R = branching_bisimilarity(corpus.branch.combined)
    assert not R.contains("x1", "y1")


def test_branching_quotient_chain():
    lts = lts_of([("x1", "tau", "x2"), ("x2", "a", "x3")])
    quotient, f = branching_quotient(lts)
    assert len(quotient.states) == 2
    assert check_branching_bisim_fn(f, lts, quotient).holds
    kernel = PartitionRelation.kernel_of(f, lts.states)
    assert kernel.pairs == branching_bisimilarity(lts).pairs


def test_branching_quotient_of_minimal_system_is_bijective():
    lts = lts_of([("u", "a", "v"), ("v", "b", "v")])
    quotient, f = branching_quotient(lts)
    assert len(set(f.values())) == len(lts.states)


def test_extend_reduction_lands_in_bisim_fn():
    # a reduction into a non-minimal target, fixed up by its quotient map
    mid = lts_of([("u", "tau", "v"), ("v", "a", "w")])
    src = lts_of([("p", "tau", "q"), ("q", "a", "r")])
    g = {"p": "u", "q": "v", "r": "w"}
    quotient, composite = extend_reduction(g, src, mid)
    assert check_branching_bisim_fn(composite, src, quotient).holds


def test_brute_force_examples():
    loops = lts_of([("u", "a", "u"), ("v", "a", "v")])
    largest = brute_force_largest(loops, "strong")
    assert largest.pairs == frozenset(
        (a, b) for a in ("u", "v") for b in ("u", "v")
    )
    chain = lts_of([("x1", "tau", "x2"), ("x2", "a", "x3")])
    lb = brute_force_largest(chain, "branching")
    assert lb.pairs == frozenset(
        {("x1", "x2"), ("x2", "x1"), ("x1", "x1"), ("x2", "x2"), ("x3", "x3")}
    )


def test_brute_force_guard():
    big = lts_of([(f"s{i}", "a", f"s{(i + 1) % 8}") for i in range(8)])
    with pytest.raises(PreconditionError):
        brute_force_largest(big, "strong")


def test_brute_force_agrees_with_fixpoint_sampled():
    rng = random.Random(23)
    for _ in range(25):
        lts = random_lts(rng, 5, ("a",), tau_prob=0.4, density=1.5)
        assert brute_force_largest(lts, "branching").pairs == branching_bisimilarity(lts).pairs


# ---------------------------------------------------------------------------
# Abstract map check plumbing


def test_bisim_map_mode_guards(corpus):
    with pytest.raises(PreconditionError):
        check_bisim_map(
            {s: s for s in corpus.chain.states}, corpus.chain, corpus.chain, "strong"
        )
    entry = corpus.fair_rem
    with pytest.raises(PreconditionError):
        check_bisim_map(entry.mapping, entry.source, entry.target, "branching")
    with pytest.raises(PreconditionError):
        check_bisim_map(entry.mapping, entry.source.lts, entry.target.lts, "nonsense")


def test_bisim_map_strong_identity_agrees():
    lts = lts_of([("s", "a", "t"), ("t", "b", "s")])
    report = check_bisim_map({s: s for s in lts.states}, lts, lts, "strong", depth=3)
    assert report.presheaf_verdict.holds
    assert report.concrete_verdict.holds
    assert report.agreement


def test_bisim_map_branching_acceptance_is_sound_on_random_systems():
    # the truncated filler check never accepts a map the concrete checker
    # refuses: a concrete violation is always caught by an unpadded-anchor
    # square within the depth.  (The converse direction is corpus-pinned: a
    # padded anchor near the depth boundary can make the filler check refuse
    # conservatively even though the concrete checker accepts.)
    from bisimap.semantics import branching_simulation_violation

    rng = random.Random(4242)
    sims = accepted = refused_concretely = 0
    for i in range(60):
        X = random_lts(rng, 4, ("a", "b"), tau_prob=0.35, density=1.5)
        if i % 2 == 0:
            Y, qmap = branching_quotient(X)
            candidates = [qmap]
        else:
            Y = random_lts(rng, 4, ("a", "b"), tau_prob=0.35, density=1.5)
            candidates = [
                {s: rng.choice(Y.states) for s in X.states} for _ in range(6)
            ]
        if not Y.states:
            continue
        for f in candidates:
            try:
                if branching_simulation_violation(f, X, Y) is not None:
                    continue
            except PreconditionError:
                continue
            sims += 1
            concrete = check_branching_bisim_fn(f, X, Y).holds
            report = check_bisim_map(f, X, Y, "branching", depth=4)
            if report.presheaf_verdict.holds:
                accepted += 1
                assert concrete, (X, Y, f)
            if not concrete:
                refused_concretely += 1
                assert not report.presheaf_verdict.holds, (X, Y, f)
    assert sims >= 20 and accepted > 0 and refused_concretely > 0


def test_bisim_map_fair_identity_accepted(corpus):
    src = corpus.fair_rem.source
    ident = {s: s for s in src.lts.states}
    report = check_bisim_map(ident, src, src, "fair")
    assert report.presheaf_verdict.holds
    assert report.concrete_verdict.holds
    assert report.agreement


def test_bisim_map_machine_record_fields(corpus):
    entry = corpus.branch
    report = check_bisim_map(entry.mapping, entry.source, entry.target, "branching")
    rec = report.presheaf_verdict.to_record()
    assert list(rec) == ["check", "holds", "witness", "certified_bounds"]
    assert rec["holds"] is False and isinstance(rec["witness"], str)
