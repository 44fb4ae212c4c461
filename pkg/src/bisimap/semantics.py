"""Semantic presheaves of transition systems.

Three constructions are provided, all depth-truncated uniformly (restriction
only shortens words, so truncation is closed):

* strong: stages are all executions with a given visible trace;
* fair: the finite stages as above, plus one stage per ultimately periodic
  trace realized by a fair lasso within bounds, holding those lassos;
* branching: stages over visible words hold minimal executions (no trailing
  silent steps), and an extra stage holds the purely silent executions,
  restricting to their start states.

Each construction lifts suitable state maps to natural transformations.
"""

from __future__ import annotations

from .errors import InternalCheckError, PreconditionError
from .lts import (
    Execution,
    FairLts,
    Lasso,
    Lts,
    eps_closure,
    executions_up_to,
    fair_lassos,
    is_simulation,
    restrict,
)
from .presheaf import (
    FinPresheaf,
    NatTrans,
    barred_source_poset,
    branching_target_poset,
    fair_target_poset,
    make_presheaf,
    nat_trans,
    word_poset,
)
from .words import EPSILON, TAU, LassoTrace, StretchPoint, TAU_BAR, Word, hide


def _joint_alphabet(*systems):
    labs = set()
    for s in systems:
        labs |= set(s.alphabet)
    return tuple(sorted(labs))


def _map_execution(f: dict, p: Execution) -> Execution:
    return Execution(p.trace, tuple(f[s] for s in p.states))


# ---------------------------------------------------------------------------
# Strong semantics


def strong_sem(lts: Lts, depth: int, alphabet=None) -> FinPresheaf:
    """The presheaf of executions over visible words up to the depth."""
    if lts.has_tau:
        raise PreconditionError("strong semantics is for systems without silent steps")
    labels = tuple(sorted(alphabet)) if alphabet is not None else tuple(sorted(lts.alphabet))
    base = word_poset(labels, depth, "visible-words")
    execs = executions_up_to(lts, depth)
    return make_presheaf(
        base,
        lambda w: execs.get(w, frozenset()),
        lambda p, frm, to: restrict(p, to),
    )


def strong_sem_map(f: dict, source: Lts, target: Lts, depth: int) -> NatTrans:
    """Lift a simulation to the execution presheaves (post-composition)."""
    ok, witness = is_simulation(f, source, target)
    if not ok:
        raise PreconditionError(f"not a simulation: violates {witness}")
    labels = _joint_alphabet(source, target)
    FX = strong_sem(source, depth, labels)
    FY = strong_sem(target, depth, labels)
    return nat_trans(FX, FY, lambda e, p: _map_execution(f, p))


# ---------------------------------------------------------------------------
# Fair semantics


def fair_sem(
    fl: FairLts,
    depth: int,
    stem_bound: int = 4,
    cycle_bound: int = 4,
    alphabet=None,
    extra_traces=(),
) -> FinPresheaf:
    """Execution presheaf extended with one stage per fair-lasso trace.

    An infinite stage holds the canonical fair lassos realizing its trace;
    restriction to a finite word unrolls the lasso.  ``extra_traces`` adds
    stages (possibly empty) so two systems can share a base.
    """
    labels = tuple(sorted(alphabet)) if alphabet is not None else tuple(sorted(fl.lts.alphabet))
    fair = [l for (l, ok) in fair_lassos(fl, stem_bound, cycle_bound) if ok]
    by_trace = {}
    for l in fair:
        by_trace.setdefault(l.trace(), []).append(l)
    traces = set(by_trace) | set(extra_traces)
    base = fair_target_poset(labels, depth, traces)
    execs = executions_up_to(fl.lts, depth)

    def stage(e):
        if isinstance(e, LassoTrace):
            return by_trace.get(e, [])
        return execs.get(e, frozenset())

    def act(x, frm, to):
        if isinstance(frm, LassoTrace):
            return x.unroll(len(to))
        return restrict(x, to)

    return make_presheaf(base, stage, act)


def fair_simulation_violation(f: dict, source: FairLts, target: FairLts,
                              stem_bound: int = 4, cycle_bound: int = 4):
    """None if f preserves transitions and (within bounds) fair lassos;
    otherwise a tagged witness."""
    ok, witness = is_simulation(f, source.lts, target.lts)
    if not ok:
        return ("transition", witness)
    for (lasso, fair) in sorted(fair_lassos(source, stem_bound, cycle_bound),
                                key=lambda lw: str(lw[0])):
        if not fair:
            continue
        image = lasso.map_states(f).canonical()
        if not target.fairness.is_fair(image):
            return ("unfair-image", (lasso, image))
    return None


def fair_sem_map(f: dict, source: FairLts, target: FairLts, depth: int,
                 stem_bound: int = 4, cycle_bound: int = 4) -> NatTrans:
    """Lift a fair simulation to the fair-semantics presheaves over a shared
    base; raises with the offending lasso if fairness is not preserved."""
    violation = fair_simulation_violation(f, source, target, stem_bound, cycle_bound)
    if violation is not None:
        raise PreconditionError(f"not a fair simulation: {violation[0]} witness {violation[1]}")
    labels = _joint_alphabet(source.lts, target.lts)
    src_traces = {l.trace() for (l, ok) in fair_lassos(source, stem_bound, cycle_bound) if ok}
    tgt_traces = {l.trace() for (l, ok) in fair_lassos(target, stem_bound, cycle_bound) if ok}
    shared = src_traces | tgt_traces
    FX = fair_sem(source, depth, stem_bound, cycle_bound, labels, shared)
    FY = fair_sem(target, depth, stem_bound, cycle_bound, labels, shared)

    def component(e, x):
        if isinstance(e, LassoTrace):
            return x.map_states(f).canonical()
        return _map_execution(f, x)

    return nat_trans(FX, FY, component)


# ---------------------------------------------------------------------------
# Base presheaves for silent-step systems


def base_presheaf(lts: Lts, depth: int, barred: bool = False, alphabet=None) -> FinPresheaf:
    """The execution presheaf over words with silent letters; in barred mode
    the base gains the stretch points, whose common stage collects all purely
    silent executions and restricts to the start state at the empty word."""
    visible = tuple(sorted(alphabet)) if alphabet is not None else tuple(sorted(lts.alphabet))
    labels = visible + (TAU,)
    execs = executions_up_to_with_tau(lts, depth, labels)
    if not barred:
        base = word_poset(labels, depth, "silent-words")
        return make_presheaf(
            base,
            lambda w: execs.get(w, frozenset()),
            lambda p, frm, to: restrict(p, to),
        )
    base = barred_source_poset(labels, depth)
    silent = sorted(
        (p for w, ps in execs.items() if not w.visible().letters for p in ps),
        key=str,
    )

    def stage(e):
        if isinstance(e, StretchPoint):
            return silent
        return execs.get(e, frozenset())

    def act(x, frm, to):
        if isinstance(frm, StretchPoint):
            if isinstance(to, StretchPoint):
                return x
            return restrict(x, EPSILON)
        return restrict(x, to)

    return make_presheaf(base, stage, act)


def executions_up_to_with_tau(lts: Lts, depth: int, labels) -> dict:
    """Like executions_up_to but over an explicit label universe (so systems
    with different alphabets can share a base)."""
    if set(lts.labels()) == set(labels):
        return executions_up_to(lts, depth)
    from .lts import adjacency

    adj = adjacency(lts)
    stages = {EPSILON: frozenset(Execution.empty(s) for s in lts.states)}
    frontier = dict(stages)
    for _ in range(depth):
        nxt = {}
        for word, ps in frontier.items():
            for lab in labels:
                grown = [
                    p.extend(lab, tgt)
                    for p in ps
                    for (l, tgt) in adj[p.last]
                    if l == lab
                ]
                nxt[word.append(lab)] = frozenset(grown)
        stages.update(nxt)
        frontier = nxt
    return stages


# ---------------------------------------------------------------------------
# Minimal executions


def minimal_trace_for(rho: Word, trace: Word) -> bool:
    """Is ``trace`` a minimal word for the visible word ``rho``: does it hide
    to rho with no proper prefix hiding to rho (no trailing silent letters)?"""
    if trace.visible() != rho:
        return False
    if len(rho) == 0:
        return len(trace) == 0
    return trace.letters[-1] is not TAU


def is_minimal_execution(p: Execution) -> bool:
    return minimal_trace_for(p.trace.visible(), p.trace)


def minimal_executions(lts: Lts, rho: Word, depth: int) -> frozenset:
    """All executions of trace length <= depth whose trace is minimal for rho."""
    if len(rho) > depth:
        raise PreconditionError("observable word longer than the depth")
    if rho.has_tau:
        raise PreconditionError("observable words are silent-free")
    execs = executions_up_to(lts, depth)
    return frozenset(
        p for w, ps in execs.items() if minimal_trace_for(rho, w) for p in ps
    )


def mpast(p: Execution, rho2: Word) -> Execution:
    """Restrict to the unique minimal prefix whose visible trace is rho2."""
    for w in p.trace.prefixes():
        if w.visible() == rho2:
            return restrict(p, w)
    raise PreconditionError(f"{rho2} is not a visible prefix of {p.trace}")


# ---------------------------------------------------------------------------
# Branching semantics


def branching_sem(lts: Lts, depth: int, with_stretch: bool = True, alphabet=None) -> FinPresheaf:
    """The presheaf of minimal executions over visible words.

    With ``with_stretch`` (the correct construction) the base gains the
    stretchable observation above the empty word, whose stage holds all purely
    silent executions; without it one obtains the coarser variant that forgets
    silent steps entirely.
    """
    visible = tuple(sorted(alphabet)) if alphabet is not None else tuple(sorted(lts.alphabet))
    execs = executions_up_to(lts, depth)
    by_rho = {}
    silent = []
    for w, ps in execs.items():
        rho = w.visible()
        if minimal_trace_for(rho, w):
            by_rho.setdefault(rho, []).extend(ps)
        if not rho.letters:
            silent.extend(ps)
    silent.sort(key=str)

    if with_stretch:
        base = branching_target_poset(visible, depth)
    else:
        base = word_poset(visible, depth, "visible-words")

    def stage(e):
        if e is TAU_BAR:
            return silent
        return by_rho.get(e, ())

    def act(x, frm, to):
        if frm is TAU_BAR:
            return restrict(x, EPSILON)
        return mpast(x, to)

    return make_presheaf(base, stage, act)


def map_pf(f: dict, p: Execution, target: Lts = None) -> Execution:
    """The image of an execution under a branching simulation: visible steps
    map through, silent steps map through or collapse when the images agree.

    With ``target`` given, every produced step is asserted to exist there; a
    failure indicates a bug in the simulation checker, not bad input.
    """
    states = [f[p.states[0]]]
    letters = []
    for lab, nxt in zip(p.trace, p.states[1:]):
        cur, img = states[-1], f[nxt]
        if lab is TAU and cur == img:
            continue
        if target is not None and not target.has_transition(cur, lab, img):
            raise InternalCheckError(
                f"image step {cur} -{lab}-> {img} missing in target"
            )
        letters.append(lab)
        states.append(img)
    return Execution(Word(tuple(letters)), tuple(states))


def branching_simulation_violation(f: dict, source: Lts, target: Lts):
    """None if f is a branching simulation, else a tagged witness: visible
    steps must map to steps, silent steps must map to steps or collapse, and
    silent stuttering must be respected."""
    missing = set(source.states) - set(f)
    if missing:
        raise PreconditionError(f"map not total: missing {sorted(missing)}")
    if not source.alphabet <= target.alphabet:
        raise PreconditionError("alphabets incompatible")
    if {f[s] for s in source.states} - set(target.states):
        raise PreconditionError("map image outside target states")
    for (src, lab, tgt) in sorted(source.transitions, key=str):
        if lab is TAU:
            if f[src] != f[tgt] and not target.has_transition(f[src], TAU, f[tgt]):
                return ("silent", (src, lab, tgt))
        elif not target.has_transition(f[src], lab, f[tgt]):
            return ("visible", (src, lab, tgt))
    eps = eps_closure(source)
    for x1 in source.states:
        for x2 in eps[x1]:
            for x3 in eps[x2]:
                if f[x1] == f[x3] and f[x1] != f[x2]:
                    return ("stutter", (x1, x2, x3))
    return None


def branching_sem_map(f: dict, source: Lts, target: Lts, depth: int,
                      with_stretch: bool = True) -> NatTrans:
    """Lift a branching simulation to the minimal-execution presheaves."""
    violation = branching_simulation_violation(f, source, target)
    if violation is not None:
        raise PreconditionError(f"not a branching simulation: {violation[0]} witness {violation[1]}")
    labels = _joint_alphabet(source, target)
    FX = branching_sem(source, depth, with_stretch, labels)
    FY = branching_sem(target, depth, with_stretch, labels)
    return nat_trans(FX, FY, lambda e, p: map_pf(f, p, target))


__all__ = [
    "base_presheaf",
    "branching_sem",
    "branching_sem_map",
    "branching_simulation_violation",
    "fair_sem",
    "fair_sem_map",
    "fair_simulation_violation",
    "hide",
    "is_minimal_execution",
    "map_pf",
    "minimal_executions",
    "minimal_trace_for",
    "mpast",
    "strong_sem",
    "strong_sem_map",
]
