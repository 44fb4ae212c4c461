"""Labelled transition systems, executions, lassos, fairness, and file ingestion.

Systems carry no initial state: every state is a legitimate starting point and
all executions from all states are first-class.  The silent label is the
``TAU`` sentinel internally and the literal ``tau`` in Aldebaran files; it is
never a member of ``alphabet``.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass

from .errors import ParseError, PreconditionError
from .words import EPSILON, TAU, Word, label_key, label_str


@dataclass(frozen=True)
class Lts:
    """A finite labelled transition system without initial states."""

    states: tuple
    alphabet: frozenset
    transitions: frozenset
    has_tau: bool = False

    def __post_init__(self):
        states = set(self.states)
        if len(states) != len(self.states):
            raise PreconditionError("duplicate state identifiers")
        if TAU in self.alphabet:
            raise PreconditionError("the silent label is not part of the alphabet")
        uses_tau = False
        for (src, lab, tgt) in self.transitions:
            if src not in states or tgt not in states:
                raise PreconditionError(f"transition endpoint outside state set: {(src, label_str(lab), tgt)}")
            if lab is TAU:
                uses_tau = True
            elif lab not in self.alphabet:
                raise PreconditionError(f"unknown label {lab!r}")
        if uses_tau != self.has_tau:
            raise PreconditionError("has_tau flag inconsistent with transitions")

    @staticmethod
    def make(states, alphabet, transitions) -> "Lts":
        transitions = frozenset(transitions)
        return Lts(
            states=tuple(states),
            alphabet=frozenset(alphabet),
            transitions=transitions,
            has_tau=any(lab is TAU for (_, lab, _) in transitions),
        )

    def labels(self) -> tuple:
        """All labels in play: the alphabet plus the silent label if used."""
        labs = sorted(self.alphabet)
        if self.has_tau:
            labs.append(TAU)
        return tuple(labs)

    def has_transition(self, src, lab, tgt) -> bool:
        return (src, lab, tgt) in self.transitions


def adjacency(lts: Lts) -> dict:
    """state -> tuple of (label, target), deterministically ordered."""
    adj = {s: [] for s in lts.states}
    for (src, lab, tgt) in lts.transitions:
        adj[src].append((lab, tgt))
    return {s: tuple(sorted(steps, key=lambda lt: (label_key(lt[0]), lt[1]))) for s, steps in adj.items()}


def transition_str(src, lab, tgt) -> str:
    return f"{src} -{label_str(lab)}-> {tgt}"


# ---------------------------------------------------------------------------
# Executions


@dataclass(frozen=True)
class Execution:
    """A finite run: one state per prefix of its trace."""

    trace: Word
    states: tuple

    def __post_init__(self):
        if len(self.states) != len(self.trace) + 1:
            raise PreconditionError("an execution has one state per prefix of its trace")

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.trace, self.states))
            object.__setattr__(self, "_hash", h)
        return h

    @staticmethod
    def empty(state) -> "Execution":
        return Execution(EPSILON, (state,))

    @property
    def start(self):
        return self.states[0]

    @property
    def last(self):
        return self.states[-1]

    def extend(self, label, target) -> "Execution":
        return Execution(self.trace.append(label), self.states + (target,))

    def state_at(self, prefix: Word):
        if not prefix.is_prefix_of(self.trace):
            raise PreconditionError(f"{prefix} is not a prefix of {self.trace}")
        return self.states[len(prefix)]

    def __str__(self):
        if len(self.states) == 1:
            return str(self.states[0])
        parts = [str(self.states[0])]
        for lab, st in zip(self.trace, self.states[1:]):
            parts.append(f"-{label_str(lab)}-> {st}")
        return " ".join(parts)


def restrict(p: Execution, prefix: Word) -> Execution:
    """Restrict an execution to a prefix of its trace."""
    if not prefix.is_prefix_of(p.trace):
        raise PreconditionError(f"{prefix} is not a prefix of {p.trace}")
    return Execution(prefix, p.states[: len(prefix) + 1])


def is_execution_of(lts: Lts, p: Execution) -> bool:
    if any(s not in set(lts.states) for s in p.states):
        return False
    return all(
        lts.has_transition(p.states[i], p.trace[i], p.states[i + 1])
        for i in range(len(p.trace))
    )


def is_lasso_of(lts: Lts, lasso: "Lasso") -> bool:
    """Does the lasso unroll to a valid infinite run of the system?"""
    if not is_execution_of(lts, lasso.stem):
        return False
    at = lasso.stem.last
    for (lab, tgt) in lasso.cycle:
        if not lts.has_transition(at, lab, tgt):
            return False
        at = tgt
    return True


def executions_up_to(lts: Lts, depth: int) -> dict:
    """All executions of trace length <= depth, keyed by trace.

    Every word over the system's labels (silent label included when in use)
    gets a stage, empty stages included.
    """
    if depth < 0:
        raise PreconditionError("depth must be >= 0")
    labs = lts.labels()
    adj = adjacency(lts)
    stages = {EPSILON: frozenset(Execution.empty(s) for s in lts.states)}
    frontier = {EPSILON: stages[EPSILON]}
    for _ in range(depth):
        nxt = {}
        for word, execs in frontier.items():
            for lab in labs:
                grown = [
                    p.extend(lab, tgt)
                    for p in execs
                    for (l, tgt) in adj[p.last]
                    if l == lab
                ]
                nxt[word.append(lab)] = frozenset(grown)
        stages.update(nxt)
        frontier = nxt
    return stages


# ---------------------------------------------------------------------------
# Weak reachability


def eps_closure(lts: Lts) -> dict:
    """state -> states reachable by zero or more silent steps."""
    adj = adjacency(lts)
    closure = {}
    for s in lts.states:
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for (lab, v) in adj[u]:
                if lab is TAU and v not in seen:
                    seen.add(v)
                    stack.append(v)
        closure[s] = frozenset(seen)
    return closure

def weak_reach(lts: Lts, length_bound: int) -> frozenset:
    """The weak reachability relation up to the given visible-trace length.

    The empty-word slice is the reflexive-transitive closure of silent steps;
    longer slices extend a shorter slice by one direct visible step.
    """
    if length_bound < 0:
        raise PreconditionError("length bound must be >= 0")
    adj = adjacency(lts)
    closure = eps_closure(lts)
    slices = {EPSILON: {(x, y) for x in lts.states for y in closure[x]}}
    frontier = dict(slices)
    for _ in range(length_bound):
        nxt = {}
        for word, pairs in frontier.items():
            for a in sorted(lts.alphabet):
                grown = set()
                for (x, y) in pairs:
                    for (lab, z) in adj[y]:
                        if lab == a:
                            grown.add((x, z))
                if grown:
                    nxt[word.append(a)] = grown
        for w, pairs in nxt.items():
            slices[w] = pairs
        frontier = nxt
    return frozenset((x, w, y) for w, pairs in slices.items() for (x, y) in pairs)


# ---------------------------------------------------------------------------
# Lassos and fairness


@dataclass(frozen=True)
class Lasso:
    """An ultimately periodic infinite run: finite stem plus repeating cycle.

    The cycle is a sequence of (label, target) steps starting from the stem's
    last state; its final target must close back onto that state.
    """

    stem: Execution
    cycle: tuple

    def __post_init__(self):
        if not self.cycle:
            raise PreconditionError("a lasso needs a nonempty cycle")
        if self.cycle[-1][1] != self.stem.last:
            raise PreconditionError("cycle must close back onto its entry state")

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.stem, self.cycle))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def cycle_states(self) -> frozenset:
        return frozenset(st for (_, st) in self.cycle)

    def state_at(self, i: int):
        k = len(self.stem.trace)
        if i <= k:
            return self.stem.states[i]
        return self.cycle[(i - k - 1) % len(self.cycle)][1]

    def label_at(self, i: int):
        k = len(self.stem.trace)
        if i < k:
            return self.stem.trace[i]
        return self.cycle[(i - k) % len(self.cycle)][0]

    def unroll(self, n: int) -> Execution:
        """The finite execution formed by the first n steps of the run."""
        return Execution(
            Word(tuple(self.label_at(i) for i in range(n))),
            tuple(self.state_at(i) for i in range(n + 1)),
        )

    def trace(self):
        from .words import LassoTrace

        return LassoTrace.canonical(
            tuple(self.stem.trace), tuple(lab for (lab, _) in self.cycle)
        )

    def canonical(self) -> "Lasso":
        """Minimal-period cycle, with the stem absorbed into the cycle as far
        as possible (unique representation of the denoted infinite run)."""
        cycle = list(self.cycle)
        for p in range(1, len(cycle) + 1):
            if len(cycle) % p == 0 and all(cycle[i] == cycle[i % p] for i in range(len(cycle))):
                cycle = cycle[:p]
                break
        states = list(self.stem.states)
        trace = list(self.stem.trace)
        while trace:
            last_step = (trace[-1], states[-1])
            cycle_src = cycle[-2][1] if len(cycle) >= 2 else cycle[-1][1]
            if last_step == cycle[-1] and states[-2] == cycle_src:
                trace.pop()
                states.pop()
                cycle = [cycle[-1]] + cycle[:-1]
            else:
                break
        return Lasso(Execution(Word(tuple(trace)), tuple(states)), tuple(cycle))

    def map_states(self, f) -> "Lasso":
        stem = Execution(self.stem.trace, tuple(f[s] for s in self.stem.states))
        return Lasso(stem, tuple((lab, f[st]) for (lab, st) in self.cycle))

    def __str__(self):
        loop = " ".join(f"-{label_str(lab)}-> {st}" for (lab, st) in self.cycle)
        return f"{self.stem} (loop: {loop})"


@dataclass(frozen=True)
class StreettSpec:
    """Fairness by pairs (L, U): a run meeting L infinitely often must meet U
    infinitely often.  On a lasso only the cycle states recur."""

    pairs: tuple

    kind = "streett"

    def is_fair(self, lasso: Lasso) -> bool:
        cyc = lasso.cycle_states
        return all(not (cyc & L) or (cyc & U) for (L, U) in self.pairs)

    def states_mentioned(self):
        out = set()
        for (L, U) in self.pairs:
            out |= set(L) | set(U)
        return out


@dataclass(frozen=True)
class AlwaysAfterSpec:
    """Fairness by a positional safety condition: along runs whose trace starts
    with ``gate``, every state from position ``offset`` onwards must lie in
    ``allowed``.  Runs not matching the gate are unconstrained (fair)."""

    offset: int
    allowed: frozenset
    gate: tuple = ()

    kind = "always_after"

    def is_fair(self, lasso: Lasso) -> bool:
        g = len(self.gate)
        if tuple(lasso.label_at(i) for i in range(g)) != tuple(self.gate):
            return True
        stem_len = len(lasso.stem.trace)
        for i in range(self.offset, stem_len + 1):
            if lasso.stem.states[i] not in self.allowed:
                return False
        return all(st in self.allowed for st in lasso.cycle_states)

    def states_mentioned(self):
        return set(self.allowed)


@dataclass(frozen=True)
class FairLts:
    """A silent-step-free transition system with a fairness condition on
    infinite runs."""

    lts: Lts
    fairness: object

    def __post_init__(self):
        if self.lts.has_tau:
            raise PreconditionError("fair systems carry no silent steps")
        mentioned = getattr(self.fairness, "states_mentioned", lambda: set())()
        unknown = set(mentioned) - set(self.lts.states)
        if unknown:
            raise PreconditionError(f"fairness mentions unknown states: {sorted(unknown)}")


def enumerate_graph_lassos(nodes, adj, stem_bound: int, cycle_bound: int):
    """All canonical lassos of a labelled graph with raw stem length
    <= stem_bound and raw cycle length <= cycle_bound."""
    if cycle_bound < 1:
        raise PreconditionError("cycle bound must be >= 1")
    if stem_bound < 0:
        raise PreconditionError("stem bound must be >= 0")

    cycles_from = {}

    def cycles_at(entry):
        if entry in cycles_from:
            return cycles_from[entry]
        found = []

        def grow(current, steps):
            for (lab, tgt) in adj[current]:
                nxt = steps + ((lab, tgt),)
                if tgt == entry:
                    found.append(nxt)
                if len(nxt) < cycle_bound:
                    grow(tgt, nxt)

        grow(entry, ())
        cycles_from[entry] = found
        return found

    seen = set()
    out = []
    stems = [Execution.empty(s) for s in nodes]
    for _ in range(stem_bound + 1):
        nxt = []
        for stem in stems:
            for cyc in cycles_at(stem.last):
                lasso = Lasso(stem, cyc).canonical()
                if lasso not in seen:
                    seen.add(lasso)
                    out.append(lasso)
            for (lab, tgt) in adj[stem.last]:
                if len(stem.trace) < stem_bound:
                    nxt.append(stem.extend(lab, tgt))
        stems = nxt
    return out


def fair_lassos(fl: FairLts, stem_bound: int, cycle_bound: int) -> frozenset:
    """All canonical lassos within the bounds, each tagged by its fairness
    verdict under the system's fairness condition."""
    adj = adjacency(fl.lts)
    lassos = enumerate_graph_lassos(fl.lts.states, adj, stem_bound, cycle_bound)
    return frozenset((l, fl.fairness.is_fair(l)) for l in lassos)


# ---------------------------------------------------------------------------
# Simulation functions


def is_simulation(f: dict, source: Lts, target: Lts):
    """Check that the state map carries every transition to a transition.

    Returns (True, None) or (False, violating transition).
    """
    missing = set(source.states) - set(f)
    if missing:
        raise PreconditionError(f"map not total: missing {sorted(missing)}")
    bad_imgs = {f[s] for s in source.states} - set(target.states)
    if bad_imgs:
        raise PreconditionError(f"map image outside target states: {sorted(bad_imgs)}")
    if not source.alphabet <= target.alphabet:
        raise PreconditionError("alphabets incompatible")
    for (src, lab, tgt) in sorted(source.transitions, key=lambda t: (label_key(t[1]), t[0], t[2])):
        if not target.has_transition(f[src], lab, f[tgt]):
            return False, (src, lab, tgt)
    return True, None


# ---------------------------------------------------------------------------
# File formats

_HEADER_RE = re.compile(r"^\s*des\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)\s*$")
_EDGE_RE = re.compile(r'^\s*\(\s*(\d+)\s*,\s*(?:"([^"]*)"|([^,"]+?))\s*,\s*(\d+)\s*\)\s*$')


def parse_aut(text: str, names=None) -> Lts:
    """Parse an Aldebaran description.

    The header is ``des (i, t, s)`` with the first field ignored (systems have
    no initial states), ``t`` the transition count and ``s`` the state count.
    The literal label ``tau`` is the silent action.  Duplicate transitions are
    dropped with a warning.  With ``names``, state i is renamed names[i].
    """
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty model file")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise ParseError(f"malformed header: {lines[0]!r}")
    _, tcount, scount = (int(g) for g in m.groups())
    body = lines[1:]
    if len(body) != tcount:
        raise ParseError(f"header announces {tcount} transitions, found {len(body)}")
    if names is not None:
        if len(names) != scount:
            raise ParseError(f"{scount} states but {len(names)} names")
        state_ids = tuple(names)
    else:
        state_ids = tuple(str(i) for i in range(scount))

    transitions = []
    seen = set()
    alphabet = set()
    for ln in body:
        em = _EDGE_RE.match(ln)
        if not em:
            raise ParseError(f"malformed transition line: {ln!r}")
        src, quoted, bare, tgt = em.groups()
        src, tgt = int(src), int(tgt)
        raw_label = quoted if quoted is not None else bare.strip()
        if src >= scount or tgt >= scount:
            raise ParseError(f"state index out of range in: {ln!r}")
        label = TAU if raw_label == "tau" else raw_label
        if label is not TAU:
            alphabet.add(label)
        triple = (state_ids[src], label, state_ids[tgt])
        if triple in seen:
            warnings.warn(f"duplicate transition {transition_str(*triple)} dropped")
            continue
        seen.add(triple)
        transitions.append(triple)
    return Lts.make(state_ids, alphabet, transitions)


def serialize_aut(lts: Lts) -> str:
    """Canonical Aldebaran text; inverse of parse_aut on canonical files."""
    index = {s: i for i, s in enumerate(lts.states)}
    rows = sorted(
        (index[src], label_str(lab), index[tgt]) for (src, lab, tgt) in lts.transitions
    )
    lines = [f"des (0, {len(rows)}, {len(lts.states)})"]
    lines.extend(f'({src},"{lab}",{tgt})' for (src, lab, tgt) in rows)
    return "\n".join(lines) + "\n"


def parse_names(text: str) -> tuple:
    return tuple(ln for ln in (raw.strip() for raw in text.splitlines()) if ln and not ln.startswith("#"))


def parse_fairness(text: str, lts: Lts):
    """Parse a fairness sidecar (JSON) against a system's state names."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad fairness sidecar: {exc}") from exc
    names = doc.get("names")
    if names is not None:
        rename = {str(i): n for i, n in enumerate(names)}
        resolve = lambda s: rename.get(s, s)  # noqa: E731
    else:
        resolve = lambda s: s  # noqa: E731
    known = set(lts.states)

    def states_of(items):
        out = []
        for s in items:
            s = resolve(s)
            if s not in known:
                raise ParseError(f"fairness mentions unknown state {s!r}")
            out.append(s)
        return frozenset(out)

    kind = doc.get("kind")
    if kind == "streett":
        pairs = tuple((states_of(L), states_of(U)) for (L, U) in doc.get("pairs", []))
        return StreettSpec(pairs)
    if kind == "always_after":
        gate = tuple(doc.get("gate", []))
        return AlwaysAfterSpec(int(doc["offset"]), states_of(doc["states"]), gate)
    raise ParseError(f"unknown fairness kind {kind!r}")


def parse_state_map(text: str, source: Lts, target: Lts, total: bool = True) -> dict:
    """Parse ``a -> b`` lines into a state map (total over source by default)."""
    f = {}
    for ln in (raw.strip() for raw in text.splitlines()):
        if not ln or ln.startswith("#"):
            continue
        if "->" not in ln:
            raise ParseError(f"malformed map line: {ln!r}")
        left, right = (part.strip() for part in ln.split("->", 1))
        if left not in set(source.states):
            raise ParseError(f"unknown source state {left!r}")
        if right not in set(target.states):
            raise ParseError(f"unknown target state {right!r}")
        if left in f and f[left] != right:
            raise ParseError(f"conflicting images for {left!r}")
        f[left] = right
    if total:
        missing = set(source.states) - set(f)
        if missing:
            raise ParseError(f"map not total: missing {sorted(missing)}")
    return f


def parse_relation_pairs(text: str, lts: Lts) -> frozenset:
    """Parse ``a ~ b`` lines into a set of ordered state pairs."""
    pairs = set()
    known = set(lts.states)
    for ln in (raw.strip() for raw in text.splitlines()):
        if not ln or ln.startswith("#"):
            continue
        if "~" not in ln:
            raise ParseError(f"malformed relation line: {ln!r}")
        left, right = (part.strip() for part in ln.split("~", 1))
        if left not in known or right not in known:
            raise ParseError(f"unknown state in relation line: {ln!r}")
        pairs.add((left, right))
    return frozenset(pairs)
