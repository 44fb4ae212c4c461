"""Words over action alphabets, plus the extra observation points used as poset elements.

A word is a finite sequence of labels ordered by the prefix relation.  The
silent label is a dedicated sentinel (``TAU``) so that it can never collide
with a visible action name; in files it is spelled ``tau``.  Besides words,
three further kinds of poset element appear in the semantic bases:

* ``StretchPoint(n)`` -- the time-indexed stretchable observation, one per
  positive tick of the truncated time axis;
* ``TAU_BAR`` -- the single stretchable observation sitting above the empty
  word in the observation poset for silent-step-sensitive semantics;
* ``LassoTrace`` -- an ultimately periodic infinite trace, standing in for
  the infinite words reached by fair runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PreconditionError


class _Tau:
    """Singleton sentinel for the silent label."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "tau"

    def __deepcopy__(self, memo):
        return self


TAU = _Tau()


def label_str(label) -> str:
    return "tau" if label is TAU else str(label)


def label_key(label):
    # Visible labels sort before the silent one; gives a stable total order.
    return (1, "") if label is TAU else (0, label)


@dataclass(frozen=True)
class Word:
    """A finite word, possibly containing the silent label."""

    letters: tuple = ()

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self.letters)
            object.__setattr__(self, "_hash", h)
        return h

    @staticmethod
    def of(*letters) -> "Word":
        return Word(tuple(letters))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def append(self, label) -> "Word":
        return Word(self.letters + (label,))

    def prefix(self, n: int) -> "Word":
        return Word(self.letters[:n])

    def prefixes(self):
        """All prefixes, shortest first (including self)."""
        return [Word(self.letters[:n]) for n in range(len(self.letters) + 1)]

    def is_prefix_of(self, other: "Word") -> bool:
        return self.letters == other.letters[: len(self.letters)]

    def meet(self, other: "Word") -> "Word":
        """Longest common prefix."""
        n = 0
        for a, b in zip(self.letters, other.letters):
            if a != b:
                break
            n += 1
        return Word(self.letters[:n])

    @property
    def has_tau(self) -> bool:
        return any(l is TAU for l in self.letters)

    def visible(self) -> "Word":
        """The word with all silent letters deleted."""
        return Word(tuple(l for l in self.letters if l is not TAU))

    def sort_key(self):
        return (len(self.letters), tuple(label_key(l) for l in self.letters))

    def __str__(self):
        if not self.letters:
            return "eps"
        return ".".join(label_str(l) for l in self.letters)


EPSILON = Word()


@dataclass(frozen=True)
class StretchPoint:
    """The stretchable empty observation at a positive time tick."""

    tick: int

    def __post_init__(self):
        if self.tick < 1:
            raise PreconditionError("stretch points exist only at ticks >= 1")

    def __str__(self):
        return f"tau_bar@{self.tick}"


class _TauBar:
    """Singleton for the stretchable observation in the visible-word poset."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "tau_bar"


TAU_BAR = _TauBar()


@dataclass(frozen=True)
class LassoTrace:
    """An ultimately periodic infinite trace: finite prefix plus repeated cycle.

    Stored in canonical form (shortest prefix, then shortest period), so two
    lassos denote the same infinite trace iff their ``LassoTrace`` are equal.
    """

    prefix: tuple
    cycle: tuple

    @staticmethod
    def canonical(prefix, cycle) -> "LassoTrace":
        prefix, cycle = list(prefix), list(cycle)
        if not cycle:
            raise PreconditionError("a lasso trace needs a nonempty cycle")
        for p in range(1, len(cycle) + 1):
            if len(cycle) % p == 0 and all(
                cycle[i] == cycle[i % p] for i in range(len(cycle))
            ):
                cycle = cycle[:p]
                break
        while prefix and prefix[-1] == cycle[-1]:
            prefix.pop()
            cycle = [cycle[-1]] + cycle[:-1]
        return LassoTrace(tuple(prefix), tuple(cycle))

    def label_at(self, i: int):
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def unroll(self, n: int) -> tuple:
        return tuple(self.label_at(i) for i in range(n))

    def word_prefix(self, n: int) -> Word:
        return Word(self.unroll(n))

    def __str__(self):
        pre = ".".join(label_str(l) for l in self.prefix)
        cyc = ".".join(label_str(l) for l in self.cycle)
        return f"{pre}({cyc})^w"


def hide(element, barred: bool = False):
    """Delete silent letters from a word; with ``barred`` also collapse every
    stretch point to the single stretchable observation."""
    if isinstance(element, Word):
        return element.visible()
    if isinstance(element, StretchPoint):
        if not barred:
            raise PreconditionError("stretch points only hide in barred mode")
        return TAU_BAR
    raise PreconditionError(f"cannot hide {element!r}")


def element_key(element):
    """A total sort key over poset elements that refines every poset order
    used in this package (smaller elements always sort first)."""
    if isinstance(element, int):
        return (0, element, ())
    if isinstance(element, Word):
        return (1, len(element), tuple(label_key(l) for l in element))
    if element is TAU_BAR:
        return (2, 0, ())
    if isinstance(element, StretchPoint):
        return (2, element.tick, ())
    if isinstance(element, LassoTrace):
        return (3, 0, (str(element),))
    raise PreconditionError(f"not a poset element: {element!r}")
