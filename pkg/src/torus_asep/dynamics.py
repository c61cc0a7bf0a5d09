"""Transition rules, generator assembly, and reachability machinery.

Transitions are always initiated by a bullet.  With bullet k at position b
(0-based) on the ring:

* F1 (rate p_k): the letter at b+1 is a box with label i != k; bullet and box
  swap.
* F2 (rate p_k): the letter at b+1 is a box with label k; the bullet steps
  right, the block of boxes between bullet k-1 and bullet k shifts right by
  one, and the displaced box is relabelled k-1 and lands immediately right of
  bullet k-1.
* B1, B2 (rate q_k): the mirrored rules acting on the letter at b-1, with the
  displaced box of B2 relabelled k+1 and landing immediately left of bullet
  k+1.

For n = 1 the "previous bullet" of F2 (and "next bullet" of B2) is the moving
bullet itself, read after its own step; the net effect is a plain swap with
the adjacent box plus a relabelling-free rotation of the gap contents.
Every transition carries per-particle displacement records; the signed step
of each record determines exactly which column boundaries the particle
crossed, which feeds the current estimators.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import ColoredWord, box_gap_labels, enumerate_full, ensure_valid, restricted_count
from .symbolic import Polynomial, RatePoint, rate_symbol_poly

DEFAULT_STATE_CAP = 2_000_000

F1, F2, B1, B2 = "F1", "F2", "B1", "B2"


class ResourceCapError(RuntimeError):
    """Raised when a requested state space exceeds the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"state space has {count} states, above the cap {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Displacement:
    """One particle's move inside a transition.

    ``step`` is the signed number of ring steps actually walked, so
    ``pos_to == (pos_from + step) mod L``; its sign disambiguates the
    direction when the walk wraps around the seam.  ``jump`` marks the
    relabelled box of a nonlocal move, which changes row mid-flight (for a
    single row the relabelling is invisible, so the flag is authoritative).
    """

    species: str  # "bullet" | "box"
    label_from: int
    label_to: int
    pos_from: int
    pos_to: int
    step: int
    jump: bool = False


@dataclass(frozen=True)
class Transition:
    source: ColoredWord
    target: ColoredWord
    kind: str
    row: int
    rate_symbol: tuple[str, int]
    displacements: tuple[Displacement, ...]


def displacement_crossings(d: Displacement, L: int) -> list[tuple[int, int]]:
    """Signed boundary crossings: boundary j sits between columns j and j+1 mod L."""
    out = []
    if d.step > 0:
        for t in range(d.step):
            out.append(((d.pos_from + t) % L, 1))
    else:
        for t in range(-d.step):
            out.append(((d.pos_from - 1 - t) % L, -1))
    return out


def _forward_transition(w: ColoredWord, k: int, pos: tuple[int, ...]) -> Transition | None:
    n, L = w.n, w.length
    letters = w.letters
    b = pos[k - 1]
    right = letters[(b + 1) % L]
    if right > 0:
        return None
    i = -right
    new = list(letters)
    moves = [Displacement("bullet", k, k, b, (b + 1) % L, 1)]
    if i != k:
        new[(b + 1) % L] = k
        new[b] = right
        moves.append(Displacement("box", i, i, (b + 1) % L, b, -1))
        kind = F1
    else:
        k_prev = k - 1 if k > 1 else n
        a = pos[k_prev - 1]
        if n > 1:
            landing = (a + 1) % L
            c_start, c_len = (a + 1) % L, (b - a - 1) % L
        else:
            landing = (b + 2) % L
            c_start, c_len = (b + 2) % L, L - 2
        new[(b + 1) % L] = k
        for t in range(c_len):
            x = (c_start + t) % L
            new[(x + 1) % L] = letters[x]
            moves.append(Displacement("box", -letters[x], -letters[x], x, (x + 1) % L, 1))
        new[landing] = -k_prev
        back = ((b + 1) - landing) % L
        moves.append(Displacement("box", k, k_prev, (b + 1) % L, landing, -back, jump=True))
        kind = F2
    return Transition(w, ColoredWord(n, tuple(new)), kind, k, ("p", k), tuple(moves))


def _backward_transition(w: ColoredWord, k: int, pos: tuple[int, ...]) -> Transition | None:
    n, L = w.n, w.length
    letters = w.letters
    b = pos[k - 1]
    left = letters[(b - 1) % L]
    if left > 0:
        return None
    i = -left
    new = list(letters)
    moves = [Displacement("bullet", k, k, b, (b - 1) % L, -1)]
    if i != k:
        new[(b - 1) % L] = k
        new[b] = left
        moves.append(Displacement("box", i, i, (b - 1) % L, b, 1))
        kind = B1
    else:
        k_next = k + 1 if k < n else 1
        c = pos[k_next - 1]
        if n > 1:
            landing = (c - 1) % L
            c_start, c_len = (b + 1) % L, (c - b - 1) % L
        else:
            landing = (b - 2) % L
            c_start, c_len = (b + 1) % L, L - 2
        new[(b - 1) % L] = k
        for t in range(c_len):
            x = (c_start + t) % L
            new[(x - 1) % L] = letters[x]
            moves.append(Displacement("box", -letters[x], -letters[x], x, (x - 1) % L, -1))
        new[landing] = -k_next
        fwd = (landing - (b - 1)) % L
        moves.append(Displacement("box", k, k_next, (b - 1) % L, landing, fwd, jump=True))
        kind = B2
    return Transition(w, ColoredWord(n, tuple(new)), kind, k, ("q", k), tuple(moves))


def outgoing_transitions(w: ColoredWord) -> list[Transition]:
    """All transitions leaving w: per bullet label, forward then backward."""
    ensure_valid(w)
    pos = w.bullet_positions()
    out = []
    for k in range(1, w.n + 1):
        t = _forward_transition(w, k, pos)
        if t is not None:
            out.append(t)
        t = _backward_transition(w, k, pos)
        if t is not None:
            out.append(t)
    return out


def replay_displacements(t: Transition) -> ColoredWord:
    """Rebuild the target from the source plus the displacement records."""
    L = t.source.length
    new: list[int | None] = list(t.source.letters)
    for d in t.displacements:
        assert (d.pos_from + d.step) % L == d.pos_to, "step does not reach the target position"
        new[d.pos_from] = None
    for d in t.displacements:
        sign = 1 if d.species == "bullet" else -1
        assert new[d.pos_to] is None, "two particles land on one cell"
        new[d.pos_to] = sign * d.label_to
    assert all(c is not None for c in new), "a vacated cell was never refilled"
    return ColoredWord(t.source.n, tuple(new))  # type: ignore[arg-type]


# -- generator -----------------------------------------------------------------


@dataclass
class SparseGenerator:
    """Column-stochastic rate matrix over an enumerated state space.

    Column j holds the outflows of state j: the off-diagonal entry keyed
    (source, target) is the total rate source -> target, and the diagonal
    entry of a column is minus the column's off-diagonal sum, so every
    column sums to zero exactly.
    """

    L: int
    n: int
    states: list[ColoredWord]
    index: dict[ColoredWord, int]
    transitions: list[list[Transition]]
    rates: RatePoint | None  # None = symbolic entries
    entries: dict[tuple[int, int], Polynomial | Fraction]
    diagonal: list[Polynomial | Fraction]

    @property
    def num_states(self) -> int:
        return len(self.states)

    def column_sum(self, j: int):
        total = self.diagonal[j]
        for (src, _), value in self.entries.items():
            if src == j:
                total = total + value
        return total

    def column_sums_are_zero(self) -> bool:
        zero = Polynomial.zero(self.n) if self.rates is None else Fraction(0)
        sums = [self.diagonal[j] for j in range(self.num_states)]
        for (src, _), value in self.entries.items():
            sums[src] = sums[src] + value
        return all(s == zero for s in sums)

    def triplet_rows(self) -> list[tuple[int, int, str]]:
        """Sparse export: (source index, target index, rate string)."""
        rows = [
            (src, tgt, str(value))
            for (src, tgt), value in sorted(self.entries.items())
        ]
        rows.extend((j, j, str(self.diagonal[j])) for j in range(self.num_states))
        return rows

    def state_manifest(self) -> list[tuple[int, str]]:
        return [(j, w.to_text()) for j, w in enumerate(self.states)]


def build_generator(
    L: int,
    n: int,
    rates: RatePoint | None = None,
    cap: int = DEFAULT_STATE_CAP,
    states: list[ColoredWord] | None = None,
) -> SparseGenerator:
    """Assemble the generator over the full state space (or a given subset)."""
    subset_mode = states is not None
    if states is None:
        count = L * restricted_count(L, n)
        if count > cap:
            raise ResourceCapError(count, cap)
        states = enumerate_full(L, n)
    index = {w: j for j, w in enumerate(states)}
    zero = Polynomial.zero(n) if rates is None else Fraction(0)
    entries: dict[tuple[int, int], Polynomial | Fraction] = {}
    diagonal = [zero] * len(states)
    all_transitions: list[list[Transition]] = []
    for j, w in enumerate(states):
        outs = []
        for t in outgoing_transitions(w):
            value = (
                rate_symbol_poly(n, t.rate_symbol)
                if rates is None
                else rates.rate(t.rate_symbol)
            )
            if t.target not in index:
                # A transition may leave an explicit state subset only if its
                # rate vanishes identically (e.g. a zeroed backward rate).
                if not subset_mode or value != zero:
                    raise ValueError(
                        "state set is not closed under the positive-rate dynamics: "
                        f"{w.to_text()} -> {t.target.to_text()}"
                    )
                continue
            if value == zero:
                continue
            outs.append(t)
            key = (j, index[t.target])
            entries[key] = entries.get(key, zero) + value
            diagonal[j] = diagonal[j] - value
        all_transitions.append(outs)
    return SparseGenerator(L, n, states, index, all_transitions, rates, entries, diagonal)


# -- excess and reachability -----------------------------------------------------


def excess(w: ColoredWord) -> int:
    """Sum over boxes of the cyclic label offset to the nearest bullet on the left.

    A box with label i whose gap label is g contributes (g - i) mod n; the
    total vanishes exactly on basic states.
    """
    ensure_valid(w)
    n = w.n
    return sum((g - i) % n for _, i, g in box_gap_labels(w))


def tau_zero(L: int, n: int) -> ColoredWord:
    """The reference state: bullets 1..n in a block, then boxes all labelled n."""
    letters = tuple(range(1, n + 1)) + (-n,) * (L - n)
    return ColoredWord(n, letters)


@dataclass
class ReachabilityReport:
    ok: bool
    direction: str
    num_states: int
    num_reached: int
    witness_start: ColoredWord
    witness_path: list[Transition]


def reachability_tau0(
    L: int, n: int, direction: str = "from", cap: int = DEFAULT_STATE_CAP
) -> ReachabilityReport:
    """BFS certificate that tau0 reaches (direction 'from') or is reached by
    (direction 'to') every state; the witness path realizes the deepest state."""
    if direction not in ("from", "to"):
        raise ValueError("direction must be 'from' or 'to'")
    count = L * restricted_count(L, n)
    if count > cap:
        raise ResourceCapError(count, cap)
    states = enumerate_full(L, n)
    index = {w: j for j, w in enumerate(states)}
    outs = [outgoing_transitions(w) for w in states]
    adjacency: list[list[tuple[int, Transition]]] = [[] for _ in states]
    for j, transitions in enumerate(outs):
        for t in transitions:
            tgt = index[t.target]
            if direction == "from":
                adjacency[j].append((tgt, t))
            else:
                adjacency[tgt].append((j, t))
    root = index[tau_zero(L, n)]
    parent: dict[int, tuple[int, Transition] | None] = {root: None}
    frontier = [root]
    order = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v, t in adjacency[u]:
                if v not in parent:
                    parent[v] = (u, t)
                    nxt.append(v)
                    order.append(v)
        frontier = nxt
    deepest = order[-1]
    path: list[Transition] = []
    node = deepest
    while parent[node] is not None:
        prev, t = parent[node]  # type: ignore[misc]
        path.append(t)
        node = prev
    if direction == "from":
        path.reverse()
        start = states[root]
    else:
        start = states[deepest]
    return ReachabilityReport(
        ok=len(parent) == len(states),
        direction=direction,
        num_states=len(states),
        num_reached=len(parent),
        witness_start=start,
        witness_path=path,
    )


# -- totally asymmetric restriction ---------------------------------------------


def _cyclic_open_closed(i: int, k: int, n: int) -> frozenset[int]:
    """Labels strictly after i up to and including k, walking forward mod n."""
    out = set()
    j = i
    while j != k:
        j = j % n + 1
        out.add(j)
    return frozenset(out)


def ta_membership(w: ColoredWord, zero_q: frozenset[int]) -> bool:
    """True if the stationary weight of w survives setting q_m = 0 for m in the set.

    A box with label i in gap g carries the factor q_m exactly when m lies in
    the cyclic label interval (i, g]; membership requires that interval to
    avoid every zeroed label, for every box.
    """
    for _, i, g in box_gap_labels(w):
        if _cyclic_open_closed(i, g, w.n) & zero_q:
            return False
    return True


@dataclass
class ClosureCertificate:
    ok: bool
    zero_q: frozenset[int]
    states_checked: int
    transitions_checked: int
    violations: list[tuple[ColoredWord, Transition]]


def allowed_transitions_ta(w: ColoredWord, zero_q: frozenset[int]) -> list[Transition]:
    """Outgoing transitions once the backward moves of the zeroed rows are removed."""
    return [
        t
        for t in outgoing_transitions(w)
        if not (t.rate_symbol[0] == "q" and t.rate_symbol[1] in zero_q)
    ]


def restrict_ta(
    L: int, n: int, zero_q, cap: int = DEFAULT_STATE_CAP
) -> tuple[list[ColoredWord], ClosureCertificate]:
    """States with nonvanishing weight when q_m = 0 for m in zero_q, plus a
    certificate that the surviving dynamics never leaves the set."""
    zero_q = frozenset(zero_q)
    if not all(isinstance(m, int) and 1 <= m <= n for m in zero_q):
        raise ValueError(f"zeroed labels must lie in 1..{n}")
    count = L * restricted_count(L, n)
    if count > cap:
        raise ResourceCapError(count, cap)
    states = [w for w in enumerate_full(L, n) if ta_membership(w, zero_q)]
    members = set(states)
    violations = []
    checked = 0
    for w in states:
        for t in allowed_transitions_ta(w, zero_q):
            checked += 1
            if t.target not in members:
                violations.append((w, t))
    certificate = ClosureCertificate(
        ok=not violations,
        zero_q=zero_q,
        states_checked=len(states),
        transitions_checked=checked,
        violations=violations,
    )
    return states, certificate
