"""Finite-state-machine Petri nets for CFM terms.

Every transition consumes exactly one token from one place and produces
at most one token in one place, so nets are bounded by the size of the
initial marking and a sequential term always owns exactly one token.
Places are identified by the canonical rendering of sequential terms.
"""

import json
from collections import deque
from typing import NamedTuple

from .syntax import (
    TAU, Action, Const, Nil, Par, Prefix, Spec, Sum, Term, show,
)


class NotEnabledError(ValueError):
    """Firing was attempted for a transition without its input token."""


class StateLimitError(RuntimeError):
    """An exhaustive exploration hit its configured marking cap."""

    def __init__(self, limit):
        super().__init__(f"state space exceeds the cap of {limit} markings")
        self.limit = limit


# ---------------------------------------------------------------------------
# markings

class Marking:
    """An immutable finite multiset of places.

    Places may be names or interned indexes; a marking never mixes the
    two.  The empty marking doubles as the target of transitions whose
    token disappears.
    """

    __slots__ = ("_counts", "_key")

    def __init__(self, entries=()):
        counts = {}
        items = entries.items() if isinstance(entries, dict) else entries
        for place, count in items:
            if count < 0:
                raise ValueError("multiplicities are nonnegative")
            if count:
                counts[place] = counts.get(place, 0) + count
        self._counts = counts
        self._key = tuple(sorted(counts.items()))

    @classmethod
    def of(cls, *places):
        return cls((p, 1) for p in places)

    @property
    def size(self):
        return sum(self._counts.values())

    def dom(self):
        return tuple(place for place, _ in self._key)

    def items(self):
        return self._key

    def count(self, place):
        return self._counts.get(place, 0)

    __getitem__ = count

    def __contains__(self, place):
        return place in self._counts

    def __iter__(self):
        return iter(self._key)

    def __bool__(self):
        return bool(self._counts)

    def __add__(self, other):
        return Marking(list(self._key) + list(other._key))

    def __sub__(self, other):
        # truncated difference: counts never drop below zero
        return Marking((p, c - other.count(p)) for p, c in self._key
                       if c > other.count(p))

    def scaled(self, factor):
        if factor < 0:
            raise ValueError("multiplicities are nonnegative")
        return Marking((p, c * factor) for p, c in self._key)

    __rmul__ = scaled

    def __le__(self, other):
        return all(c <= other.count(p) for p, c in self._key)

    def __eq__(self, other):
        return isinstance(other, Marking) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        if not self._counts:
            return "Marking()"
        inner = ", ".join(f"{p!r}: {c}" for p, c in self._key)
        return f"Marking({{{inner}}})"

    def __str__(self):
        if not self._counts:
            return "(empty)"
        return " | ".join(p if c == 1 else f"{c}*{p}" for p, c in self._key)


THETA = Marking()


def dec(t: Term) -> Marking:
    """Decompose a term into its marking of sequential components.

    0 contributes nothing, parallel composition adds up, and any other
    term is itself one place.  The stuck choice 0 + 0 therefore keeps a
    token while 0 does not.
    """
    match t:
        case Nil():
            return THETA
        case Par(left, right):
            return dec(left) + dec(right)
        case _:
            return Marking.of(show(t))


# ---------------------------------------------------------------------------
# nets

class Transition(NamedTuple):
    pre: int
    label: Action
    post: int | None  # None is the empty post-set


def _transition_key(t: Transition):
    return (t.pre, t.label, t.post is not None, t.post or 0)


class Net:
    """An immutable net over interned places.

    Place indexes follow the sorted order of place names, transitions
    are sorted as well, so structurally equal nets compare and render
    identically.  `reachable` flags the places a token can ever visit
    from the initial marking; construction keeps unreachable places
    because restriction wants to rename every place it was given.
    """

    __slots__ = ("names", "index", "transitions", "initial", "labels",
                 "reachable", "_out")

    def __init__(self, names, transitions, initial, labels=None):
        self.names = tuple(sorted(set(names)))
        self.index = {name: i for i, name in enumerate(self.names)}
        interned = set()
        for pre, label, post in transitions:
            if pre not in self.index or (post is not None and post not in self.index):
                raise ValueError(f"transition {(pre, str(label), post)} mentions an unknown place")
            interned.add(Transition(self.index[pre], label,
                                    None if post is None else self.index[post]))
        self.transitions = tuple(sorted(interned, key=_transition_key))
        for place in initial.dom():
            if place not in self.index:
                raise ValueError(f"initial marking mentions an unknown place {place!r}")
        self.initial = Marking((self.index[p], c) for p, c in initial.items())
        self.labels = frozenset(labels) if labels is not None else \
            frozenset(t.label for t in self.transitions)
        out = [[] for _ in self.names]
        for i, t in enumerate(self.transitions):
            out[t.pre].append(i)
        self._out = tuple(tuple(ts) for ts in out)
        self.reachable = self._reachable_places()

    def _reachable_places(self):
        # one token can always fire: place-level reachability coincides
        # with occurrence in some reachable marking
        seen = set(p for p, _ in self.initial.items())
        frontier = list(seen)
        while frontier:
            place = frontier.pop()
            for i in self._out[place]:
                post = self.transitions[i].post
                if post is not None and post not in seen:
                    seen.add(post)
                    frontier.append(post)
        return frozenset(seen)

    def out(self, place: int):
        """Transitions with the given input place."""
        return tuple(self.transitions[i] for i in self._out[place])

    def name_marking(self, m: Marking) -> Marking:
        return Marking((self.names[p], c) for p, c in m.items())

    def intern_marking(self, m: Marking) -> Marking:
        return Marking((self.index[p], c) for p, c in m.items())

    def __eq__(self, other):
        return (isinstance(other, Net)
                and self.names == other.names
                and self.transitions == other.transitions
                and self.initial == other.initial)

    def __hash__(self):
        return hash((self.names, self.transitions, self.initial))

    def __repr__(self):
        return (f"Net({len(self.names)} places, {len(self.transitions)} transitions, "
                f"{self.initial.size} tokens)")


def fire(net: Net, m: Marking, t: Transition) -> Marking:
    """Fire t at m: consume the input token, produce the output token."""
    if m.count(t.pre) < 1:
        raise NotEnabledError(f"{net.names[t.pre]} holds no token")
    return (m - Marking.of(t.pre)) + (THETA if t.post is None else Marking.of(t.post))


def reach(net: Net, start: Marking = None, limit: int = 10 ** 6) -> list:
    """All reachable markings in breadth-first order (deduplicated)."""
    markings, _ = reach_graph(net, start, limit)
    return markings


def reach_graph(net: Net, start: Marking = None, limit: int = 10 ** 6) -> tuple:
    """Reachable markings plus the firing edges between them.

    Returns (markings, edges) where edges hold (source index,
    transition, target index); indexes refer to the markings list.
    """
    m0 = net.initial if start is None else start
    markings = [m0]
    index = {m0: 0}
    edges = []
    cursor = 0
    while cursor < len(markings):
        m = markings[cursor]
        for place, _ in m.items():
            for t in net.out(place):
                m2 = fire(net, m, t)
                j = index.get(m2)
                if j is None:
                    if len(markings) >= limit:
                        raise StateLimitError(limit)
                    j = len(markings)
                    index[m2] = j
                    markings.append(m2)
                edges.append((cursor, t, j))
        cursor += 1
    return markings, edges


def silent_closure(net: Net, place: int) -> frozenset:
    """Everything reachable from place through tau transitions.

    The result contains places and possibly None, the empty marking,
    and always contains the starting place itself.
    """
    seen = {place}
    frontier = [place]
    while frontier:
        p = frontier.pop()
        for t in net.out(p):
            if t.label.is_tau and t.post not in seen:
                seen.add(t.post)
                if t.post is not None:
                    frontier.append(t.post)
    return frozenset(seen)


# ---------------------------------------------------------------------------
# compiling terms to nets

def build_net(spec: Spec, term: Term = None) -> Net:
    """Compile a term (spec.main by default) into its net.

    The construction is structural.  A prefix contributes its own place
    and one transition into the decomposition of its body.  A choice
    gets a fresh place whose outgoing transitions copy those of the two
    summand root places; a summand root that no transition ever
    produces again is dropped together with its outgoing transitions.
    A constant behaves like its body with the root renamed to the
    constant itself, and a constant already under construction becomes
    a stub place that the enclosing recursion ties back.  Parallel
    composition is plain union.  A final sweep discards anything a
    token cannot reach, which by construction should already be gone.
    """
    t = spec.main if term is None else term
    memo = {}

    def walk(u, scanned):
        key = (show(u), scanned)
        hit = memo.get(key)
        if hit is not None:
            return hit
        match u:
            case Nil():
                result = (frozenset(), frozenset(), frozenset())
            case Prefix(action, body):
                places, trans, labels = walk(body, scanned)
                target = dec(body)
                post = target.dom()[0] if target else None
                result = (places | {show(u)},
                          trans | {(show(u), action, post)},
                          labels | {action})
            case Sum(left, right):
                root = show(u)
                places, trans = {root}, set()
                labels = frozenset()
                fresh = set()
                for side in (left, right):
                    s_places, s_trans, s_labels = walk(side, scanned)
                    side_root = None if isinstance(side, Nil) else show(side)
                    produced = any(post == side_root for _, _, post in s_trans)
                    fresh |= {(root, a, post)
                              for pre, a, post in s_trans if pre == side_root}
                    if not produced and side_root is not None:
                        s_places = s_places - {side_root}
                        s_trans = {x for x in s_trans if x[0] != side_root}
                    places |= s_places
                    trans |= s_trans
                    labels |= s_labels
                result = (frozenset(places), frozenset(trans | fresh), labels)
            case Const(name):
                if name in scanned:
                    result = (frozenset([name]), frozenset(), frozenset())
                else:
                    body = spec.body_of(name)
                    places, trans, labels = walk(body, scanned | {name})
                    body_root = None if isinstance(body, Nil) else show(body)
                    produced = any(post == body_root for _, _, post in trans)
                    fresh = {(name, a, post)
                             for pre, a, post in trans if pre == body_root}
                    if not produced and body_root is not None:
                        places = places - {body_root}
                        trans = {x for x in trans if x[0] != body_root}
                    result = (places | {name}, trans | fresh, labels)
            case Par(left, right):
                p1, t1, l1 = walk(left, scanned)
                p2, t2, l2 = walk(right, scanned)
                result = (p1 | p2, t1 | t2, l1 | l2)
            case _:
                raise TypeError(f"not a term: {u!r}")
        memo[key] = result
        return memo[key]

    places, transitions, labels = walk(t, frozenset())
    initial = dec(t)

    # defensive sweep: keep only what a token can reach
    seen = set(initial.dom())
    frontier = list(seen)
    by_pre = {}
    for tr in transitions:
        by_pre.setdefault(tr[0], []).append(tr)
    while frontier:
        place = frontier.pop()
        for _, _, post in by_pre.get(place, ()):
            if post is not None and post not in seen:
                seen.add(post)
                frontier.append(post)
    places = {p for p in places if p in seen}
    transitions = {tr for tr in transitions if tr[0] in seen}

    return Net(places, transitions, initial, labels)


# ---------------------------------------------------------------------------
# restriction at the net level

RESTRICT_MARK = " \\H"


def restricted_name(name: str) -> str:
    return name + RESTRICT_MARK


def restrict_net(net: Net, high_names) -> Net:
    """Drop every transition labelled with a high action and rename places.

    All places survive under their restricted names, even those no
    token can reach any more, so callers can translate any place of the
    original net into the restricted one.
    """
    blocked = {str(name) for name in high_names}
    names = [restricted_name(n) for n in net.names]
    transitions = [
        (restricted_name(net.names[t.pre]), t.label,
         None if t.post is None else restricted_name(net.names[t.post]))
        for t in net.transitions if str(t.label) not in blocked
    ]
    initial = Marking((restricted_name(net.names[p]), c)
                      for p, c in net.initial.items())
    labels = frozenset(a for a in net.labels if str(a) not in blocked)
    return Net(names, transitions, initial, labels)


def restriction_map(net: Net, restricted: Net) -> dict:
    """Map each place index of net onto its index in the restricted net."""
    return {i: restricted.index[restricted_name(name)]
            for i, name in enumerate(net.names)}


# ---------------------------------------------------------------------------
# the term-level transition system

def lts_step(t: Term, spec: Spec) -> list:
    """One-step successors of t with their actions, deduplicated.

    Choice offers the moves of both summands and disappears, parallel
    composition interleaves, and a constant moves like its body.
    """
    seen = set()
    result = []

    def emit(action, successor):
        key = (action, show(successor))
        if key not in seen:
            seen.add(key)
            result.append((action, successor))

    def walk(u, wrap):
        match u:
            case Nil():
                pass
            case Prefix(action, body):
                emit(action, wrap(body))
            case Sum(left, right):
                walk(left, wrap)
                walk(right, wrap)
            case Const(name):
                walk(spec.body_of(name), wrap)
            case Par(left, right):
                walk(left, lambda v, r=right: wrap(Par(v, r)))
                walk(right, lambda v, l=left: wrap(Par(l, v)))
            case _:
                raise TypeError(f"not a term: {u!r}")

    walk(t, lambda v: v)
    return result


class Lts(NamedTuple):
    """An explicit labelled transition system.

    states carries the underlying objects (terms here, but any values
    work), names their renderings, edges triples of state indexes with
    an action in the middle.
    """

    states: tuple
    names: tuple
    edges: tuple
    roots: tuple

    def out_edges(self, state: int):
        return tuple(e for e in self.edges if e[0] == state)


def build_lts(spec: Spec, roots=None, limit: int = 10 ** 6) -> Lts:
    """Explore the transition system from the given roots (main by default)."""
    root_terms = [spec.main] if roots is None else list(roots)
    states = []
    names = []
    index = {}
    edges = []

    def intern(term):
        key = show(term)
        if key not in index:
            if len(states) >= limit:
                raise StateLimitError(limit)
            index[key] = len(states)
            states.append(term)
            names.append(key)
        return index[key]

    frontier = deque(intern(t) for t in root_terms)
    explored = set()
    while frontier:
        i = frontier.popleft()
        if i in explored:
            continue
        explored.add(i)
        for action, successor in lts_step(states[i], spec):
            j = intern(successor)
            edges.append((i, action, j))
            if j not in explored:
                frontier.append(j)

    root_ids = tuple(index[show(t)] for t in root_terms)
    return Lts(tuple(states), tuple(names), tuple(edges), root_ids)


# ---------------------------------------------------------------------------
# serialization

def net_to_json(net: Net) -> dict:
    """Schema: places, then transitions as index records, then initial."""
    return {
        "places": list(net.names),
        "transitions": [
            {"pre": t.pre, "label": str(t.label), "post": t.post}
            for t in net.transitions
        ],
        "initial": [
            {"place": p, "count": c} for p, c in net.initial.items()
        ],
    }


def net_from_json(data: dict, high_names=()) -> Net:
    """Rebuild a net from net_to_json output; labels need the high alphabet."""
    blocked = {str(n) for n in high_names}

    def label_of(text):
        if text == str(TAU):
            return TAU
        return Action("high" if text in blocked else "low", text)

    names = list(data["places"])
    transitions = [
        (names[item["pre"]], label_of(item["label"]),
         None if item["post"] is None else names[item["post"]])
        for item in data["transitions"]
    ]
    initial = Marking((names[item["place"]], item["count"])
                      for item in data["initial"])
    return Net(names, transitions, initial)


def net_to_json_text(net: Net) -> str:
    return json.dumps(net_to_json(net), indent=2)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def net_to_dot(net: Net) -> str:
    """GraphViz rendering: circles for places, boxes for transitions."""
    lines = ["digraph net {", "  rankdir=LR;"]
    for i, name in enumerate(net.names):
        tokens = net.initial.count(i)
        # \n is a DOT escape, so splice it in after quoting or it gets escaped
        label = _dot_quote(name)
        if tokens:
            label = f"{label[:-1]}\\n{'•' * tokens}\""
        lines.append(f"  p{i} [shape=circle, label={label}];")
    for k, t in enumerate(net.transitions):
        lines.append(f"  t{k} [shape=box, label={_dot_quote(str(t.label))}];")
        lines.append(f"  p{t.pre} -> t{k};")
        if t.post is not None:
            lines.append(f"  t{k} -> p{t.post};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def lts_to_dot(lts: Lts) -> str:
    lines = ["digraph lts {", "  rankdir=LR;"]
    for i, name in enumerate(lts.names):
        shape = "doublecircle" if i in lts.roots else "circle"
        lines.append(f"  s{i} [shape={shape}, label={_dot_quote(name)}];")
    for src, action, dst in lts.edges:
        lines.append(f"  s{src} -> s{dst} [label={_dot_quote(str(action))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
