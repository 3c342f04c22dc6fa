"""Distributed non-interference checks.

A term is secure when no high transition changes the low observable
state: for every reachable marking, firing a high transition must lead
to a marking that is branching team equivalent to the source once all
high actions are restricted away.  Three procedures decide this, from
the literal definition to a per-transition structural check to a
per-component decomposition, and they must agree.
"""

import time
from dataclasses import dataclass, field

from .equiv import (
    branching_bisim, markings_equiv, rooted_partition, strong_partition,
)
from .net import (
    Marking, Net, build_lts, build_net, reach_graph, restrict_net,
    restriction_map,
)
from .syntax import Nil, Par, Spec, Term, show, sort


@dataclass(frozen=True)
class Witness:
    """One insecure high step.

    transition names the offending high transition by place names;
    context gives the rest of the marking it fired in, when the check
    explored markings at all.
    """

    transition: tuple
    context: Marking | None
    reason: str

    def __str__(self):
        where = f" in context {self.context}" if self.context else ""
        pre, label, post = self.transition
        target = post if post is not None else "(empty)"
        return f"{pre} --{label}--> {target}{where}: {self.reason}"


@dataclass(frozen=True)
class Verdict:
    """Outcome of a security check; secure holds iff witnesses is empty."""

    method: str
    secure: bool
    witnesses: tuple = ()
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.secure != (not self.witnesses):
            raise ValueError("a verdict is secure exactly when no witness exists")

    @classmethod
    def decide(cls, method, witnesses, **stats):
        witnesses = tuple(witnesses)
        return cls(method, not witnesses, witnesses, dict(stats))


def _restricted_world(spec: Spec, net: Net, rooted: bool = False):
    """The restricted net, the equivalence over it, and the place map."""
    restricted = restrict_net(net, spec.high_names)
    part = branching_bisim(restricted)
    if rooted:
        part = rooted_partition(restricted, part)
    return restricted, part, restriction_map(net, restricted)


def _named_transition(net: Net, t):
    return (net.names[t.pre], str(t.label),
            None if t.post is None else net.names[t.post])


def dni_definitional(spec: Spec, limit: int = 10 ** 6) -> Verdict:
    """Enumerate every reachable marking and try every high step from it.

    Exact but exponential: the marking count explodes with parallel
    width.  Raises StateLimitError beyond the configured cap.
    """
    net = build_net(spec)
    restricted, part, to_restricted = _restricted_world(spec, net)

    def translate(m):
        return Marking((to_restricted[p], c) for p, c in m.items())

    markings, edges = reach_graph(net, limit=limit)
    witnesses = []
    for source, t, target in edges:
        if not t.label.is_high:
            continue
        before, after = markings[source], markings[target]
        if not markings_equiv(restricted, part, translate(before), translate(after)):
            context = net.name_marking(before - Marking.of(t.pre))
            witnesses.append(Witness(
                _named_transition(net, t), context,
                "the marking after this high step is observably different"))
    return Verdict.decide("definitional", witnesses,
                          markings=len(markings), steps=len(edges))


def dni_structural(spec: Spec, rooted: bool = False) -> Verdict:
    """Check each high transition once, against the restricted equivalence.

    The net is reduced, every place can carry a token, and team
    equivalence respects addition and subtraction of equivalent tokens,
    so one check of input place against output place per high
    transition settles every reachable context at once.  No marking
    enumeration happens here; the work is polynomial in the net.
    """
    method = "rooted" if rooted else "structural"
    net = build_net(spec)
    restricted, part, to_restricted = _restricted_world(spec, net, rooted)

    witnesses = []
    for t in net.transitions:
        if not t.label.is_high:
            continue
        if t.post is None:
            witnesses.append(Witness(
                _named_transition(net, t), None,
                "this high step consumes its token, which is observable"))
            continue
        pre, post = to_restricted[t.pre], to_restricted[t.post]
        if not part.same_class(pre, post):
            witnesses.append(Witness(
                _named_transition(net, t), None,
                "input and output place differ once high actions are hidden"))
    return Verdict.decide(method, witnesses, transitions=len(net.transitions))


def components(term: Term) -> list:
    """Distinct sequential components of a parallel term, sorted."""
    found = {}

    def walk(u):
        match u:
            case Nil():
                pass
            case Par(left, right):
                walk(left)
                walk(right)
            case _:
                found.setdefault(show(u), u)

    walk(term)
    return [term for _, term in sorted(found.items())]


def dni_compositional(spec: Spec) -> Verdict:
    """Check each distinct parallel component of main on its own.

    Security is compositional over parallel composition: the whole term
    is secure exactly when every sequential component is, so shared
    components are checked once.
    """
    witnesses = []
    checked = 0
    for component in components(spec.main):
        checked += 1
        verdict = dni_structural(spec.with_main(component))
        for w in verdict.witnesses:
            witnesses.append(Witness(
                w.transition, w.context,
                f"component {show(component)}: {w.reason}"))
    return Verdict.decide("compositional", witnesses, components=checked)


def rooted_dni(spec: Spec) -> Verdict:
    """The rooted strengthening: initial moves count even before any
    silent step, so a high transition must keep its place's immediate
    observable offer."""
    return dni_structural(spec, rooted=True)


def sbndc_interleaving(spec: Spec, limit: int = 10 ** 6) -> Verdict:
    """The interleaving cousin: on the transition system of main, every
    high step must connect strongly bisimilar states after all high
    edges are pruned.  Blind to the distribution of the state across
    parallel components."""
    lts = build_lts(spec, limit=limit)
    low_edges = [e for e in lts.edges if not e[1].is_high]
    class_of = strong_partition(len(lts.states), low_edges)

    witnesses = []
    seen = set()
    for source, action, target in lts.edges:
        if not action.is_high or (source, action, target) in seen:
            continue
        seen.add((source, action, target))
        if class_of[source] != class_of[target]:
            witnesses.append(Witness(
                (lts.names[source], str(action), lts.names[target]), None,
                "the states before and after this high step are "
                "distinguishable through low actions"))
    return Verdict.decide("sbndc", witnesses, states=len(lts.states))


def check_all(spec: Spec, limit: int = 10 ** 6, sbndc: bool = False) -> list:
    """Run every procedure and return their verdicts, timed."""
    procedures = [
        ("definitional", lambda: dni_definitional(spec, limit)),
        ("structural", lambda: dni_structural(spec)),
        ("compositional", lambda: dni_compositional(spec)),
        ("rooted", lambda: rooted_dni(spec)),
    ]
    if sbndc:
        procedures.append(("sbndc", lambda: sbndc_interleaving(spec, limit)))
    verdicts = []
    for _, run in procedures:
        started = time.perf_counter()
        verdict = run()
        verdict.stats["seconds"] = round(time.perf_counter() - started, 6)
        verdicts.append(verdict)
    return verdicts


def high_free(spec: Spec) -> bool:
    """True when main cannot ever perform a high action."""
    return not any(a.is_high for a in sort(spec.main, spec))
