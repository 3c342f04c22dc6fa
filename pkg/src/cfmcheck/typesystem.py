"""A syntax-directed typing discipline that entails rooted security.

The rules walk the term structure: low and silent prefixes are always
fine, a high prefix must lead either to a stuck place or to more high
behaviour, and a choice containing a high branch must offer the same
restricted behaviour with and without that branch, which is decided
semantically.  Choices are searched modulo their reordering laws, so a
term is accepted whenever some rearrangement of its choices is.
"""

from dataclasses import dataclass, replace

from .equiv import terms_equiv
from .net import build_net
from .syntax import (
    NIL, PARALLEL, Const, Nil, Par, Prefix, Spec, Sum, Term, category,
    initials, normalize_sum, restrict_syntactic, show, summands, sum_of,
)


@dataclass(frozen=True)
class Derivation:
    """One applied rule; term is the (possibly rearranged) term it typed."""

    rule: str
    term: Term
    scanned: frozenset
    children: tuple = ()


@dataclass(frozen=True)
class TypingJudgment:
    term: Term
    scanned: frozenset
    typed: bool
    derivation: Derivation | None = None
    reason: str = ""
    failing: Term | None = None


def is_deadlock_place(t: Term, spec: Spec) -> bool:
    """True when t keeps its token but can never move.

    0 does not qualify: it decomposes to the empty marking instead of
    occupying a place.  For anything else sequential, the net of t is
    reachable from its single initial token, so t is stuck exactly when
    that net has no transitions at all.
    """
    if isinstance(t, Nil):
        return False
    if category(t) == PARALLEL:
        raise ValueError(f"expected a sequential term, got {show(t)}")
    return not build_net(spec, t).transitions


def decide_equational(p: Term, q: Term, spec: Spec) -> bool:
    """Decide provable equality of the restrictions of p and q.

    The axioms are sound and complete for rooted team equivalence, so
    instead of rewriting, this restricts both terms syntactically and
    compares their decompositions inside one shared net.
    """
    rp, extended = restrict_syntactic(p, spec)
    rq, extended = restrict_syntactic(q, extended)
    return terms_equiv(rp, rq, extended, rooted=True)


def type_check(spec: Spec, term: Term = None) -> TypingJudgment:
    """Type main (or the given term) against the security discipline.

    Every choice is first normalized modulo commutativity,
    associativity, idempotence and dropped 0 summands; a choice with
    high branches is then searched over all ways of singling one out.
    Results are memoized on the normalized rendering plus the set of
    constants already under scan.
    """
    target = spec.main if term is None else term
    memo = {}

    def check(t, scanned) -> TypingJudgment:
        canon = normalize_sum(t)
        key = (show(canon), scanned)
        if key not in memo:
            # a derivation may not take itself as a premise, so a
            # reentrant query reads as untypable while in progress
            memo[key] = TypingJudgment(canon, scanned, False, None,
                                       "circular typing dependency", canon)
            memo[key] = judge(canon, scanned)
        found = memo[key]
        if show(t) != show(canon):
            found = replace(found, term=t)
        return found

    def judge(t, scanned) -> TypingJudgment:
        match t:
            case Nil():
                return typed(t, scanned, "nil")
            case Par(left, right):
                children = [check(left, scanned), check(right, scanned)]
                return combine(t, scanned, "par", children)
            case Const(name):
                if name in scanned:
                    return typed(t, scanned, "const-scanned")
                child = check(spec.body_of(name), scanned | {name})
                return combine(t, scanned, "const-def", [child])
            case Prefix(action, body):
                if not action.is_high:
                    child = check(body, scanned)
                    return combine(t, scanned, "prefix-low", [child])
                if is_deadlock_place(body, spec):
                    return typed(t, scanned, "prefix-high-stuck")
                starts = initials(body, spec)
                if starts and all(a.is_high for a in starts):
                    child = check(body, scanned)
                    return combine(t, scanned, "prefix-high-high", [child])
                return untyped(
                    t, scanned, t,
                    "a high prefix must lead to a stuck place or to "
                    "exclusively high behaviour")
            case Sum(_, _):
                return judge_choice(t, scanned)
        raise TypeError(f"not a term: {t!r}")

    def judge_choice(t, scanned) -> TypingJudgment:
        parts = summands(t)
        high_at = [i for i, part in enumerate(parts)
                   if isinstance(part, Prefix) and part.action.is_high]
        if not high_at:
            children = [check(part, scanned) for part in parts]
            return combine(t, scanned, "choice-low", children)

        failures = []
        for i in high_at:
            picked = parts[i]
            if picked.body == NIL:
                failures.append(f"{show(picked)} guards 0, which vanishes")
                continue
            rest = parts[:i] + parts[i + 1:]
            remainder = rest[0] if len(rest) == 1 else sum_of(rest)
            branch = check(picked.body, scanned)
            if not branch.typed:
                failures.append(f"{show(picked.body)} is not typable")
                continue
            kept = check(remainder, scanned)
            if not kept.typed:
                failures.append(f"{show(remainder)} is not typable")
                continue
            if not decide_equational(picked.body, remainder, spec):
                failures.append(
                    f"{show(picked.body)} and {show(remainder)} differ "
                    "once high actions are hidden")
                continue
            node = Derivation("choice-high", Sum(picked, remainder),
                              scanned,
                              (branch.derivation, kept.derivation))
            return TypingJudgment(t, scanned, True, node)
        detail = "; ".join(dict.fromkeys(failures)) or "no high branch to single out"
        return untyped(t, scanned, t,
                       f"no arrangement of this choice is typable: {detail}")

    def typed(t, scanned, rule, children=()) -> TypingJudgment:
        return TypingJudgment(t, scanned, True,
                              Derivation(rule, t, scanned, tuple(children)))

    def combine(t, scanned, rule, children) -> TypingJudgment:
        for child in children:
            if not child.typed:
                return TypingJudgment(t, scanned, False, None,
                                      child.reason, child.failing)
        node = Derivation(rule, t, scanned,
                          tuple(child.derivation for child in children))
        return TypingJudgment(t, scanned, True, node)

    def untyped(t, scanned, failing, reason) -> TypingJudgment:
        return TypingJudgment(t, scanned, False, None, reason, failing)

    return check(target, frozenset())


def derivation_lines(d: Derivation, depth: int = 0) -> list:
    """Render a derivation as an indented rule-per-line listing."""
    scanned = f"  [scanning {', '.join(sorted(d.scanned))}]" if d.scanned else ""
    lines = [f"{'  ' * depth}{d.rule}: {show(d.term)}{scanned}"]
    for child in d.children:
        lines.extend(derivation_lines(child, depth + 1))
    return lines


def judgment_lines(j: TypingJudgment) -> list:
    if j.typed:
        return [f"typed: {show(j.term)}"] + derivation_lines(j.derivation, 1)
    lines = [f"untyped: {show(j.term)}", f"  reason: {j.reason}"]
    if j.failing is not None:
        lines.append(f"  failing subterm: {show(j.failing)}")
    return lines
