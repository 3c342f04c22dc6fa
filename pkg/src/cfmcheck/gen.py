"""Randomized nets, terms, specifications and axiom instances.

Everything here draws from a caller-supplied random.Random, so runs are
reproducible from a seed.  The axiom instantiators enforce each law's
side conditions by construction or by bounded resampling.
"""

from .net import Marking, Net
from .syntax import (
    NIL, TAU, Const, Par, Prefix, Spec, Sum, Term, const_names, high,
    is_observationally_guarded, low, make_spec, rename_consts,
)

LOW_NAMES = ("a", "b", "c")
HIGH_NAMES = ("h", "k")
VAR = "X"  # placeholder constant used in open terms


def random_net(rng, max_places: int = 50, max_transitions: int = 120,
               tau_density: float = 0.3, vanish: float = 0.15,
               alphabet=("a", "b", "c", "d")) -> Net:
    """A net with random wiring; token flow may die out or cycle."""
    places = rng.randint(1, max_places)
    names = [f"s{i}" for i in range(places)]
    transitions = set()
    for _ in range(rng.randint(0, max_transitions)):
        pre = rng.choice(names)
        label = TAU if rng.random() < tau_density else low(rng.choice(alphabet))
        post = None if rng.random() < vanish else rng.choice(names)
        transitions.add((pre, label, post))
    tokens = rng.randint(1, min(3, places))
    initial = Marking((name, 1) for name in rng.sample(names, tokens))
    return Net(names, transitions, initial)


def random_marking(rng, net: Net, max_tokens: int = 6) -> Marking:
    """A random marking over the interned places of net."""
    if not net.names:
        return Marking()
    count = rng.randint(0, max_tokens)
    return Marking((rng.randrange(len(net.names)), 1) for _ in range(count))


# ---------------------------------------------------------------------------
# terms and specifications

def _action(rng, p_tau, p_high):
    roll = rng.random()
    if roll < p_tau:
        return TAU
    if roll < p_tau + p_high:
        return high(rng.choice(HIGH_NAMES))
    return low(rng.choice(LOW_NAMES))


def random_guarded(rng, depth: int, consts=(), p_tau: float = 0.2,
                   p_high: float = 0.25, p_const: float = 0.3) -> Term:
    """A random term of the guarded category."""
    roll = rng.random()
    if depth <= 0 or roll < 0.15:
        return NIL
    if roll < 0.7:
        action = _action(rng, p_tau, p_high)
        if consts and rng.random() < p_const:
            return Prefix(action, Const(rng.choice(list(consts))))
        return Prefix(action, random_guarded(rng, depth - 1, consts,
                                             p_tau, p_high, p_const))
    return Sum(random_guarded(rng, depth - 1, consts, p_tau, p_high, p_const),
               random_guarded(rng, depth - 1, consts, p_tau, p_high, p_const))


def random_sequential(rng, depth: int, consts=(), **weights) -> Term:
    """A random sequential term: either a constant or a guarded term."""
    if consts and rng.random() < 0.35:
        return Const(rng.choice(list(consts)))
    return random_guarded(rng, depth, consts, **weights)


def par_of(parts) -> Term:
    parts = list(parts)
    if not parts:
        return NIL
    term = parts[0]
    for part in parts[1:]:
        term = Par(term, part)
    return term


def random_spec(rng, max_consts: int = 6, max_depth: int = 5,
                max_par: int = 4, **weights) -> Spec:
    """A random full specification over a small mixed alphabet."""
    names = [f"P{i}" for i in range(rng.randint(0, max_consts))]
    defs = {name: random_guarded(rng, rng.randint(1, max_depth), names,
                                 **weights)
            for name in names}
    width = rng.randint(1, max_par)
    main = par_of(random_sequential(rng, rng.randint(1, max_depth), names,
                                    **weights)
                  for _ in range(width))
    return make_spec(HIGH_NAMES, defs, main)


def random_parallel(rng, depth: int = 3, max_width: int = 3) -> Term:
    """A random parallel term without constants."""
    return par_of(random_guarded(rng, depth)
                  for _ in range(rng.randint(1, max_width)))


# ---------------------------------------------------------------------------
# axiom instances

def _closed(rng, depth=3):
    return random_guarded(rng, depth, consts=())


def _nonzero(rng, depth=3):
    for _ in range(20):
        t = _closed(rng, depth)
        if t != NIL:
            return t
    return Prefix(low("a"), NIL)


def _open_guarded(rng, depth: int, p_var: float = 0.5) -> Term:
    """A guarded term that may mention the placeholder X under prefixes."""
    roll = rng.random()
    if depth <= 0 or roll < 0.15:
        return NIL
    if roll < 0.7:
        action = _action(rng, 0.25, 0.2)
        if rng.random() < p_var:
            return Prefix(action, Const(VAR))
        return Prefix(action, _open_guarded(rng, depth - 1, p_var))
    return Sum(_open_guarded(rng, depth - 1, p_var),
               _open_guarded(rng, depth - 1, p_var))


def _plug(template: Term, name: str) -> Term:
    return rename_consts(template, {VAR: Const(name)})


def _recursive_pair(body_c: Term, body_d: Term) -> tuple:
    """Two constants tying the same open bodies back to themselves."""
    defs = {"C": _plug(body_c, "C"), "D": _plug(body_d, "D")}
    spec = make_spec(HIGH_NAMES, defs, NIL)
    return Const("C"), Const("D"), spec


def _simple(lhs: Term, rhs: Term) -> tuple:
    return lhs, rhs, make_spec(HIGH_NAMES, {}, NIL)


def _tau_unguarded(rng) -> Term:
    """An open guarded term whose placeholder sits under silent prefixes only."""
    choices = [
        Prefix(TAU, Const(VAR)),
        Prefix(TAU, Prefix(TAU, Const(VAR))),
        Sum(Prefix(TAU, Const(VAR)), _closed(rng, 2)),
        Prefix(TAU, Sum(Prefix(TAU, Const(VAR)), _closed(rng, 2))),
    ]
    return rng.choice(choices)


def axiom_instance(rng, name: str) -> tuple:
    """One random (lhs, rhs, spec) instance of the named law."""
    if name == "A1":
        x, y, z = _closed(rng), _closed(rng), _closed(rng)
        return _simple(Sum(x, Sum(y, z)), Sum(Sum(x, y), z))
    if name == "A2":
        x, y = _closed(rng), _closed(rng)
        return _simple(Sum(x, y), Sum(y, x))
    if name == "A3":
        x = _nonzero(rng)
        return _simple(Sum(x, NIL), x)
    if name == "A4":
        x = _nonzero(rng)
        return _simple(Sum(x, x), x)
    if name == "B":
        mu = _action(rng, 0.25, 0.25)
        x, y = _closed(rng), _closed(rng)
        return _simple(Prefix(mu, Sum(Prefix(TAU, Sum(x, y)), x)),
                       Prefix(mu, Sum(x, y)))
    if name == "R1":
        spec = make_spec(HIGH_NAMES, {"C": NIL}, NIL)
        return Const("C"), Sum(NIL, NIL), spec
    if name == "R2":
        body = _nonzero(rng)
        spec = make_spec(HIGH_NAMES, {"C": body}, NIL)
        return Const("C"), body, spec
    if name == "R3":
        # the body may not let the constant silently reach itself
        for _ in range(50):
            template = _open_guarded(rng, 3)
            if VAR not in const_names(template):
                continue
            lhs, rhs, spec = _recursive_pair(template, template)
            if is_observationally_guarded("C", spec):
                return lhs, rhs, spec
        return _recursive_pair(Prefix(low("a"), Const(VAR)),
                               Prefix(low("a"), Const(VAR)))
    if name == "U1":
        p = _open_guarded(rng, 2)
        return _recursive_pair(
            Sum(Prefix(TAU, Const(VAR)), p),
            Sum(Prefix(TAU, Sum(p, NIL)), p))
    if name == "U2":
        p, r = _open_guarded(rng, 2), _open_guarded(rng, 2)
        return _recursive_pair(
            Sum(Prefix(TAU, Sum(Prefix(TAU, Const(VAR)), p)), r),
            Sum(Prefix(TAU, Sum(p, r)), r))
    if name == "U3":
        q = _tau_unguarded(rng)
        p, r = _open_guarded(rng, 2), _open_guarded(rng, 2)
        return _recursive_pair(
            Sum(Prefix(TAU, Sum(Prefix(TAU, q), p)), r),
            Sum(Prefix(TAU, Sum(q, p)), r))
    if name == "U4":
        p, q, r = _open_guarded(rng, 2), _open_guarded(rng, 2), _open_guarded(rng, 2)
        inner = Prefix(TAU, Const(VAR))
        return _recursive_pair(
            Sum(Sum(Prefix(TAU, Sum(inner, p)), Prefix(TAU, Sum(inner, q))), r),
            Sum(Prefix(TAU, Sum(Sum(inner, p), q)), r))
    if name == "P1":
        x, y, z = (random_parallel(rng) for _ in range(3))
        return _simple(Par(x, Par(y, z)), Par(Par(x, y), z))
    if name == "P2":
        x, y = random_parallel(rng), random_parallel(rng)
        return _simple(Par(x, y), Par(y, x))
    if name == "P3":
        x = random_parallel(rng)
        return _simple(Par(x, NIL), x)
    raise ValueError(f"unknown axiom {name!r}")


AXIOM_NAMES = ("A1", "A2", "A3", "A4", "B", "R1", "R2", "R3",
               "U1", "U2", "U3", "U4", "P1", "P2", "P3")
