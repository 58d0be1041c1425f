"""Random operator-expression text for round-trip tests."""

import random

AXES = "xyz"


def _num(rng):
    if rng.random() < 0.3:
        return f"{rng.randint(1, 9)}/{rng.randint(2, 7)}"
    return str(rng.randint(0, 9))


def _vec(rng, n, depth):
    r = rng.random()
    if depth <= 0 or r < 0.5:
        return f"{rng.choice('zp')}[{rng.randint(1, n)}]"
    if r < 0.7:
        return f"{_vec(rng, n, depth - 1)} {rng.choice('+-')} {_vec(rng, n, depth - 1)}"
    if r < 0.85:
        return f"{_num(rng)}*{_vec(rng, n, depth - 1)}"
    return f"cross({_vec(rng, n, depth - 1)}, {_vec(rng, n, depth - 1)})"


def _pos_vec(rng, n):
    a, b = rng.sample(range(1, n + 1), 2) if n > 1 else (1, 1)
    if a == b:
        return f"z[{a}]"
    return f"z[{a}] - {_num(rng)}*z[{b}]" if rng.random() < 0.5 else f"z[{a}] - z[{b}]"


def random_expression(rng: random.Random, n: int = 3, depth: int = 3) -> str:
    """Scalar expression text over ``n`` particles in three dimensions."""
    r = rng.random()
    if depth <= 0 or r < 0.3:
        leaf = rng.random()
        if leaf < 0.15:
            return _num(rng)
        if leaf < 0.2:
            return "i"
        if leaf < 0.8:
            return f"{rng.choice('zp')}[{rng.randint(1, n)}].{rng.choice(AXES)}"
        if leaf < 0.9:
            return f"dot({_vec(rng, n, 1)}, {_vec(rng, n, 1)})"
        return f"normfn(V{rng.randint(1, 2)}, {_pos_vec(rng, n)})"
    sub = lambda: random_expression(rng, n, depth - 1)  # noqa: E731
    if r < 0.5:
        return f"{sub()} {rng.choice('+-')} {sub()}"
    if r < 0.75:
        return f"({sub()})*{sub()}" if rng.random() < 0.5 else f"{sub()} * {sub()}"
    if r < 0.85:
        return f"({sub()})^{rng.randint(1, 2)}"
    if r < 0.92:
        return f"(-{sub()})"  # unary minus starts a term, not a factor
    return f"( {sub()} )"
