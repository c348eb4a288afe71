"""Shared expression fixtures: precedence table and a random expression generator."""

import random

# (source, bindings, expected value)
PRECEDENCE = [
    ("1+2*3", {}, 7.0),
    ("(1+2)*3", {}, 9.0),
    ("2*3+4", {}, 10.0),
    ("8-3-2", {}, 3.0),
    ("8-(3-2)", {}, 7.0),
    ("16/4/2", {}, 2.0),
    ("16/(4/2)", {}, 8.0),
    ("2^3^2", {}, 512.0),
    ("(2^3)^2", {}, 64.0),
    ("-2^2", {}, -4.0),
    ("(-2)^2", {}, 4.0),
    ("2^-1", {}, 0.5),
    ("-x^2", {"x": 3.0}, -9.0),
    ("2*x^2", {"x": 3.0}, 18.0),
    ("x^2+1", {"x": 3.0}, 10.0),
    ("-x*2", {"x": 3.0}, -6.0),
    ("--x", {"x": 3.0}, 3.0),
    ("1-2+3", {}, 2.0),
    ("2*3/4", {}, 1.5),
    ("2/4*3", {}, 1.5),
    ("1+2^2*3", {}, 13.0),
    ("(1+2)^2", {}, 9.0),
    ("2*-3", {}, -6.0),
    ("1 - -1", {}, 2.0),
    ("sin(pi/2)^2", {}, 1.0),
    ("exp(0)+log(e)", {}, 2.0),
    ("x*t+1", {"x": 2.0, "t": 5.0}, 11.0),
    ("  x  *  ( t - 1 ) ", {"x": 2.0, "t": 5.0}, 8.0),
    ("sqrt(16)/2^2", {}, 1.0),
    ("3-2^2/4*2", {}, 1.0),
    ("2^0.5^2", {}, 2.0 ** 0.25),
    ("cos(0)*-x^2", {"x": 2.0}, -4.0),
]


def random_expression(rng: random.Random, depth: int = 3) -> str:
    """A random smooth expression in ``x`` built from every grammar production.

    Singular productions are guarded (``log(2 + ...)``, division by
    ``2 + sin(...)``) so the result is finite and differentiable on [0, 1].
    """
    if depth == 0:
        choice = rng.randrange(4)
        if choice == 0:
            return "x"
        if choice == 1:
            return repr(round(rng.uniform(0.1, 2.0), 3))
        if choice == 2:
            return rng.choice(["pi", "e"])
        return f"{rng.randint(1, 3)}*x"
    a = random_expression(rng, depth - 1)
    b = random_expression(rng, depth - 1)
    kind = rng.randrange(11)
    if kind == 0:
        return f"({a}) + ({b})"
    if kind == 1:
        return f"({a}) - ({b})"
    if kind == 2:
        return f"({a})*({b})"
    if kind == 3:
        return f"({a})/(2 + sin({b}))"
    if kind == 4:
        return f"({a})^{rng.choice([2, 3])}"
    if kind == 5:
        return f"-({a})"
    if kind == 6:
        return f"sin({a})"
    if kind == 7:
        return f"cos({a})"
    if kind == 8:
        return f"exp(sin({a}))"
    if kind == 9:
        return f"log(2 + cos({a}))"
    return f"sqrt(1 + ({a})^2)"


def central_difference(fn, x, h=1e-5):
    return (fn(x + h) - fn(x - h)) / (2 * h)
