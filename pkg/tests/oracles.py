"""Independent reference values.

Each function here is derived by hand from elementary geometry and is
deliberately written without calling into the package, so tests compare two
unrelated computations.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def shoelace(loop) -> float:
    p = np.asarray(loop, dtype=float)
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def loops_area(loops) -> float:
    return sum(shoelace(lp) for lp in loops)


def loops_perimeter(loops) -> float:
    return sum(float(np.hypot(*(np.roll(np.asarray(lp, float), -1, 0) - np.asarray(lp, float)).T).sum())
               for lp in loops)


def loops_euler(loops) -> int:
    """Outer loops (counterclockwise) count +1, holes (clockwise) -1."""
    return sum(1 if shoelace(lp) > 0 else -1 for lp in loops)


def intrinsic_volumes(loops) -> tuple:
    """(Euler characteristic, half perimeter, area) of a polygon with holes."""
    return loops_euler(loops), 0.5 * loops_perimeter(loops), loops_area(loops)


def kinematic_classical(which: str, c: float, A: tuple, X: tuple) -> float:
    """Integral over all rigid motions (rotation measure d alpha on [0, 2pi),
    Lebesgue on translations) of mu(A ∩ gX), times a constant density c.

    ``A`` and ``X`` are (chi, perimeter, area). Integrating the indicator of
    contact gives the principal formula; integrating perimeter or area
    counts boundary length of one set inside the other.
    """
    chiA, pA, aA = A
    chiX, pX, aX = X
    if which == "chi":
        return c * (TWO_PI * (aA * chiX + aX * chiA) + pA * pX)
    if which == "half_perimeter":
        return c * math.pi * (pA * aX + pX * aA)
    if which == "area":
        return c * TWO_PI * aA * aX
    raise ValueError(which)


def forms_terms_covered(c: float, A: tuple, X: tuple) -> dict:
    """Term breakdown of the forms route for the Euler characteristic when the
    density is constant on every motion that brings X into contact with A.

    The point function is then c * area(X) * 2pi, so the f-beta term is
    2pi c area(X) chi(A); the pushed-down term is 2pi c area(A) chi(X); the
    interpolation term carries the perimeter product.
    """
    chiA, pA, aA = A
    chiX, pX, aX = X
    return {"term1": c * pA * pX, "term2": c * TWO_PI * aX * chiA, "term3": c * TWO_PI * aA * chiX,
            "term4": 0.0}


def point_function_covered(c: float, area_X: float) -> float:
    """Measure of the motions g with x in gX: area(X) translations per rotation."""
    return c * TWO_PI * area_X


def gl_exact_degree(n: int) -> int:
    return 2 * n - 1


def commutation_sign(m: int, k: int) -> int:
    return (-1) ** (m * k)


def dilation_rates(loops) -> tuple:
    """d/dt at t = 0 of (chi, half perimeter, area) of e^t A."""
    chi, hp, area = intrinsic_volumes(loops)
    return 0.0, hp, 2.0 * area
