"""
Filtered exact geometric predicates.

Each predicate is first evaluated in floating point together with a
forward error bound; only when the result is within the bound is it
recomputed exactly with rational arithmetic. Floats convert to Fractions
without rounding, so the sign returned is always the sign of the exact
determinant.
"""

from fractions import Fraction
from typing import Sequence

EPSILON = 2.0 ** -53
CCW_ERRBOUND_A = (3.0 + 16.0 * EPSILON) * EPSILON
ICC_ERRBOUND_A = (10.0 + 96.0 * EPSILON) * EPSILON


def _sign(value) -> int:
    return int(value > 0) - int(value < 0)


def orient2d(pa: Sequence[float], pb: Sequence[float], pc: Sequence[float]) -> int:
    """
    Orientation of the triple (pa, pb, pc).

    Returns:
        +1 if counter-clockwise, -1 if clockwise, 0 if collinear
    """
    detleft = (pa[0] - pc[0]) * (pb[1] - pc[1])
    detright = (pa[1] - pc[1]) * (pb[0] - pc[0])
    det = detleft - detright
    errbound = CCW_ERRBOUND_A * (abs(detleft) + abs(detright))
    if abs(det) > errbound:
        return _sign(det)

    ax, ay, bx, by, cx, cy = (Fraction(float(v)) for v in (*pa[:2], *pb[:2], *pc[:2]))
    return _sign((ax - cx) * (by - cy) - (ay - cy) * (bx - cx))


def incircle(pa: Sequence[float], pb: Sequence[float], pc: Sequence[float], pd: Sequence[float]) -> int:
    """
    Position of pd relative to the circle through pa, pb, pc.

    For a counter-clockwise (pa, pb, pc) returns +1 when pd is strictly
    inside, -1 when strictly outside and 0 when cocircular; the sign flips
    for a clockwise triangle.
    """
    adx, ady = pa[0] - pd[0], pa[1] - pd[1]
    bdx, bdy = pb[0] - pd[0], pb[1] - pd[1]
    cdx, cdy = pc[0] - pd[0], pc[1] - pd[1]

    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy

    det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady)
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    if abs(det) > ICC_ERRBOUND_A * permanent:
        return _sign(det)

    a, b, c, d = ([Fraction(float(p[0])), Fraction(float(p[1]))] for p in (pa, pb, pc, pd))
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    exact = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
             + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
             + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return _sign(exact)
