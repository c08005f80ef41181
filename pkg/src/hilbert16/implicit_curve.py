"""Zero-set tracing of bivariate polynomials by marching squares.

Crossing points live on lattice edges.  Each cell links the crossings on
its edges in pairs, so every crossing has at most two neighbours and the
components are either closed loops (ovals) or chains ending on the window
boundary (line-type pieces).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateDivergence, IdenticallyZero, SolverInconclusive
from .poly import BivariatePoly, Box2, PlanarSystem, Var, differentiate, divergence, eval_point
from .solver2d import solve_system_2d

log = logging.getLogger(__name__)

DEFAULT_WINDOW = Box2.square(-10.0, 10.0)
DEFAULT_GRID = 512


class Kind(Enum):
    OVAL = "Oval"
    LINE = "LineType"


@dataclass(frozen=True)
class CurveComponent:
    kind: Kind
    polyline: np.ndarray  # (m, 2); closed loops repeat the first vertex at the end
    touches_boundary: bool


@dataclass
class DivCurveReport:
    components: list[CurveComponent]
    M: int
    singular_points: list[tuple[float, float]]
    generic: bool
    window: Box2
    grid: int
    boundary_components: list[int]

    def to_json(self):
        w = self.window
        return {
            "kind": "divcurve",
            "M": self.M,
            "generic": self.generic,
            "components": [
                {"kind": c.kind.value, "touches_boundary": c.touches_boundary, "vertices": len(c.polyline)}
                for c in self.components
            ],
            "boundary_components": self.boundary_components,
            "singular_points": [list(p) for p in self.singular_points],
            "window": [w.x_lo, w.x_hi, w.y_lo, w.y_hi],
            "grid": self.grid,
        }


class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _refine_edge_roots(p, ax, ay, bx, by, fa, fb, iters=50):
    """Vectorized bisection for the sign change on segments a->b."""
    lo = np.zeros_like(ax)
    hi = np.ones_like(ax)
    sa = np.sign(fa)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = eval_point(p, ax + mid * (bx - ax), ay + mid * (by - ay))
        same = np.sign(fm) == sa
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    t = 0.5 * (lo + hi)
    return ax + t * (bx - ax), ay + t * (by - ay)


# corner order in a cell: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1) with i along x
# edge order: 0 bottom (0-1), 1 right (1-2), 2 top (3-2), 3 left (0-3)
_SEGMENTS = {
    0: (), 15: (),
    1: ((3, 0),), 14: ((3, 0),),
    2: ((0, 1),), 13: ((0, 1),),
    3: ((3, 1),), 12: ((3, 1),),
    4: ((1, 2),), 11: ((1, 2),),
    6: ((0, 2),), 9: ((0, 2),),
    7: ((3, 2),), 8: ((3, 2),),
}


def trace_zero_set(p: BivariatePoly, window: Box2 = DEFAULT_WINDOW, grid: int = DEFAULT_GRID) -> list[CurveComponent]:
    """Components of ``p = 0`` inside ``window`` from a (grid+1)^2 lattice.

    Saddle cells (alternating corner signs) are split once at the centre and
    resolved by the sign of the centre value.
    """
    if grid < 16:
        raise ValueError("grid must be >= 16")
    if p.is_zero():
        raise IdenticallyZero("cannot trace the zero polynomial")
    xs = np.linspace(window.x_lo, window.x_hi, grid + 1)
    ys = np.linspace(window.y_lo, window.y_hi, grid + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    F = eval_point(p, X, Y)
    pos = F >= 0

    g = grid
    # edge ids: horizontal edges (i,j)-(i+1,j): i*(g+1)+j ; vertical (i,j)-(i,j+1): H + i*g + j
    H = g * (g + 1)

    def hid(i, j):
        return i * (g + 1) + j

    def vid(i, j):
        return H + i * g + j

    c0 = pos[:-1, :-1]
    c1 = pos[1:, :-1]
    c2 = pos[1:, 1:]
    c3 = pos[:-1, 1:]
    code = c0.astype(int) | (c1.astype(int) << 1) | (c2.astype(int) << 2) | (c3.astype(int) << 3)
    I, J = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
    edge_ids = np.stack([hid(I, J), vid(I + 1, J), hid(I, J + 1), vid(I, J)], axis=-1)

    links: list[tuple[int, int]] = []
    for c, segs in _SEGMENTS.items():
        if not segs:
            continue
        mask = code == c
        if not mask.any():
            continue
        eids = edge_ids[mask]
        for a, b in segs:
            links.extend(zip(eids[:, a].tolist(), eids[:, b].tolist()))
    saddle = (code == 5) | (code == 10)
    if saddle.any():
        si, sj = np.nonzero(saddle)
        cx = 0.5 * (xs[si] + xs[si + 1])
        cy = 0.5 * (ys[sj] + ys[sj + 1])
        center_pos = eval_point(p, cx, cy) >= 0
        for k, (i, j) in enumerate(zip(si.tolist(), sj.tolist())):
            e = edge_ids[i, j]
            corner0_pos = bool(c0[i, j])
            # centre agrees with corners 0 and 2: they join through the middle
            if center_pos[k] == corner0_pos:
                links.extend([(e[0], e[1]), (e[2], e[3])])
            else:
                links.extend([(e[3], e[0]), (e[1], e[2])])
    links.sort()  # deterministic, cell-index independent ordering
    if not links:
        return []

    nodes = sorted({a for l in links for a in l})
    index = {e: k for k, e in enumerate(nodes)}
    nbrs: list[list[int]] = [[] for _ in nodes]
    uf = _UnionFind(len(nodes))
    for a, b in links:
        ia, ib = index[a], index[b]
        nbrs[ia].append(ib)
        nbrs[ib].append(ia)
        uf.union(ia, ib)

    # crossing coordinates, refined on the actual polynomial
    ne = np.array(nodes)
    horiz = ne < H
    i_h, j_h = np.divmod(ne, g + 1)
    i_v, j_v = np.divmod(ne - H, g)
    i0 = np.where(horiz, i_h, i_v)
    j0 = np.where(horiz, j_h, j_v)
    i1 = np.where(horiz, i0 + 1, i0)
    j1 = np.where(horiz, j0, j0 + 1)
    px, py = _refine_edge_roots(p, xs[i0], ys[j0], xs[i1], ys[j1], F[i0, j0], F[i1, j1])
    on_boundary = np.where(horiz, (j0 == 0) | (j0 == g), (i0 == 0) | (i0 == g))

    groups: dict[int, list[int]] = {}
    for k in range(len(nodes)):
        groups.setdefault(uf.find(k), []).append(k)

    comps = []
    for root in sorted(groups):
        members = groups[root]
        ends = [k for k in members if len(nbrs[k]) == 1]
        start = ends[0] if ends else members[0]
        order = [start]
        prev, cur = -1, start
        while True:
            nxt = [k for k in nbrs[cur] if k != prev]
            if not nxt or nxt[0] == start:
                break
            prev, cur = cur, nxt[0]
            order.append(cur)
        pts = np.column_stack([px[order], py[order]])
        touches = bool(on_boundary[members].any()) or bool(ends)
        if touches:
            comps.append(CurveComponent(Kind.LINE, pts, True))
        else:
            comps.append(CurveComponent(Kind.OVAL, np.vstack([pts, pts[:1]]), False))
    return comps


def _gradient_pair(p: BivariatePoly):
    return differentiate(p, Var.X), differentiate(p, Var.Y)


def singular_points(p: BivariatePoly, window: Box2 = DEFAULT_WINDOW, tol: float = 1e-9) -> list[tuple[float, float]]:
    """Points of the window where p = p_x = p_y = 0."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    px, py = _gradient_pair(p)
    if px.is_zero() and py.is_zero():
        return []  # constant: either empty zero set or the whole plane
    if px.is_zero() or py.is_zero():
        other = py if px.is_zero() else px
        pair = (p, other)
    else:
        pair = (px, py)
    res = solve_system_2d(*pair, window)
    if res.undecided:
        raise SolverInconclusive(
            f"{len(res.undecided)} undecided boxes while locating singular points", res.undecided
        )
    out = []
    for r in res.roots:
        x, y = r.point
        if abs(eval_point(p, x, y)) <= tol and all(abs(eval_point(g, x, y)) <= tol for g in (px, py)):
            out.append((x, y))
    return out


def div_curve_report(sys: PlanarSystem, window: Box2 = DEFAULT_WINDOW, grid: int = DEFAULT_GRID) -> DivCurveReport:
    div = divergence(sys)
    if div.is_constant():
        c = div.terms.get((0, 0), 0.0)
        what = "identically zero (Hamiltonian)" if c == 0 else f"constant {c!r} (Bendixson)"
        raise DegenerateDivergence(f"divergence is {what}: no limit cycles", constant=c)
    comps = trace_zero_set(div, window, grid)
    sing = singular_points(div, window)
    boundary = [k for k, c in enumerate(comps) if c.touches_boundary]
    if boundary:
        log.warning(
            "components %s touch the window boundary; widen the window to confirm the count", boundary
        )
    return DivCurveReport(comps, len(comps), sing, not sing, window, grid, boundary)


def write_components_csv(components: list[CurveComponent], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["component_id", "kind", "x", "y"])
        for k, c in enumerate(components):
            for x, y in c.polyline:
                w.writerow([k, c.kind.value, repr(float(x)), repr(float(y))])
