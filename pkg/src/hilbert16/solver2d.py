"""Certified real roots of square 2x2 polynomial systems.

Breadth-first subdivision of a window.  A box is dropped when the interval
enclosure of either polynomial excludes zero; it is accepted when the
Krawczyk operator maps it into its own interior, which proves that exactly
one root lies inside.  Accepted roots are polished by point Newton and then
re-certified on a tiny box so the reported radius is honest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import interval as iv
from .errors import DegenerateDivergence, DegenerateSystem
from .poly import (
    BivariatePoly,
    Box2,
    PlanarSystem,
    Var,
    contact_system,
    differentiate,
    eval_interval_arrays,
    eval_point,
)

log = logging.getLogger(__name__)

SIMPLICITY_TOL = 1e-8
MIN_WIDTH = 1e-10
# off-centre split so that roots at "round" coordinates do not sit on box edges forever
SPLIT = 0.4921875 + 1.0 / 1024
# Krawczyk is tried on boxes inflated by this factor; overlap is harmless
# because accepted roots are deduplicated
KRAWCZYK_INFLATE = 1.25


@dataclass(frozen=True)
class Root2:
    point: tuple[float, float]
    radius: float
    simple: bool
    jacobian_det: float

    def to_json(self):
        return {
            "x": self.point[0],
            "y": self.point[1],
            "radius": self.radius,
            "simple": self.simple,
            "jacobian_det": self.jacobian_det,
        }


@dataclass
class SolveResult:
    roots: list[Root2]
    undecided: list[Box2] = field(default_factory=list)
    boxes_processed: int = 0

    @property
    def certified(self):
        return not self.undecided


@dataclass
class ContactReport:
    points: list[Root2]
    N: int
    undecided_boxes: list[Box2]
    window: Box2
    bezout_cap: int

    @property
    def certified(self):
        return not self.undecided_boxes

    def to_json(self):
        return {
            "kind": "contacts",
            "N": self.N,
            "points": [r.to_json() for r in self.points],
            "undecided_boxes": [[b.x_lo, b.x_hi, b.y_lo, b.y_hi] for b in self.undecided_boxes],
            "window": [self.window.x_lo, self.window.x_hi, self.window.y_lo, self.window.y_hi],
            "bezout_cap": self.bezout_cap,
            "certified": self.certified,
        }


class _System:
    def __init__(self, p: BivariatePoly, q: BivariatePoly):
        self.f = (p, q)
        self.jac = (
            (differentiate(p, Var.X), differentiate(p, Var.Y)),
            (differentiate(q, Var.X), differentiate(q, Var.Y)),
        )

    def values(self, x, y):
        return np.stack([eval_point(g, x, y) for g in self.f], axis=-1)

    def jacobian(self, x, y):
        return np.stack(
            [np.stack([eval_point(g, x, y) for g in row], axis=-1) for row in self.jac], axis=-2
        )

    def krawczyk(self, xlo, xhi, ylo, yhi):
        """Krawczyk image of boxes; returns (klo, khi) each of shape (n, 2) and a validity mask."""
        mx = 0.5 * (xlo + xhi)
        my = 0.5 * (ylo + yhi)
        rx = 0.5 * (xhi - xlo)
        ry = 0.5 * (yhi - ylo)
        J0 = self.jacobian(mx, my)
        det = J0[..., 0, 0] * J0[..., 1, 1] - J0[..., 0, 1] * J0[..., 1, 0]
        ok = np.isfinite(det) & (np.abs(det) > 0)
        safe = np.where(ok, det, 1.0)
        Y = np.empty_like(J0)
        Y[..., 0, 0] = J0[..., 1, 1] / safe
        Y[..., 0, 1] = -J0[..., 0, 1] / safe
        Y[..., 1, 0] = -J0[..., 1, 0] / safe
        Y[..., 1, 1] = J0[..., 0, 0] / safe

        fm = [eval_interval_arrays(g, mx, mx, my, my) for g in self.f]
        JX = [[eval_interval_arrays(g, xlo, xhi, ylo, yhi) for g in row] for row in self.jac]
        dx = iv.inflate(-rx, rx)
        dy = iv.inflate(-ry, ry)
        d = (dx, dy)
        klo = np.empty(mx.shape + (2,))
        khi = np.empty(mx.shape + (2,))
        for k, m in enumerate((mx, my)):
            yf = iv.iadd(iv.iscale(Y[..., k, 0], fm[0]), iv.iscale(Y[..., k, 1], fm[1]))
            acc = iv.isub((m, m), yf)
            for col in range(2):
                yj = iv.iadd(iv.iscale(Y[..., k, 0], JX[0][col]), iv.iscale(Y[..., k, 1], JX[1][col]))
                eye = 1.0 if k == col else 0.0
                mkl = iv.isub((np.full_like(mx, eye), np.full_like(mx, eye)), yj)
                acc = iv.iadd(acc, iv.imul(mkl, d[col]))
            klo[..., k], khi[..., k] = acc
        ok &= np.all(np.isfinite(klo) & np.isfinite(khi), axis=-1)
        return klo, khi, ok


def _inside(klo, khi, xlo, xhi, ylo, yhi):
    return (klo[..., 0] > xlo) & (khi[..., 0] < xhi) & (klo[..., 1] > ylo) & (khi[..., 1] < yhi)


def _disjoint(klo, khi, xlo, xhi, ylo, yhi):
    return (khi[..., 0] < xlo) | (klo[..., 0] > xhi) | (khi[..., 1] < ylo) | (klo[..., 1] > yhi)


def _certify(sysm: _System, cx, cy, r):
    xlo, xhi = np.array([cx - r]), np.array([cx + r])
    ylo, yhi = np.array([cy - r]), np.array([cy + r])
    klo, khi, ok = sysm.krawczyk(xlo, xhi, ylo, yhi)
    return bool(ok[0] and _inside(klo, khi, xlo, xhi, ylo, yhi)[0])


def _polish(sysm: _System, box, tol):
    """Newton from the box centre, kept inside the certified box."""
    xlo, xhi, ylo, yhi = box
    z = np.array([0.5 * (xlo + xhi), 0.5 * (ylo + yhi)])
    best = z.copy()
    best_res = np.max(np.abs(sysm.values(z[0], z[1])))
    for _ in range(60):
        f = sysm.values(z[0], z[1])
        J = sysm.jacobian(z[0], z[1])
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            break
        z = z - step
        if not (xlo <= z[0] <= xhi and ylo <= z[1] <= yhi) or not np.all(np.isfinite(z)):
            z = best.copy()
            break
        res = np.max(np.abs(sysm.values(z[0], z[1])))
        if res < best_res:
            best, best_res = z.copy(), res
        if res <= tol * 1e-3 or np.max(np.abs(step)) <= 1e-17 * (1 + np.max(np.abs(z))):
            break
    return best, best_res


def _tight_radius(sysm: _System, z, fallback):
    scale = 1.0 + float(np.max(np.abs(z)))
    r = 1e-15 * scale
    while r < fallback:
        if _certify(sysm, z[0], z[1], r):
            return r
        r *= 4.0
    return fallback


def _jacobian_info(sysm: _System, z):
    J = sysm.jacobian(z[0], z[1])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    norm = float(np.linalg.norm(J[0]) * np.linalg.norm(J[1]))
    simple = norm > 0 and abs(det) / norm > SIMPLICITY_TOL
    return det, simple


def solve_system_2d(
    p: BivariatePoly,
    q: BivariatePoly,
    window: Box2,
    tol: float = 1e-12,
    min_width: float = MIN_WIDTH,
    max_boxes: int = 2_000_000,
) -> SolveResult:
    """All common real zeros of ``p`` and ``q`` in ``window``.

    Roots come back sorted lexicographically.  Boxes that reach ``min_width``
    without being excluded or certified are returned as undecided; this is
    what happens at multiple roots or along curves of common zeros.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if p.is_zero() or q.is_zero():
        raise DegenerateSystem("one equation is identically zero")
    sysm = _System(p, q)

    boxes = np.array([[window.x_lo, window.x_hi, window.y_lo, window.y_hi]])
    regions: list[np.ndarray] = []  # boxes certified to hold exactly one known root
    found: list[tuple[np.ndarray, float]] = []  # (point, radius)
    undecided: list[np.ndarray] = []
    processed = 0

    while len(boxes):
        processed += len(boxes)
        xlo, xhi, ylo, yhi = boxes.T
        ip = eval_interval_arrays(p, xlo, xhi, ylo, yhi)
        keep = iv.contains_zero(ip)
        iq = eval_interval_arrays(q, xlo[keep], xhi[keep], ylo[keep], yhi[keep])
        idx = np.flatnonzero(keep)[iv.contains_zero(iq)]
        boxes = boxes[idx]
        if not len(boxes):
            break

        if regions:
            reg = np.array(regions)
            covered = np.zeros(len(boxes), dtype=bool)
            for r in reg:
                covered |= (
                    (boxes[:, 0] >= r[0]) & (boxes[:, 1] <= r[1])
                    & (boxes[:, 2] >= r[2]) & (boxes[:, 3] <= r[3])
                )
            boxes = boxes[~covered]
            if not len(boxes):
                break

        xlo, xhi, ylo, yhi = boxes.T
        cx, cy = 0.5 * (xlo + xhi), 0.5 * (ylo + yhi)
        hx, hy = 0.5 * KRAWCZYK_INFLATE * (xhi - xlo), 0.5 * KRAWCZYK_INFLATE * (yhi - ylo)
        bx = (cx - hx, cx + hx, cy - hy, cy + hy)
        klo, khi, ok = sysm.krawczyk(*bx)
        accept = ok & _inside(klo, khi, *bx)
        exclude = ok & ~accept & _disjoint(klo, khi, xlo, xhi, ylo, yhi)

        for k in np.flatnonzero(accept):
            region = np.array([bx[0][k], bx[1][k], bx[2][k], bx[3][k]])
            z, _ = _polish(sysm, region, tol)
            if any(np.all(np.abs(z - f) <= rad) for f, rad in found) or any(
                reg[0] <= z[0] <= reg[1] and reg[2] <= z[1] <= reg[3] for reg in regions
            ):
                # same root as one already certified (uniqueness inside regions)
                regions.append(region)
                continue
            half = 0.5 * (region[1] - region[0])
            rad = _tight_radius(sysm, z, fallback=max(half, 1e-300))
            found.append((z, rad))
            regions.append(region)
            # grow the exclusion region while uniqueness still certifies
            grow = half
            for _ in range(4):
                grow *= 2.0
                if not _certify(sysm, z[0], z[1], grow):
                    break
                regions.append(np.array([z[0] - grow, z[0] + grow, z[1] - grow, z[1] + grow]))

        rest = boxes[~accept & ~exclude]
        if not len(rest):
            break
        widths = np.maximum(rest[:, 1] - rest[:, 0], rest[:, 3] - rest[:, 2])
        small = widths <= min_width
        undecided.extend(rest[small])
        rest = rest[~small]
        if processed + 4 * len(rest) > max_boxes:
            log.warning("box budget exhausted; %d boxes left undecided", len(rest))
            undecided.extend(rest)
            break
        mx = rest[:, 0] + SPLIT * (rest[:, 1] - rest[:, 0])
        my = rest[:, 2] + SPLIT * (rest[:, 3] - rest[:, 2])
        children = np.concatenate(
            [
                np.stack([rest[:, 0], mx, rest[:, 2], my], axis=1),
                np.stack([mx, rest[:, 1], rest[:, 2], my], axis=1),
                np.stack([rest[:, 0], mx, my, rest[:, 3]], axis=1),
                np.stack([mx, rest[:, 1], my, rest[:, 3]], axis=1),
            ]
        )
        # keep a fixed traversal order: parent index major
        order = np.arange(len(children)).reshape(4, -1).T.ravel()
        boxes = children[order]

    roots = []
    for z, rad in found:
        det, simple = _jacobian_info(sysm, z)
        # reported radius bounds the Euclidean distance to the true root
        roots.append(Root2((float(z[0]), float(z[1])), float(rad * np.sqrt(2.0)), simple, det))
    roots = _merge(roots)
    roots.sort(key=lambda r: r.point)
    und = [Box2(*map(float, b)) for b in undecided]
    return SolveResult(roots, und, processed)


def _merge(roots: list[Root2]) -> list[Root2]:
    out: list[Root2] = []
    for r in sorted(roots, key=lambda r: r.radius):
        if any(np.hypot(r.point[0] - o.point[0], r.point[1] - o.point[1]) <= r.radius + o.radius for o in out):
            continue
        out.append(r)
    return out


def _check_divergence(sys: PlanarSystem):
    first, div = contact_system(sys)
    if div.is_constant():
        c = div.terms.get((0, 0), 0.0)
        kind = "identically zero (Hamiltonian)" if c == 0 else f"constant {c!r} (Bendixson)"
        raise DegenerateDivergence(f"divergence is {kind}", constant=c)
    return first, div


def contact_points(sys: PlanarSystem, window: Box2, tol: float = 1e-12) -> ContactReport:
    """Tangencies of the field with ``Div = 0``; only simple roots count towards N."""
    from .bounds import bezout_bound

    first, div = _check_divergence(sys)
    n = sys.n
    cap = bezout_bound(2 * n - 2, n - 1) if n >= 1 else 0
    if first.is_zero():
        # every point of the divergence curve is a contact point
        return ContactReport([], 0, [window], window, cap)
    res = solve_system_2d(first, div, window, tol)
    N = sum(1 for r in res.roots if r.simple)
    return ContactReport(res.roots, N, res.undecided, window, cap)
