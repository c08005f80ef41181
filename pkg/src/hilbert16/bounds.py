"""Counting formulas: Harnack, Bezout, the 1 + (n-1)^2 (M+N) bound, the
explicit quartic bound, quadratic/Lienard corollaries and the census of
asymptotic behaviours along the divergence curve.

Everything here is exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidDegree, NonInteger, UnassignedContact, WrongDegree
from .poly import PlanarSystem, divergence

HARNACK_NOTE = (
    "harnack_max_components returns 1 for k=1 and 0 for k=0; the parity formula "
    "would give 0 for a line"
)


def harnack_max_components(k: int) -> int:
    """Maximum number of connected components of a real curve of degree ``k``."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if k == 0:
        return 0
    if k == 1:
        return 1
    base = (k - 1) * (k - 2) // 2
    return base + 1 if k % 2 == 0 else base


def bezout_bound(d1: int, d2: int) -> int:
    if d1 < 0 or d2 < 0:
        raise ValueError("degrees must be nonnegative")
    return d1 * d2


def master_bound(n: int, M: int, N: int) -> int:
    """1 + (n-1)^2 (M+N)."""
    if n < 2:
        raise InvalidDegree(f"degree n > 1 required, got {n}")
    if M < 0 or N < 0:
        raise ValueError("M and N must be nonnegative")
    return 1 + (n - 1) ** 2 * (M + N)


def quartic_bound(n: int) -> int:
    """Explicit degree-only bound: 5/2 n^4 - 23/2 n^3 + ... (parity dependent)."""
    if n < 2:
        raise InvalidDegree(f"degree n > 1 required, got {n}")
    if n % 2 == 0:
        twice = 5 * n**4 - 23 * n**3 + 43 * n**2 - 37 * n + 14
    else:
        twice = 5 * n**4 - 23 * n**3 + 41 * n**2 - 33 * n + 12
    if twice % 2:
        raise NonInteger(f"quartic bound for n={n} is not an integer")
    return twice // 2


def quartic_component_cap(n: int) -> int:
    """Component cap on ``Div = 0`` that the quartic bound is composed from.

    This is (n-2)(n-3)/2, plus one when n is even.  It is the Harnack
    count with the parity taken from n rather than from the curve degree
    n - 1, so it differs from ``harnack_max_components(n - 1)`` for n >= 3.
    """
    if n < 2:
        raise InvalidDegree(f"degree n > 1 required, got {n}")
    return (n - 2) * (n - 3) // 2 + (1 if n % 2 == 0 else 0)


def lienard_bound(p: int, q: int) -> int:
    """Cap for x' = y - f(x), y' = g(x) with deg f = p, deg g = q."""
    if p < 1 or q < 1:
        raise ValueError("p, q must be >= 1")
    return 1 + 2 * (max(p, q) - 1) ** 2 * (p - 1)


# -- quadratic corollary -------------------------------------------------------


@dataclass(frozen=True)
class QuadraticVerdict:
    no_limit_cycles: bool
    bound: int | None
    branch: str
    reason: str
    class_value: int = 4  # H(2)

    @property
    def label(self):
        return "no limit cycles" if self.no_limit_cycles else f"bound {self.bound}"


def quadratic_verdict(sys: PlanarSystem, contacts=None) -> QuadraticVerdict:
    if sys.n != 2:
        raise WrongDegree(f"quadratic system required, got degree {sys.n}")
    div = divergence(sys)
    if div.is_constant():
        if div.is_zero():
            return QuadraticVerdict(True, 0, "hamiltonian", "divergence is identically zero")
        return QuadraticVerdict(True, 0, "bendixson", "divergence is a nonzero constant")
    if contacts is None:
        raise ValueError("contacts are required when the divergence is a line")
    if contacts.points or contacts.undecided_boxes:
        # one simple contact or a double one: both give 1 + 1*(1+2)
        return QuadraticVerdict(False, master_bound(2, 1, 2), "a", "contact points on the line Div=0")
    return QuadraticVerdict(
        True, 0, "b", "no contact points: cycles cannot cross the line Div=0"
    )


# -- asymptotic behaviour census ----------------------------------------------


@dataclass(frozen=True)
class ComponentCensus:
    component_id: int
    kind: str
    contacts: int
    behaviors: int
    cases: tuple[str, ...]


@dataclass
class BehaviorCensus:
    behaviors: int
    components: list[ComponentCensus]
    assignment: list[int]  # component index per simple contact point

    def to_json(self):
        return {"behaviors": self.behaviors, "components": [asdict(c) for c in self.components]}


def _point_polyline_distance(pt, poly):
    a = poly[:-1]
    b = poly[1:]
    if len(a) == 0:
        return float(np.hypot(*(poly[0] - pt)))
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.where(denom > 0, np.einsum("ij,ij->i", pt - a, ab) / np.where(denom > 0, denom, 1), 0)
    t = np.clip(t, 0, 1)
    proj = a + t[:, None] * ab
    return float(np.min(np.hypot(*(proj - pt).T)))


def _cases(kind: str, k: int) -> tuple[str, ...]:
    if kind == "line":
        if k == 0:
            return ("a.3",)
        # two end arcs reach the window boundary; finite vs. infinite is undecidable here
        return ("a.2:boundary-terminated",) * 2 + ("a.1",) * (k - 1)
    if k == 0:
        return ("b.3",)
    if k == 1:
        return ("b.2",)
    return ("b.1",) * k


def behavior_census(report, contacts, tolerance: float | None = None) -> BehaviorCensus:
    """Count limit behaviours: a line with x contacts gives x+1, an oval with
    y >= 1 contacts gives y, a contact-free oval gives 1."""
    if not report.generic:
        raise ValueError("behavior census requires a generic divergence curve")
    if tolerance is None:
        w = report.window
        tolerance = 2.0 * np.hypot((w.x_hi - w.x_lo) / report.grid, (w.y_hi - w.y_lo) / report.grid)
    counts = [0] * len(report.components)
    assignment = []
    for root in contacts.points:
        if not root.simple:
            continue
        pt = np.asarray(root.point)
        if not report.components:
            raise UnassignedContact(f"contact {root.point} but no traced components")
        d = [_point_polyline_distance(pt, np.asarray(c.polyline)) for c in report.components]
        best = int(np.argmin(d))
        if d[best] > tolerance:
            raise UnassignedContact(
                f"contact {root.point} is {d[best]:.3g} from the nearest component (tol {tolerance:.3g})"
            )
        counts[best] += 1
        assignment.append(best)
    comps = []
    for idx, (c, k) in enumerate(zip(report.components, counts)):
        kind = "line" if c.kind.value == "LineType" else "oval"
        beh = k + 1 if kind == "line" else max(k, 1)
        comps.append(ComponentCensus(idx, c.kind.value, k, beh, _cases(kind, k)))
    return BehaviorCensus(sum(c.behaviors for c in comps), comps, assignment)


# -- report --------------------------------------------------------------------


@dataclass
class BoundReport:
    n: int
    M: int
    N: int
    master_bound: int
    quartic_bound: int
    harnack_cap_on_M: int
    bezout_cap_on_N: int
    behaviors: int
    notes: list[str] = field(default_factory=list)

    def to_json(self):
        return {"kind": "bounds", **asdict(self)}


def bound_report(n: int, M: int, N: int, behaviors: int | None = None, notes=()) -> BoundReport:
    notes = list(notes)
    if n - 1 <= 1:
        notes.append(HARNACK_NOTE)
    harnack = harnack_max_components(n - 1)
    bezout = bezout_bound(2 * n - 2, n - 1)
    if M > harnack:
        notes.append(f"window census M={M} exceeds the Harnack cap {harnack}")
    if N > bezout:
        notes.append(f"N={N} exceeds the Bezout cap {bezout}")
    if behaviors is None:
        behaviors = 0
    return BoundReport(
        n=n,
        M=M,
        N=N,
        master_bound=master_bound(n, M, N),
        quartic_bound=quartic_bound(n),
        harnack_cap_on_M=harnack,
        bezout_cap_on_N=bezout,
        behaviors=behaviors,
        notes=notes,
    )


def degree_report(n: int) -> dict:
    """Degree-only decomposition printed by ``bounds --degree``."""
    q = quartic_bound(n)
    return {
        "kind": "degree_bounds",
        "n": n,
        "quartic_bound": q,
        "harnack_cap_on_M": harnack_max_components(n - 1),
        "quartic_component_cap": quartic_component_cap(n),
        "bezout_cap_on_N": bezout_bound(2 * n - 2, n - 1),
    }


def quartic_table(n_max: int) -> str:
    rows = [f"{'n':>4} {'quartic_bound':>16}"]
    for n in range(2, n_max + 1):
        rows.append(f"{n:>4} {quartic_bound(n):>16}")
    return "\n".join(rows)
