"""Winding numbers of analytic functions along closed contours.

Phase tracking with adaptive step halving: the contour is sampled, the
argument increments between consecutive samples are wrapped to (-pi, pi], and
any interval whose increment reaches pi/2 is split at its parameter midpoint
until all increments are small.  The winding number is the rounded total
phase change over 2 pi; a failed consistency check or a sample falling under
the local magnitude floor raises :class:`~te_maxwell.errors.ContourError`
(a zero sits on or too close to the contour).

Evaluators are batched: ``f`` maps a complex ndarray to a complex ndarray.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContourError

__all__ = [
    "LineSegment",
    "ArcSegment",
    "Contour",
    "rectangle",
    "circle",
    "annular_sector",
    "winding_number",
]


@dataclass(frozen=True)
class LineSegment:
    z0: complex
    z1: complex

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return self.z0 + np.asarray(t) * (self.z1 - self.z0)


@dataclass(frozen=True)
class ArcSegment:
    center: complex
    radius: float
    theta0: float
    theta1: float

    def __call__(self, t: np.ndarray) -> np.ndarray:
        th = self.theta0 + np.asarray(t) * (self.theta1 - self.theta0)
        return self.center + self.radius * np.exp(1j * th)


@dataclass(frozen=True)
class Contour:
    """Closed, positively oriented, piecewise-smooth contour."""

    segments: tuple

    def describe(self) -> str:
        return " + ".join(type(s).__name__ for s in self.segments)


def rectangle(z_lo: complex, z_hi: complex) -> Contour:
    """Axis-aligned rectangle with opposite corners ``z_lo``, ``z_hi`` (CCW)."""
    a, b = complex(z_lo), complex(z_hi)
    c1, c2, c3, c4 = a, complex(b.real, a.imag), b, complex(a.real, b.imag)
    return Contour((LineSegment(c1, c2), LineSegment(c2, c3),
                    LineSegment(c3, c4), LineSegment(c4, c1)))


def circle(center: complex, radius: float) -> Contour:
    return Contour((ArcSegment(center, radius, 0.0, 2.0 * np.pi),))


def annular_sector(r0: float, r1: float, theta0: float, theta1: float,
                   center: complex = 0.0) -> Contour:
    """CCW boundary of ``{r0 <= |z - center| <= r1, theta0 <= arg <= theta1}``.

    ``r0 = 0`` degenerates to a pie slice; a full 2-pi angular span with
    ``r0 = 0`` is just a circle.
    """
    if theta1 <= theta0:
        raise ValueError("need theta1 > theta0")
    full = abs((theta1 - theta0) - 2.0 * np.pi) < 1e-14
    segs: list = []
    if full:
        segs.append(ArcSegment(center, r1, theta0, theta1))
        if r0 > 0.0:
            segs.append(ArcSegment(center, r0, theta1, theta0))
        return Contour(tuple(segs))
    e0, e1 = np.exp(1j * theta0), np.exp(1j * theta1)
    segs.append(LineSegment(center + r0 * e0, center + r1 * e0))
    segs.append(ArcSegment(center, r1, theta0, theta1))
    if r0 > 0.0:
        segs.append(LineSegment(center + r1 * e1, center + r0 * e1))
        segs.append(ArcSegment(center, r0, theta1, theta0))
    else:
        segs.append(LineSegment(center + r1 * e1, center))
    return Contour(tuple(segs))


def _wrap_phase(d: np.ndarray) -> np.ndarray:
    return np.mod(d + np.pi, 2.0 * np.pi) - np.pi


def winding_number(
    f: Callable[[np.ndarray], np.ndarray],
    contour: Contour,
    *,
    samples_per_segment: int = 32,
    phase_cap: float = 0.5 * np.pi,
    floor_rel: float = 1e-10,
    max_rounds: int = 40,
    max_points: int = 200000,
) -> int:
    """Winding number of ``f`` around the origin along ``contour``.

    Raises :class:`ContourError` when a sample magnitude drops below
    ``floor_rel`` times the local scale (eight-sample neighborhood max), when
    refinement stalls, or when the accumulated phase is not consistent with
    an integer winding.
    """
    seg_t: list[np.ndarray] = []
    seg_f: list[np.ndarray] = []
    for seg in contour.segments:
        t = np.linspace(0.0, 1.0, samples_per_segment + 1)
        seg_t.append(t)
        seg_f.append(np.asarray(f(seg(t))))

    for _ in range(max_rounds):
        new_any = False
        total_pts = sum(t.size for t in seg_t)
        if total_pts > max_points:
            raise ContourError(
                f"phase tracking exceeded {max_points} samples on {contour.describe()}; "
                "a zero is likely on or very near the contour"
            )
        for i, seg in enumerate(contour.segments):
            t, fv = seg_t[i], seg_f[i]
            dphi = np.abs(_wrap_phase(np.diff(np.angle(fv))))
            bad = np.flatnonzero(dphi >= phase_cap)
            if bad.size == 0:
                continue
            mids = 0.5 * (t[bad] + t[bad + 1])
            if np.any(mids - t[bad] < 1e-13):
                raise ContourError(
                    f"phase step refinement bottomed out on {contour.describe()}"
                )
            fm = np.asarray(f(seg(mids)))
            order = np.argsort(np.concatenate([t, mids]), kind="stable")
            seg_t[i] = np.concatenate([t, mids])[order]
            seg_f[i] = np.concatenate([fv, fm])[order]
            new_any = True
        if not new_any:
            break
    else:
        raise ContourError(f"phase tracking did not settle on {contour.describe()}")

    # close the path: concatenate segments, drop duplicate junction points
    fv_all = np.concatenate([sf[:-1] for sf in seg_f] + [seg_f[0][:1]])
    mags = np.abs(fv_all)
    if np.any(mags == 0.0):
        raise ContourError("determinant vanished exactly on the contour")
    local = np.maximum.reduce([np.roll(mags, s) for s in range(-4, 5)])
    if np.any(mags < floor_rel * local):
        raise ContourError(
            f"sample magnitude below {floor_rel:g} of local scale on {contour.describe()}"
        )

    total = float(np.sum(_wrap_phase(np.diff(np.angle(fv_all)))))
    w = total / (2.0 * np.pi)
    w_int = int(np.round(w))
    if abs(w - w_int) > 0.1:
        raise ContourError(
            f"inconsistent winding {w:.4f} on {contour.describe()}; zero near contour"
        )
    return w_int
