"""Transmission eigenvalues of the unit ball with constant isotropic media.

Separation of variables reduces the coupled Maxwell pair to one 2x2
transcendental matching problem per spherical-harmonic degree ``n >= 1`` and
polarization.  With ``kappa_1 = omega sqrt(eps mu)`` and
``kappa_2 = omega sqrt(eps_hat mu_hat)``, and ``psi_n(z) = z j_n(z)``, the
tangential trace matching at ``r = 1`` reads

    TE:  c j_n(kappa_1) = ch j_n(kappa_2),
         c psi_n'(kappa_1)/mu = ch psi_n'(kappa_2)/mu_hat,
    TM:  c psi_n'(kappa_1)/kappa_1 = ch psi_n'(kappa_2)/kappa_2,
         c sqrt(eps/mu) j_n(kappa_1) = ch sqrt(eps_hat/mu_hat) j_n(kappa_2),

and the eigenvalues of the sector are the frequencies where the 2x2 system
is singular.  The determinant evaluator used here is the *normalized* one
(power prefactors removed, see :mod:`te_maxwell._kernels`): entire in omega,
even, real on the real axis, and nonzero at the origin for media with
nonzero contrast -- exactly what the argument principle wants.

Correctness is gated on :func:`eigenfield_residual`, which rebuilds the mode
profiles on a radial grid and checks the governing ODE by high-order finite
differences plus both trace jumps with an FD-differentiated boundary slope,
independently of the closed-form matching algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .contours import ArcSegment, Contour, annular_sector, circle, winding_number
from .errors import ContourError, DegenerateMediaError, RefineFailureError
from .media import MediaQuad, WedgeSpec

__all__ = [
    "SectorDeterminant",
    "EigenvalueRecord",
    "build_determinant",
    "count_roots",
    "refine_root",
    "eigenfield_residual",
    "wedge_emptiness",
    "spectrum_census",
    "WedgeScanReport",
    "CensusResult",
]

POLARIZATIONS = ("TE", "TM")
_POL_CODE = {"TE": _kernels.TE, "TM": _kernels.TM}


@dataclass(frozen=True)
class SectorDeterminant:
    """Normalized dispersion determinant of one (degree, polarization) sector."""

    n: int
    polarization: str
    media: MediaQuad

    def values(self, omega, deriv: bool = False):
        m = self.media
        det, ddet = _kernels.det_batch(
            np.asarray(omega, dtype=complex), self.n, _POL_CODE[self.polarization],
            m.eps, m.mu, m.eps_hat, m.mu_hat, deriv=deriv,
        )
        return det, ddet

    def __call__(self, omega):
        scalar = np.isscalar(omega) or np.asarray(omega).ndim == 0
        det, _ = self.values(np.atleast_1d(np.asarray(omega, dtype=complex)))
        return complex(det[0]) if scalar else det


def build_determinant(n: int, polarization: str, media: MediaQuad) -> SectorDeterminant:
    if n < 1:
        raise ValueError(f"spherical-harmonic degree must be >= 1, got {n}")
    if polarization not in POLARIZATIONS:
        raise ValueError(f"polarization must be one of {POLARIZATIONS}, got {polarization!r}")
    if media.alpha2 != 1:
        raise ValueError("ball oracle is defined for alpha2 = +1 media")
    return SectorDeterminant(n=n, polarization=polarization, media=media)


@dataclass(frozen=True)
class EigenvalueRecord:
    omega: complex
    n: int
    polarization: str
    residual: float
    multiplicity: int

    def as_row(self) -> tuple:
        return (self.n, self.polarization, self.omega.real, self.omega.imag,
                self.residual, self.multiplicity)


def count_roots(det: SectorDeterminant, contour: Contour, **kwargs) -> int:
    """Zero count (with multiplicity) of the sector determinant inside a contour."""
    return winding_number(lambda z: det.values(z)[0], contour, **kwargs)


# ---------------------------------------------------------------------------
# mode reconstruction and residual
# ---------------------------------------------------------------------------

_D2_6TH = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_D1_EDGE_6TH = np.array([49.0 / 20.0, -6.0, 15.0 / 2.0, -20.0 / 3.0,
                         15.0 / 4.0, -6.0 / 5.0, 1.0 / 6.0])


def _jn_values(n: int, z: np.ndarray) -> np.ndarray:
    """Plain (unscaled) spherical Bessel j_n on an array of complex points."""
    jt = _kernels.jt_orders(z, n)[n]
    dfac = float(math.prod(range(2 * n + 1, 0, -2)))
    return jt * z ** n / dfac


def _matching_matrix(n: int, polarization: str, media: MediaQuad, omega: complex) -> np.ndarray:
    k1 = omega * math.sqrt(media.eps * media.mu)
    k2 = omega * math.sqrt(media.eps_hat * media.mu_hat)
    jt = _kernels.jt_orders(np.array([k1, k2]), n + 1)
    dfac = float(math.prod(range(2 * n + 1, 0, -2)))
    cn1 = (n + 1.0) * (2.0 * n + 3.0)
    j1, j2 = jt[n, 0] * k1 ** n / dfac, jt[n, 1] * k2 ** n / dfac
    pst1 = jt[n, 0] - k1 * k1 * jt[n + 1, 0] / cn1
    pst2 = jt[n, 1] - k2 * k2 * jt[n + 1, 1] / cn1
    ps1 = pst1 * (n + 1.0) * k1 ** n / dfac
    ps2 = pst2 * (n + 1.0) * k2 ** n / dfac
    if polarization == "TE":
        M = np.array([[j1, -j2], [ps1 / media.mu, -ps2 / media.mu_hat]])
    else:
        M = np.array([
            [ps1 / k1, -ps2 / k2],
            [math.sqrt(media.eps / media.mu) * j1,
             -math.sqrt(media.eps_hat / media.mu_hat) * j2],
        ])
    return M


def eigenfield_residual(
    omega: complex,
    n: int,
    polarization: str,
    media: MediaQuad,
    radial_grid: np.ndarray | None = None,
    coeffs: tuple[complex, complex] | None = None,
) -> float:
    """Self-contained check that ``omega`` carries a genuine eigenpair.

    The mode coefficients come from the minimal singular vector of the
    row-balanced 2x2 matching matrix (or are supplied).  The radial profiles
    ``u = c r j_n(kappa r)`` are then tested against their governing equation
    ``u'' + (omega^2 eps mu - n(n+1)/r^2) u = 0`` with 6th-order interior
    stencils, and the two trace jumps at r = 1 are evaluated with a one-sided
    FD boundary slope.  Returns the max of the relative ODE and jump
    residuals.
    """
    if radial_grid is None:
        radial_grid = np.linspace(0.1, 1.0, 2049)
    r = np.asarray(radial_grid, dtype=float)
    if r.size < 32 or abs(r[-1] - 1.0) > 1e-14:
        raise ValueError("radial grid must end at r = 1 and resolve the mode")
    dr = r[1] - r[0]

    k1 = omega * math.sqrt(media.eps * media.mu)
    k2 = omega * math.sqrt(media.eps_hat * media.mu_hat)

    if coeffs is None:
        M = _matching_matrix(n, polarization, media, omega)
        # equilibrate with fixed dimensional row weights (the H row carries an
        # extra kappa); adaptive row balancing would blow up a vanishing row
        if polarization == "TE":
            M = M.copy()
            M[1] /= max(abs(k1), abs(k2), 1.0)
        _, _, vh = np.linalg.svd(M)
        c1, c2 = vh[-1].conj()
    else:
        c1, c2 = coeffs
    u1 = c1 * r * _jn_values(n, k1 * r)
    u2 = c2 * r * _jn_values(n, k2 * r)
    scale = max(np.abs(u1).max(), np.abs(u2).max())
    if scale == 0.0:
        return 0.0

    lam2 = n * (n + 1.0)
    worst_ode = 0.0
    for u, kap in ((u1, k1), (u2, k2)):
        upp = np.convolve(u, _D2_6TH[::-1], mode="valid") / dr ** 2
        mid = slice(3, r.size - 3)
        res = upp + (kap * kap - lam2 / r[mid] ** 2) * u[mid]
        den = (abs(kap) ** 2 + lam2 / r[0] ** 2) * scale
        worst_ode = max(worst_ode, float(np.abs(res).max()) / den)

    # boundary slope u'(1) = c psi_n'(kappa) via one-sided 6th-order stencil
    def d1_end(u):
        return np.dot(_D1_EDGE_6TH, u[-1:-8:-1]) / dr

    du1, du2 = d1_end(u1), d1_end(u2)
    kscale = max(abs(k1), abs(k2), 1.0)
    if polarization == "TE":
        jump_e = abs(u1[-1] - u2[-1]) / scale
        jump_m = abs(du1 / media.mu - du2 / media.mu_hat) / (kscale * scale)
    else:
        jump_e = abs(du1 / k1 - du2 / k2) / scale
        jump_m = abs(math.sqrt(media.eps / media.mu) * u1[-1]
                     - math.sqrt(media.eps_hat / media.mu_hat) * u2[-1]) / scale
    return max(worst_ode, jump_e + jump_m)


def refine_root(
    det: SectorDeterminant,
    seed: complex,
    *,
    max_iter: int = 100,
    trust_radius: float | None = None,
    radial_grid: np.ndarray | None = None,
    multiplicity_radius: float | None = None,
) -> EigenvalueRecord:
    """Newton iteration on the analytic determinant from ``seed``.

    Converges when the step falls below 1e-13 (1 + |omega|); raises
    :class:`RefineFailureError` after ``max_iter`` iterations, on a vanishing
    derivative, or when the converged root violates ``trust_radius``.
    Multiplicity comes from a tiny-circle winding count around the root.
    """
    w = complex(seed)
    converged = False
    for _ in range(max_iter):
        val, dval = det.values(np.array([w]), deriv=True)
        v, dv = complex(val[0]), complex(dval[0])
        if v == 0.0:
            converged = True
            break
        if dv == 0.0:
            raise RefineFailureError(f"determinant derivative vanished at {w}")
        step = v / dv
        w -= step
        if abs(step) <= 1e-13 * (1.0 + abs(w)):
            converged = True
            break
    if not converged:
        raise RefineFailureError(
            f"Newton did not converge from seed {seed} after {max_iter} iterations"
        )
    if trust_radius is not None and abs(w - seed) > trust_radius:
        raise RefineFailureError(
            f"Newton escaped trust radius: |{w} - {seed}| > {trust_radius}"
        )

    rho = multiplicity_radius or max(1e-5, 1e-4 * (1.0 + abs(w)))
    try:
        mult = count_roots(det, circle(w, rho))
    except ContourError:
        mult = count_roots(det, circle(w, 0.37 * rho))
    if mult < 1:
        raise RefineFailureError(f"refined point {w} encloses no root at radius {rho}")
    res = eigenfield_residual(w, det.n, det.polarization, det.media, radial_grid)
    return EigenvalueRecord(omega=w, n=det.n, polarization=det.polarization,
                            residual=res, multiplicity=mult)


# ---------------------------------------------------------------------------
# region scans: cells, subdivision, census
# ---------------------------------------------------------------------------

# Cells are ("disk", r) or ("ann", r0, r1, th0, th1); subdivision fractions
# sit slightly off 1/2 so child edges never reproduce a parent edge that
# happened to graze a root.
_SPLIT = 0.5037


def _cell_contour(cell) -> Contour:
    if cell[0] == "disk":
        return circle(0.0, cell[1])
    _, r0, r1, th0, th1 = cell
    return annular_sector(r0, r1, th0, th1)


def _cell_children(cell) -> list:
    if cell[0] == "disk":
        r = cell[1]
        rm = _SPLIT * r
        return [("disk", rm),
                ("ann", rm, r, 0.11, 0.11 + np.pi),
                ("ann", rm, r, 0.11 + np.pi, 0.11 + 2.0 * np.pi)]
    _, r0, r1, th0, th1 = cell
    rm = r0 + _SPLIT * (r1 - r0)
    tm = th0 + _SPLIT * (th1 - th0)
    return [("ann", r0, rm, th0, tm), ("ann", r0, rm, tm, th1),
            ("ann", rm, r1, th0, tm), ("ann", rm, r1, tm, th1)]


def _cell_center(cell) -> complex:
    if cell[0] == "disk":
        return 0.17 * cell[1] + 0.0j
    _, r0, r1, th0, th1 = cell
    return 0.5 * (r0 + r1) * np.exp(0.5j * (th0 + th1))


def _cell_diam(cell) -> float:
    if cell[0] == "disk":
        return 2.0 * cell[1]
    _, r0, r1, th0, th1 = cell
    return float(np.hypot(r1 - r0, r1 * (th1 - th0)))


def _cell_contains(cell, z: complex) -> bool:
    if cell[0] == "disk":
        return abs(z) <= cell[1] * (1.0 + 1e-9)
    _, r0, r1, th0, th1 = cell
    rr = abs(z)
    if not (r0 * (1.0 - 1e-9) <= rr <= r1 * (1.0 + 1e-9)):
        return False
    span = th1 - th0
    off = (np.angle(z) - th0) % (2.0 * np.pi)
    return off <= span + 1e-9


def _disk_cells(R: float, cell_size: float) -> list:
    """Cover |omega| <= R with an inner disk and staggered annular rings."""
    n_rings = max(1, int(np.ceil(R / cell_size)))
    radii = np.linspace(0.0, R, n_rings + 1)
    cells = [("disk", radii[1])]
    for i in range(1, n_rings):
        r0, r1 = radii[i], radii[i + 1]
        n_th = max(2, int(np.ceil(2.0 * np.pi * r1 / cell_size)))
        # stagger ring offsets so no radial edge recurs ring to ring, and no
        # edge sits on the real axis where real-media roots live
        off = 0.31830989 + 0.37 * i
        th = off + np.linspace(0.0, 2.0 * np.pi, n_th + 1)
        cells.extend(("ann", r0, r1, th[j], th[j + 1]) for j in range(n_th))
    return cells


def _scan_cells(det: SectorDeterminant, cells: Iterable, *, max_depth: int,
                on_root, counts_out: list | None = None, **wind_kw) -> int:
    """Drive the count/subdivide/refine loop over a cell work list.

    ``on_root(cell, count)`` is called for cells isolated down to a single
    root cluster; returns the total root count found.
    """
    stack = [(c, 0) for c in cells]
    total = 0
    while stack:
        cell, depth = stack.pop()
        try:
            w = count_roots(det, _cell_contour(cell), **wind_kw)
        except ContourError:
            if depth >= max_depth:
                raise
            stack.extend((ch, depth + 1) for ch in _cell_children(cell))
            continue
        if counts_out is not None:
            counts_out.append((cell, w))
        if w == 0:
            continue
        total += on_root(cell, w, depth, stack)
    return total


@dataclass
class CensusResult:
    records: list[EigenvalueRecord]
    n_max: int
    radius: float

    def counting(self, r: float) -> int:
        return sum(1 for rec in self.records if abs(rec.omega) <= r)

    def counting_table(self, radii: Sequence[float]) -> np.ndarray:
        return np.array([self.counting(r) for r in radii], dtype=int)

    def sector(self, n: int, polarization: str) -> list[EigenvalueRecord]:
        return [rec for rec in self.records
                if rec.n == n and rec.polarization == polarization]


def _require_contrast(media: MediaQuad) -> None:
    if not media.admissible():
        raise DegenerateMediaError(
            "degenerate media: zero contrast "
            f"(margins {media.margins()}, need >= {media.lambda_margin})"
        )


def _census_sector(media: MediaQuad, n: int, pol: str, R: float, *,
                   cell_size: float, max_depth: int) -> list[EigenvalueRecord]:
    det = build_determinant(n, pol, media)
    found: list[EigenvalueRecord] = []

    def on_root(cell, w, depth, stack):
        diam = _cell_diam(cell)
        if w > 1 and diam > 1e-6 and depth < max_depth:
            stack.extend((ch, depth + 1) for ch in _cell_children(cell))
            return 0
        try:
            rec = refine_root(det, _cell_center(cell), trust_radius=3.0 * diam)
        except RefineFailureError:
            if depth >= max_depth:
                raise
            stack.extend((ch, depth + 1) for ch in _cell_children(cell))
            return 0
        if not _cell_contains(cell, rec.omega) and depth < max_depth:
            stack.extend((ch, depth + 1) for ch in _cell_children(cell))
            return 0
        found.append(rec)
        return rec.multiplicity

    _scan_cells(det, _disk_cells(R, cell_size), max_depth=max_depth, on_root=on_root)

    found.sort(key=lambda rec: (abs(rec.omega), np.angle(rec.omega)))
    dedup: list[EigenvalueRecord] = []
    for rec in found:
        if any(abs(rec.omega - kept.omega) < 1e-6 for kept in dedup):
            continue
        dedup.append(rec)
    return dedup


def spectrum_census(media: MediaQuad, n_max: int = 12, R: float = 30.0, *,
                    cell_size: float = 1.2, max_depth: int = 26,
                    threads: int = 1) -> CensusResult:
    """All sector eigenvalues with ``|omega| <= R`` for degrees ``1..n_max``.

    Records are deduplicated per sector at 1e-6 in omega and sorted by
    ``(|omega|, arg omega, n, polarization)``.  Sectors are independent work
    units; ``threads > 1`` runs them on a thread pool (the kernels release
    the GIL) with a deterministic merge.
    """
    _require_contrast(media)
    sectors = [(n, pol) for n in range(1, n_max + 1) for pol in POLARIZATIONS]

    def run(sector):
        n, pol = sector
        return _census_sector(media, n, pol, R, cell_size=cell_size, max_depth=max_depth)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, sectors))
    else:
        results = [run(s) for s in sectors]

    records = [rec for chunk in results for rec in chunk]
    records.sort(key=lambda rec: (abs(rec.omega), np.angle(rec.omega), rec.n,
                                  rec.polarization))
    return CensusResult(records=records, n_max=n_max, radius=R)


# ---------------------------------------------------------------------------
# wedge scan
# ---------------------------------------------------------------------------

@dataclass
class WedgeScanReport:
    gamma: float
    omega0: float
    radius: float
    n_max: int
    total_roots: int
    n_cells: int
    nonzero_cells: list
    clean: bool
    smallest_clean_omega0: float | None = None
    candidates_tried: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma, "omega0": self.omega0, "radius": self.radius,
            "n_max": self.n_max, "total_roots": self.total_roots,
            "n_cells": self.n_cells, "clean": self.clean,
            "smallest_clean_omega0": self.smallest_clean_omega0,
            "candidates_tried": self.candidates_tried,
            "nonzero_cells": [
                {"n": n, "polarization": pol, "cell": list(map(float, cell[1:])),
                 "count": cnt}
                for (n, pol, cell, cnt) in self.nonzero_cells
            ],
        }


def _wedge_cells(wedge: WedgeSpec, R: float, cell_size: float) -> list:
    cells = []
    n_r = max(1, int(np.ceil((R - wedge.omega0) / cell_size)))
    radii = np.linspace(wedge.omega0, R, n_r + 1)
    for lo, hi in wedge.angular_bands():
        for i in range(n_r):
            r0, r1 = radii[i], radii[i + 1]
            n_th = max(1, int(np.ceil((hi - lo) * r1 / cell_size)))
            th = np.linspace(lo, hi, n_th + 1)
            cells.extend(("ann", r0, r1, th[j], th[j + 1]) for j in range(n_th))
    return cells


def _wedge_scan_once(media: MediaQuad, wedge: WedgeSpec, n_max: int, R: float,
                     cell_size: float, max_depth: int) -> tuple[int, int, list]:
    total = 0
    n_cells = 0
    nonzero = []
    cells = _wedge_cells(wedge, R, cell_size)
    for n in range(1, n_max + 1):
        for pol in POLARIZATIONS:
            det = build_determinant(n, pol, media)
            counts: list = []

            def on_root(cell, w, depth, stack):
                nonzero.append((n, pol, cell, w))
                return w

            total += _scan_cells(det, cells, max_depth=max_depth,
                                 on_root=on_root, counts_out=counts)
            n_cells += len(counts)
    return total, n_cells, nonzero


def wedge_emptiness(media: MediaQuad, wedge: WedgeSpec, n_max: int = 12,
                    R: float | None = None, *, cell_size: float = 2.0,
                    max_depth: int = 20,
                    omega0_candidates: Sequence[float] | None = None) -> WedgeScanReport:
    """Verify the eigenvalue-free wedge by exhaustive contour counting.

    Covers ``{omega : wedge membership, omega0 <= |omega| <= R}`` (all four
    angular components) by annular-sector cells and requires a zero winding
    number in each.  When ``omega0_candidates`` is given, they are scanned in
    ascending order (each with ``R`` scaled proportionally) and the smallest
    clean one is reported alongside the scan at ``wedge.omega0``.
    """
    _require_contrast(media)
    R_factor = (R / wedge.omega0) if R is not None else 3.0
    total, n_cells, nonzero = _wedge_scan_once(
        media, wedge, n_max, R_factor * wedge.omega0, cell_size, max_depth)
    report = WedgeScanReport(
        gamma=wedge.gamma, omega0=wedge.omega0, radius=R_factor * wedge.omega0,
        n_max=n_max, total_roots=total, n_cells=n_cells, nonzero_cells=nonzero,
        clean=(total == 0),
    )
    if report.clean:
        report.smallest_clean_omega0 = wedge.omega0
    for cand in sorted(omega0_candidates or []):
        if report.smallest_clean_omega0 is not None and cand >= report.smallest_clean_omega0:
            break
        sub = WedgeSpec(gamma=wedge.gamma, omega0=cand)
        t, _, _ = _wedge_scan_once(media, sub, n_max, R_factor * cand, cell_size, max_depth)
        report.candidates_tried.append((cand, t))
        if t == 0:
            report.smallest_clean_omega0 = cand
    return report
