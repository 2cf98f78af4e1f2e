"""Wavenumbers, media parameters, wedge regions, and radial media profiles.

Every other module consumes these types.  All of them are immutable value
objects: safe to share between threads and to hash into run configs.

Conventions:

* the spectral parameter is ``k = i * omega`` (frequency ``omega`` maps to the
  rotated variable ``k`` used by the half-space analysis),
* the wedge region in the ``omega`` plane is
  ``{omega : |Im(omega^2)| >= gamma * |omega|^2, |omega| >= omega0}``,
* a media quadruple ``(eps, mu, eps_hat, mu_hat)`` is *admissible* when all
  three boundary contrasts clear the configured margin ``lambda1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidMediaError

__all__ = [
    "Wavenumber",
    "MediaQuad",
    "RadialMedia",
    "WedgeSpec",
    "AdmissibilityReport",
    "wedge_contains",
    "check_admissible",
    "media_from_dict",
    "media_to_dict",
    "load_media",
]


@dataclass(frozen=True)
class Wavenumber:
    """Complex spectral parameter with its wedge aperture.

    ``gamma`` is the aperture of the wedge in which the solvers are valid;
    membership means ``|Im(k^2)| >= gamma * |k|^2``.  Note that for any unit
    factor with real square (``alpha^2 = +-1``) the rotated parameter
    ``alpha * k`` has the same membership, so a single check covers both the
    plain and the hatted systems.
    """

    k: complex
    gamma: float = 0.5

    def __post_init__(self):
        if not (self.gamma > 0.0):
            raise ValueError(f"wedge aperture gamma must be positive, got {self.gamma}")
        if not np.isfinite(self.k.real) or not np.isfinite(self.k.imag):
            raise ValueError(f"non-finite wavenumber {self.k}")

    @property
    def in_wedge(self) -> bool:
        k2 = self.k * self.k
        return abs(k2.imag) >= self.gamma * abs(k2) if self.k != 0 else False

    @property
    def magnitude(self) -> float:
        return abs(self.k)

    def require_solve_ready(self) -> None:
        """Enforce the hypotheses of the half-space and operator solves."""
        if abs(self.k) < 1.0 - 1e-12:
            raise ValueError(f"|k| >= 1 required for solves, got |k| = {abs(self.k):.6g}")
        if not self.in_wedge:
            k2 = self.k * self.k
            raise ValueError(
                f"wavenumber outside the wedge: |Im(k^2)| = {abs(k2.imag):.6g} "
                f"< gamma*|k|^2 = {self.gamma * abs(k2):.6g}"
            )


class AdmissibilityReport(NamedTuple):
    ok: bool
    margins: tuple[float, float, float]


def _validate_positive(**values: float) -> None:
    for name, v in values.items():
        if not np.isfinite(v) or v <= 0.0:
            raise InvalidMediaError(f"media parameter {name} must be positive, got {v}")


@dataclass(frozen=True)
class MediaQuad:
    """Four positive boundary constants plus the unit factor alpha.

    ``alpha2`` is the real square of the unit factor and must be +1 or -1
    (covering ``alpha in {1, i}``).  ``lambda_cap`` is the two-sided
    ellipticity bound (defaults to the tightest bound enclosing the four
    values) and ``lambda_margin`` the contrast margin used by
    :func:`check_admissible`.
    """

    eps: float
    mu: float
    eps_hat: float
    mu_hat: float
    alpha2: int = 1
    lambda_cap: float | None = None
    lambda_margin: float = 1e-3

    def __post_init__(self):
        _validate_positive(eps=self.eps, mu=self.mu, eps_hat=self.eps_hat, mu_hat=self.mu_hat)
        if self.alpha2 not in (1, -1):
            raise InvalidMediaError(f"alpha2 must be +1 or -1, got {self.alpha2}")
        if not (self.lambda_margin > 0.0):
            raise InvalidMediaError(f"lambda_margin must be positive, got {self.lambda_margin}")
        vals = (self.eps, self.mu, self.eps_hat, self.mu_hat)
        tight = max(max(vals), 1.0 / min(vals))
        if self.lambda_cap is None:
            object.__setattr__(self, "lambda_cap", tight)
        elif self.lambda_cap < tight or self.lambda_cap < 1.0:
            raise InvalidMediaError(
                f"lambda_cap = {self.lambda_cap} does not enclose the media values "
                f"(need >= {tight:.6g})"
            )

    @property
    def alpha(self) -> complex:
        return 1.0 + 0.0j if self.alpha2 == 1 else 1.0j

    def margins(self) -> tuple[float, float, float]:
        return (
            abs(self.eps - self.eps_hat),
            abs(self.mu - self.mu_hat),
            abs(self.eps / self.mu - self.eps_hat / self.mu_hat),
        )

    def admissible(self) -> bool:
        return all(m >= self.lambda_margin for m in self.margins())

    def swapped(self) -> "MediaQuad":
        """Exchange the plain and hatted media."""
        return MediaQuad(
            self.eps_hat, self.mu_hat, self.eps, self.mu,
            alpha2=self.alpha2, lambda_cap=self.lambda_cap, lambda_margin=self.lambda_margin,
        )


def check_admissible(m: MediaQuad) -> AdmissibilityReport:
    """Report the three boundary contrasts against the configured margin."""
    margins = m.margins()
    return AdmissibilityReport(ok=all(x >= m.lambda_margin for x in margins), margins=margins)


@dataclass(frozen=True)
class WedgeSpec:
    """Wedge region ``{omega : |Im(omega^2)| >= gamma |omega|^2, |omega| >= omega0}``."""

    gamma: float
    omega0: float

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not (self.omega0 > 0.0):
            raise ValueError(f"omega0 must be positive, got {self.omega0}")

    def contains(self, omega: complex) -> bool:
        if abs(omega) < self.omega0:
            return False
        w2 = omega * omega
        return abs(w2.imag) >= self.gamma * abs(w2)

    def angular_bands(self) -> list[tuple[float, float]]:
        """The four arg-intervals where ``|sin(2 theta)| >= gamma``.

        Bands are returned in (-pi, pi] order; together with the radial
        bounds they describe the wedge exactly.
        """
        half = np.arcsin(self.gamma) / 2.0
        first = (half, np.pi / 2.0 - half)
        bands = []
        for shift in (0.0, np.pi / 2.0, -np.pi, -np.pi / 2.0):
            lo, hi = first[0] + shift, first[1] + shift
            bands.append((lo, hi))
        return bands


def wedge_contains(w: WedgeSpec, omega: complex) -> bool:
    """Exact floating-point membership test on ``omega^2``."""
    return w.contains(omega)


def _as_profile(p, r: np.ndarray) -> np.ndarray:
    if callable(p):
        out = np.asarray([p(x) for x in r], dtype=float)
    else:
        out = np.asarray(p, dtype=float)
        if out.shape != r.shape:
            raise InvalidMediaError(
                f"profile samples have shape {out.shape}, expected {r.shape}"
            )
    return out


@dataclass(frozen=True)
class RadialMedia:
    """Radial isotropic profiles on [0, 1], sampled on a uniform grid.

    The grid always includes r = 0 and r = 1.  ``s0`` is the width of the
    boundary collar on which the profiles must look C^1: the midpoint
    finite-difference first derivatives on [1 - s0, 1] must stay below the
    ellipticity bound.
    """

    r: np.ndarray
    eps: np.ndarray
    mu: np.ndarray
    eps_hat: np.ndarray
    mu_hat: np.ndarray
    s0: float = 0.25
    lambda_cap: float | None = None
    lambda_margin: float = 1e-3

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 8:
            raise InvalidMediaError("radial grid needs at least 8 nodes")
        dr = np.diff(r)
        if abs(r[0]) > 1e-15 or abs(r[-1] - 1.0) > 1e-15 or np.ptp(dr) > 1e-12 * dr[0]:
            raise InvalidMediaError("radial grid must be uniform on [0, 1]")
        if not (0.0 < self.s0 < 1.0):
            raise InvalidMediaError(f"collar width s0 must lie in (0, 1), got {self.s0}")
        object.__setattr__(self, "r", r)
        for name in ("eps", "mu", "eps_hat", "mu_hat"):
            prof = _as_profile(getattr(self, name), r)
            if np.any(~np.isfinite(prof)) or np.any(prof <= 0.0):
                raise InvalidMediaError(f"profile {name} must be positive and finite")
            prof.setflags(write=False)
            object.__setattr__(self, name, prof)
        r.setflags(write=False)

        vals = np.concatenate([self.eps, self.mu, self.eps_hat, self.mu_hat])
        tight = max(vals.max(), 1.0 / vals.min())
        if self.lambda_cap is None:
            object.__setattr__(self, "lambda_cap", max(tight, self.collar_derivative_bound()))
        else:
            if self.lambda_cap < tight:
                raise InvalidMediaError(
                    f"profiles leave the band [1/Lambda, Lambda] for Lambda = {self.lambda_cap}"
                )
            if self.collar_derivative_bound() > self.lambda_cap:
                raise InvalidMediaError(
                    "collar first derivatives exceed the C^1 bound "
                    f"({self.collar_derivative_bound():.6g} > {self.lambda_cap})"
                )
        if not self.boundary_quad().admissible():
            raise InvalidMediaError(
                "boundary values at r = 1 violate the contrast margins "
                f"(margins {self.boundary_quad().margins()}, need >= {self.lambda_margin})"
            )

    @classmethod
    def from_callables(
        cls,
        eps: Callable[[float], float],
        mu: Callable[[float], float],
        eps_hat: Callable[[float], float],
        mu_hat: Callable[[float], float],
        n_grid: int = 512,
        s0: float = 0.25,
        lambda_cap: float | None = None,
        lambda_margin: float = 1e-3,
    ) -> "RadialMedia":
        r = np.linspace(0.0, 1.0, n_grid + 1)
        return cls(r, eps, mu, eps_hat, mu_hat, s0=s0,
                   lambda_cap=lambda_cap, lambda_margin=lambda_margin)

    @classmethod
    def constant(cls, quad: MediaQuad, n_grid: int = 512, s0: float = 0.25) -> "RadialMedia":
        r = np.linspace(0.0, 1.0, n_grid + 1)
        ones = np.ones_like(r)
        return cls(r, quad.eps * ones, quad.mu * ones, quad.eps_hat * ones,
                   quad.mu_hat * ones, s0=s0, lambda_cap=quad.lambda_cap,
                   lambda_margin=quad.lambda_margin)

    def boundary_quad(self, alpha2: int = 1) -> MediaQuad:
        return MediaQuad(
            float(self.eps[-1]), float(self.mu[-1]),
            float(self.eps_hat[-1]), float(self.mu_hat[-1]),
            alpha2=alpha2, lambda_margin=self.lambda_margin,
        )

    def collar_derivative_bound(self) -> float:
        """Max midpoint first-derivative magnitude over the collar [1 - s0, 1]."""
        dr = self.r[1] - self.r[0]
        mids = 0.5 * (self.r[:-1] + self.r[1:])
        sel = mids >= 1.0 - self.s0
        bound = 0.0
        for prof in (self.eps, self.mu, self.eps_hat, self.mu_hat):
            d = np.abs(np.diff(prof)[sel]) / dr
            if d.size:
                bound = max(bound, float(d.max()))
        return bound

    def interp(self, r_new: np.ndarray) -> dict[str, np.ndarray]:
        """Linear interpolation of the four profiles onto another grid."""
        return {
            name: np.interp(r_new, self.r, getattr(self, name))
            for name in ("eps", "mu", "eps_hat", "mu_hat")
        }


# ---------------------------------------------------------------------------
# JSON descriptors
#
# Constant media:
#   {"eps": 2.0, "mu": 1.0, "eps_hat": 1.0, "mu_hat": 2.0,
#    "alpha2": 1, "lambda": 2.0, "lambda1": 0.5}
# Radial media carry sampled arrays instead of scalars, plus "s0".
# ---------------------------------------------------------------------------

def media_to_dict(m: MediaQuad | RadialMedia) -> dict:
    if isinstance(m, MediaQuad):
        return {
            "eps": m.eps, "mu": m.mu, "eps_hat": m.eps_hat, "mu_hat": m.mu_hat,
            "alpha2": m.alpha2, "lambda": m.lambda_cap, "lambda1": m.lambda_margin,
        }
    return {
        "eps": m.eps.tolist(), "mu": m.mu.tolist(),
        "eps_hat": m.eps_hat.tolist(), "mu_hat": m.mu_hat.tolist(),
        "s0": m.s0, "lambda": m.lambda_cap, "lambda1": m.lambda_margin,
    }


def media_from_dict(d: dict) -> MediaQuad | RadialMedia:
    try:
        fields = [d[name] for name in ("eps", "mu", "eps_hat", "mu_hat")]
    except KeyError as exc:
        raise InvalidMediaError(f"media descriptor missing field {exc}") from None
    radial = any(isinstance(f, (list, tuple)) for f in fields)
    lam = d.get("lambda")
    lam1 = d.get("lambda1", 1e-3)
    if radial:
        arrays = [np.asarray(f, dtype=float) for f in fields]
        n = arrays[0].size
        if any(a.size != n for a in arrays):
            raise InvalidMediaError("radial media profiles must share one grid")
        r = np.linspace(0.0, 1.0, n)
        return RadialMedia(r, *arrays, s0=d.get("s0", 0.25),
                           lambda_cap=lam, lambda_margin=lam1)
    return MediaQuad(*[float(f) for f in fields], alpha2=int(d.get("alpha2", 1)),
                     lambda_cap=lam, lambda_margin=lam1)


def load_media(path) -> MediaQuad | RadialMedia:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidMediaError(f"malformed media JSON: {exc}") from None
    return media_from_dict(d)
