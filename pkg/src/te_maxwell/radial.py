"""Radial solution operator for the coupled Maxwell pair on the unit ball.

Vector-spherical-harmonic separation turns the four-field system into two
scalar first-order ODE pairs per degree ``n`` and polarization.  Writing a
field as ``f P + g B + h C`` (P radial, B gradient-type tangential, C
curl-type tangential, ``lam = sqrt(n(n+1))``), the curl acts as

    curl(f P + g B + h C) = -(lam h / r) P - ((r h)'/r) B + ((r g)'/r - lam f / r) C,

so for the TE polarization (E along C, H in the P/B plane, electric source in
the P/B plane, magnetic source along C) the unknown pair ``(e, g)`` obeys

    (r e)' = -kE r g - r jeB,
    (r g)' = -lam^2 e/(kE r) - lam jeP/kE - kH r e + r jmC,

with ``kE = k_eff mu(r)``, ``kH = k_eff eps(r)``, and the algebraic relation
``f = -(lam e / r + jeP)/kE``; the TM pair is the mirror image.  Regular
behavior ``~ r^n`` closes the system at the inner radius and the two trace
matchings close it at ``r = 1``.  Midpoint (box) differencing gives a banded
system solved by LAPACK's banded LU; one factorization serves the many
right-hand sides of an operator column sweep.

Three spectral-parameter conventions share this assembly:

* ``hatted_sign = -1, delta > 0``: the dissipative regularization (factor
  ``(1 - i a delta) k``, ``a = sign Im k^2``), uniquely solvable by coercivity;
* ``hatted_sign = -1, delta = 0``: its limiting-absorption limit;
* ``hatted_sign = +1, delta = 0``: the solution-operator system whose
  spectrum encodes the transmission eigenvalues via ``omega = -i(k + 1/lambda)``.

The discrete source space mirrors the constrained quadruple space: the
divergence conditions are built into the basis by differentiating an analytic
potential, and the normal-flux matchings are built into the block structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.linalg import get_lapack_funcs

from .ball import POLARIZATIONS
from .errors import DegenerateMediaError, DiscretizationError
from .media import MediaQuad, RadialMedia, Wavenumber

__all__ = [
    "SectorSystem",
    "SectorSource",
    "SectorSolution",
    "HSpaceElement",
    "SectorBasis",
    "AssembledSector",
    "assemble_sector",
    "solve_sector",
    "limiting_absorption_sweep",
    "operator_T_matrix",
    "spectrum_T",
    "physical_spectrum",
    "OperatorMatrix",
    "SweepReport",
]

P, B, C = 0, 1, 2


@dataclass(frozen=True)
class SectorSystem:
    """One (degree, polarization) radial system at a fixed spectral point."""

    n: int
    polarization: str
    media: RadialMedia
    k: Wavenumber
    delta: float = 0.0
    hatted_sign: int = -1
    n_grid: int = 2048
    r_min: float = 1e-3

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("degree n must be >= 1")
        if self.polarization not in POLARIZATIONS:
            raise ValueError(f"polarization must be in {POLARIZATIONS}")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if self.hatted_sign not in (-1, 1):
            raise ValueError("hatted_sign must be -1 or +1")
        if not self.media.boundary_quad().admissible():
            raise DegenerateMediaError("degenerate media: zero contrast")

    @property
    def lam(self) -> float:
        return math.sqrt(self.n * (self.n + 1.0))

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.r_min, 1.0, self.n_grid + 1)

    def k_effective(self) -> tuple[complex, complex]:
        """Effective spectral factors (plain, hatted) including regularization."""
        kk = self.k.k
        k2 = kk * kk
        a = 1.0 if k2.imag >= 0 else -1.0
        m = (1.0 - 1j * a * self.delta) if self.delta > 0 else 1.0
        return m * kk, self.hatted_sign * m * kk

    def refined(self, factor: int = 2) -> "SectorSystem":
        return SectorSystem(self.n, self.polarization, self.media, self.k,
                            delta=self.delta, hatted_sign=self.hatted_sign,
                            n_grid=factor * self.n_grid, r_min=self.r_min)


@dataclass
class SectorSource:
    """Raw equation-side sources: (N, 3) arrays of (P, B, C) components."""

    je: np.ndarray
    jm: np.ndarray
    je_hat: np.ndarray
    jm_hat: np.ndarray

    @classmethod
    def zero(cls, n_nodes: int) -> "SectorSource":
        z = lambda: np.zeros((n_nodes, 3), dtype=complex)
        return cls(z(), z(), z(), z())


@dataclass
class HSpaceElement:
    """Constrained quadruple ``(u, v, u_hat, v_hat)``, each ``f P + g B + h C``.

    Membership in the discrete constrained space means: the weighted radial
    potentials behind the P/B pairs satisfy the divergence identities by
    construction, and the weighted normal components match at ``r = 1``.
    """

    u: np.ndarray
    v: np.ndarray
    u_hat: np.ndarray
    v_hat: np.ndarray

    def stack(self) -> np.ndarray:
        return np.stack([self.u, self.v, self.u_hat, self.v_hat])

    @classmethod
    def from_stack(cls, a: np.ndarray) -> "HSpaceElement":
        return cls(a[0], a[1], a[2], a[3])


def _quad_weights(r: np.ndarray) -> np.ndarray:
    """Trapezoid weights for ``integral f r^2 dr`` on the solver grid."""
    w = np.full(r.size, r[1] - r[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return w * r * r


def inner_product(x: HSpaceElement, y: HSpaceElement, r: np.ndarray) -> complex:
    w = _quad_weights(r)
    acc = 0.0 + 0.0j
    for a, b in zip(x.stack(), y.stack()):
        acc += np.sum(w[:, None] * np.conj(a) * b)
    return complex(acc)


def l2_norm(x: HSpaceElement, r: np.ndarray) -> float:
    return math.sqrt(max(inner_product(x, x, r).real, 0.0))


# ---------------------------------------------------------------------------
# banded assembly and LU
# ---------------------------------------------------------------------------

class _BandedLU:
    """LAPACK zgbtrf/zgbtrs wrapper; supports plain and conjugate-transpose solves."""

    def __init__(self, ab: np.ndarray, kl: int, ku: int):
        gbtrf, = get_lapack_funcs(("gbtrf",), (ab,))
        n = ab.shape[1]
        ab_full = np.zeros((2 * kl + ku + 1, n), dtype=complex, order="F")
        ab_full[kl:, :] = ab
        lu, ipiv, info = gbtrf(ab_full, kl, ku)
        if info != 0:
            raise DiscretizationError(f"banded LU failed with info={info}")
        self._lu, self._ipiv, self.kl, self.ku = lu, ipiv, kl, ku
        gbtrs, = get_lapack_funcs(("gbtrs",), (lu,))
        self._gbtrs = gbtrs

    def solve(self, b: np.ndarray, trans: str = "N") -> np.ndarray:
        b = np.asarray(b, dtype=complex)
        code = {"N": 0, "T": 1, "C": 2}[trans]
        x, info = self._gbtrs(self._lu, self.kl, self.ku, b, self._ipiv, trans=code)
        if info != 0:
            raise DiscretizationError(f"banded solve failed with info={info}")
        return x

    def sigma_min_estimate(self, iters: int = 10, seed: int = 0) -> float:
        """Inverse power iteration on ``A A^H``; returns an estimate of sigma_min."""
        rng = np.random.default_rng(seed)
        n = self._lu.shape[1]
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v /= np.linalg.norm(v)
        growth = 0.0
        for _ in range(iters):
            w = self.solve(self.solve(v, "N"), "C")
            growth = np.linalg.norm(w)
            v = w / growth
        return 1.0 / math.sqrt(growth)


_KL = _KU = 7


@dataclass
class AssembledSector:
    system: SectorSystem
    ab: np.ndarray
    rhs: np.ndarray
    source: SectorSource
    _lu: _BandedLU | None = None

    def factor(self) -> _BandedLU:
        if self._lu is None:
            self._lu = _BandedLU(self.ab, _KL, _KU)
        return self._lu

    def solve(self) -> "SectorSolution":
        sol = self.factor().solve(self.rhs)
        return _unpack_solution(self.system, self.source, sol)

    def sigma_min_estimate(self, iters: int = 10) -> float:
        return self.factor().sigma_min_estimate(iters=iters)


def _profiles(sys: SectorSystem):
    """Coefficient profiles on nodes and midpoints of the solver grid."""
    r = sys.grid
    rm = 0.5 * (r[:-1] + r[1:])
    pn = sys.media.interp(r)
    pm = sys.media.interp(rm)
    return r, rm, pn, pm


def _assemble_matrix(sys: SectorSystem) -> np.ndarray:
    """Source-independent box-scheme matrix in diagonal-ordered banded form.

    Unknown layout per node i: columns 4i..4i+3 hold
    TE: (e, g, e_hat, g_hat);  TM: (g, h, g_hat, h_hat).
    Rows: two inner regularity rows, four midpoint rows per interval, two
    interface rows at r = 1.
    """
    r, rm, pn, pm = _profiles(sys)
    n_nodes = r.size
    lam = sys.lam
    kpl, kht = sys.k_effective()
    dr = r[1] - r[0]

    ndof = 4 * n_nodes
    ab = np.zeros((_KL + _KU + 1, ndof), dtype=complex)

    def put(i, j, v):
        ab[_KU + i - j, j] += v

    te = sys.polarization == "TE"
    row = 0
    for med in (0, 1):
        off = 2 * med
        keff = kpl if med == 0 else kht
        mu0 = (pn["mu"] if med == 0 else pn["mu_hat"])[0]
        eps0 = (pn["eps"] if med == 0 else pn["eps_hat"])[0]
        if te:
            put(row, off + 0, sys.n + 1.0)
            put(row, off + 1, keff * mu0 * r[0])
        else:
            put(row, off + 1, sys.n + 1.0)
            put(row, off + 0, -keff * eps0 * r[0])
        row += 1

    for i in range(n_nodes - 1):
        ri, rip, rmi = r[i], r[i + 1], rm[i]
        for med in (0, 1):
            off = 4 * i + 2 * med
            keff = kpl if med == 0 else kht
            kE = keff * (pm["mu"] if med == 0 else pm["mu_hat"])[i]
            kH = keff * (pm["eps"] if med == 0 else pm["eps_hat"])[i]
            if te:
                put(row, off + 0, -ri / dr)
                put(row, off + 4, rip / dr)
                put(row, off + 1, 0.5 * kE * rmi)
                put(row, off + 5, 0.5 * kE * rmi)
                row += 1
                put(row, off + 1, -ri / dr)
                put(row, off + 5, rip / dr)
                coef = lam * lam / (kE * rmi) + kH * rmi
                put(row, off + 0, 0.5 * coef)
                put(row, off + 4, 0.5 * coef)
                row += 1
            else:
                put(row, off + 0, -ri / dr)
                put(row, off + 4, rip / dr)
                coef = -(lam * lam / (kH * rmi) + kE * rmi)
                put(row, off + 1, 0.5 * coef)
                put(row, off + 5, 0.5 * coef)
                row += 1
                put(row, off + 1, -ri / dr)
                put(row, off + 5, rip / dr)
                put(row, off + 0, -0.5 * kH * rmi)
                put(row, off + 4, -0.5 * kH * rmi)
                row += 1

    base = 4 * (n_nodes - 1)
    for comp in (0, 1):
        put(row, base + comp, -1.0)
        put(row, base + 2 + comp, 1.0)
        row += 1
    assert row == ndof
    return ab


def _assemble_rhs(sys: SectorSystem, src: SectorSource) -> np.ndarray:
    r, rm, pn, pm = _profiles(sys)
    n_nodes = r.size
    lam = sys.lam
    kpl, kht = sys.k_effective()
    ndof = 4 * n_nodes
    rhs = np.zeros(ndof, dtype=complex)

    def mid(arr):
        return 0.5 * (arr[:-1] + arr[1:])

    te = sys.polarization == "TE"
    row = 0
    for med in (0, 1):
        je = src.je if med == 0 else src.je_hat
        jm = src.jm if med == 0 else src.jm_hat
        rhs[row] = -r[0] * (je[0, B] if te else jm[0, B])
        row += 1

    jes = (mid(src.je), mid(src.je_hat))
    jms = (mid(src.jm), mid(src.jm_hat))
    for i in range(n_nodes - 1):
        rmi = rm[i]
        for med in (0, 1):
            keff = kpl if med == 0 else kht
            kE = keff * (pm["mu"] if med == 0 else pm["mu_hat"])[i]
            kH = keff * (pm["eps"] if med == 0 else pm["eps_hat"])[i]
            jem, jmm = jes[med], jms[med]
            if te:
                rhs[row] = -rmi * jem[i, B]
                row += 1
                rhs[row] = -lam * jem[i, P] / kE + rmi * jmm[i, C]
                row += 1
            else:
                rhs[row] = lam * jmm[i, P] / kH + rmi * jem[i, C]
                row += 1
                rhs[row] = -rmi * jmm[i, B]
                row += 1
    # interface rows carry zero data
    return rhs


def _assemble_raw(sys: SectorSystem, src: SectorSource) -> AssembledSector:
    return AssembledSector(system=sys, ab=_assemble_matrix(sys),
                           rhs=_assemble_rhs(sys, src), source=src)


@dataclass
class SectorSolution:
    """Field quadruple on the solver grid, each field as (N, 3) P/B/C components."""

    system: SectorSystem
    E: np.ndarray
    H: np.ndarray
    E_hat: np.ndarray
    H_hat: np.ndarray

    def as_element(self) -> HSpaceElement:
        return HSpaceElement(self.E, self.H, self.E_hat, self.H_hat)

    def l2_norm(self) -> float:
        return l2_norm(self.as_element(), self.system.grid)


def _unpack_solution(sys: SectorSystem, src: SectorSource, sol: np.ndarray) -> SectorSolution:
    r = sys.grid
    n_nodes = r.size
    lam = sys.lam
    kpl, kht = sys.k_effective()
    pn = sys.media.interp(r)
    cols = sol.reshape(n_nodes, 4)

    fields = []
    for med in (0, 1):
        keff = kpl if med == 0 else kht
        eps_n = pn["eps"] if med == 0 else pn["eps_hat"]
        mu_n = pn["mu"] if med == 0 else pn["mu_hat"]
        je = src.je if med == 0 else src.je_hat
        jm = src.jm if med == 0 else src.jm_hat
        kE, kH = keff * mu_n, keff * eps_n
        E = np.zeros((n_nodes, 3), dtype=complex)
        H = np.zeros((n_nodes, 3), dtype=complex)
        if sys.polarization == "TE":
            e = cols[:, 2 * med + 0]
            g = cols[:, 2 * med + 1]
            E[:, C] = e
            H[:, P] = -(lam * e / r + je[:, P]) / kE
            H[:, B] = g
        else:
            g = cols[:, 2 * med + 0]
            h = cols[:, 2 * med + 1]
            E[:, P] = (lam * h / r + jm[:, P]) / kH
            E[:, B] = g
            H[:, C] = h
        fields.append((E, H))
    return SectorSolution(system=sys, E=fields[0][0], H=fields[0][1],
                          E_hat=fields[1][0], H_hat=fields[1][1])


def _map_sources(sys: SectorSystem, x: HSpaceElement) -> SectorSource:
    """The input mapping (J_e, J_m, Je_hat, Jm_hat) = (mu v, eps u, mu_hat v_hat, eps_hat u_hat)."""
    pn = sys.media.interp(sys.grid)
    return SectorSource(
        je=pn["mu"][:, None] * x.v,
        jm=pn["eps"][:, None] * x.u,
        je_hat=pn["mu_hat"][:, None] * x.v_hat,
        jm_hat=pn["eps_hat"][:, None] * x.u_hat,
    )


def assemble_sector(sys: SectorSystem, source: HSpaceElement) -> AssembledSector:
    """Banded linear system for a constrained-space source quadruple."""
    return _assemble_raw(sys, _map_sources(sys, source))


def solve_sector(sys: SectorSystem, source: HSpaceElement) -> SectorSolution:
    return assemble_sector(sys, source).solve()


# ---------------------------------------------------------------------------
# limiting absorption
# ---------------------------------------------------------------------------

@dataclass
class SweepReport:
    deltas: list[float]
    norms: list[float]
    diffs: list[float]
    ratios: list[float]
    extrapolated_norm: float

    def first_order(self, lo: float = 5.0, hi: float = 20.0) -> bool:
        return all(lo <= q <= hi for q in self.ratios)


def limiting_absorption_sweep(sys: SectorSystem, source: HSpaceElement,
                              deltas: Sequence[float]) -> SweepReport:
    """Solve the dissipative regularization along a decreasing delta ladder.

    Consecutive Cauchy differences should scale like delta (ratios near
    ``delta_j/delta_{j+1}``); the extrapolated limit is the Richardson
    first-order extrapolant of the last pair.
    """
    deltas = [float(d) for d in deltas]
    if any(d <= 0 for d in deltas) or any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be positive and strictly decreasing")
    sols = []
    for d in deltas:
        s = SectorSystem(sys.n, sys.polarization, sys.media, sys.k, delta=d,
                         hatted_sign=-1, n_grid=sys.n_grid, r_min=sys.r_min)
        sols.append(solve_sector(s, source))
    r = sys.grid
    norms = [s.l2_norm() for s in sols]
    diffs = []
    for a, b in zip(sols, sols[1:]):
        diff = HSpaceElement.from_stack(a.as_element().stack() - b.as_element().stack())
        diffs.append(l2_norm(diff, r))
    ratios = [d0 / d1 if d1 > 0 else float("inf") for d0, d1 in zip(diffs, diffs[1:])]
    # first-order Richardson limit of the last pair of solutions
    last, prev = sols[-1], sols[-2]
    q = deltas[-2] / deltas[-1]
    extrap = HSpaceElement.from_stack(
        (q * last.as_element().stack() - prev.as_element().stack()) / (q - 1.0))
    return SweepReport(deltas=deltas, norms=norms, diffs=diffs, ratios=ratios,
                       extrapolated_norm=l2_norm(extrap, r))


# ---------------------------------------------------------------------------
# constrained basis and the discrete solution operator
# ---------------------------------------------------------------------------

def _cheb_and_deriv(j: int, r: np.ndarray, r_min: float) -> tuple[np.ndarray, np.ndarray]:
    x = 2.0 * (r - r_min) / (1.0 - r_min) - 1.0
    cj = np.zeros(j + 1)
    cj[j] = 1.0
    t = _cheb.chebval(x, cj)
    dt = _cheb.chebval(x, _cheb.chebder(cj)) * 2.0 / (1.0 - r_min)
    return t, dt


@dataclass
class SectorBasis:
    """Orthonormal basis of the discrete constrained source space (one sector)."""

    n: int
    polarization: str
    media: RadialMedia
    r: np.ndarray
    elements: list[HSpaceElement]
    flip_signs: np.ndarray  # action of (u, v, u_hat, v_hat) -> (-u, v, -u_hat, v_hat)

    @property
    def size(self) -> int:
        return len(self.elements)

    def project(self, x: HSpaceElement) -> tuple[np.ndarray, float]:
        """Coordinates of ``x`` in the basis plus the relative projection defect."""
        coords = np.array([inner_product(b, x, self.r) for b in self.elements])
        approx = sum(c * b.stack() for c, b in zip(coords, self.elements))
        defect = l2_norm(HSpaceElement.from_stack(x.stack() - approx), self.r)
        nx = l2_norm(x, self.r)
        return coords, defect / nx if nx > 0 else 0.0


def build_sector_basis(n: int, polarization: str, media: RadialMedia,
                       r: np.ndarray, n_free: int = 28, n_con: int = 28) -> SectorBasis:
    """Assemble and orthonormalize the constrained quadruple basis.

    Free blocks are C-type profiles ``r^q T_j``; constrained P/B blocks come
    from potentials ``w = r^(q+2) T_j`` via ``f = w/(r^2 coef)``,
    ``g = w'/(lam r coef)``, which satisfies the weighted divergence identity
    identically.  Interior potentials vanish at r = 1; one shared potential
    pair carries the matched normal flux.
    """
    r_min = float(r[0])
    lam = math.sqrt(n * (n + 1.0))
    q = min(n, 2)
    prof = media.interp(r)
    # which quadruple slots are C-type free vs P/B-constrained, and the
    # constraint weight: TE constrains (v, v_hat) with mu; TM constrains
    # (u, u_hat) with eps
    if polarization == "TE":
        free_slots, con_slots = (0, 2), (1, 3)
        coefs = (prof["mu"], prof["mu_hat"])
    else:
        free_slots, con_slots = (1, 3), (0, 2)
        coefs = (prof["eps"], prof["eps_hat"])

    n_nodes = r.size
    raw: list[np.ndarray] = []
    signs: list[float] = []

    def blank():
        return np.zeros((4, n_nodes, 3), dtype=complex)

    for slot in free_slots:
        for j in range(n_free):
            t, _ = _cheb_and_deriv(j, r, r_min)
            el = blank()
            el[slot, :, C] = r ** q * t
            raw.append(el)
            signs.append(-1.0 if slot in (0, 2) else 1.0)

    def pb_pair(j: int, interior: bool):
        t, dt = _cheb_and_deriv(j, r, r_min)
        if interior:
            w = r ** (q + 2) * (t - 1.0)
            dw = (q + 2) * r ** (q + 1) * (t - 1.0) + r ** (q + 2) * dt
        else:
            w = r ** (q + 2)
            dw = (q + 2) * r ** (q + 1)
        return w, dw

    for which, slot in enumerate(con_slots):
        coef = coefs[which]
        for j in range(1, n_con):
            w, dw = pb_pair(j, interior=True)
            el = blank()
            el[slot, :, P] = w / (r * r * coef)
            el[slot, :, B] = dw / (lam * r * coef)
            raw.append(el)
            signs.append(-1.0 if slot in (0, 2) else 1.0)
    # shared flux-carrying pair: identical potential in both media
    w, dw = pb_pair(0, interior=False)
    el = blank()
    for which, slot in enumerate(con_slots):
        el[slot, :, P] = w / (r * r * coefs[which])
        el[slot, :, B] = dw / (lam * r * coefs[which])
    raw.append(el)
    signs.append(-1.0 if con_slots[0] in (0, 2) else 1.0)

    elements = [HSpaceElement.from_stack(a) for a in raw]
    gram = np.empty((len(elements), len(elements)), dtype=complex)
    for i, x in enumerate(elements):
        for j, y in enumerate(elements):
            if j < i:
                gram[i, j] = np.conj(gram[j, i])
            else:
                gram[i, j] = inner_product(x, y, r)
    # Cholesky of the Gram; tiny diagonal lift guards near-dependence
    jitter = 1e-13 * np.abs(np.diag(gram)).max()
    L = np.linalg.cholesky(gram + jitter * np.eye(len(elements)))
    inv_lt = np.linalg.inv(L).conj().T   # columns: orthonormal combinations
    stacks = np.stack([e.stack() for e in elements])
    ortho = np.einsum("me,mnrc->enrc", inv_lt, stacks)
    out = [HSpaceElement.from_stack(ortho[e]) for e in range(len(elements))]
    return SectorBasis(n=n, polarization=polarization, media=media, r=r,
                       elements=out, flip_signs=np.asarray(signs))


@dataclass
class OperatorMatrix:
    """Discrete solution operator on an orthonormal constrained basis."""

    basis: SectorBasis
    k: Wavenumber
    matrix: np.ndarray           # T itself
    projection_defect: float     # worst relative defect over the columns
    n_grid: int

    def flipped(self) -> np.ndarray:
        """Matrix of T composed with the sign flip (-u, v, -u_hat, v_hat)."""
        return self.matrix @ np.diag(self.basis.flip_signs)

    def operator_norm(self) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)


def operator_T_matrix(media: RadialMedia, k: Wavenumber, n: int, polarization: str,
                      *, n_grid: int = 2048, r_min: float = 1e-3,
                      n_free: int = 28, n_con: int = 28,
                      basis: SectorBasis | None = None) -> OperatorMatrix:
    """Columns are solution-operator images of the orthonormal basis sources.

    The underlying solves use the ``hatted_sign = +1`` system at ``delta = 0``
    (the system whose unique solvability the limiting-absorption construction
    provides); one banded factorization serves all columns.
    """
    k.require_solve_ready()
    sys = SectorSystem(n, polarization, media, k, delta=0.0, hatted_sign=+1,
                       n_grid=n_grid, r_min=r_min)
    r = sys.grid
    if basis is None:
        basis = build_sector_basis(n, polarization, media, r,
                                   n_free=n_free, n_con=n_con)
    elif basis.r.size != r.size:
        raise ValueError("basis grid does not match the solver grid")

    # one factorization serves every column; only the right-hand side varies
    lu = _BandedLU(_assemble_matrix(sys), _KL, _KU)
    cols = np.empty((basis.size, basis.size), dtype=complex)
    worst_defect = 0.0
    for jcol, b in enumerate(basis.elements):
        src = _map_sources(sys, b)
        sol = _unpack_solution(sys, src, lu.solve(_assemble_rhs(sys, src)))
        coords, defect = basis.project(sol.as_element())
        cols[:, jcol] = coords
        worst_defect = max(worst_defect, defect)
    return OperatorMatrix(basis=basis, k=k, matrix=cols,
                          projection_defect=worst_defect, n_grid=n_grid)


def spectrum_T(op: OperatorMatrix, *, lambda_floor: float = 1e-8) -> list[tuple[complex, complex]]:
    """Eigenvalues of the flipped operator mapped to candidate frequencies.

    A transmission eigenpair at frequency ``omega`` is a fixed point of the
    flipped operator scaled by ``(i omega - k)``, so each eigenvalue
    ``lambda`` yields the candidate ``omega = -i (k + 1/lambda)``.
    """
    lams = np.linalg.eigvals(op.flipped())
    out = []
    for lam in lams:
        if abs(lam) < lambda_floor:
            continue
        kap = op.k.k + 1.0 / lam
        out.append((complex(lam), complex(-1j * kap)))
    out.sort(key=lambda t: abs(t[1]))
    return out


def physical_spectrum(media: RadialMedia, k: Wavenumber, n: int, polarization: str,
                      *, n_grid: int = 2048, omega_cap: float | None = None,
                      stability_tol: float = 1e-3,
                      n_free: int = 28, n_con: int = 28) -> list[complex]:
    """Grid-refinement-stable eigenvalues of the discrete solution operator.

    Runs the operator at ``n_grid`` and ``2 n_grid``; a fine-grid candidate
    is physical when a coarse-grid candidate sits within ``stability_tol``
    relative distance.  Discretization artifacts move under refinement and
    are discarded.
    """
    cands = []
    for grid in (n_grid, 2 * n_grid):
        op = operator_T_matrix(media, k, n, polarization, n_grid=grid,
                               n_free=n_free, n_con=n_con)
        oms = [om for _, om in spectrum_T(op)]
        if omega_cap is not None:
            oms = [om for om in oms if abs(om) <= omega_cap]
        cands.append(oms)
    coarse, fine = cands
    keep = []
    for om in fine:
        if any(abs(om - oc) <= stability_tol * max(1.0, abs(om)) for oc in coarse):
            keep.append(om)
    keep.sort(key=lambda z: (abs(z), np.angle(z)))
    return keep
