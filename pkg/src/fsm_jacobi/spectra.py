"""Eigenvalues, singular values and pseudospectra of finite sections.

Also Hausdorff distances between point clouds and convergence studies of
finite-section spectra toward a prescribed limit set.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from .errors import BudgetExceeded, InvalidGrid, InvalidInput, UnsupportedShift
from .linalg import sigma_min_dense, sigma_min_sparse
from .operator import BandedSystem, circulant_spectrum, from_bands, materialize
from .pseudoergodic import BI, DiagonalField

EIG_CAP = 4000
HERMITIAN_EIG_CAP = 200_000
SVD_CAP = 4000
PSEUDO_CAP = 1500

EIGENVALUES = "eig"
SINGULAR_VALUES = "sv"
PSEUDOSPECTRUM = "pseudo"


@dataclass
class SpectralCloud:
    kind: str
    points: np.ndarray = field(repr=False)
    source: dict = field(default_factory=dict)
    eps: Optional[float] = None

    def __len__(self):
        return len(self.points)


def _source(sys: BandedSystem) -> dict:
    return {"l": sys.l, "r": sys.r, "shift_k": sys.shift_k}


def is_selfadjoint(sys: BandedSystem, tol: float = 0.0) -> bool:
    """``v`` real and ``w_i = conj(u_{i+1})`` on the unshifted window."""
    if sys.shift_k != 0:
        return False
    if np.abs(sys.main.imag).max(initial=0) > tol:
        return False
    return bool(np.abs(sys.sup[:-1] - np.conj(sys.sub[1:])).max(initial=0) <= tol)


def eigenvalues(sys: BandedSystem) -> SpectralCloud:
    """All eigenvalues of the window matrix, sorted.

    Selfadjoint windows go through the symmetric tridiagonal solver (real
    output); everything else through dense QR, capped at ``EIG_CAP``.
    """
    if sys.shift_k != 0:
        raise UnsupportedShift("eigenvalues are computed for unshifted sections")
    n = sys.size
    if is_selfadjoint(sys):
        if n > HERMITIAN_EIG_CAP:
            raise BudgetExceeded(f"window of size {n} above {HERMITIAN_EIG_CAP}")
        # a unitary diagonal similarity makes the off-diagonal real and >= 0
        if n == 1:
            vals = sys.main.real.copy()
        else:
            vals = sla.eigvalsh_tridiagonal(sys.main.real, np.abs(sys.sup[:-1]))
        return SpectralCloud(EIGENVALUES, vals.astype(np.complex128), _source(sys))
    if n > EIG_CAP:
        raise BudgetExceeded(f"window of size {n} above {EIG_CAP}")
    vals = sla.eigvals(sys.to_dense(), check_finite=False)
    order = np.lexsort((vals.imag, vals.real))
    return SpectralCloud(EIGENVALUES, vals[order], _source(sys))


def singular_values(sys: BandedSystem) -> SpectralCloud:
    n = sys.size
    if n > SVD_CAP:
        raise BudgetExceeded(f"window of size {n} above {SVD_CAP}")
    s = np.sort(sla.svdvals(sys.to_dense(), check_finite=False))
    return SpectralCloud(SINGULAR_VALUES, s.astype(np.complex128), _source(sys))


@dataclass(frozen=True)
class GridSpec:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int = 201
    ny: int = 201

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InvalidGrid("grid bounds must satisfy x0 < x1 and y0 < y1")
        if self.nx < 2 or self.ny < 2:
            raise InvalidGrid("grid needs at least 2 nodes per axis")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        try:
            parts = [float(p) for p in text.split(",")]
        except ValueError:
            raise InvalidGrid(f"cannot parse grid {text!r}") from None
        if len(parts) == 5:
            return cls(*parts[:4], int(parts[4]), int(parts[4]))
        if len(parts) == 6:
            return cls(*parts[:4], int(parts[4]), int(parts[5]))
        raise InvalidGrid("grid is x0,x1,y0,y1,res or x0,x1,y0,y1,nx,ny")

    def axes(self):
        return np.linspace(self.x0, self.x1, self.nx), np.linspace(self.y0, self.y1, self.ny)

    def nodes(self) -> np.ndarray:
        xs, ys = self.axes()
        return xs[None, :] + 1j * ys[:, None]

    @property
    def diagonal(self) -> float:
        return float(np.hypot((self.x1 - self.x0) / (self.nx - 1),
                              (self.y1 - self.y0) / (self.ny - 1)))


@dataclass
class PseudospectrumResult:
    grid: GridSpec
    sigma_min: np.ndarray = field(repr=False)  # shape (ny, nx)
    levels: dict = field(default_factory=dict)  # eps -> SpectralCloud of nodes

    def resolvent_norm(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 1.0 / self.sigma_min


def default_grid(sys: BandedSystem, res: int = 201) -> GridSpec:
    """Box around the Gershgorin-type disk hull, inflated by 20%."""
    radius = np.abs(np.stack([sys.sub, sys.sup])).sum(axis=0)
    c = sys.main
    x0, x1 = (c.real - radius).min(), (c.real + radius).max()
    y0, y1 = (c.imag - radius).min(), (c.imag + radius).max()
    pad_x = 0.2 * max(x1 - x0, 1e-3) / 2
    pad_y = 0.2 * max(y1 - y0, 1e-3) / 2
    return GridSpec(x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y, res, res)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FSM_JACOBI_THREADS", "1")))
    except ValueError:
        return 1


def pseudospectrum_grid(sys: BandedSystem, grid: Optional[GridSpec] = None,
                        eps_levels=(), threads: Optional[int] = None) -> PseudospectrumResult:
    """``sigma_min(A_n - lambda I)`` on a grid and the closed ``eps``-level node sets.

    A node belongs to the ``eps``-pseudospectrum iff ``sigma_min <= eps``.
    """
    n = sys.size
    if n > PSEUDO_CAP:
        raise BudgetExceeded(f"window of size {n} above {PSEUDO_CAP}")
    grid = grid or default_grid(sys)
    nodes = grid.nodes()
    flat = nodes.reshape(-1)
    main = np.asarray(sys.main)

    if n <= 64:
        M = sys.to_dense()
        eye = np.eye(n)

        def smin(lam):
            return sigma_min_dense(M - lam * eye)
    else:
        def smin(lam):
            shifted = from_bands(sys.l, sys.shift_k, sys.sub, main - lam * _diag_mask(sys), sys.sup)
            return sigma_min_sparse(shifted.to_sparse())

    workers = threads or _threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = np.fromiter(ex.map(smin, flat), dtype=float, count=flat.size)
    else:
        vals = np.fromiter((smin(lam) for lam in flat), dtype=float, count=flat.size)
    sig = vals.reshape(nodes.shape)
    levels = {}
    for eps in sorted(float(e) for e in eps_levels):
        pts = nodes[sig <= eps]
        levels[eps] = SpectralCloud(PSEUDOSPECTRUM, pts, _source(sys), eps)
    return PseudospectrumResult(grid, sig, levels)


def _diag_mask(sys: BandedSystem) -> np.ndarray:
    """Indicator of rows whose identity entry falls on the ``main`` band."""
    if sys.shift_k == 0:
        return np.ones(sys.size)
    raise UnsupportedShift("pseudospectra are computed for unshifted sections")


def _as_points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, SpectralCloud) else cloud
    pts = np.asarray(pts, dtype=np.complex128).reshape(-1)
    if pts.size == 0:
        raise InvalidInput("empty point cloud")
    return np.column_stack([pts.real, pts.imag])


def hausdorff(M, N) -> float:
    """``max(max_m min_n |m-n|, max_n min_m |m-n|)`` over finite clouds."""
    P, Q = _as_points(M), _as_points(N)
    d_pq = cKDTree(Q).query(P)[0].max()
    d_qp = cKDTree(P).query(Q)[0].max()
    return float(max(d_pq, d_qp))


@dataclass
class HausdorffReport:
    sizes: list
    distances: list
    mode: str
    tolerance: Optional[float]
    note: str = "tolerances are engineering choices; no convergence rate is known"
    slack: float = 1e-10  # relative round-off allowance in the monotonicity check

    @property
    def decreasing(self) -> bool:
        """Non-increasing up to round-off; plateaus count as decreasing."""
        d = self.distances
        return all(b <= a * (1 + self.slack) + self.slack for a, b in zip(d, d[1:]))

    @property
    def strictly_decreasing(self) -> bool:
        d = self.distances
        return all(b < a for a, b in zip(d, d[1:]))

    @property
    def converged(self) -> bool:
        """Eventually decreasing and the last distance below ``tolerance``."""
        if self.tolerance is None:
            return self.decreasing
        return self.decreasing and self.distances[-1] <= self.tolerance

    def to_json(self) -> dict:
        return {"mode": self.mode, "sizes": list(self.sizes),
                "distances": [float(d) for d in self.distances],
                "tolerance": self.tolerance, "decreasing": self.decreasing,
                "converged": self.converged, "note": self.note}


def convergence_study(fld: DiagonalField, sizes, mode: str, target_cloud,
                      tolerance: Optional[float] = None) -> HausdorffReport:
    """``d_H`` between finite-section spectra and ``target_cloud`` for growing ``n``.

    ``mode`` is ``"eig"`` / ``"sv"`` on the window ``[-n, n]`` (``[1, n]``
    for semi-infinite fields), or ``"circulant"``: the periodic ``n x n``
    spectrum built from the field's triple at its first index (constant
    diagonals assumed).
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise InvalidInput("sizes must be ascending")
    dists = []
    for n in sizes:
        if mode == "circulant":
            u, v, w = fld.triple(fld.lo)
            cloud = circulant_spectrum(u, v, w, n)
        else:
            l, r = (-n, n) if fld.orientation == BI else (1, n)
            sys = materialize(fld, l, r, 0)
            if mode == EIGENVALUES:
                cloud = eigenvalues(sys)
            elif mode == SINGULAR_VALUES:
                cloud = singular_values(sys)
            else:
                raise InvalidInput(f"unknown mode {mode!r}")
        dists.append(hausdorff(cloud, target_cloud))
    return HausdorffReport(sizes, dists, mode, tolerance)
