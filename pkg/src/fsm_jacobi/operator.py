"""Finite sections of (shifted) tridiagonal operators and Toeplitz/Laurent cases.

A finite section ``P_{l,r} S^k A P_{l,r}`` is stored row-aligned: row
``i`` of the window holds the triple of field index ``i - k`` in three
arrays ``sub``, ``main``, ``sup`` that multiply columns ``i-k-1``,
``i-k`` and ``i-k+1``. Couplings that leave the window are zeroed
(Dirichlet truncation).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from .errors import (DimensionError, InvalidInput, SymbolVanishes,
                     ToeplitzNotInvertible, UnsupportedShift)
from .fileio import atomic_write_text, fmt
from .pseudoergodic import DiagonalField
from .symbol_sets import TOL_CASE

SHIFTS = (-1, 0, 1)


def _ro(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BandedSystem:
    l: int
    r: int
    shift_k: int
    sub: np.ndarray = field(repr=False)
    main: np.ndarray = field(repr=False)
    sup: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.l > self.r:
            raise DimensionError(f"empty window [{self.l}, {self.r}]")
        if self.shift_k not in SHIFTS:
            raise UnsupportedShift(f"shift_k must be one of {SHIFTS}")
        n = self.size
        for name in ("sub", "main", "sup"):
            arr = _ro(getattr(self, name))
            if arr.shape != (n,):
                raise DimensionError(f"band {name} has length {arr.shape[0]}, expected {n}")
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.r - self.l + 1

    @property
    def offsets(self) -> tuple[int, int, int]:
        """Column offsets ``j - i`` of the ``sub``, ``main``, ``sup`` bands."""
        k = self.shift_k
        return (-k - 1, -k, -k + 1)

    def bands(self):
        return tuple(zip(self.offsets, (self.sub, self.main, self.sup)))

    def to_sparse(self) -> sp.csr_matrix:
        n = self.size
        diags, offs = [], []
        for off, band in self.bands():
            if abs(off) >= n:
                continue
            # scipy.sparse.diags wants diagonal-aligned data
            if off >= 0:
                diags.append(band[:n - off])
            else:
                diags.append(band[-off:])
            offs.append(off)
        if not offs:
            return sp.csr_matrix((n, n), dtype=np.complex128)
        return sp.diags(diags, offs, shape=(n, n), format="csr", dtype=np.complex128)

    def to_dense(self) -> np.ndarray:
        n = self.size
        M = np.zeros((n, n), dtype=np.complex128)
        rows = np.arange(n)
        for off, band in self.bands():
            cols = rows + off
            ok = (cols >= 0) & (cols < n)
            M[rows[ok], cols[ok]] = band[ok]
        return M

    def entry(self, i: int, j: int) -> complex:
        p = i - self.l
        for off, band in self.bands():
            if j - i == off and 0 <= p < self.size and self.l <= j <= self.r:
                return complex(band[p])
        return 0j

    def scale(self) -> float:
        return float(max(np.abs(self.sub).max(), np.abs(self.main).max(),
                         np.abs(self.sup).max()))


def _mask_bands(n, shift_k, sub, main, sup):
    offs = (-shift_k - 1, -shift_k, -shift_k + 1)
    rows = np.arange(n)
    out = []
    for off, band in zip(offs, (sub, main, sup)):
        band = np.array(band, dtype=np.complex128)
        cols = rows + off
        band[(cols < 0) | (cols >= n)] = 0
        out.append(band)
    return out


def from_bands(l: int, shift_k: int, sub, main, sup) -> BandedSystem:
    """Build a system from row-aligned bands, zeroing out-of-window couplings."""
    n = len(main)
    return BandedSystem(l, l + n - 1, shift_k, *_mask_bands(n, shift_k, sub, main, sup))


def materialize(fld: DiagonalField, l: int, r: int, shift_k: int = 0) -> BandedSystem:
    """The finite section ``P_{l,r} S^k A P_{l,r}``.

    Entry ``(i, j)`` equals ``A(i - k, j)``. The field is extended on demand
    when its generator allows it.
    """
    if l > r:
        raise DimensionError(f"empty window [{l}, {r}]")
    if shift_k not in SHIFTS:
        raise UnsupportedShift(f"shift_k must be one of {SHIFTS}")
    fld = fld.covering(l - shift_k, r - shift_k)
    u, v, w = fld.window(l - shift_k, r - shift_k)
    return from_bands(l, shift_k, u, v, w)


def apply(sys: BandedSystem, x) -> np.ndarray:
    """Matrix-vector product with the (truncated) window matrix."""
    x = np.asarray(x, dtype=np.complex128)
    n = sys.size
    if x.shape != (n,):
        raise DimensionError(f"vector of length {x.shape[0] if x.ndim else 0}, window has {n}")
    y = np.zeros(n, dtype=np.complex128)
    for off, band in sys.bands():
        if off >= 0:
            if off < n:
                y[:n - off] += band[:n - off] * x[off:]
        elif -off < n:
            y[-off:] += band[-off:] * x[:n + off]
    return y


def reflect(sys: BandedSystem) -> BandedSystem:
    """Flip across the anti-diagonal: entry ``(i, j)`` moves to ``(l+r-j, l+r-i)``."""
    if sys.shift_k != 0:
        raise UnsupportedShift("reflection is defined for unshifted systems")
    n = sys.size
    sub = np.zeros(n, dtype=np.complex128)
    sup = np.zeros(n, dtype=np.complex128)
    if n > 1:
        sup[:n - 1] = sys.sup[n - 2::-1]
        sub[1:] = sys.sub[:0:-1]
    return BandedSystem(sys.l, sys.r, 0, sub, sys.main[::-1].copy(), sup)


# Toeplitz / Laurent ---------------------------------------------------------


@dataclass(frozen=True)
class ToeplitzSymbol:
    """``a(t) = t^k (u t + v + w / t)`` on the unit circle.

    The factor ``t^k`` accounts for the row shift; it does not change
    ``|a(t)|``.
    """

    u: complex
    v: complex
    w: complex
    shift_k: int = 0

    def __call__(self, t):
        t = np.asarray(t, dtype=np.complex128)
        return t ** self.shift_k * (self.u * t + self.v + self.w / t)

    def abs_on_circle(self, phi):
        t = np.exp(1j * np.asarray(phi, dtype=float))
        return np.abs(self.u * t + self.v + self.w / t)

    def _extreme(self, sign: float, samples: int = 4096) -> float:
        phi = 2 * np.pi * np.arange(samples) / samples
        vals = sign * self.abs_on_circle(phi)
        h = 2 * np.pi / samples
        best = sign * vals.min()
        for k in np.argsort(vals)[:3]:
            res = minimize_scalar(lambda x: sign * float(self.abs_on_circle(x)),
                                  bounds=(phi[k] - h, phi[k] + h), method="bounded",
                                  options={"xatol": 1e-12})
            cand = sign * res.fun
            if sign * cand < sign * best:
                best = cand
        return float(best)

    def min_abs(self) -> float:
        return self._extreme(1.0)

    def max_abs(self) -> float:
        return self._extreme(-1.0)

    def coefficients(self) -> dict:
        """Fourier coefficients ``{power of t: value}`` (non-zero only)."""
        k = self.shift_k
        coeffs = {1 + k: complex(self.u), k: complex(self.v), k - 1: complex(self.w)}
        return {p: c for p, c in coeffs.items() if c != 0}


def toeplitz_inverse_norm_triangular(u, v, w, shift_k: int = 0,
                                     tol: float = TOL_CASE) -> float:
    """``1 / min |a(t)|`` for a triangular, invertible Toeplitz operator.

    The Toeplitz matrix has entries ``a_{i-j}``. When all coefficients sit
    on one side of the diagonal the inverse is the Toeplitz operator with
    symbol ``1/a`` and its norm is ``sup |1/a|``. This requires the
    polynomial in ``t^{-1}`` (upper) or ``t`` (lower) to have no zero in
    the closed unit disk.
    """
    sym = ToeplitzSymbol(complex(u), complex(v), complex(w), shift_k)
    coeffs = sym.coefficients()
    if not coeffs:
        raise SymbolVanishes("zero symbol")
    powers = list(coeffs)
    if all(p <= 0 for p in powers):
        top = -min(powers)
        poly = [coeffs.get(-j, 0j) for j in range(top + 1)]  # in z = 1/t
    elif all(p >= 0 for p in powers):
        top = max(powers)
        poly = [coeffs.get(j, 0j) for j in range(top + 1)]  # in z = t
    else:
        raise ToeplitzNotInvertible(
            f"symbol with shift {shift_k} has coefficients on both sides; not triangular")
    m = sym.min_abs()
    if m <= tol:
        raise SymbolVanishes(f"min |a(t)| = {m:.3e} on the unit circle")
    if poly[0] == 0:
        raise ToeplitzNotInvertible("zero diagonal")
    roots = np.roots(poly[::-1]) if len(poly) > 1 else np.array([])
    if roots.size and np.abs(roots).min() < 1:
        raise ToeplitzNotInvertible("symbol has a zero inside the unit disk")
    return 1.0 / m


def laurent_spectrum(u, v, w, samples: int = 256) -> np.ndarray:
    """``v + u e^{i phi} + w e^{-i phi}`` at ``samples`` uniform angles."""
    if samples < 3:
        raise InvalidInput("need at least 3 samples")
    t = np.exp(2j * np.pi * np.arange(samples) / samples)
    return complex(v) + complex(u) * t + complex(w) / t


def circulant_spectrum(u, v, w, n: int) -> np.ndarray:
    """Eigenvalues of the periodic ``n x n`` tridiagonal, from roots of unity."""
    if n < 3:
        raise InvalidInput("circulant needs n >= 3")
    return laurent_spectrum(u, v, w, n)


def circulant_matrix(u, v, w, n: int) -> np.ndarray:
    M = np.zeros((n, n), dtype=np.complex128)
    idx = np.arange(n)
    M[idx, idx] = v
    M[idx, (idx - 1) % n] += u
    M[idx, (idx + 1) % n] += w
    return M


# CSV export -----------------------------------------------------------------


def _cfmt(z: complex) -> str:
    z = complex(z)
    return f"{fmt(z.real)}{'+' if z.imag >= 0 or np.isnan(z.imag) else '-'}{fmt(abs(z.imag))}j"


def system_to_csv(sys: BandedSystem) -> str:
    header = json.dumps({"l": sys.l, "r": sys.r, "shift_k": sys.shift_k})
    lines = ["# " + header, "sub,main,super"]
    for a, b, c in zip(sys.sub, sys.main, sys.sup):
        lines.append(f"{_cfmt(a)},{_cfmt(b)},{_cfmt(c)}")
    return "\n".join(lines) + "\n"


def dump_system(sys: BandedSystem, path) -> None:
    atomic_write_text(path, system_to_csv(sys))


def load_system(path) -> BandedSystem:
    from .errors import ConfigError

    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ConfigError(f"{path}: missing JSON header line")
    try:
        head = json.loads(lines[0][1:])
        rows = [[complex(x) for x in ln.split(",")] for ln in lines[2:]]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    sub, main, sup = (np.array(c, dtype=np.complex128) for c in zip(*rows))
    return BandedSystem(int(head["l"]), int(head["r"]), int(head["shift_k"]), sub, main, sup)


__all__ = [
    "BandedSystem", "ToeplitzSymbol", "apply", "circulant_matrix", "circulant_spectrum",
    "dump_system", "from_bands", "laurent_spectrum", "load_system", "materialize",
    "reflect", "system_to_csv", "toeplitz_inverse_norm_triangular",
]
