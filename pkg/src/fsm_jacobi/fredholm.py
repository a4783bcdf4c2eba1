"""Fredholm case classification and invertibility certificates.

Cases (for a pseudoergodic tridiagonal operator with diagonals from U, V, W):

* ``A``: every ``v`` lies outside the ellipse ``E(u, w)``; plus-index 0.
* ``B``: every ``v`` inside and ``|u| > |w|``; plus-index -1.
* ``C``: every ``v`` inside and ``|u| < |w|``; plus-index +1.

Anything on a boundary, or any disagreement between sampled triples,
means the operator is not Fredholm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BudgetExceeded
from .symbol_sets import TOL_CASE, TriSymbolSet, ellipse_eval

A, B, C, NOT_FREDHOLM = "A", "B", "C", "NotFredholm"
PLUS_INDEX = {A: 0, B: -1, C: 1, NOT_FREDHOLM: None}
_CODES = (A, B, C, NOT_FREDHOLM)


def classify_triple(u, v, w, tol: float = TOL_CASE) -> str:
    f = ellipse_eval(u, w, v)
    d = abs(complex(u)) - abs(complex(w))
    if f > tol:
        return A
    if f < -tol:
        if d > tol:
            return B
        if d < -tol:
            return C
    return NOT_FREDHOLM


def _classify_arrays(u, v, w, tol):
    f = ellipse_eval(u, w, v)
    d = np.abs(u) - np.abs(w)
    code = np.full(f.shape, 3, dtype=np.int8)
    code[f > tol] = 0
    inside = f < -tol
    code[inside & (d > tol)] = 1
    code[inside & (d < -tol)] = 2
    return code, f, d


@dataclass
class FredholmClassification:
    case: str
    plus_index: Optional[int]
    witnesses: list = field(default_factory=list)
    consistent: bool = True
    exhaustive: bool = True
    n_triples: int = 1

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "plus_index": self.plus_index,
            "consistent": self.consistent,
            "exhaustive": self.exhaustive,
            "n_triples": self.n_triples,
            "witnesses": self.witnesses,
        }


def _witness(u, v, w, f, d) -> dict:
    u, v, w = complex(u), complex(v), complex(w)
    return {"u": [u.real, u.imag], "v": [v.real, v.imag], "w": [w.real, w.imag],
            "f": float(f), "abs_u_minus_abs_w": float(d)}


def _stratified(values: np.ndarray, count: int) -> np.ndarray:
    n = len(values)
    if count >= n:
        return np.arange(n)
    mods = np.abs(values)
    keep = {0, n - 1, int(mods.argmin()), int(mods.argmax())}
    keep.update(np.linspace(0, n - 1, max(count, 2)).round().astype(int).tolist())
    return np.array(sorted(keep))


def classify_sets(T: TriSymbolSet, tol: float = TOL_CASE, budget: int = 100_000,
                  strict: bool = False) -> FredholmClassification:
    """Classify every sampled triple of ``U x V x W``.

    Above ``budget`` triples the sweep is stratified: each set keeps its
    endpoints and modulus-extremal samples plus an even subsample. With
    ``strict=True`` that situation raises :class:`BudgetExceeded` carrying
    the stratified verdict instead.
    """
    samples = [T.U.sample(), T.V.sample(), T.W.sample()]
    counts = [len(s) for s in samples]
    exhaustive = int(np.prod(counts)) <= budget
    if not exhaustive:
        while int(np.prod(counts)) > budget and max(counts) > 4:
            j = int(np.argmax(counts))
            counts[j] = max(4, counts[j] // 2)
        samples = [s[_stratified(s, c)] for s, c in zip(samples, counts)]
    uu, vv, ww = (g.reshape(-1) for g in np.meshgrid(*samples, indexing="ij"))
    code, f, d = _classify_arrays(uu, vv, ww, tol)
    present = np.unique(code)
    witnesses = []
    if present.size == 1 and present[0] != 3:
        case = _CODES[int(present[0])]
        consistent = True
        for k in {int(np.abs(f).argmin()), int(np.abs(d).argmin())}:
            witnesses.append(_witness(uu[k], vv[k], ww[k], f[k], d[k]))
    else:
        case = NOT_FREDHOLM
        consistent = False
        for c in present:
            idx = np.flatnonzero(code == c)
            for k in idx[:3 if c == 3 else 1]:
                witnesses.append(_witness(uu[k], vv[k], ww[k], f[k], d[k]))
    result = FredholmClassification(case, PLUS_INDEX[case], witnesses, consistent,
                                    exhaustive, int(uu.size))
    if strict and not exhaustive:
        raise BudgetExceeded(f"{np.prod([len(s) for s in (T.U.sample(), T.V.sample(), T.W.sample())])}"
                             f" triples exceed budget {budget}", partial=result)
    return result


def delta_certificate(T: TriSymbolSet) -> Optional[float]:
    """``1/delta`` if ``delta > 0``: a uniform bound on every inverse norm."""
    if T.delta > 0:
        return 1.0 / T.delta
    return None


@dataclass(frozen=True)
class DominanceCertificate:
    diagonal: str  # "sub" or "super"
    gap: float

    @property
    def inverse_bound(self) -> float:
        return 1.0 / self.gap


def dominance_certificate(T: TriSymbolSet) -> Optional[DominanceCertificate]:
    """An off-diagonal that dominates the other two certifies invertibility."""
    sub_gap = T.u_min - (T.v_max + T.w_max)
    if sub_gap > 0:
        return DominanceCertificate("sub", sub_gap)
    super_gap = T.w_min - (T.v_max + T.u_max)
    if super_gap > 0:
        return DominanceCertificate("super", super_gap)
    return None
