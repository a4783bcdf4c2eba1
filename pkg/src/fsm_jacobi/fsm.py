"""Adaptive finite section method for pseudoergodic tridiagonal systems.

Pipeline (bi-infinite): plan cut-off windows ``[l_n, r_n]`` whose edges
carry ``n+1`` consecutive triples within ``1/n`` of a target triple,
classify the target to get the plus-index ``k``, then solve the shifted
sections ``P S^k A P x = P S^k b`` window by window. Case (a) uses the
Thomas algorithm, case (b) back substitution, case (c) forward
substitution.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from . import _core
from .errors import (ConfigError, DimensionError, ExactlySingular, HorizonExceeded,
                     IndexMismatch, InvalidInput, NotFredholm, SymbolVanishes,
                     ToeplitzNotInvertible)
from .fileio import fmt
from .fredholm import (A, B, C, NOT_FREDHOLM, PLUS_INDEX, classify_sets,
                       classify_triple, dominance_certificate)
from .linalg import sigma_min_dense, sigma_min_sparse
from .operator import BandedSystem, apply, materialize, toeplitz_inverse_norm_triangular
from .pseudoergodic import BI, SEMI, DiagonalField, field_distance
from .symbol_sets import TOL_CASE, TriSymbolSet, parse_complex

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 10_000_000
INVERSE_NORM_CAP = 5000
DENSE_SVD_CAP = 2000
PIVOT_REL = 1e-12
_GROW_MIN = 1024


# target matchers -------------------------------------------------------------


class ConstantTriple:
    """Windows whose triples are all within ``1/n`` of one fixed triple."""

    name = "constant"

    def __init__(self, target):
        self.target = tuple(complex(z) for z in target)
        self._cache = (None, None)

    def _dist(self, fld: DiagonalField) -> np.ndarray:
        if self._cache[0] is not fld:
            self._cache = (fld, field_distance(fld, self.target))
        return self._cache[1]

    def window_ok(self, fld: DiagonalField, start: int, n: int) -> bool:
        """Check indices ``start .. start+n`` (clipped below at 1 for semi fields)."""
        a = max(start, fld.lo) if fld.orientation == SEMI else start
        if a < fld.lo or start + n > fld.hi:
            return False
        d = self._dist(fld)[a - fld.lo:start + n - fld.lo + 1]
        return bool(np.all(d < 1.0 / n))

    def find_right(self, fld: DiagonalField, n: int, start: int) -> Optional[int]:
        dist = self._dist(fld)
        pad = n + 1 if fld.orientation == SEMI else 0
        if pad:
            dist = np.concatenate([np.zeros(pad), dist])
        p = _core.scan_right(dist, 1.0 / n, n + 1, max(start - fld.lo + pad, 0))
        return None if p < 0 else fld.lo + p - pad

    def find_left(self, fld: DiagonalField, n: int, start: int) -> Optional[int]:
        if start < fld.lo:
            return None
        p = _core.scan_left(self._dist(fld), 1.0 / n, n + 1, start - fld.lo)
        return None if p < 0 else fld.lo + p


class PredicateMatcher:
    """Right-edge windows chosen by an arbitrary predicate ``ok(field, r, n)``.

    The predicate may only read indices ``<= r`` plus whatever fixed prefix
    it compares against. Scanning is a plain Python loop.
    """

    name = "predicate"

    def __init__(self, ok: Callable[[DiagonalField, int, int], bool], target=None):
        self.ok = ok
        self.target = target

    def find_right(self, fld, n, start):
        for r in range(max(start, fld.lo), fld.hi + 1):
            if self.ok(fld, r, n):
                return r
        return None

    def find_left(self, fld, n, start):
        raise NotImplementedError("predicate matchers plan the right edge only")


class ReversedPrefix(PredicateMatcher):
    """Right windows that mirror the field's own prefix.

    Accepts ``r`` when ``|u_{r-i} - u_{i+2}| + |v_{r-i} - v_{i+1}| + |w_{r-i} - w_i|
    < 1/n`` for ``i = 0..n``, so the lower-right corner of the sections tends
    to the reflection of the semi-infinite operator. The ``w_0`` term is
    dropped (it lies outside the half-axis), and ``r - n`` must be >= 1.
    """

    name = "reversed-prefix"

    def __init__(self, prefix: DiagonalField):
        self.prefix = prefix
        super().__init__(self._check)

    def _check(self, fld, r, n):
        i = np.arange(n + 1)
        idx = r - i
        if idx.min() < max(fld.lo, 1) or n + 2 > self.prefix.hi:
            return False
        P = self.prefix
        u, v, w = fld.window(r - n, r)
        u, v, w = u[::-1], v[::-1], w[::-1]  # position i holds index r - i
        du = np.abs(u - P.u[i + 2 - P.lo])
        dv = np.abs(v - P.v[i + 1 - P.lo])
        pw = np.zeros(n + 1, dtype=np.complex128)
        valid = i >= P.lo
        pw[valid] = P.w[i[valid] - P.lo]
        dw = np.where(valid, np.abs(w - pw), 0.0)
        return bool(np.all(du + dv + dw < 1.0 / n))


# plans -------------------------------------------------------------------------


@dataclass
class WindowPlan:
    target: Optional[tuple]
    entries: list  # (n, l_n, r_n)
    orientation: str
    matcher: str = "constant"
    field: Optional[DiagonalField] = field(default=None, repr=False)

    def to_json(self) -> dict:
        t = None if self.target is None else [[z.real, z.imag] for z in self.target]
        return {"target": t, "orientation": self.orientation, "matcher": self.matcher,
                "entries": [{"n": n, "l_n": l, "r_n": r, "size": r - l + 1}
                            for n, l, r in self.entries]}


def _grow(fld: DiagonalField, side: str, horizon: int) -> DiagonalField:
    if not fld.extendable:
        raise HorizonExceeded("pattern not found in the explicit field window")
    if side == "right":
        if fld.hi >= horizon:
            raise HorizonExceeded(f"pattern not found within index {horizon}")
        new_hi = min(horizon, fld.hi + max(abs(fld.hi), _GROW_MIN))
        return fld.covering(fld.lo, new_hi)
    if fld.lo <= -horizon:
        raise HorizonExceeded(f"pattern not found within index {-horizon}")
    new_lo = max(-horizon, fld.lo - max(abs(fld.lo), _GROW_MIN))
    return fld.covering(new_lo, fld.hi)


def _search(fld, matcher, n, start, side, horizon):
    while True:
        if side == "right":
            if fld.extendable and fld.orientation == BI and start - n < fld.lo:
                fld = fld.covering(start - n, fld.hi)
            pos = matcher.find_right(fld, n, start)
        else:
            if fld.extendable and start + n > fld.hi:
                fld = fld.covering(fld.lo, start + n)
            pos = matcher.find_left(fld, n, start)
        if pos is not None:
            return fld, pos
        fld = _grow(fld, side, horizon)


def _target_of(fld: DiagonalField, target):
    if target is not None:
        return tuple(complex(z) for z in target)
    if fld.sets is None:
        raise InvalidInput("no target given and the field has no governing sets")
    return fld.sets.default_target()


def plan_windows_bi(fld: DiagonalField, target, n_max: int, matcher=None,
                    horizon: int = DEFAULT_HORIZON) -> WindowPlan:
    """Nearest-beyond-previous cut-offs starting from ``l_0 = r_0 = 0``."""
    if fld.orientation != BI:
        raise InvalidInput("plan_windows_bi needs a bi-infinite field")
    if n_max < 1:
        raise InvalidInput("n_max must be >= 1")
    target = _target_of(fld, target) if matcher is None else target
    matcher = matcher or ConstantTriple(target)
    l_prev = r_prev = 0
    entries = []
    for n in range(1, n_max + 1):
        fld, r = _search(fld, matcher, n, r_prev + 1, "right", horizon)
        fld, l = _search(fld, matcher, n, l_prev - 1, "left", horizon)
        entries.append((n, l, r))
        log.debug("n=%d l=%d r=%d", n, l, r)
        l_prev, r_prev = l, r
    return WindowPlan(target, entries, BI, matcher.name, fld)


def plan_windows_semi(fld: DiagonalField, target, n_max: int, matcher=None,
                      horizon: int = DEFAULT_HORIZON) -> WindowPlan:
    """Right cut-offs only; ``l_n = 1`` throughout."""
    if fld.orientation != SEMI:
        raise InvalidInput("plan_windows_semi needs a semi-infinite field")
    if n_max < 1:
        raise InvalidInput("n_max must be >= 1")
    target = _target_of(fld, target) if matcher is None else target
    matcher = matcher or ConstantTriple(target)
    r_prev = 0
    entries = []
    for n in range(1, n_max + 1):
        fld, r = _search(fld, matcher, n, r_prev + 1, "right", horizon)
        entries.append((n, 1, r))
        r_prev = r
    return WindowPlan(target, entries, SEMI, matcher.name, fld)


def check_plan(plan: WindowPlan, fld: Optional[DiagonalField] = None) -> list[str]:
    """Problems with a constant-target plan; empty when it is valid."""
    fld = fld or plan.field
    problems = []
    m = ConstantTriple(plan.target)
    prev = None
    for n, l, r in plan.entries:
        if l > r:
            problems.append(f"n={n}: l_n > r_n")
        if prev is not None:
            if not r > prev[2]:
                problems.append(f"n={n}: r_n not increasing")
            if plan.orientation == BI and not l < prev[1]:
                problems.append(f"n={n}: l_n not decreasing")
        if plan.orientation == SEMI and l != 1:
            problems.append(f"n={n}: semi-infinite plan with l_n != 1")
        if not m.window_ok(fld, r - n, n):
            problems.append(f"n={n}: right window condition fails")
        if plan.orientation == BI and not m.window_ok(fld, l, n):
            problems.append(f"n={n}: left window condition fails")
        prev = (n, l, r)
    return problems


# right-hand sides ------------------------------------------------------------


class SparseRhs:
    """Right-hand side given by finitely many non-zero entries."""

    def __init__(self, values: Optional[dict] = None):
        self.values = {int(i): complex(b) for i, b in (values or {}).items()}

    def window(self, a: int, b: int) -> np.ndarray:
        out = np.zeros(b - a + 1, dtype=np.complex128)
        for i, val in self.values.items():
            if a <= i <= b:
                out[i - a] = val
        return out

    def norm_inf(self) -> float:
        return max((abs(b) for b in self.values.values()), default=0.0)


class FunctionRhs:
    """Right-hand side ``b(i) = fn(i)`` evaluated on integer arrays."""

    def __init__(self, fn):
        self.fn = fn

    def window(self, a: int, b: int) -> np.ndarray:
        return np.asarray(self.fn(np.arange(a, b + 1)), dtype=np.complex128)


def as_rhs(rhs):
    if hasattr(rhs, "window"):
        return rhs
    if isinstance(rhs, dict):
        return SparseRhs(rhs)
    if callable(rhs):
        return FunctionRhs(rhs)
    raise InvalidInput("rhs must be a dict, a callable or provide .window(a, b)")


def load_rhs(path) -> SparseRhs:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                values[int(rec["i"])] = parse_complex(rec["b"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"{path}: line {lineno}: bad rhs record ({exc})") from None
    return SparseRhs(values)


# window solves -----------------------------------------------------------------


def _solve(sys: BandedSystem, rhs: np.ndarray, pivot_rel: float = PIVOT_REL):
    rhs = np.ascontiguousarray(rhs, dtype=np.complex128)
    n = sys.size
    if rhs.shape != (n,):
        raise DimensionError(f"rhs of length {rhs.shape[0]}, window has {n}")
    out = np.empty(n, dtype=np.complex128)
    k = sys.shift_k
    if k == -1:
        bad = _core.upper3(sys.sub, sys.main, sys.sup, rhs, out)
        if bad >= 0:
            raise ExactlySingular(f"zero diagonal entry at window row {sys.l + bad}")
        return out, "backward"
    if k == 1:
        bad = _core.lower3(sys.sub, sys.main, sys.sup, rhs, out)
        if bad >= 0:
            raise ExactlySingular(f"zero diagonal entry at window row {sys.l + bad}")
        return out, "forward"
    scale = sys.scale()
    bad = _core.thomas(sys.sub, sys.main, sys.sup, rhs, out, pivot_rel * scale)
    if bad < 0:
        return out, "thomas"
    # partial-pivoting banded LU (LAPACK gbsv)
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = sys.sup[:-1]
    ab[1] = sys.main
    ab[2, :-1] = sys.sub[1:]
    try:
        x = sla.solve_banded((1, 1), ab, rhs, check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        raise ExactlySingular(str(exc)) from None
    if not np.all(np.isfinite(x)):
        raise ExactlySingular("banded LU produced non-finite values")
    return x, "banded-lu"


def solve_window(sys: BandedSystem, rhs) -> np.ndarray:
    """Solve one window system: Thomas (shift 0), back (-1) or forward (+1)."""
    return _solve(sys, rhs)[0]


def inverse_norm(sys: BandedSystem, dense_cap: int = DENSE_SVD_CAP,
                 tol: float = 1e-6) -> float:
    """``||A_n^{-1}||_2 = 1 / sigma_min``; ``inf`` for singular windows."""
    if sys.size <= dense_cap:
        s = sigma_min_dense(sys.to_dense())
    else:
        s = sigma_min_sparse(sys.to_sparse(), tol=min(tol, 1e-8))
    if s <= 0 or s < np.finfo(float).tiny:
        return np.inf
    return 1.0 / s


# reports -------------------------------------------------------------------------


@dataclass
class SolveRecord:
    n: int
    l: int
    r: int
    solution: Optional[np.ndarray] = field(repr=False)
    residual_inf: float
    inverse_norm: Optional[float]  # None: skipped (window above the size cap)
    componentwise_delta: Optional[float]
    method: str
    rhs_norm_inf: float = 0.0
    singular: bool = False

    @property
    def size(self) -> int:
        return self.r - self.l + 1

    def value_at(self, i: int) -> complex:
        """``x_n(i)``, zero outside the window (sections live in ``im P_n``)."""
        if not self.l <= i <= self.r:
            return 0j
        return complex(self.solution[i - self.l])

    def residual_ok(self) -> bool:
        return self.residual_inf <= 1e-9 * (1 + self.rhs_norm_inf)


@dataclass
class SolveReport:
    plan: WindowPlan
    case: Optional[str]
    shift_k: int
    mode: str
    records: list
    cap: Optional[float] = None
    classification: Optional[object] = None

    def table(self) -> list[dict]:
        rows = []
        for rec in self.records:
            rows.append({
                "n": rec.n, "l_n": rec.l, "r_n": rec.r, "size": rec.size,
                "inv_norm": rec.inverse_norm,
                "residual": rec.residual_inf,
                "delta": rec.componentwise_delta,
                "method": rec.method,
            })
        return rows

    @property
    def growth_flag(self) -> bool:
        """Heuristic instability hint: singular windows or inverse norms that grew 10x."""
        if any(r.singular for r in self.records):
            return True
        norms = [r.inverse_norm for r in self.records if r.inverse_norm is not None]
        if not norms:
            return False
        if any(not np.isfinite(x) for x in norms):
            return True
        return bool(norms[-1] > 10 * norms[0] or (self.cap is not None and max(norms) > self.cap))

    def to_json(self) -> dict:
        def num(x):
            if x is None:
                return None
            if not np.isfinite(x):
                return "inf"
            return float(fmt(x))
        return {
            "mode": self.mode,
            "case": self.case,
            "plus_index": PLUS_INDEX.get(self.case) if self.case else None,
            "shift_k": self.shift_k,
            "stability_cap": num(self.cap),
            "growth_flag": bool(self.growth_flag),
            "plan": self.plan.to_json(),
            "table": [{k: (num(v) if isinstance(v, float) else v) for k, v in row.items()}
                      for row in self.table()],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "l_n", "r_n", "size", "inv_norm", "residual", "delta"])
        for rec in self.records:
            inv = "skipped" if rec.inverse_norm is None else fmt(rec.inverse_norm)
            delta = "" if rec.componentwise_delta is None else fmt(rec.componentwise_delta)
            wr.writerow([rec.n, rec.l, rec.r, rec.size, inv, fmt(rec.residual_inf), delta])
        return buf.getvalue()


def _classify_for_solve(fld: DiagonalField, target, tol):
    case_t = classify_triple(*target, tol=tol)
    cls = None
    if fld.sets is not None:
        cls = classify_sets(fld.sets, tol=tol)
        if cls.case != case_t:
            raise NotFredholm(
                f"target triple gives case {case_t} but the sets give {cls.case}; "
                "the outcome depends on the choice of (u, v, w), so A is not Fredholm", cls)
    if case_t == NOT_FREDHOLM:
        raise NotFredholm("target triple sits on a decision boundary: A is not Fredholm", cls)
    return case_t, cls


def _run_windows(plan, fld, rhs, shift_k, inverse_norm_cap, dense_cap, mode,
                 fatal_singular=True):
    rhs = as_rhs(rhs)
    records = []
    prev = None
    for n, l, r in plan.entries:
        sys = materialize(fld, l, r, shift_k)
        b = rhs.window(l - shift_k, r - shift_k)
        bnorm = float(np.abs(b).max()) if b.size else 0.0
        try:
            x, method = _solve(sys, b)
        except ExactlySingular:
            if fatal_singular:
                raise
            records.append(SolveRecord(n, l, r, None, np.inf, np.inf, None,
                                       "singular", bnorm, True))
            continue
        res = float(np.abs(apply(sys, x) - b).max())
        inv = float(inverse_norm(sys, dense_cap)) if sys.size <= inverse_norm_cap else None
        delta = None
        if prev is not None and prev.solution is not None:
            a0, a1 = max(l, prev.l), min(r, prev.r)
            if a0 <= a1:
                delta = float(np.abs(x[a0 - l:a1 - l + 1]
                                     - prev.solution[a0 - prev.l:a1 - prev.l + 1]).max())
        rec = SolveRecord(n, l, r, x, res, inv, delta, method, bnorm)
        records.append(rec)
        prev = rec
        log.info("%s n=%d [%d, %d] size=%d inv=%s res=%.2e", mode, n, l, r, sys.size, inv, res)
    return records


def solve_adaptive_bi(fld: DiagonalField, rhs, n_max: int, target=None,
                      tol: float = TOL_CASE, inverse_norm_cap: int = INVERSE_NORM_CAP,
                      dense_cap: int = DENSE_SVD_CAP, matcher=None,
                      horizon: int = DEFAULT_HORIZON) -> SolveReport:
    """Adaptive FSM on the bi-infinite axis with index-compensating shift."""
    if fld.orientation != BI:
        raise InvalidInput("solve_adaptive_bi needs a bi-infinite field")
    target = _target_of(fld, target)
    case, cls = _classify_for_solve(fld, target, tol)
    k = PLUS_INDEX[case]
    plan = plan_windows_bi(fld, target, n_max, matcher=matcher, horizon=horizon)
    records = _run_windows(plan, plan.field, rhs, k, inverse_norm_cap, dense_cap, "adaptive")
    cap = stability_cap(fld.sets, case, target) if fld.sets is not None else None
    return SolveReport(plan, case, k, "adaptive", records, cap, cls)


def solve_adaptive_semi(fld: DiagonalField, rhs, n_max: int, target=None,
                        tol: float = TOL_CASE, inverse_norm_cap: int = INVERSE_NORM_CAP,
                        dense_cap: int = DENSE_SVD_CAP, matcher=None,
                        horizon: int = DEFAULT_HORIZON) -> SolveReport:
    """Adaptive FSM on the half-axis: windows ``[1, r_n]``, no shift."""
    if fld.orientation != SEMI:
        raise InvalidInput("solve_adaptive_semi needs a semi-infinite field")
    target = _target_of(fld, target)
    case, cls = _classify_for_solve(fld, target, tol)
    if case != A:
        raise IndexMismatch(
            f"semi-infinite requires case (a); got case ({case.lower()}) with plus-index "
            f"{PLUS_INDEX[case]}, so A_+ is not invertible", cls)
    plan = plan_windows_semi(fld, target, n_max, matcher=matcher, horizon=horizon)
    records = _run_windows(plan, plan.field, rhs, 0, inverse_norm_cap, dense_cap, "semi")
    cap = stability_cap(fld.sets, case, target) if fld.sets is not None else None
    return SolveReport(plan, case, 0, "semi", records, cap, cls)


def full_fsm(fld: DiagonalField, rhs, n_max: int, inverse_norm_cap: int = INVERSE_NORM_CAP,
             dense_cap: int = DENSE_SVD_CAP, n_values=None) -> SolveReport:
    """Baseline: windows ``[-n, n]``, no shift, stability not guaranteed.

    Singular windows are recorded, not raised.
    """
    if fld.orientation != BI:
        raise InvalidInput("full_fsm needs a bi-infinite field")
    ns = list(n_values) if n_values is not None else list(range(1, n_max + 1))
    plan = WindowPlan(None, [(n, -n, n) for n in ns], BI, "full", fld)
    case = classify_sets(fld.sets).case if fld.sets is not None else None
    records = _run_windows(plan, fld, rhs, 0, inverse_norm_cap, dense_cap, "full",
                           fatal_singular=False)
    cap = None
    if fld.sets is not None and fld.sets.delta > 0:
        cap = 1.0 / fld.sets.delta
    return SolveReport(plan, case, 0, "full", records, cap)


def stability_cap(T: TriSymbolSet, case: str, target) -> Optional[float]:
    """Best available theoretical bound on ``limsup ||A_n^{-1}||``.

    ``1/delta`` when ``delta > 0``; for cases (b)/(c) with a dominating
    off-diagonal, the larger of the dominance bound and the inverse norm of
    the shifted triangular Toeplitz limit. ``None`` when no certificate
    applies.
    """
    if T.delta > 0:
        return 1.0 / T.delta
    cert = dominance_certificate(T)
    if cert is None or case not in (B, C):
        return None
    if (case == B) != (cert.diagonal == "sub"):
        return None
    shift = -1 if case == B else 1
    bound = cert.inverse_bound
    try:
        toep = toeplitz_inverse_norm_triangular(*target, shift_k=shift)
    except (SymbolVanishes, ToeplitzNotInvertible):
        return bound
    return max(bound, toep)


__all__ = [
    "ConstantTriple", "PredicateMatcher", "ReversedPrefix", "SolveRecord", "SolveReport",
    "SparseRhs", "FunctionRhs", "WindowPlan", "as_rhs", "check_plan", "full_fsm",
    "inverse_norm", "load_rhs", "plan_windows_bi", "plan_windows_semi",
    "solve_adaptive_bi", "solve_adaptive_semi", "solve_window", "stability_cap",
]
