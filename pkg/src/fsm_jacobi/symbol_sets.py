"""Coefficient sets U, V, W and the ellipse geometry built from them.

Complex numbers are plain Python ``complex`` (or ``complex128`` arrays).
A :class:`SymbolSet` is one of three compact shapes: a finite point set,
a real interval, or a circular arc centred at the origin. Continuous
shapes are discretised for set-level sweeps, but their modulus extremes
and distances are evaluated in closed form.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigError, InvalidSet, NotSelfadjoint

TOL_CASE = 1e-9
DEFAULT_SAMPLES = 257

KINDS = ("points", "interval", "circle")
DISTRIBUTIONS = ("uniform", "arcsine")


def _check_complex(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidSet(f"non-finite coefficient {z!r}")
    return z


@dataclass(frozen=True)
class SymbolSet:
    """A non-empty compact subset of the complex plane.

    Use the :meth:`points`, :meth:`interval` and :meth:`circle`
    constructors rather than calling the class directly.

    ``distribution`` only matters to the i.i.d. sampler in
    :mod:`fsm_jacobi.pseudoergodic`: ``"uniform"`` over points / parameter,
    or ``"arcsine"`` (Beta(1/2, 1/2) on the parameter range).
    """

    kind: str
    pts: tuple = ()
    lo: float = 0.0
    hi: float = 0.0
    radius: float = 0.0
    angle_lo: float = 0.0
    angle_hi: float = 2 * math.pi
    samples: int = DEFAULT_SAMPLES
    distribution: str = "uniform"
    _sampled: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSet(f"unknown set kind {self.kind!r}")
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidSet(f"unknown distribution {self.distribution!r}")
        if int(self.samples) < 1:
            raise InvalidSet("samples must be positive")
        if self.kind == "points":
            if len(self.pts) == 0:
                raise InvalidSet("empty point set")
            object.__setattr__(self, "pts", tuple(_check_complex(p) for p in self.pts))
        elif self.kind == "interval":
            if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
                raise InvalidSet("non-finite interval bound")
            if self.lo > self.hi:
                raise InvalidSet(f"interval with lo > hi: [{self.lo}, {self.hi}]")
        else:
            if not math.isfinite(self.radius) or self.radius < 0:
                raise InvalidSet("circle radius must be finite and >= 0")
            if self.angle_lo > self.angle_hi:
                raise InvalidSet("circle arc with angle_lo > angle_hi")
        object.__setattr__(self, "_sampled", self._make_samples())
        self._sampled.setflags(write=False)

    # constructors -----------------------------------------------------

    @classmethod
    def points(cls, pts: Iterable, distribution="uniform") -> "SymbolSet":
        pts = tuple(pts)
        return cls("points", pts=pts, samples=max(len(pts), 1), distribution=distribution)

    @classmethod
    def interval(cls, lo: float, hi: float, samples=DEFAULT_SAMPLES,
                 distribution="uniform") -> "SymbolSet":
        return cls("interval", lo=float(lo), hi=float(hi), samples=int(samples),
                   distribution=distribution)

    @classmethod
    def circle(cls, radius: float, angle_lo=0.0, angle_hi=2 * math.pi,
               samples=DEFAULT_SAMPLES, distribution="uniform") -> "SymbolSet":
        return cls("circle", radius=float(radius), angle_lo=float(angle_lo),
                   angle_hi=float(angle_hi), samples=int(samples),
                   distribution=distribution)

    # geometry ---------------------------------------------------------

    def _make_samples(self) -> np.ndarray:
        if self.kind == "points":
            return np.array(self.pts, dtype=np.complex128)
        n = int(self.samples)
        if self.kind == "interval":
            if n == 1 or self.lo == self.hi:
                return np.array([complex(self.lo)] if self.lo == self.hi
                                else [complex(self.lo), complex(self.hi)])
            return np.linspace(self.lo, self.hi, n).astype(np.complex128)
        if n == 1 or self.angle_lo == self.angle_hi:
            return np.array([self.radius * cmath.exp(1j * self.angle_lo)])
        phi = np.linspace(self.angle_lo, self.angle_hi, n)
        return self.radius * np.exp(1j * phi)

    def sample(self) -> np.ndarray:
        """The discretised point list (read-only)."""
        return self._sampled

    @property
    def is_full_circle(self) -> bool:
        return self.kind == "circle" and self.angle_hi - self.angle_lo >= 2 * math.pi

    def abs_max(self) -> float:
        if self.kind == "points":
            return float(np.abs(self._sampled).max())
        if self.kind == "interval":
            return max(abs(self.lo), abs(self.hi))
        return self.radius

    def abs_min(self) -> float:
        if self.kind == "points":
            return float(np.abs(self._sampled).min())
        if self.kind == "interval":
            if self.lo <= 0.0 <= self.hi:
                return 0.0
            return min(abs(self.lo), abs(self.hi))
        return self.radius

    def _on_arc(self, angle: float) -> bool:
        if self.is_full_circle:
            return True
        t = (angle - self.angle_lo) % (2 * math.pi)
        return t <= self.angle_hi - self.angle_lo

    def _arc_ends(self):
        return (self.radius * cmath.exp(1j * self.angle_lo),
                self.radius * cmath.exp(1j * self.angle_hi))

    def distance(self, lam: complex) -> float:
        """Euclidean distance from ``lam`` to the set (closed form)."""
        lam = complex(lam)
        if self.kind == "points":
            return float(np.abs(self._sampled - lam).min())
        if self.kind == "interval":
            x = min(max(lam.real, self.lo), self.hi)
            return abs(lam - x)
        if lam == 0 or self._on_arc(cmath.phase(lam)):
            return abs(abs(lam) - self.radius)
        return min(abs(lam - e) for e in self._arc_ends())

    def max_distance(self, lam: complex) -> float:
        """Largest distance from ``lam`` to a point of the set."""
        lam = complex(lam)
        if self.kind == "points":
            return float(np.abs(self._sampled - lam).max())
        if self.kind == "interval":
            return max(abs(lam - self.lo), abs(lam - self.hi))
        if lam == 0 or self._on_arc(cmath.phase(-lam)):
            return abs(lam) + self.radius
        return max(abs(lam - e) for e in self._arc_ends())

    def contains(self, z: complex, tol: float = TOL_CASE) -> bool:
        return self.distance(z) <= tol

    @property
    def is_real(self) -> bool:
        if self.kind == "interval":
            return True
        if self.kind == "points":
            return bool(np.all(self._sampled.imag == 0))
        return self.radius == 0

    def most_probable(self) -> complex:
        """Deterministic "likeliest" element under the configured law."""
        if self.kind == "points":
            return self.pts[0]
        if self.kind == "interval":
            if self.distribution == "arcsine":
                return complex(self.hi)
            return complex(0.5 * (self.lo + self.hi))
        return complex(self._sampled[0])

    # serialisation ----------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "points":
            out["points"] = [[p.real, p.imag] for p in self.pts]
        elif self.kind == "interval":
            out.update(lo=self.lo, hi=self.hi, samples=int(self.samples))
        else:
            out.update(radius=self.radius, angle_lo=self.angle_lo,
                       angle_hi=self.angle_hi, samples=int(self.samples))
        if self.distribution != "uniform":
            out["distribution"] = self.distribution
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SymbolSet":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ConfigError(f"set description needs a 'kind' field: {obj!r}")
        kind = obj["kind"]
        dist = obj.get("distribution", "uniform")
        try:
            if kind == "points":
                return cls.points([parse_complex(p) for p in obj["points"]], distribution=dist)
            if kind == "interval":
                return cls.interval(obj["lo"], obj["hi"],
                                    samples=obj.get("samples", DEFAULT_SAMPLES),
                                    distribution=dist)
            if kind == "circle":
                return cls.circle(obj["radius"], obj.get("angle_lo", 0.0),
                                  obj.get("angle_hi", 2 * math.pi),
                                  samples=obj.get("samples", DEFAULT_SAMPLES),
                                  distribution=dist)
        except KeyError as exc:
            raise ConfigError(f"{kind} set is missing field {exc}") from None
        except InvalidSet as exc:
            raise ConfigError(str(exc)) from None
        raise ConfigError(f"unknown set kind {kind!r}")


def parse_complex(obj) -> complex:
    """``[re, im]`` pair, bare number, or ``"re+imj"`` string to complex."""
    if isinstance(obj, (list, tuple)):
        if len(obj) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {obj!r}")
        return complex(float(obj[0]), float(obj[1]))
    if isinstance(obj, str):
        try:
            return complex(obj.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"cannot parse complex number {obj!r}") from None
    return complex(obj)


@dataclass(frozen=True)
class TriSymbolSet:
    """The triple (U, V, W) with cached modulus extremes.

    ``delta = v_min - (u_max + w_max)``; positive delta certifies that every
    operator with diagonals drawn from these sets is invertible.
    """

    U: SymbolSet
    V: SymbolSet
    W: SymbolSet
    u_max: float = field(init=False)
    u_min: float = field(init=False)
    v_max: float = field(init=False)
    v_min: float = field(init=False)
    w_max: float = field(init=False)
    w_min: float = field(init=False)
    delta: float = field(init=False)

    def __post_init__(self):
        for name in ("U", "V", "W"):
            if not isinstance(getattr(self, name), SymbolSet):
                raise InvalidSet(f"{name} is not a SymbolSet")
        for name, s in (("u", self.U), ("v", self.V), ("w", self.W)):
            object.__setattr__(self, f"{name}_max", s.abs_max())
            object.__setattr__(self, f"{name}_min", s.abs_min())
        object.__setattr__(self, "delta", self.v_min - (self.u_max + self.w_max))

    def to_json(self) -> dict:
        return {"U": self.U.to_json(), "V": self.V.to_json(), "W": self.W.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "TriSymbolSet":
        if not isinstance(obj, dict):
            raise ConfigError("sets document must be a JSON object")
        missing = [k for k in ("U", "V", "W") if k not in obj]
        if missing:
            raise ConfigError(f"sets document is missing {', '.join(missing)}")
        return cls(*(SymbolSet.from_json(obj[k]) for k in ("U", "V", "W")))

    def default_target(self) -> tuple[complex, complex, complex]:
        return (self.U.most_probable(), self.V.most_probable(), self.W.most_probable())


def make_tri_symbol_set(U: SymbolSet, V: SymbolSet, W: SymbolSet) -> TriSymbolSet:
    return TriSymbolSet(U, V, W)


def load_sets(path) -> TriSymbolSet:
    """Read a sets JSON document; malformed input raises ``ConfigError``."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read sets file {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return TriSymbolSet.from_json(obj)


# ellipse geometry ------------------------------------------------------


@dataclass(frozen=True)
class EllipseGeometry:
    u: complex
    w: complex
    semi_major: float
    semi_minor: float
    focus: complex
    orientation: str  # "CCW", "CW" or "Degenerate"

    def curve(self, n: int = 256) -> np.ndarray:
        """Points ``u e^{i phi} + w e^{-i phi}`` at ``n`` uniform angles."""
        phi = 2 * np.pi * np.arange(n) / n
        t = np.exp(1j * phi)
        return self.u * t + self.w / t


def ellipse(u: complex, w: complex, tol: float = TOL_CASE) -> EllipseGeometry:
    u, w = complex(u), complex(w)
    au, aw = abs(u), abs(w)
    if abs(au - aw) <= tol:
        orient = "Degenerate"
    else:
        orient = "CCW" if au > aw else "CW"
    return EllipseGeometry(u, w, au + aw, abs(au - aw), 2 * cmath.sqrt(u * w), orient)


def ellipse_eval(u, w, v):
    """``|v + 2 sqrt(uw)| + |v - 2 sqrt(uw)| - 2(|u| + |w|)``.

    Negative inside the ellipse ``E(u, w)``, zero on it, positive outside.
    Broadcasts over numpy arrays.
    """
    if np.ndim(u) == 0 and np.ndim(w) == 0 and np.ndim(v) == 0:
        u, w, v = complex(u), complex(w), complex(v)
        r = 2 * cmath.sqrt(u * w)
        return abs(v + r) + abs(v - r) - 2 * (abs(u) + abs(w))
    u = np.asarray(u, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    r = 2 * np.sqrt(u * w)
    return np.abs(v + r) + np.abs(v - r) - 2 * (np.abs(u) + np.abs(w))


# spectral inclusion sets -------------------------------------------------


def lower_spectral_bound(T: TriSymbolSet, n_angles: int = DEFAULT_SAMPLES,
                         budget: int = 5_000_000) -> np.ndarray:
    """Samples of ``V + E(U, W)``, a subset of every pseudoergodic spectrum."""
    from .errors import BudgetExceeded

    us, vs, ws = T.U.sample(), T.V.sample(), T.W.sample()
    total = len(us) * len(vs) * len(ws) * n_angles
    if total > budget:
        raise BudgetExceeded(f"lower bound needs {total} points (budget {budget})")
    t = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    curves = (us[:, None, None] * t + ws[None, :, None] / t).reshape(-1)
    return (vs[:, None] + curves[None, :]).reshape(-1)


def upper_spectral_bound_contains(T: TriSymbolSet, lam: complex,
                                  tol: float = TOL_CASE) -> bool:
    """Whether ``lam`` lies in ``V + (u_max + w_max) * closed disk``.

    ``False`` means ``lam`` is a resolvent point for every operator built
    from these sets.
    """
    return T.V.distance(lam) <= T.u_max + T.w_max + tol


def spectral_hole(T: TriSymbolSet, lam: complex) -> bool:
    """Whether ``lam`` sits in the hole forced by a dominating off-diagonal."""
    far = T.V.max_distance(lam)
    if T.u_min > T.w_max and far < T.u_min - T.w_max:
        return True
    if T.w_min > T.u_max and far < T.w_min - T.u_max:
        return True
    return False


def selfadjoint_spectrum(U: SymbolSet, V: SymbolSet) -> list[tuple[float, float]]:
    """``V + [-2 u_max, 2 u_max]`` as a sorted list of disjoint intervals."""
    if not V.is_real:
        raise NotSelfadjoint("main-diagonal set is not real")
    r = 2 * U.abs_max()
    if V.kind == "interval":
        return [(V.lo - r, V.hi + r)]
    centres = np.unique(V.sample().real)
    merged: list[list[float]] = []
    for c in centres:
        lo, hi = c - r, c + r
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(float(a), float(b)) for a, b in merged]
