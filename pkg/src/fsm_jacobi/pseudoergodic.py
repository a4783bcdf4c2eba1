"""Diagonal realisations ``(u_i, v_i, w_i)`` and pseudoergodicity checks.

A :class:`DiagonalField` is an immutable snapshot of the three diagonals
over an integer window ``[lo, hi]``. Fields backed by a generator can be
grown with :func:`extend`; growth never rewrites materialised entries.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceeded, CannotExtend, ConfigError, OutOfRange
from .symbol_sets import SymbolSet, TriSymbolSet, parse_complex

BI = "bi"
SEMI = "semi"

# i.i.d. draws are produced in fixed blocks keyed by (seed, diagonal, block)
BLOCK = 4096
_PHILOX_SALT = 0x5EED_F1E1D


def _zigzag(b: int) -> int:
    return 2 * b if b >= 0 else -2 * b - 1


# generators ------------------------------------------------------------


@dataclass(frozen=True)
class Explicit:
    kind = "explicit"

    def to_json(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class WordEnumeration:
    """All words of length 1, 2, 3, ... over ``alphabet``, concatenated.

    Index ``i >= 1`` reads position ``i - 1`` of the sequence; ``i <= 0``
    reads position ``-i``, so the left half-axis carries every word too
    (reversed, which is again the set of all words).
    """

    alphabet: tuple
    kind = "words"

    def generate(self, lo: int, hi: int):
        idx = np.arange(lo, hi + 1)
        pos = np.where(idx >= 1, idx - 1, -idx)
        seq = _enumeration_indices(len(self.alphabet), int(pos.max()) + 1)
        letters = np.array(self.alphabet, dtype=np.complex128).reshape(-1, 3)
        chosen = letters[seq[pos]]
        return chosen[:, 0].copy(), chosen[:, 1].copy(), chosen[:, 2].copy()

    def to_json(self):
        return {"kind": self.kind,
                "alphabet": [[[z.real, z.imag] for z in t] for t in self.alphabet]}


@dataclass(frozen=True)
class IID:
    """Independent draws per index and per diagonal.

    Every block of :data:`BLOCK` indices of one diagonal is drawn from its
    own Philox stream whose counter encodes ``(diagonal, block)`` and whose
    key is the seed, so any index can be regenerated in isolation.
    """

    sets: TriSymbolSet
    seed: int
    kind = "iid"

    def _block(self, tag: int, b: int, s: SymbolSet) -> np.ndarray:
        bitgen = np.random.Philox(key=[self.seed & 0xFFFF_FFFF_FFFF_FFFF, _PHILOX_SALT],
                                  counter=[0, 0, tag, _zigzag(b)])
        rng = np.random.Generator(bitgen)
        if s.kind == "points":
            pts = s.sample()
            return pts[rng.integers(0, len(pts), size=BLOCK)]
        if s.distribution == "arcsine":
            t = rng.beta(0.5, 0.5, size=BLOCK)
        else:
            t = rng.random(BLOCK)
        if s.kind == "interval":
            return (s.lo + (s.hi - s.lo) * t).astype(np.complex128)
        ang = s.angle_lo + (s.angle_hi - s.angle_lo) * t
        return s.radius * np.exp(1j * ang)

    def _diagonal(self, tag: int, s: SymbolSet, lo: int, hi: int) -> np.ndarray:
        b0, b1 = lo // BLOCK, hi // BLOCK
        parts = [self._block(tag, b, s) for b in range(b0, b1 + 1)]
        full = np.concatenate(parts)
        start = lo - b0 * BLOCK
        return full[start:start + hi - lo + 1]

    def generate(self, lo: int, hi: int):
        return tuple(self._diagonal(tag, s, lo, hi)
                     for tag, s in enumerate((self.sets.U, self.sets.V, self.sets.W)))

    def to_json(self):
        return {"kind": self.kind, "seed": int(self.seed)}


# field -------------------------------------------------------------------


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiagonalField:
    lo: int
    hi: int
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    generator: object = Explicit()
    orientation: str = BI
    sets: Optional[TriSymbolSet] = None

    def __post_init__(self):
        n = self.hi - self.lo + 1
        if n < 1:
            raise OutOfRange(f"empty field window [{self.lo}, {self.hi}]")
        if self.orientation not in (BI, SEMI):
            raise ValueError(f"orientation must be {BI!r} or {SEMI!r}")
        if self.orientation == SEMI and self.lo < 1:
            raise OutOfRange("semi-infinite fields start at index 1")
        for name in ("u", "v", "w"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} has {arr.shape[0]} entries, window needs {n}")
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def extendable(self) -> bool:
        return not isinstance(self.generator, Explicit)

    def triple(self, i: int) -> tuple[complex, complex, complex]:
        if not self.lo <= i <= self.hi:
            raise OutOfRange(f"index {i} outside [{self.lo}, {self.hi}]")
        k = i - self.lo
        return complex(self.u[k]), complex(self.v[k]), complex(self.w[k])

    def window(self, a: int, b: int):
        """``(u, v, w)`` views for indices ``a..b`` (inclusive)."""
        if a < self.lo or b > self.hi:
            raise OutOfRange(f"[{a}, {b}] not inside field window [{self.lo}, {self.hi}]")
        s = slice(a - self.lo, b - self.lo + 1)
        return self.u[s], self.v[s], self.w[s]

    def covering(self, a: int, b: int) -> "DiagonalField":
        """This field, extended if needed so that ``[a, b]`` is materialised."""
        if self.orientation == SEMI:
            a = max(a, 1)
        if a >= self.lo and b <= self.hi:
            return self
        if not self.extendable:
            raise OutOfRange(f"[{a}, {b}] not inside explicit field [{self.lo}, {self.hi}]")
        return extend(self, min(a, self.lo), max(b, self.hi))


def explicit_field(u, v, w, lo: int = 0, orientation: str = BI,
                   sets: Optional[TriSymbolSet] = None) -> DiagonalField:
    """Field from given diagonal arrays; scalars broadcast to the others' length."""
    n = max(np.size(u), np.size(v), np.size(w))
    u, v, w = (np.broadcast_to(np.asarray(x, dtype=np.complex128), (n,)) for x in (u, v, w))
    return DiagonalField(lo, lo + n - 1, u, v, w, Explicit(), orientation, sets)


def constant_field(u, v, w, lo: int, hi: int, orientation: str = BI) -> DiagonalField:
    """Constant diagonals as an (extendable) one-letter word enumeration."""
    gen = WordEnumeration(((complex(u), complex(v), complex(w)),))
    sets = TriSymbolSet(SymbolSet.points([u]), SymbolSet.points([v]), SymbolSet.points([w]))
    return DiagonalField(lo, hi, *gen.generate(lo, hi), gen, orientation, sets)


# operations ------------------------------------------------------------------


def _enumeration_indices(m: int, length: int) -> np.ndarray:
    """Letter indices of the first ``length`` entries of the word enumeration."""
    if m == 1:
        return np.zeros(length, dtype=np.int64)
    parts = []
    total = 0
    L = 1
    while total < length:
        count = m ** L
        codes = np.arange(count)
        digits = (codes[:, None] // m ** np.arange(L - 1, -1, -1)) % m
        parts.append(digits.reshape(-1))
        total += count * L
        L += 1
    return np.concatenate(parts)[:length] if parts else np.zeros(0, dtype=int)


def enumerate_words_sequence(alphabet: Sequence, length: int) -> list:
    """First ``length`` letters of the concatenation of all words.

    Words of length 1 come first, then length 2, and so on, each block in
    lexicographic order of the alphabet as given.
    """
    alphabet = list(alphabet)
    if not alphabet:
        raise ValueError("alphabet must be non-empty")
    return [alphabet[k] for k in _enumeration_indices(len(alphabet), length)]


def word_field(alphabet: Sequence, lo: int, hi: int, orientation: str = BI,
               sets: Optional[TriSymbolSet] = None) -> DiagonalField:
    alphabet = tuple(tuple(complex(z) for z in t) for t in alphabet)
    gen = WordEnumeration(alphabet)
    if sets is None:
        cols = list(zip(*alphabet))
        sets = TriSymbolSet(*(SymbolSet.points(dict.fromkeys(c)) for c in cols))
    return DiagonalField(lo, hi, *gen.generate(lo, hi), gen, orientation, sets)


def sample_iid(T: TriSymbolSet, seed: int, lo: int, hi: int,
               orientation: str = BI) -> DiagonalField:
    """Independent draws from ``U``, ``V``, ``W`` over the window ``[lo, hi]``."""
    if lo > hi:
        raise OutOfRange("lo > hi")
    if orientation == SEMI and lo != 1:
        raise OutOfRange("semi-infinite fields start at index 1")
    gen = IID(T, int(seed))
    return DiagonalField(lo, hi, *gen.generate(lo, hi), gen, orientation, T)


def extend(fld: DiagonalField, new_lo: int, new_hi: int) -> DiagonalField:
    if new_lo > fld.lo or new_hi < fld.hi:
        raise OutOfRange("extend can only grow the window")
    if not fld.extendable:
        raise CannotExtend("explicit fields cannot be extended")
    if fld.orientation == SEMI and new_lo < 1:
        raise OutOfRange("semi-infinite fields start at index 1")
    if new_lo == fld.lo and new_hi == fld.hi:
        return fld
    parts = []
    for k, arr in enumerate((fld.u, fld.v, fld.w)):
        pieces = []
        if new_lo < fld.lo:
            pieces.append(fld.generator.generate(new_lo, fld.lo - 1)[k])
        pieces.append(arr)
        if new_hi > fld.hi:
            pieces.append(fld.generator.generate(fld.hi + 1, new_hi)[k])
        parts.append(np.concatenate(pieces))
    return DiagonalField(new_lo, new_hi, *parts, fld.generator, fld.orientation, fld.sets)


@dataclass
class PseudoergodicReport:
    alphabet: list
    word_len: int
    eps: float
    witnesses: dict  # word (tuple of letter indices) -> first index or None

    @property
    def all_found(self) -> bool:
        return all(k is not None for k in self.witnesses.values())

    @property
    def missing(self) -> list:
        return [w for w, k in self.witnesses.items() if k is None]


def _field_alphabet(fld: DiagonalField) -> list:
    if isinstance(fld.generator, WordEnumeration):
        return list(fld.generator.alphabet)
    if fld.sets is None:
        raise ValueError("field has no governing sets; pass an alphabet")
    us, vs, ws = (s.sample() for s in (fld.sets.U, fld.sets.V, fld.sets.W))
    return [(complex(a), complex(b), complex(c)) for a, b, c in itertools.product(us, vs, ws)]


def verify_pseudoergodic(fld: DiagonalField, word_len: int, eps: float,
                         alphabet: Optional[Sequence] = None,
                         budget: int = 1_000_000) -> PseudoergodicReport:
    """Search the materialised window for every word of length <= ``word_len``.

    A word ``b`` is found at ``k`` when ``d(a_{k+t}, b_t) < eps`` for all
    ``t``, ``d`` being the sum of the three coordinate distances. The
    witness is the index of the first matched entry. A missing word only
    means "not observed in this window".
    """
    alphabet = list(alphabet) if alphabet is not None else _field_alphabet(fld)
    m = len(alphabet)
    if m == 0:
        raise ValueError("empty alphabet")
    if m ** word_len > budget:
        raise BudgetExceeded(f"{m}^{word_len} words exceed budget {budget}")
    letters = np.array(alphabet, dtype=np.complex128).reshape(m, 3)
    dist = (np.abs(fld.u[:, None] - letters[:, 0])
            + np.abs(fld.v[:, None] - letters[:, 1])
            + np.abs(fld.w[:, None] - letters[:, 2]))
    match = dist < eps
    n = fld.size
    witnesses: dict = {}
    if match.sum(axis=1).max(initial=0) <= 1:
        code = np.where(match.any(axis=1), match.argmax(axis=1), -1)
        for L in range(1, word_len + 1):
            found: dict = {}
            if n >= L:
                starts = n - L + 1
                val = np.zeros(starts, dtype=np.int64)
                ok = np.ones(starts, dtype=bool)
                for t in range(L):
                    c = code[t:t + starts]
                    ok &= c >= 0
                    val = val * m + np.maximum(c, 0)
                uniq, first = np.unique(val[ok], return_index=True)
                pos = np.flatnonzero(ok)[first]
                found = dict(zip(uniq.tolist(), pos.tolist()))
            for word in itertools.product(range(m), repeat=L):
                key = 0
                for letter in word:
                    key = key * m + letter
                k = found.get(key)
                witnesses[word] = None if k is None else fld.lo + k
    else:
        for L in range(1, word_len + 1):
            for word in itertools.product(range(m), repeat=L):
                if n < L:
                    witnesses[word] = None
                    continue
                ok = np.ones(n - L + 1, dtype=bool)
                for t, letter in enumerate(word):
                    ok &= match[t:t + n - L + 1, letter]
                hits = np.flatnonzero(ok)
                witnesses[word] = fld.lo + int(hits[0]) if hits.size else None
    return PseudoergodicReport(alphabet, word_len, eps, witnesses)


# JSON-lines I/O --------------------------------------------------------------


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def dump_field(fld: DiagonalField, path) -> None:
    header = {
        "header": True,
        "generator": fld.generator.to_json(),
        "orientation": fld.orientation,
        "lo": fld.lo,
        "hi": fld.hi,
        "sets": fld.sets.to_json() if fld.sets is not None else None,
    }
    lines = [json.dumps(header)]
    for k in range(fld.size):
        lines.append(json.dumps({"i": fld.lo + k, "u": _pair(fld.u[k]),
                                 "v": _pair(fld.v[k]), "w": _pair(fld.w[k])}))
    from .fileio import atomic_write_text
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_field(path) -> DiagonalField:
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read field file {path}: {exc}") from None
    header = None
    records = {}
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {lineno}: {exc.msg}") from None
        if rec.get("header"):
            header = rec
            continue
        try:
            records[int(rec["i"])] = tuple(parse_complex(rec[k]) for k in ("u", "v", "w"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: line {lineno}: bad record ({exc})") from None
    if not records:
        raise ConfigError(f"{path}: no field records")
    lo, hi = min(records), max(records)
    if len(records) != hi - lo + 1:
        raise ConfigError(f"{path}: field records are not contiguous")
    u, v, w = (np.array([records[i][k] for i in range(lo, hi + 1)]) for k in range(3))
    header = header or {}
    sets = TriSymbolSet.from_json(header["sets"]) if header.get("sets") else None
    orientation = header.get("orientation", BI)
    gen_obj = header.get("generator") or {"kind": "explicit"}
    kind = gen_obj.get("kind")
    if kind == "iid":
        if sets is None:
            raise ConfigError(f"{path}: iid generator needs 'sets' in the header")
        gen = IID(sets, int(gen_obj["seed"]))
    elif kind == "words":
        gen = WordEnumeration(tuple(tuple(parse_complex(z) for z in t)
                                    for t in gen_obj["alphabet"]))
    else:
        gen = Explicit()
    return DiagonalField(lo, hi, u, v, w, gen, orientation, sets)


def field_distance(fld: DiagonalField, target) -> np.ndarray:
    """``|u_i - u| + |v_i - v| + |w_i - w|`` over the window (float64)."""
    u, v, w = (complex(z) for z in target)
    d = np.abs(fld.u - u) + np.abs(fld.v - v) + np.abs(fld.w - w)
    return np.ascontiguousarray(d, dtype=np.float64)


__all__ = [
    "BI", "SEMI", "DiagonalField", "Explicit", "WordEnumeration", "IID",
    "PseudoergodicReport", "constant_field", "dump_field", "enumerate_words_sequence",
    "explicit_field", "extend", "field_distance", "load_field", "sample_iid",
    "verify_pseudoergodic", "word_field",
]
