import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsm_jacobi.errors import CannotExtend, ConfigError, OutOfRange
from fsm_jacobi.pseudoergodic import (BI, SEMI, constant_field, dump_field,
                                      enumerate_words_sequence, explicit_field, extend,
                                      load_field, sample_iid, verify_pseudoergodic,
                                      word_field)
from fsm_jacobi.symbol_sets import SymbolSet, TriSymbolSet

E = math.e


def brute_force_sequence(alphabet, length):
    """Oracle: concatenate all words of length 1, 2, ... in lexicographic order."""
    import itertools
    out = []
    L = 1
    while len(out) < length:
        for word in itertools.product(alphabet, repeat=L):
            out.extend(word)
        L += 1
    return out[:length]


def test_enumeration_prefix():
    assert enumerate_words_sequence("ab", 8) == list("abaaabba")
    assert enumerate_words_sequence("a", 20) == ["a"] * 20


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 400))
def test_enumeration_matches_oracle(m, length):
    alphabet = list(range(m))
    assert enumerate_words_sequence(alphabet, length) == brute_force_sequence(alphabet, length)


def test_enumeration_contains_00():
    seq = enumerate_words_sequence([0, 1], 10)
    assert any(seq[k:k + 2] == [0, 0] for k in range(9))


def test_iid_determinism_and_singletons(hn_sets):
    f1 = sample_iid(hn_sets, 7, -300, 300)
    f2 = sample_iid(hn_sets, 7, -300, 300)
    assert np.array_equal(f1.v, f2.v)
    assert not np.array_equal(f1.v, sample_iid(hn_sets, 8, -300, 300).v)
    assert np.all(f1.u == E) and np.all(f1.w == 1 / E)


def test_iid_support_and_arcsine_edges(hn_sets):
    v = sample_iid(hn_sets, 3, 0, 9999).v.real
    assert v.min() >= -2 and v.max() <= 2
    assert v.min() < -1.99 and v.max() > 1.99


def test_iid_window_independence(hn_sets):
    # any sub-window regenerates identically, including across block borders
    big = sample_iid(hn_sets, 11, -9000, 9000)
    small = sample_iid(hn_sets, 11, 4000, 4200)
    assert np.array_equal(big.window(4000, 4200)[1], small.v)


def test_iid_points_distribution():
    T = TriSymbolSet(SymbolSet.points([1]), SymbolSet.points([0, 2]), SymbolSet.points([1]))
    v = sample_iid(T, 0, 1, 20000, SEMI).v.real
    assert set(np.unique(v)) == {0.0, 2.0}
    assert abs((v == 2).mean() - 0.5) < 0.02


def test_extend_iid_preserves_and_matches(hn_sets):
    f = sample_iid(hn_sets, 5, -10, 10)
    g = extend(f, -5000, 1_000_000)
    assert g.triple(3) == f.triple(3)
    assert np.array_equal(g.window(-5000, 5000)[1], sample_iid(hn_sets, 5, -5000, 5000).v)


def test_extend_words_continues_enumeration():
    alphabet = [(1, 0, 1), (1, 2, 1)]
    f = word_field(alphabet, 1, 30, SEMI)
    g = extend(f, 1, 500)
    fresh = word_field(alphabet, 1, 500, SEMI)
    assert np.array_equal(g.v, fresh.v)


def test_extend_errors():
    f = explicit_field([1, 1], [0, 0], [1, 1])
    with pytest.raises(CannotExtend):
        extend(f, -1, 5)
    g = constant_field(1, 0, 1, 1, 5, SEMI)
    with pytest.raises(OutOfRange):
        extend(g, 0, 5)
    with pytest.raises(OutOfRange):
        extend(g, 2, 5)


def test_covering_and_out_of_range():
    f = explicit_field([1] * 5, [0] * 5, [1] * 5, lo=0)
    with pytest.raises(OutOfRange):
        f.covering(-1, 3)
    c = constant_field(1, 0, 1, 0, 5)
    assert c.covering(-10, 10).lo == -10


def test_word_field_contains_all_short_words():
    alphabet = [(1, 0, 1), (1, 2, 1)]
    rep = verify_pseudoergodic(word_field(alphabet, 1, 100, SEMI), 3, 1e-12)
    assert rep.all_found and len(rep.witnesses) == 14


def test_witnesses_point_at_the_word():
    alphabet = [(0, 0, 0), (0, 1, 0), (0, 2, 0)]
    f = word_field(alphabet, -50, 200)
    rep = verify_pseudoergodic(f, 2, 0.5)
    for word, k in rep.witnesses.items():
        assert k is not None
        got = [int(round(f.triple(k + t)[1].real)) for t in range(len(word))]
        assert got == list(word)


def test_constant_field_misses_mixed_word():
    f = constant_field(1, 0, 1, 1, 50, SEMI)
    rep = verify_pseudoergodic(f, 2, 0.1, alphabet=[(1, 0, 1), (1, 3, 1)])
    assert rep.witnesses[(0, 1)] is None
    assert (0, 1) in rep.missing


def test_large_eps_finds_everything_at_lo(hn_sets):
    f = sample_iid(hn_sets, 0, -20, 20)
    rep = verify_pseudoergodic(f, 1, 100.0, alphabet=[(E, -2, 1 / E), (E, 2, 1 / E)])
    assert all(k == -20 for k in rep.witnesses.values())


def test_dump_load_round_trip(tmp_path, hn_sets):
    for fld in (sample_iid(hn_sets, 9, -40, 40),
                word_field([(1, 0, 1), (1, 2 + 1j, 1)], 1, 30, SEMI),
                explicit_field([1, 2], [3j, 4], [5, 6], lo=-1)):
        p = tmp_path / "f.jsonl"
        dump_field(fld, p)
        back = load_field(p)
        assert (back.lo, back.hi, back.orientation) == (fld.lo, fld.hi, fld.orientation)
        for a, b in ((back.u, fld.u), (back.v, fld.v), (back.w, fld.w)):
            assert np.array_equal(a, b)
        assert back.extendable == fld.extendable
        first = p.read_bytes()
        dump_field(back, p)
        assert p.read_bytes() == first


def test_loaded_iid_field_extends_consistently(tmp_path, hn_sets):
    p = tmp_path / "f.jsonl"
    dump_field(sample_iid(hn_sets, 4, -10, 10), p)
    g = extend(load_field(p), -100, 100)
    assert np.array_equal(g.v, sample_iid(hn_sets, 4, -100, 100).v)


def test_load_field_errors(tmp_path):
    p = tmp_path / "f.jsonl"
    p.write_text('{"i": 0, "u": [1, 0], "v": [0, 0], "w": [1, 0]}\n{"i": 2, "u": [1, 0]}\n')
    with pytest.raises(ConfigError, match="line 2"):
        load_field(p)
    p.write_text('{"i": 0, "u": [1, 0], "v": [0, 0], "w": [1, 0]}\n'
                 '{"i": 2, "u": [1, 0], "v": [0, 0], "w": [1, 0]}\n')
    with pytest.raises(ConfigError, match="contiguous"):
        load_field(p)
    with pytest.raises(ConfigError):
        load_field(tmp_path / "missing.jsonl")


def test_field_arrays_are_read_only(hn_sets):
    f = sample_iid(hn_sets, 0, 0, 10)
    with pytest.raises(ValueError):
        f.v[0] = 1
    assert f.orientation == BI
