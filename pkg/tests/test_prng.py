"""Deterministic generator: reproducibility, bounds, and stream quality."""

from hypothesis import given, strategies as st

from snncosim.prng import XorShift64Star


def test_same_seed_same_stream():
    a = XorShift64Star(42)
    b = XorShift64Star(42)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_zero_seed_is_live():
    g = XorShift64Star(0)
    words = {g.next_u64() for _ in range(100)}
    assert len(words) == 100
    assert 0 not in words or len(words) > 1


def test_different_seeds_diverge():
    a = XorShift64Star(1)
    b = XorShift64Star(2)
    assert [a.next_u64() for _ in range(8)] != [b.next_u64() for _ in range(8)]


def test_frozen_stream_head():
    # Pinned so a refactor that silently changes the recurrence (and with it
    # every seeded experiment) fails loudly.
    g = XorShift64Star(1)
    assert [g.next_u64() for _ in range(4)] == [
        0x47E4CE4B896CDD1D,
        0xABCFA6A8E079651D,
        0xB9D10D8FEB731F57,
        0x4DB418A0BB1B019D,
    ]
    g = XorShift64Star(0xDEADBEEF)
    assert g.next_u64() == 0x46151251B681BADA


def test_frozen_int8_fill():
    g = XorShift64Star(7)
    assert list(g.fill_int8((6,), -16, 15)) == [-2, -2, -14, -2, 1, 4]


@given(st.integers(min_value=0, max_value=(1 << 64) - 1),
       st.integers(min_value=1, max_value=1000))
def test_next_below_in_bounds(seed, n):
    g = XorShift64Star(seed)
    for _ in range(8):
        assert 0 <= g.next_below(n) < n


@given(st.integers(min_value=0, max_value=(1 << 64) - 1))
def test_next_unit_in_half_open_interval(seed):
    g = XorShift64Star(seed)
    for _ in range(8):
        u = g.next_unit()
        assert 0.0 <= u < 1.0


def test_next_below_small_bounds_roughly_uniform():
    g = XorShift64Star(3)
    counts = [0] * 5
    for _ in range(5000):
        counts[g.next_below(5)] += 1
    for c in counts:
        assert 800 < c < 1200


def test_shuffle_is_permutation():
    g = XorShift64Star(11)
    items = list(range(50))
    g.shuffle(items)
    assert sorted(items) == list(range(50))
    assert items != list(range(50))


def test_fill_int8_range_and_determinism():
    a = XorShift64Star(9).fill_int8((4, 3), -16, 15)
    b = XorShift64Star(9).fill_int8((4, 3), -16, 15)
    assert (a == b).all()
    assert a.min() >= -16 and a.max() <= 15
    assert a.shape == (4, 3)
