import itertools
import statistics
import time
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from channel import transmit
from core_model import Trace, as_bitstring, derive_params
from delimiter_code import delimiter_layout, segment_trace, stamp
from metrics import levenshtein
from reconstruction import (
    PAD,
    BlockMatrix,
    bma,
    reconstruct_coded_bma,
    reconstruct_from_segmentations,
    reconstruct_ours,
    reconstruct_ours_detailed,
    sample_coded_bma_word,
)
from trace_code import max_run_length, sample_codeword, sample_rll_sequence


def straight_bma(rows, length):
    """Plain-loop majority alignment over lists, used as an oracle."""
    cursors = [0] * len(rows)
    out = []
    for _ in range(length):
        votes = []
        for row, c in zip(rows, cursors):
            symbol = row[c] if c < len(row) else PAD
            votes.append(symbol)
        ones = votes.count(1)
        zeros = votes.count(0)
        if ones + zeros == 0:
            out.append(0)
            continue
        bit = 1 if ones > zeros else 0
        out.append(bit)
        cursors = [c + 1 if v == bit else c for c, v in zip(cursors, votes)]
    return out


def as_trace(bits, n):
    return Trace(bits=as_bitstring(bits), origin_len=n)


def test_bma_unanimous_rows(rng):
    x = rng.integers(0, 2, size=40)
    matrix = BlockMatrix.from_pieces([x, x, x], 40)
    assert bma(matrix).tolist() == x.tolist()


def test_bma_hand_example():
    matrix = BlockMatrix.from_pieces(
        [np.array([0, 1, 1, 0]), np.array([1, 0, 1, 1, 0]), np.array([1, 0, 1, 1, 0])], 5
    )
    assert matrix.rows[0].tolist() == [0, 1, 1, 0, PAD]
    assert bma(matrix).tolist() == [1, 0, 1, 1, 0]


def test_bma_single_row_fills_with_zeros():
    matrix = BlockMatrix.from_pieces([np.array([1, 1, 0])], 6)
    assert bma(matrix).tolist() == [1, 1, 0, 0, 0, 0]


def test_bma_tie_goes_to_zero():
    matrix = BlockMatrix.from_pieces([np.array([0, 1]), np.array([1, 0])], 3)
    assert bma(matrix).tolist() == [0, 1, 0]


def test_bma_needs_rows():
    with pytest.raises(ValueError):
        bma(BlockMatrix.from_pieces([], 4))


def test_block_matrix_rejects_long_rows():
    with pytest.raises(ValueError):
        BlockMatrix.from_pieces([np.array([0, 1, 1])], 2)


def test_bma_matches_straight_line_oracle():
    rng = np.random.default_rng(99)
    for _ in range(300):
        length = int(rng.integers(1, 30))
        t = int(rng.integers(1, 7))
        x = rng.integers(0, 2, size=length)
        rows = [x[rng.random(length) >= 0.2] for _ in range(t)]
        out = bma(BlockMatrix.from_pieces(rows, length))
        assert len(out) == length
        assert out.tolist() == straight_bma([r.tolist() for r in rows], length)


def test_bma_clean_row_reproduces_block(rng):
    x = rng.integers(0, 2, size=60)
    assert bma(BlockMatrix.from_pieces([x], 60)).tolist() == x.tolist()


ROUND_TRIP_GRID = [(994, 14, 1.0, 3), (1000, 10, 1.0, 3), (500, 5, 0.9, 2), (2000, 10, 0.75, 5)]


def _round_trip(params, rng, count):
    for _ in range(count):
        x = sample_codeword(params, rng)
        traces = [transmit(x, 0.0, rng) for _ in range(3)]
        assert np.array_equal(reconstruct_ours(traces, params), x)
        y = sample_coded_bma_word(params.n, rng)
        assert np.array_equal(reconstruct_coded_bma([transmit(y, 0.0, rng) for _ in range(3)], params.n), y)
        z = as_bitstring(rng.integers(0, 2, size=params.n))
        assert np.array_equal(reconstruct_coded_bma([as_trace(z, params.n)], params.n), z)


@pytest.mark.parametrize("args", ROUND_TRIP_GRID)
def test_round_trip_without_deletions(args, rng):
    _round_trip(derive_params(*args), rng, 10)


@pytest.mark.slow
@pytest.mark.parametrize("args", ROUND_TRIP_GRID)
def test_round_trip_without_deletions_many(args):
    _round_trip(derive_params(*args), np.random.default_rng(sum(args)), 250)


def _delete_zero_before_one(x, lo, hi):
    """Index of a 0 followed by a 1 inside [lo, hi)."""
    for q in range(lo, hi - 1):
        if x[q] == 0 and x[q + 1] == 1:
            return q
    raise AssertionError("no 01 pair in range")


def test_two_traces_each_block_has_clean_row():
    params = derive_params(100, 2, 1.0, 2)
    assert params.num_blocks == 2 and params.ell == 50
    x = np.asarray(sample_codeword(params, np.random.default_rng(4)))
    q1 = _delete_zero_before_one(x, 0, 48)
    q2 = _delete_zero_before_one(x, 52, 100)
    t1 = as_trace(np.delete(x, q1), 100)
    t2 = as_trace(np.delete(x, q2), 100)
    result = reconstruct_ours_detailed([t1, t2], params)
    assert [seg.deletions for seg in result.segmentations] == [(1, 0), (0, 1)]
    assert np.array_equal(result.bits, x)
    assert result.segmentation_failures == 0
    assert result.empty_blocks == ()


def test_block_isolation(params_994, rng):
    x = np.asarray(sample_codeword(params_994, rng))
    traces = []
    for _ in range(5):
        # at most detect_cap deletions per block keeps every segmentation exact
        drop = [
            params_994.block_start(m) + i
            for m in range(1, params_994.num_blocks + 1)
            for i in rng.choice(params_994.block_len(m), size=int(rng.integers(0, 3)), replace=False)
        ]
        traces.append(as_trace(np.delete(x, drop), params_994.n))
    segmentations = [segment_trace(t, params_994) for t in traces]
    assert all(seg.ok for seg in segmentations)
    base, _ = reconstruct_from_segmentations(traces, segmentations, params_994)
    m = 6
    lo = params_994.block_start(m)
    hi = lo + params_994.block_len(m)
    flipped = []
    for trace, seg in zip(traces, segmentations):
        bits = np.array(trace.bits)
        s = seg.segments[m - 1]
        bits[s.start:s.start + s.length] ^= 1
        flipped.append(as_trace(bits, params_994.n))
    changed, _ = reconstruct_from_segmentations(flipped, segmentations, params_994)
    assert np.array_equal(changed[:lo], base[:lo])
    assert np.array_equal(changed[hi:], base[hi:])
    assert not np.array_equal(changed[lo:hi], base[lo:hi])


def test_failed_traces_fall_back_to_delimiters(params_994):
    traces = [as_trace([0, 1, 1], params_994.n), as_trace([], params_994.n)]
    result = reconstruct_ours_detailed(traces, params_994)
    assert len(result.bits) == params_994.n
    assert result.segmentation_failures == 2
    assert result.empty_blocks == tuple(range(1, params_994.num_blocks + 1))
    fixed = delimiter_layout(params_994)
    assert np.array_equal(result.bits[fixed.indices], fixed.values)
    assert int(result.bits.sum()) == int(fixed.values.sum())
    assert np.array_equal(result.bits, stamp(np.zeros(params_994.n, dtype=np.uint8), params_994))


def test_reconstruct_needs_traces(params_994):
    with pytest.raises(ValueError):
        reconstruct_ours([], params_994)
    with pytest.raises(ValueError):
        reconstruct_coded_bma([], 10)


def test_coded_bma_single_trace_bound():
    rng = np.random.default_rng(21)
    n = 400
    for _ in range(50):
        x = sample_rll_sequence(n, 20, rng)
        trace = transmit(x, 0.02, rng)
        out = reconstruct_coded_bma([trace], n)
        d = n - len(trace)
        assert len(out) == n
        assert np.array_equal(out[:len(trace)], trace.bits)
        assert levenshtein(out, x) <= 2 * d


def test_coded_bma_sampler_run_limit(rng):
    for n in (100, 994):
        for _ in range(5):
            assert max_run_length(sample_coded_bma_word(n, rng)) <= int(np.sqrt(n))


def test_rll_sampler_uniform_against_enumeration():
    members = [w for w in itertools.product((0, 1), repeat=12) if max_run_length(as_bitstring(w)) <= 3]
    assert len(members) == 1854
    rng = np.random.default_rng(12)
    draws = Counter(tuple(sample_rll_sequence(12, 3, rng).tolist()) for _ in range(1854 * 20))
    assert set(draws) <= set(members)
    observed = np.array([draws.get(w, 0) for w in members])
    assert stats.chisquare(observed).pvalue > 1e-4


def test_rll_sampler_unconstrained(rng):
    assert len(sample_rll_sequence(5, 5, rng)) == 5


@pytest.mark.slow
def test_reconstruction_time_is_linear():
    timings = {}
    for n in (10_000, 20_000):
        params = derive_params(n, 10, 1.0, 3)
        rng = np.random.default_rng(n)
        x = sample_codeword(params, rng)
        traces = [transmit(x, params.p, rng) for _ in range(5)]
        runs = []
        for _ in range(20):
            start = time.perf_counter()
            reconstruct_ours(traces, params)
            runs.append(time.perf_counter() - start)
        timings[n] = statistics.median(runs)
    assert timings[20_000] <= 2 * 1.3 * timings[10_000]
