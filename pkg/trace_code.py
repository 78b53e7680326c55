"""Run-length-limited delimiter code: membership, sampling, encoding, redundancy and δ selection."""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from config import Config
from core_model import BitString, BlockLayout, CodeParams, as_bitstring
from delimiter_code import delimiter_layout, is_member_D
from errors import DomainError, ParamError, RllViolation, SamplerExhausted

logger = logging.getLogger(__name__)

SAMPLING_METHODS = ("auto", "rejection", "exact")
LAMBERT_MAX_ITER = 100


@dataclass(frozen=True)
class RllBound:
    """Longest run allowed in a codeword."""

    max_run: int

    @classmethod
    def for_params(cls, params: CodeParams) -> "RllBound":
        bound = cls(max_run=math.isqrt(params.ell))
        if bound.max_run < params.delta:
            raise ParamError("max_run >= delta", f"max_run={bound.max_run} is below delta={params.delta}")
        return bound


def _runs(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    changes = np.flatnonzero(x[1:] != x[:-1]) + 1
    starts = np.concatenate(([0], changes))
    return starts, np.diff(np.concatenate((starts, [x.size])))


def longest_run(x: BitString) -> Tuple[int, int]:
    """Return (0-based start, length) of the first longest run of equal symbols."""
    x = np.asarray(x)
    if x.size == 0:
        return 0, 0
    starts, lengths = _runs(x)
    i = int(np.argmax(lengths))
    return int(starts[i]), int(lengths[i])


def first_long_run(x: BitString, max_run: int) -> Optional[Tuple[int, int]]:
    """Return (0-based start, length) of the first run longer than max_run, if any."""
    x = np.asarray(x)
    if x.size == 0:
        return None
    starts, lengths = _runs(x)
    over = np.flatnonzero(lengths > max_run)
    if over.size == 0:
        return None
    return int(starts[over[0]]), int(lengths[over[0]])


def max_run_length(x: BitString) -> int:
    """Length of the longest run of equal consecutive symbols."""
    return longest_run(x)[1]


def is_member_C(x: BitString, params: CodeParams) -> bool:
    """True iff x carries the delimiters and respects the ⌊√ℓ⌋ run-length limit."""
    return is_member_D(x, params) and max_run_length(x) <= params.max_run


class ConstrainedWords:
    """Binary words of length n with runs ≤ max_run and optional fixed positions.

    A backward pass over (last bit, current run length) states counts the
    completions of every prefix. The scaled float table drives exact uniform
    sampling; exact integer counts are computed on demand.
    """

    def __init__(self, n: int, max_run: int, fixed_indices=None, fixed_values=None):
        if max_run < 1:
            raise ParamError("max_run >= 1", f"max_run must be positive, got {max_run}")
        self.n = n
        self.max_run = max_run
        allowed = np.ones((n, 2), dtype=bool)
        if fixed_indices is not None and len(fixed_indices):
            allowed[np.asarray(fixed_indices), 1 - np.asarray(fixed_values, dtype=np.intp)] = False
        self.allowed = allowed
        self.free_count = int(allowed.all(axis=1).sum())
        self._weights, self.log2_count = self._backward()
        self._exact_count: Optional[int] = None

    def _backward(self) -> Tuple[List[List[float]], float]:
        n, runs = self.n, self.max_run
        weights = np.zeros((n, 2 * runs))
        weights[n - 1] = 1.0
        log_scale = 0.0
        for i in range(n - 1, 0, -1):
            nxt, cur = weights[i], weights[i - 1]
            for c in (0, 1):
                block = cur[c * runs:(c + 1) * runs]
                if self.allowed[i, 1 - c]:
                    block[:] = nxt[(1 - c) * runs]
                if self.allowed[i, c]:
                    block[:-1] += nxt[c * runs + 1:(c + 1) * runs]
            top = cur.max()
            if top == 0.0:
                return weights.tolist(), -math.inf
            cur /= top
            log_scale += math.log2(top)
        head = sum(weights[0][b * runs] for b in (0, 1) if self.allowed[0, b])
        if head == 0.0:
            return weights.tolist(), -math.inf
        return weights.tolist(), log_scale + math.log2(head)

    @property
    def acceptance(self) -> float:
        """Probability that uniform free bits land inside the set."""
        if self.log2_count == -math.inf:
            return 0.0
        return 2.0 ** (self.log2_count - self.free_count)

    def count(self) -> int:
        """Exact number of words in the set."""
        if self._exact_count is None:
            n, runs = self.n, self.max_run
            allowed = self.allowed.tolist()
            ways = [1] * (2 * runs)
            for i in range(n - 1, 0, -1):
                new = [0] * (2 * runs)
                for c in (0, 1):
                    switch = ways[(1 - c) * runs] if allowed[i][1 - c] else 0
                    stay = allowed[i][c]
                    for r in range(runs):
                        total = switch
                        if stay and r + 1 < runs:
                            total += ways[c * runs + r + 1]
                        new[c * runs + r] = total
                ways = new
            self._exact_count = sum(ways[b * runs] for b in (0, 1) if allowed[0][b])
        return self._exact_count

    def sample(self, rng: np.random.Generator) -> BitString:
        """Draw one word uniformly from the set."""
        if self.log2_count == -math.inf:
            raise SamplerExhausted(0, "the constrained set is empty")
        n, runs = self.n, self.max_run
        weights = self._weights
        allowed = self.allowed.tolist()
        draws = rng.random(n).tolist()
        out = np.empty(n, dtype=np.uint8)

        w0 = weights[0][0] if allowed[0][0] else 0.0
        w1 = weights[0][runs] if allowed[0][1] else 0.0
        bit = 1 if draws[0] * (w0 + w1) >= w0 else 0
        run = 0
        out[0] = bit
        for i in range(1, n):
            row = weights[i]
            stay = row[bit * runs + run + 1] if allowed[i][bit] and run + 1 < runs else 0.0
            switch = row[(1 - bit) * runs] if allowed[i][1 - bit] else 0.0
            if draws[i] * (stay + switch) < stay:
                run += 1
            else:
                bit = 1 - bit
                run = 0
            out[i] = bit
        return as_bitstring(out)


@lru_cache(maxsize=64)
def _codeword_set(n: int, ell: int, detect_cap: int, max_run: int) -> ConstrainedWords:
    fixed = delimiter_layout(BlockLayout(n=n, ell=ell, detect_cap=detect_cap))
    return ConstrainedWords(n, max_run, fixed.indices, fixed.values)


@lru_cache(maxsize=64)
def _rll_set(n: int, max_run: int) -> ConstrainedWords:
    return ConstrainedWords(n, max_run)


def codeword_set(params: CodeParams) -> ConstrainedWords:
    """The code's member set as a counter/sampler."""
    return _codeword_set(params.n, params.ell, params.detect_cap, params.max_run)


def rll_set(n: int, max_run: int) -> ConstrainedWords:
    """All length-n words with runs ≤ max_run as a counter/sampler."""
    return _rll_set(n, max_run)


def _pick_method(method: str, words: ConstrainedWords) -> str:
    if method not in SAMPLING_METHODS:
        raise ValueError(f"unknown sampling method {method!r}; expected one of {SAMPLING_METHODS}")
    if method != "auto":
        return method
    if words.acceptance >= Config.MIN_REJECTION_ACCEPTANCE:
        return "rejection"
    logger.debug("acceptance %.3g below threshold, using the exact sampler", words.acceptance)
    return "exact"


def _reject_until(template: np.ndarray, free: np.ndarray, max_run: int,
                  rng: np.random.Generator, retry_limit: int) -> BitString:
    for _ in range(retry_limit):
        x = template.copy()
        x[free] = rng.integers(0, 2, size=free.size, dtype=np.uint8)
        if max_run_length(x) <= max_run:
            return as_bitstring(x)
    raise SamplerExhausted(retry_limit, f"no word with runs <= {max_run} found")


def sample_codeword(params: CodeParams, rng: np.random.Generator,
                    retry_limit: Optional[int] = None, method: str = "auto") -> BitString:
    """Draw a codeword uniformly at random.

    "rejection" draws the free bits uniformly and redraws the whole word until
    it meets the run-length limit; "exact" samples sequentially from the
    counted set; "auto" picks rejection unless its acceptance rate is tiny.
    """
    retry_limit = Config.RETRY_LIMIT if retry_limit is None else retry_limit
    chosen = method if method == "rejection" else _pick_method(method, codeword_set(params))
    if chosen == "exact":
        return codeword_set(params).sample(rng)
    fixed = delimiter_layout(params)
    template = np.zeros(params.n, dtype=np.uint8)
    template[fixed.indices] = fixed.values
    return _reject_until(template, fixed.free, params.max_run, rng, retry_limit)


def sample_rll_sequence(n: int, max_run: int, rng: np.random.Generator,
                        retry_limit: Optional[int] = None, method: str = "auto") -> BitString:
    """Draw a uniform length-n word whose runs are at most max_run."""
    if max_run < 1:
        raise ParamError("max_run >= 1", f"max_run must be positive, got {max_run}")
    retry_limit = Config.RETRY_LIMIT if retry_limit is None else retry_limit
    if max_run >= n:
        return as_bitstring(rng.integers(0, 2, size=n, dtype=np.uint8))
    chosen = method if method == "rejection" else _pick_method(method, rll_set(n, max_run))
    if chosen == "exact":
        return rll_set(n, max_run).sample(rng)
    free = np.arange(n)
    return _reject_until(np.zeros(n, dtype=np.uint8), free, max_run, rng, retry_limit)


def info_length(params: CodeParams) -> int:
    """Number of information bits carried by the systematic map."""
    return int(delimiter_layout(params).free.size)


def encode_systematic(info: BitString, params: CodeParams) -> BitString:
    """Place info bits in the free positions, stamp delimiters and check the run limit."""
    fixed = delimiter_layout(params)
    if len(info) != fixed.free.size:
        raise ParamError(
            "info length",
            f"expected {fixed.free.size} information bits, got {len(info)}",
        )
    x = np.zeros(params.n, dtype=np.uint8)
    x[fixed.free] = np.asarray(info, dtype=np.uint8)
    x[fixed.indices] = fixed.values
    offending = first_long_run(x, params.max_run)
    if offending is not None:
        start, length = offending
        raise RllViolation(start + 1, length, params.max_run)
    return as_bitstring(x)


def extract_info(codeword: BitString, params: CodeParams) -> BitString:
    """Read the information bits back out of a codeword."""
    if len(codeword) != params.n:
        raise ValueError(f"expected a word of length {params.n}, got {len(codeword)}")
    return as_bitstring(np.asarray(codeword)[delimiter_layout(params).free])


def redundancy_D(params: CodeParams) -> int:
    """Delimiter redundancy (2δ−1)(⌈n/ℓ⌉−1)."""
    return (2 * params.delta - 1) * (params.num_blocks - 1)


def rate(params: CodeParams) -> float:
    """Code rate (n − redundancy) / n."""
    return (params.n - redundancy_D(params)) / params.n


def redundancy_bounds(params: CodeParams) -> Tuple[float, float]:
    """Lower and upper redundancy bounds (k·n^(1−α)−1)(2δ−1) and 2k·n^(1−α)(2δ−1)."""
    scale = params.k * params.n ** (1 - params.alpha)
    factor = 2 * params.delta - 1
    return (scale - 1) * factor, 2 * scale * factor


def rll_overhead_bound(params: CodeParams) -> float:
    """Upper bound on the extra redundancy paid for the run-length limit, in bits."""
    exponent = math.sqrt(params.ell) - params.delta - 2
    ratio = params.n * 2.0 ** (-exponent)
    if ratio >= 1.0:
        return math.inf
    return -math.log1p(-ratio) / math.log(2)


def count_codewords(params: CodeParams) -> int:
    """Exact number of codewords."""
    return codeword_set(params).count()


def redundancy_C(params: CodeParams) -> float:
    """Exact redundancy n − log2|C| of the full code."""
    size = count_codewords(params)
    if size == 0:
        return math.inf
    return params.n - math.log2(size)


def block_overflow_probability(params: CodeParams) -> float:
    """P(Binomial(ℓ, p) ≥ δ): a block loses more bits than the delimiters can flag."""
    return float(stats.binom.sf(params.delta - 1, params.ell, params.p))


def segmentation_failure_bound(params: CodeParams) -> float:
    """Union bound on one trace's chance of an over-deleted delimited block."""
    return min(1.0, (params.num_blocks - 1) * block_overflow_probability(params))


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function on x ≥ 0.

    Halley iterations from ln(1+x), kept inside the bracket [0, ln(1+x)].
    """
    if math.isnan(x) or x < 0:
        raise DomainError(f"lambert_w0 is only defined here for x >= 0, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return math.inf
    lo, hi = 0.0, math.log1p(x)
    w = hi
    for _ in range(LAMBERT_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            return w
        if f > 0:
            hi = w
        else:
            lo = w
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        new = w - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if abs(new - w) <= 4 * np.finfo(float).eps * max(1.0, abs(new)):
            return new
        w = new
    return w


def default_p_target(n: int, alpha: float) -> float:
    """Target error-decay rate: n^(2α−1) for α < 1, n for α = 1."""
    return float(n) if alpha >= 1 else float(n) ** (2 * alpha - 1)


def delta_star(n: int, alpha: float, p_target: float) -> float:
    """Real-valued δ* = 2 ln(√e·n^(1−α)·p) / W(2e·ln(√e·n^(1−α)·p))."""
    if n < 1 or p_target <= 0:
        raise DomainError(f"delta_star needs n >= 1 and p_target > 0, got n={n}, p_target={p_target}")
    log_arg = 0.5 + (1 - alpha) * math.log(n) + math.log(p_target)
    if not log_arg > 0:
        raise DomainError(
            f"sqrt(e)*n^(1-alpha)*p_target must exceed 1 (log is {log_arg:.6g})"
        )
    return 2 * log_arg / lambert_w0(2 * math.e * log_arg)


def select_delta(n: int, alpha: float, p_target: Optional[float] = None) -> int:
    """Code parameter δ = ⌈δ*⌉."""
    if p_target is None:
        p_target = default_p_target(n, alpha)
    return math.ceil(delta_star(n, alpha, p_target))
