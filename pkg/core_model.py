"""Shared domain types, parameter derivation and bit-sequence text I/O."""
import math
from dataclasses import dataclass, asdict
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np
import numpy.typing as npt

from errors import FormatError, ParamError

BitString = npt.NDArray[np.uint8]

# Rational exponents with a denominator up to this bound get exact floor arithmetic
MAX_EXACT_DENOMINATOR = 64
FLOOR_GUARD = 1e-9


def as_bitstring(values: Union[Iterable[int], np.ndarray]) -> BitString:
    """Validate a sequence of 0/1 symbols and return it as a read-only uint8 array."""
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
    if arr.ndim != 1:
        raise ValueError(f"a bit string must be one-dimensional, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("a bit string may only contain 0 and 1")
    out = arr.astype(np.uint8, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class BlockLayout:
    """Split of an n-bit word into ⌈n/ℓ⌉ blocks, each able to flag up to detect_cap deletions."""

    n: int
    ell: int
    detect_cap: int

    def __post_init__(self):
        if self.detect_cap < 1:
            raise ParamError("detect_cap >= 1", f"detect_cap must be at least 1, got {self.detect_cap}")
        if not 2 * self.detect_cap < self.ell:
            raise ParamError(
                "2*detect_cap < ell",
                f"2*detect_cap={2 * self.detect_cap} must be smaller than ell={self.ell}",
            )
        if not 2 * self.ell <= self.n:
            raise ParamError("ell <= n/2", f"ell={self.ell} exceeds n/2 for n={self.n}")

    @property
    def num_blocks(self) -> int:
        return -(-self.n // self.ell)

    @property
    def last_block_len(self) -> int:
        return self.n - (self.num_blocks - 1) * self.ell

    def block_start(self, m: int) -> int:
        """0-based offset of block m (1-based) inside the codeword."""
        return (m - 1) * self.ell

    def block_len(self, m: int) -> int:
        """Nominal length of block m (1-based)."""
        return self.last_block_len if m == self.num_blocks else self.ell

    def layout_key(self) -> tuple:
        return (self.n, self.ell, self.detect_cap)


@dataclass(frozen=True)
class CodeParams(BlockLayout):
    """Parameters of the trace reconstruction code for deletion probability p = k / n^alpha."""

    k: float = 2.0
    alpha: float = 1.0
    delta: int = 2
    p: float = 0.0

    @property
    def max_run(self) -> int:
        """Run-length limit ⌊√ℓ⌋."""
        return math.isqrt(self.ell)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data.update(
            num_blocks=self.num_blocks,
            last_block_len=self.last_block_len,
            max_run=self.max_run,
        )
        return data


@dataclass(frozen=True)
class Trace:
    """Output of one pass of an n-bit word through the deletion channel."""

    bits: BitString
    origin_len: int

    def __post_init__(self):
        if len(self.bits) > self.origin_len:
            raise ValueError(
                f"trace of length {len(self.bits)} cannot come from a word of length {self.origin_len}"
            )

    def __len__(self) -> int:
        return len(self.bits)


def _as_fraction(value: float) -> Union[Fraction, None]:
    frac = Fraction(value).limit_denominator(MAX_EXACT_DENOMINATOR)
    if abs(float(frac) - value) <= 1e-12 * max(1.0, abs(value)):
        return frac
    return None


def block_length(n: int, k: float, alpha: float) -> int:
    """Return ⌊n^alpha / k⌋, the block length ⌊1/p⌋, without floor misrounding."""
    frac_alpha = _as_fraction(alpha)
    frac_k = _as_fraction(k)
    if frac_alpha is not None and frac_k is not None:
        a, b = frac_alpha.numerator, frac_alpha.denominator
        target = n ** a

        def fits(length: int) -> bool:
            # length <= n^(a/b) / k  <=>  (length * k)^b <= n^a
            return (length * frac_k) ** b <= target

        guess = max(0, math.floor(n ** float(frac_alpha) / float(frac_k)))
        while guess > 0 and not fits(guess):
            guess -= 1
        while fits(guess + 1):
            guess += 1
        return guess

    value = n ** alpha / k
    nearest = round(value)
    if abs(value - nearest) < FLOOR_GUARD:
        return int(nearest)
    return math.floor(value)


def derive_params(n: int, k: float, alpha: float, delta: int) -> CodeParams:
    """Derive the full code parameter set for p = k / n^alpha and code parameter delta."""
    if n < 4:
        raise ParamError("n >= 4", f"n must be at least 4, got {n}")
    if not k > 1:
        raise ParamError("k > 1", f"k must exceed 1, got {k}")
    if not 0.5 < alpha <= 1:
        raise ParamError("0.5 < alpha <= 1", f"alpha must lie in (0.5, 1], got {alpha}")
    if delta < 2 or int(delta) != delta:
        raise ParamError("delta >= 2", f"delta must be an integer of at least 2, got {delta}")
    delta = int(delta)

    p = k / n ** alpha
    if not p < 0.5:
        raise ParamError("p < 0.5", f"p = k/n^alpha = {p:.6g} must be below 0.5")

    ell = block_length(n, k, alpha)
    if not ell > delta * delta:
        raise ParamError("ell > delta^2", f"ell={ell} must exceed delta^2={delta * delta}")
    if not 2 * ell <= n:
        raise ParamError("ell <= n/2", f"ell={ell} exceeds n/2 for n={n}")

    return CodeParams(n=n, ell=ell, detect_cap=delta - 1, k=k, alpha=alpha, delta=delta, p=p)


def block_count_bounds_hold(params: CodeParams) -> bool:
    """Check the block-count sandwich k·n^(1−α) ≤ ⌈n/ℓ⌉ < (2k+1)·n^(1−α) and its ⌈n/ℓ⌉−1 form."""
    scale = params.n ** (1 - params.alpha)
    low = params.k * scale
    blocks = params.num_blocks
    slack = 1e-9 * max(1.0, low)
    return (
        low - 1 <= blocks - 1 + slack
        and blocks - 1 < 2 * low
        and low <= blocks + slack
        and blocks < (2 * params.k + 1) * scale
    )


def parse_bitstring(text: str) -> BitString:
    """Parse '0'/'1' characters, ignoring whitespace."""
    compact = "".join(text.split())
    if not set(compact) <= {"0", "1"}:
        for position, char in enumerate(text, start=1):
            if char not in "01" and not char.isspace():
                raise FormatError(position, char)
    bits = np.frombuffer(compact.encode("ascii"), dtype=np.uint8) - ord("0")
    return as_bitstring(bits)


def format_bitstring(bits: Sequence[int]) -> str:
    """Render a bit string as '0'/'1' characters."""
    arr = np.asarray(bits, dtype=np.uint8)
    return (arr + ord("0")).tobytes().decode("ascii")


def parse_bitstrings(text: str) -> List[BitString]:
    """Parse one sequence per line; '#' lines are comments and blank lines are empty sequences."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    sequences = []
    for number, line in enumerate(lines, start=1):
        line = line.rstrip("\r")
        if line.startswith("#"):
            continue
        try:
            sequences.append(parse_bitstring(line))
        except FormatError as e:
            raise FormatError(e.position, e.char, line=number) from None
    return sequences


def format_bitstrings(sequences: Iterable[Sequence[int]], comments: Iterable[str] = ()) -> str:
    """Render sequences one per line, preceded by '#' comment lines."""
    lines = [f"# {comment}" for comment in comments]
    lines.extend(format_bitstring(seq) for seq in sequences)
    return "".join(line + "\n" for line in lines)


def read_bitstrings(path: Union[str, Path]) -> List[BitString]:
    """Read a bit-sequence file."""
    with open(path, "r", encoding="ascii") as f:
        return parse_bitstrings(f.read())


def write_bitstrings(path: Union[str, Path], sequences: Iterable[Sequence[int]], comments: Iterable[str] = ()):
    """Write a bit-sequence file."""
    with open(path, "w", encoding="ascii") as f:
        f.write(format_bitstrings(sequences, comments))
