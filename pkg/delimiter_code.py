"""Deletion-detecting delimiter code: layout, stamping, membership and trace segmentation.

Every block except the first starts with detect_cap+1 zeros and every block
except the last ends with detect_cap ones. A receiver reads the bits where a
block's trailing ones should sit; the length of the surviving run of ones tells
how many bits the block lost, as long as no block loses more than detect_cap.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np

from core_model import BitString, BlockLayout, Trace, as_bitstring

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DelimiterLayout:
    """Fixed (1-based position, bit) pairs of a delimiter code."""

    positions: Tuple[Tuple[int, int], ...]
    indices: np.ndarray = field(compare=False, repr=False)
    values: np.ndarray = field(compare=False, repr=False)
    free: np.ndarray = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class Segment:
    """One block's share of a trace."""

    start: int
    length: int
    deletions: int


@dataclass(frozen=True)
class Segmentation:
    """Decoder-side partition of a trace into blocks."""

    segments: Tuple[Segment, ...]
    failed_at: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.failed_at is None

    @property
    def status(self) -> str:
        return "Success" if self.ok else f"FailedAtBlock({self.failed_at})"

    @property
    def deletions(self) -> Tuple[int, ...]:
        return tuple(seg.deletions for seg in self.segments)

    def pieces(self, bits: np.ndarray) -> List[np.ndarray]:
        """Cut the trace bits into the segments found so far."""
        return [bits[seg.start:seg.start + seg.length] for seg in self.segments]


@lru_cache(maxsize=256)
def _build_layout(n: int, ell: int, detect_cap: int) -> DelimiterLayout:
    layout = BlockLayout(n=n, ell=ell, detect_cap=detect_cap)
    fixed = {}
    for m in range(1, layout.num_blocks + 1):
        start = layout.block_start(m)
        if m > 1:
            # zero prefix, clipped to a short last block
            for offset in range(min(detect_cap + 1, layout.block_len(m))):
                fixed[start + offset + 1] = 0
        if m < layout.num_blocks:
            for offset in range(ell - detect_cap, ell):
                fixed[start + offset + 1] = 1
    positions = tuple(sorted(fixed.items()))
    indices = np.array([pos - 1 for pos, _ in positions], dtype=np.intp)
    values = np.array([bit for _, bit in positions], dtype=np.uint8)
    mask = np.ones(n, dtype=bool)
    mask[indices] = False
    free = np.flatnonzero(mask)
    for arr in (indices, values, free):
        arr.flags.writeable = False
    return DelimiterLayout(positions=positions, indices=indices, values=values, free=free)


def delimiter_layout(layout: BlockLayout) -> DelimiterLayout:
    """Return the positions and values fixed by the delimiter code."""
    return _build_layout(*layout.layout_key())


def _check_length(x: np.ndarray, layout: BlockLayout):
    if len(x) != layout.n:
        raise ValueError(f"expected a word of length {layout.n}, got {len(x)}")


def stamp(x: BitString, layout: BlockLayout) -> BitString:
    """Overwrite every delimiter position of x with its fixed bit."""
    _check_length(x, layout)
    fixed = delimiter_layout(layout)
    out = np.array(x, dtype=np.uint8, copy=True)
    out[fixed.indices] = fixed.values
    return as_bitstring(out)


def is_member_D(x: BitString, layout: BlockLayout) -> bool:
    """True iff every delimiter position of x holds its fixed bit."""
    _check_length(x, layout)
    fixed = delimiter_layout(layout)
    return bool(np.array_equal(np.asarray(x)[fixed.indices], fixed.values))


def _prefix_len(layout: BlockLayout, m: int) -> int:
    return min(layout.detect_cap + 1, layout.block_len(m)) if m > 1 else 0


def segment_trace(
    y: Union[Trace, np.ndarray],
    layout: BlockLayout,
    counter: Optional[Counter] = None,
) -> Segmentation:
    """Recover block boundaries and per-block deletion counts from one trace.

    Blocks are peeled left to right. For block m the window covers residual
    positions ℓ−δd+1..ℓ (clipped to the trace end); d = δd − r where r is the
    run of ones starting at the window head. The segmentation fails at the
    first block m where one of these holds:

    * the residual is shorter than ℓ−δd;
    * the segment does not open with the prefix_len − d zeros that survive
      from its zero prefix;
    * the remainder is longer than the last block, or implies more than δd
      deletions in it.

    counter, when given, accumulates the number of trace bits inspected
    under the key "bits_read".
    """
    bits = y.bits if isinstance(y, Trace) else np.asarray(y)
    total = len(bits)
    ell = layout.ell
    cap = layout.detect_cap
    num_blocks = layout.num_blocks

    def opens_with_zeros(start: int, m: int, deletions: int) -> bool:
        need = _prefix_len(layout, m) - deletions
        if need <= 0:
            return True
        head = bits[start:start + need]
        if counter is not None:
            counter["bits_read"] += len(head)
        return not head.any()

    segments = []
    pos = 0
    for m in range(1, num_blocks):
        remaining = total - pos
        if remaining < ell - cap:
            logger.debug("residual of %d bits too short for block %d", remaining, m)
            return Segmentation(tuple(segments), failed_at=m)
        window = bits[pos + ell - cap:pos + min(ell, remaining)].tolist()
        run = 0
        for bit in window:
            if bit != 1:
                break
            run += 1
        if counter is not None:
            counter["bits_read"] += min(run + 1, len(window))
        deletions = cap - run
        if not opens_with_zeros(pos, m, deletions):
            logger.debug("block %d does not open with its zero prefix", m)
            return Segmentation(tuple(segments), failed_at=m)
        length = ell - deletions
        segments.append(Segment(start=pos, length=length, deletions=deletions))
        pos += length

    remaining = total - pos
    last_len = layout.last_block_len
    deletions = last_len - remaining
    if not 0 <= deletions <= cap:
        logger.debug("remainder of %d bits does not fit last block length %d", remaining, last_len)
        return Segmentation(tuple(segments), failed_at=num_blocks)
    if not opens_with_zeros(pos, num_blocks, deletions):
        logger.debug("last block does not open with its zero prefix")
        return Segmentation(tuple(segments), failed_at=num_blocks)
    segments.append(Segment(start=pos, length=remaining, deletions=deletions))
    return Segmentation(tuple(segments))
