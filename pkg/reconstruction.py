"""Bitwise majority alignment and the block-wise reconstruction pipeline."""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core_model import BitString, CodeParams, Trace, as_bitstring
from delimiter_code import Segmentation, delimiter_layout, segment_trace
from trace_code import sample_rll_sequence

logger = logging.getLogger(__name__)

PAD = 2


@dataclass(frozen=True)
class BlockMatrix:
    """t′ rows over {0, 1, PAD}, each padded to the block's nominal length."""

    rows: np.ndarray

    @classmethod
    def from_pieces(cls, pieces: Sequence[np.ndarray], length: int) -> "BlockMatrix":
        """Stack trace pieces, padding each on the right with PAD."""
        rows = np.full((len(pieces), length), PAD, dtype=np.uint8)
        for j, piece in enumerate(pieces):
            if len(piece) > length:
                raise ValueError(f"row {j} has {len(piece)} symbols, more than the block length {length}")
            rows[j, :len(piece)] = piece
        rows.flags.writeable = False
        return cls(rows=rows)

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def length(self) -> int:
        return self.rows.shape[1]


def bma(matrix: BlockMatrix) -> BitString:
    """Bitwise majority alignment.

    Each row keeps a cursor. At every output position the rows whose cursor
    sits on a 0 or 1 vote; PAD and exhausted rows abstain, ties go to 0 and an
    all-abstain position emits 0. Only rows whose current symbol equals the
    winning bit advance.
    """
    if matrix.num_rows == 0:
        raise ValueError("bma needs at least one row")
    t, length = matrix.rows.shape
    # a trailing PAD column lets exhausted cursors read PAD
    padded = np.concatenate((matrix.rows, np.full((t, 1), PAD, dtype=np.uint8)), axis=1)
    cursors = np.zeros(t, dtype=np.intp)
    rows = np.arange(t)
    out = np.zeros(length, dtype=np.uint8)
    for i in range(length):
        symbols = padded[rows, cursors]
        ones = int(np.count_nonzero(symbols == 1))
        zeros = int(np.count_nonzero(symbols == 0))
        if ones + zeros == 0:
            continue
        bit = 1 if ones > zeros else 0
        out[i] = bit
        cursors += symbols == bit
    return as_bitstring(out)


@dataclass(frozen=True)
class Reconstruction:
    """Estimate plus the diagnostics gathered on the way."""

    bits: BitString
    segmentations: Tuple[Segmentation, ...]
    empty_blocks: Tuple[int, ...]

    @property
    def segmentation_failures(self) -> int:
        return sum(1 for seg in self.segmentations if not seg.ok)


def _fallback_block(params: CodeParams, m: int) -> np.ndarray:
    """Delimiter bits of block m at their fixed positions, 0 elsewhere."""
    start = params.block_start(m)
    length = params.block_len(m)
    block = np.zeros(length, dtype=np.uint8)
    fixed = delimiter_layout(params)
    inside = (fixed.indices >= start) & (fixed.indices < start + length)
    block[fixed.indices[inside] - start] = fixed.values[inside]
    return block


def reconstruct_from_segmentations(
    traces: Sequence[Trace],
    segmentations: Sequence[Segmentation],
    params: CodeParams,
) -> Tuple[BitString, Tuple[int, ...]]:
    """Run BMA per block over the segments found and concatenate the blocks.

    A trace whose segmentation failed at block m contributes rows only to the
    blocks before m. Returns the estimate and the blocks that had no rows.
    """
    per_trace = [seg.pieces(np.asarray(trace.bits)) for trace, seg in zip(traces, segmentations)]
    blocks: List[np.ndarray] = []
    empty = []
    for m in range(1, params.num_blocks + 1):
        pieces = [pieces[m - 1] for pieces in per_trace if len(pieces) >= m]
        if not pieces:
            empty.append(m)
            blocks.append(_fallback_block(params, m))
            continue
        blocks.append(bma(BlockMatrix.from_pieces(pieces, params.block_len(m))))
    return as_bitstring(np.concatenate(blocks)), tuple(empty)


def reconstruct_ours_detailed(traces: Sequence[Trace], params: CodeParams) -> Reconstruction:
    """Segment every trace, reconstruct each block with BMA, concatenate."""
    if not traces:
        raise ValueError("at least one trace is required")
    segmentations = tuple(segment_trace(trace, params) for trace in traces)
    bits, empty = reconstruct_from_segmentations(traces, segmentations, params)
    result = Reconstruction(bits=bits, segmentations=segmentations, empty_blocks=empty)
    if result.segmentation_failures:
        logger.debug(
            "%d of %d traces failed segmentation; %d blocks had no rows",
            result.segmentation_failures, len(traces), len(empty),
        )
    return result


def reconstruct_ours(traces: Sequence[Trace], params: CodeParams) -> BitString:
    """Best-effort estimate of the codeword from its traces."""
    return reconstruct_ours_detailed(traces, params).bits


def reconstruct_coded_bma(traces: Sequence[Trace], n: int) -> BitString:
    """Whole-sequence BMA over all traces padded to n."""
    if not traces:
        raise ValueError("at least one trace is required")
    return bma(BlockMatrix.from_pieces([np.asarray(trace.bits) for trace in traces], n))


def sample_coded_bma_word(n: int, rng: np.random.Generator, retry_limit: Optional[int] = None) -> BitString:
    """Uniform word of L^n(⌊√n⌋), the codebook of the coded-BMA baseline."""
    return sample_rll_sequence(n, math.isqrt(n), rng, retry_limit=retry_limit)
