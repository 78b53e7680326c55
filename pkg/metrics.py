"""Edit distance and aggregation of Monte-Carlo trials."""
import math
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

Z_95 = 1.959963984540054


def levenshtein(a: Sequence[int], b: Sequence[int]) -> int:
    """Unit-cost edit distance.

    Row-by-row dynamic programming over the longer input with one row of the
    shorter input's length kept in memory. The insertion recurrence along a
    row is resolved with a running minimum, so every row is a handful of
    vector operations.
    """
    a = np.asarray(a, dtype=np.int8)
    b = np.asarray(b, dtype=np.int8)
    if a.size == b.size and np.array_equal(a, b):
        return 0
    if a.size > b.size:
        a, b = b, a
    if a.size == 0:
        return int(b.size)

    offsets = np.arange(a.size + 1, dtype=np.int64)
    prev = offsets.copy()
    temp = np.empty(a.size + 1, dtype=np.int64)
    for i, symbol in enumerate(b.tolist(), start=1):
        temp[0] = i
        np.minimum(prev[1:] + 1, prev[:-1] + (a != symbol), out=temp[1:])
        prev = np.minimum.accumulate(temp - offsets) + offsets
    return int(prev[-1])


class TrialResult(BaseModel):
    """Outcome of one simulated transmission and reconstruction."""

    model_config = ConfigDict(frozen=True)

    trial_index: int
    edit_distance: int = Field(ge=0)
    exact_match: bool
    segmentation_failures: int = Field(default=0, ge=0)
    trace_lengths: List[int] = Field(default_factory=list)
    skipped: bool = False

    @model_validator(mode="after")
    def _match_iff_zero_distance(self):
        if not self.skipped and self.exact_match != (self.edit_distance == 0):
            raise ValueError("exact_match must hold exactly when edit_distance is 0")
        return self


class SummaryStats(BaseModel):
    """Aggregated statistics of one (scheme, parameter point, t) cell."""

    scheme: str
    n: int
    k: float
    alpha: float
    delta: int
    ell: int
    t: int
    trials: int
    seed: int
    rate: float
    mean_norm_edit: float = Field(ge=0.0)
    stderr_norm_edit: float = Field(ge=0.0)
    p_e_hat: float = Field(ge=0.0, le=1.0)
    mean_seg_fail_rate: float = Field(ge=0.0)
    skipped: int = Field(default=0, ge=0)

    @property
    def ci95(self) -> Tuple[float, float]:
        """Normal-approximation 95% interval for the mean normalized edit error."""
        half = Z_95 * self.stderr_norm_edit
        return self.mean_norm_edit - half, self.mean_norm_edit + half


def summarize(results: Sequence[TrialResult], n: int, t: int) -> dict:
    """Mean and standard error of L_d/n, error rate and segmentation-failure rate.

    Results are sorted by trial index first so the sums do not depend on the
    order trials finished in.
    """
    done = sorted((r for r in results if not r.skipped), key=lambda r: r.trial_index)
    count = len(done)
    if count == 0:
        return dict(mean_norm_edit=0.0, stderr_norm_edit=0.0, p_e_hat=0.0, mean_seg_fail_rate=0.0)
    norm = np.array([r.edit_distance / n for r in done], dtype=float)
    mean = float(norm.mean())
    stderr = float(norm.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    p_e_hat = sum(1 for r in done if not r.exact_match) / count
    seg_fail = sum(r.segmentation_failures for r in done) / (count * t)
    return dict(mean_norm_edit=mean, stderr_norm_edit=stderr, p_e_hat=p_e_hat, mean_seg_fail_rate=seg_fail)
