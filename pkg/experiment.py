"""Monte-Carlo experiments: configuration, single trials, sweeps and CSV output."""
import csv
import io
import itertools
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from tqdm import tqdm

from channel import CODEWORD_STREAM, ChannelSpec, seeded_traces, substream
from config import Config
from core_model import BitString, CodeParams, as_bitstring, derive_params
from errors import ConfigError, DomainError, ParamError, SamplerExhausted
from metrics import SummaryStats, TrialResult, levenshtein, summarize
from reconstruction import reconstruct_coded_bma, reconstruct_ours_detailed, sample_coded_bma_word
from trace_code import rate, rll_set, sample_codeword, select_delta

logger = logging.getLogger(__name__)

CONFIG_KEYS = ("scheme", "n", "k", "alpha", "delta", "t", "trials", "seed", "retry_limit")
LIST_KEYS = ("scheme", "n", "k", "alpha", "delta", "t")
CSV_COLUMNS = (
    "scheme", "n", "k", "alpha", "delta", "ell", "t", "trials", "seed", "rate",
    "mean_norm_edit", "stderr_norm_edit", "p_e_hat", "mean_seg_fail_rate", "skipped",
)
FLOAT_COLUMNS = frozenset(("k", "alpha", "rate", "mean_norm_edit", "stderr_norm_edit", "p_e_hat", "mean_seg_fail_rate"))
CHUNK_SIZE = 50


class Scheme(str, Enum):
    """Codebook plus reconstruction pairing."""

    OURS = "ours"
    CODED_BMA = "coded-bma"
    UNCODED_BMA = "uncoded-bma"


class ExperimentConfig(BaseModel):
    """A sweep over schemes, code/channel parameters and trace counts."""

    model_config = ConfigDict(frozen=True)

    scheme: List[Scheme] = Field(default_factory=lambda: [Scheme.OURS, Scheme.CODED_BMA], min_length=1)
    n: List[int] = Field(min_length=1)
    k: List[float] = Field(min_length=1)
    alpha: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    delta: List[Union[int, Literal["auto"]]] = Field(default_factory=lambda: [3], min_length=1)
    t: List[int] = Field(min_length=1)
    trials: int = Field(default_factory=lambda: Config.DEFAULT_TRIALS, ge=1)
    seed: int = Field(default_factory=lambda: Config.DEFAULT_SEED, ge=0, lt=2 ** 64)
    retry_limit: int = Field(default_factory=lambda: Config.RETRY_LIMIT, ge=1)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse flat key=value lines; list values are comma separated."""
    values: Dict[str, Union[str, List[str]]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {number}: unknown key {key!r}", key=key)
        if key in values:
            raise ConfigError(f"line {number}: duplicate key {key!r}", key=key)
        if key in LIST_KEYS:
            values[key] = [item.strip() for item in value.split(",") if item.strip()]
        else:
            values[key] = value
    return _validate_config(values)


def _validate_config(values: Dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first.get("loc") else None
        raise ConfigError(f"invalid configuration: {e}", key=key) from None


def override_config(config: ExperimentConfig, **updates) -> ExperimentConfig:
    """Copy of config with updated fields, validated like a parsed file."""
    return _validate_config({**config.model_dump(), **updates})


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read an experiment configuration file."""
    with open(path, "r", encoding="utf-8") as f:
        return parse_config_text(f.read())


@dataclass(frozen=True)
class Point:
    """One (scheme, parameters, t) cell of a sweep."""

    scheme: Scheme
    n: int
    k: float
    alpha: float
    delta: int
    t: int
    params: Optional[CodeParams] = None
    skip_reason: Optional[str] = None
    p: Optional[float] = None

    @property
    def deletion_probability(self) -> float:
        return self.params.p if self.p is None else self.p


def make_point(scheme: Union[Scheme, str], n: int, k: float, alpha: float,
               delta: Union[int, str], t: int) -> Point:
    """Resolve δ and derive the code parameters; invalid points carry a skip reason."""
    scheme = Scheme(scheme)
    if delta == "auto":
        try:
            delta = select_delta(n, alpha)
        except DomainError as e:
            return Point(scheme, n, k, alpha, 0, t, skip_reason=str(e))
    try:
        params = derive_params(n, k, alpha, int(delta))
    except ParamError as e:
        return Point(scheme, n, k, alpha, int(delta), t, skip_reason=str(e))
    return Point(scheme, n, k, alpha, int(delta), t, params=params)


def expand_points(config: ExperimentConfig) -> List[Point]:
    """All sweep cells in configuration order."""
    grid = itertools.product(config.scheme, config.n, config.k, config.alpha, config.delta, config.t)
    return [make_point(*cell) for cell in grid]


def sample_for_scheme(scheme: Scheme, params: CodeParams, rng: np.random.Generator,
                      retry_limit: Optional[int] = None) -> BitString:
    """Draw a uniform word from the scheme's codebook."""
    if scheme is Scheme.OURS:
        return sample_codeword(params, rng, retry_limit=retry_limit)
    if scheme is Scheme.CODED_BMA:
        return sample_coded_bma_word(params.n, rng, retry_limit=retry_limit)
    return as_bitstring(rng.integers(0, 2, size=params.n, dtype=np.uint8))


def scheme_rate(scheme: Scheme, params: CodeParams) -> float:
    """Rate of the scheme's codebook."""
    if scheme is Scheme.OURS:
        return rate(params)
    if scheme is Scheme.CODED_BMA:
        return rll_set(params.n, math.isqrt(params.n)).log2_count / params.n
    return 1.0


def run_trial(point: Point, trial_index: int, master_seed: int,
              retry_limit: Optional[int] = None) -> TrialResult:
    """Sample, transmit, reconstruct and score one trial; seeded by (master_seed, trial_index)."""
    params = point.params
    if params is None:
        raise ParamError("valid point", f"cannot run an invalid point: {point.skip_reason}")
    rng = substream(master_seed, trial_index, CODEWORD_STREAM)
    try:
        x = sample_for_scheme(point.scheme, params, rng, retry_limit)
    except SamplerExhausted as e:
        logger.warning("trial %d of %s n=%d skipped: %s", trial_index, point.scheme.value, params.n, e)
        return TrialResult(trial_index=trial_index, edit_distance=0, exact_match=False, skipped=True)

    spec = ChannelSpec(p=point.deletion_probability, t=point.t)
    traces = seeded_traces(x, spec, master_seed, trial_index)
    if point.scheme is Scheme.OURS:
        rec = reconstruct_ours_detailed(traces, params)
        x_hat, failures = rec.bits, rec.segmentation_failures
    else:
        x_hat, failures = reconstruct_coded_bma(traces, params.n), 0

    distance = levenshtein(x, x_hat)
    return TrialResult(
        trial_index=trial_index,
        edit_distance=distance,
        exact_match=distance == 0,
        segmentation_failures=failures,
        trace_lengths=[len(trace) for trace in traces],
    )


def _run_chunk(point: Point, trial_indices: Sequence[int], master_seed: int,
               retry_limit: int) -> List[TrialResult]:
    return [run_trial(point, i, master_seed, retry_limit) for i in trial_indices]


def _summary_row(point: Point, config: ExperimentConfig, results: Sequence[TrialResult]) -> SummaryStats:
    base = dict(
        scheme=point.scheme.value, n=point.n, k=point.k, alpha=point.alpha, delta=point.delta,
        t=point.t, trials=config.trials, seed=config.seed,
    )
    if point.params is None:
        return SummaryStats(
            **base, ell=0, rate=0.0, mean_norm_edit=0.0, stderr_norm_edit=0.0,
            p_e_hat=0.0, mean_seg_fail_rate=0.0, skipped=config.trials,
        )
    stats = summarize(results, point.n, point.t)
    skipped = sum(1 for r in results if r.skipped)
    return SummaryStats(
        **base, ell=point.params.ell, rate=scheme_rate(point.scheme, point.params),
        skipped=skipped, **stats,
    )


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None,
                   progress: bool = False) -> List[SummaryStats]:
    """Run every sweep cell; output is identical for any worker count or completion order."""
    workers = Config.WORKERS if workers is None else workers
    points = expand_points(config)
    for point in points:
        if point.params is None:
            logger.warning("skipping %s n=%d k=%g alpha=%g delta=%s: %s",
                           point.scheme.value, point.n, point.k, point.alpha, point.delta, point.skip_reason)

    chunks = [
        (index, range(start, min(start + CHUNK_SIZE, config.trials)))
        for index, point in enumerate(points) if point.params is not None
        for start in range(0, config.trials, CHUNK_SIZE)
    ]
    results: Dict[int, List[TrialResult]] = defaultdict(list)
    bar = tqdm(total=sum(len(trials) for _, trials in chunks), disable=not progress, unit="trial")
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_run_chunk, points[index], trials, config.seed, config.retry_limit): index
                    for index, trials in chunks
                }
                for future in as_completed(futures):
                    chunk = future.result()
                    results[futures[future]].extend(chunk)
                    bar.update(len(chunk))
        else:
            for index, trials in chunks:
                chunk = _run_chunk(points[index], trials, config.seed, config.retry_limit)
                results[index].extend(chunk)
                bar.update(len(chunk))
    finally:
        bar.close()

    return [_summary_row(point, config, results[index]) for index, point in enumerate(points)]


def _format_value(column: str, value) -> str:
    if column in FLOAT_COLUMNS:
        return f"{float(value):.6g}"
    return str(value)


def format_csv(rows: Sequence[SummaryStats]) -> str:
    """Render summary rows with the fixed column order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        data = row.model_dump()
        writer.writerow([_format_value(column, data[column]) for column in CSV_COLUMNS])
    return buffer.getvalue()


def with_deletion_probability(point: Point, p: float) -> Point:
    """Copy of a point that transmits with an explicit deletion probability."""
    return replace(point, p=p)
