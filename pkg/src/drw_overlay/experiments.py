"""Replication sweeps over (n, initiator count, strategy) cells.

A scenario fixes the node counts, initiator lists, strategies and a base
seed. Every cell is replicated R times; replication k of node count n draws
a fresh connected network whose seed depends only on (base_seed, n, r, k),
so the same networks are reused across strategies and initiator counts and
comparisons between strategies are paired. Records are emitted in a fixed
sort order, which makes a scenario's CSV output reproducible no matter how
many worker processes computed it (wall-clock columns aside).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from time import perf_counter

from . import __version__
from .geom_graph import GraphGenConfig, NotConnected, generate_network
from .metrics import box_stats
from .overlay import BuildFailed, OverlayBuildConfig, TooManyInitiators, build_overlay
from .rng import derive_seed
from . import metrics as _metrics
from .walk_engine import CostStrategy

FULL_REPLICATIONS = 100
FULL_R = 0.05
FULL_N = (1000, 2000, 3000)

# Initiator sweeps of the full protocol, one list per node count.
FULL_INITIATORS: dict[int, tuple[int, ...]] = {
    1000: (2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 75, 100,
           250, 500, 625, 750, 875),
    2000: (2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 75, 100,
           250, 500, 1000, 1250, 1500, 1750),
    3000: (2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30, 40, 50, 75, 100,
           250, 500, 1000, 1500, 1875, 2250, 2625),
}

DESK_N = (200, 500, 1000)

RECORD_COLUMNS = ("n", "r", "strategy", "initiators", "rep", "seed",
                  "active_path_size", "depth", "total_steps",
                  "total_backtracks", "failed", "wall_time_ms")

SUMMARY_METRICS = ("active_path_size", "depth", "total_steps", "total_backtracks")

SUMMARY_STAT_COLUMNS = ("min", "q1", "median", "q3", "max",
                        "lo_whisker", "hi_whisker", "outlier_count", "count")

DEFAULT_GROUP_KEYS = ("n", "strategy", "initiators")


class EmptyGroup(ValueError):
    """summarize() got no usable (non-failed) records."""


@dataclass
class ScenarioConfig:
    """One sweep definition.

    initiator_counts maps each node count to its sweep list; a flat list is
    accepted and applied to every n (values above n dropped). When
    r_rescale_ref is set, the radius used for node count n is
    r * sqrt(r_rescale_ref / n), keeping the expected degree level when the
    sweep runs on smaller networks than the reference.
    """

    n_values: tuple[int, ...]
    r: float
    initiator_counts: dict[int, tuple[int, ...]]
    strategies: tuple[CostStrategy, ...]
    replications: int
    base_seed: int = 0
    step_budget: int | None = None
    output_path: str | None = None
    r_rescale_ref: int | None = None
    scale: float = 1.0
    label: str = "custom"

    def __post_init__(self):
        self.n_values = tuple(int(n) for n in self.n_values)
        if isinstance(self.initiator_counts, (list, tuple)):
            flat = tuple(int(i) for i in self.initiator_counts)
            self.initiator_counts = {n: tuple(i for i in flat if i <= n)
                                     for n in self.n_values}
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for n in self.n_values:
            counts = self.initiator_counts.get(n, ())
            if not counts:
                raise ValueError(f"no initiator counts for n={n}")
            for i in counts:
                if i < 2 or i > n:
                    raise ValueError(f"initiator count {i} invalid for n={n}")

    def effective_radius(self, n: int) -> float:
        if self.r_rescale_ref is None:
            return self.r
        return self.r * math.sqrt(self.r_rescale_ref / n)

    def cells(self):
        """Yield (n, initiator_count, strategy) in emission order."""
        for n in self.n_values:
            for count in self.initiator_counts[n]:
                for strategy in self.strategies:
                    yield n, count, strategy

    @property
    def cell_count(self) -> int:
        """Cells counted per the sweep grid, strategies not multiplied in."""
        return sum(len(self.initiator_counts[n]) for n in self.n_values)


def _scaled_replications(scale: float) -> int:
    return max(10, round(FULL_REPLICATIONS * scale))


def _default_strategies() -> tuple[CostStrategy, ...]:
    return (CostStrategy("drw"), CostStrategy("prw"))


def full_scenario(scale: float = 1.0, *, strategies=None,
                  base_seed: int = 0) -> ScenarioConfig:
    """The full sweep protocol, optionally shrunk by a factor in (0, 1].

    At scale 1: n in {1000, 2000, 3000}, r = 0.05, the full initiator lists
    and 100 replications per cell. Below 1, replications shrink
    proportionally (floor 10) and initiator counts above scale*n drop out.
    """
    if not 0 < scale <= 1:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    counts = {n: tuple(i for i in FULL_INITIATORS[n] if i <= scale * n)
              for n in FULL_N}
    return ScenarioConfig(
        n_values=FULL_N,
        r=FULL_R,
        initiator_counts=counts,
        strategies=tuple(strategies) if strategies else _default_strategies(),
        replications=_scaled_replications(scale),
        base_seed=base_seed,
        scale=scale,
        label="full",
    )


def desk_scenario(scale: float = 0.1, *, strategies=None,
                  base_seed: int = 0) -> ScenarioConfig:
    """Small-network variant: n in {200, 500, 1000} with a rescaled radius.

    The radius grows as sqrt(1000/n) so the mean degree stays at the
    reference level; connected placements at small n are rare otherwise.
    """
    if not 0 < scale <= 1:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    base = FULL_INITIATORS[1000]
    counts = {n: tuple(i for i in base if i <= scale * n) for n in DESK_N}
    return ScenarioConfig(
        n_values=DESK_N,
        r=FULL_R,
        initiator_counts=counts,
        strategies=tuple(strategies) if strategies else _default_strategies(),
        replications=_scaled_replications(scale),
        base_seed=base_seed,
        r_rescale_ref=1000,
        scale=scale,
        label="desk",
    )


@dataclass(frozen=True)
class ExperimentRecord:
    n: int
    r: float
    strategy: str
    initiators: int
    rep: int
    seed: int
    active_path_size: int
    depth: float
    total_steps: int
    total_backtracks: int
    failed: int
    wall_time_ms: float


def network_seed(cfg: ScenarioConfig, n: int, rep: int) -> int:
    return derive_seed(cfg.base_seed, "network", n, cfg.effective_radius(n), rep)


def build_seed(cfg: ScenarioConfig, n: int, initiators: int, rep: int) -> int:
    return derive_seed(cfg.base_seed, "build", n, cfg.effective_radius(n),
                       initiators, rep)


def _run_rep_group(cfg: ScenarioConfig, n: int, rep: int) -> list[ExperimentRecord]:
    """All cells sharing one (n, replication) network."""
    r_eff = cfg.effective_radius(n)
    net_seed = network_seed(cfg, n, rep)
    try:
        net = generate_network(GraphGenConfig(n=n, r=r_eff, seed=net_seed))
    except NotConnected:
        net = None
    rows = []
    for count in cfg.initiator_counts[n]:
        b_seed = build_seed(cfg, n, count, rep)
        for strategy in cfg.strategies:
            t0 = perf_counter()
            size = 0
            reach = 0.0
            steps = 0
            backtracks = 0
            failed = 1
            if net is not None:
                try:
                    res = build_overlay(net, OverlayBuildConfig(
                        initiator_count=count, strategy=strategy,
                        seed=b_seed, step_budget=cfg.step_budget))
                    size = _metrics.active_path_size(res)
                    reach = _metrics.depth(res, net)
                    steps = res.total_steps
                    backtracks = res.total_backtracks
                    failed = 0
                except (BuildFailed, TooManyInitiators):
                    pass
            wall = (perf_counter() - t0) * 1000.0
            rows.append(ExperimentRecord(
                n=n, r=r_eff, strategy=strategy.label, initiators=count,
                rep=rep, seed=b_seed, active_path_size=size, depth=reach,
                total_steps=steps, total_backtracks=backtracks,
                failed=failed, wall_time_ms=wall))
    return rows


def _run_rep_group_star(args):
    return _run_rep_group(*args)


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> list[ExperimentRecord]:
    """Execute every cell and replication; rows come back in a fixed order."""
    tasks = [(cfg, n, rep) for n in cfg.n_values
             for rep in range(cfg.replications)]
    if jobs <= 1:
        groups = [_run_rep_group(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            groups = list(pool.map(_run_rep_group_star, tasks, chunksize=1))
    rows = [rec for group in groups for rec in group]
    rows.sort(key=lambda rec: (rec.n, rec.initiators, rec.strategy, rec.rep))
    return rows


def scenario_metadata(cfg: ScenarioConfig) -> list[str]:
    """Comment block for CSV heads: config echo, version, scale."""
    lines = [
        f"overlay-experiment v{__version__}",
        f"scenario={cfg.label} scale={cfg.scale:g} base_seed={cfg.base_seed}",
        f"n_values={','.join(str(n) for n in cfg.n_values)} r={cfg.r!r}"
        + (f" r_rescale_ref={cfg.r_rescale_ref}" if cfg.r_rescale_ref else ""),
        f"strategies={','.join(s.label for s in cfg.strategies)}"
        f" replications={cfg.replications}"
        f" step_budget={cfg.step_budget if cfg.step_budget is not None else 'default'}",
    ]
    for n in cfg.n_values:
        lines.append(f"initiators[{n}]="
                     + ",".join(str(i) for i in cfg.initiator_counts[n]))
    return lines


def _format_record(rec: ExperimentRecord) -> list[str]:
    return [
        str(rec.n), repr(rec.r), rec.strategy, str(rec.initiators),
        str(rec.rep), str(rec.seed), str(rec.active_path_size),
        f"{rec.depth:.6f}", str(rec.total_steps), str(rec.total_backtracks),
        str(rec.failed), f"{rec.wall_time_ms:.3f}",
    ]


def write_records_csv(records, out, metadata=()) -> None:
    """Write the record table; `out` is a path or a text file object."""
    own = isinstance(out, (str, bytes)) or hasattr(out, "__fspath__")
    fh = open(out, "w", encoding="utf-8", newline="") if own else out
    try:
        for line in metadata:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow(_format_record(rec))
    finally:
        if own:
            fh.close()


def read_records_csv(source) -> list[ExperimentRecord]:
    """Read records back; accepts a path or a text file object."""
    own = isinstance(source, (str, bytes)) or hasattr(source, "__fspath__")
    fh = open(source, "r", encoding="utf-8", newline="") if own else source
    try:
        rows = [row for row in csv.reader(line for line in fh
                                          if not line.startswith("#")) if row]
    finally:
        if own:
            fh.close()
    if not rows:
        raise ValueError("no header row found")
    header = tuple(rows[0])
    if header != RECORD_COLUMNS:
        raise ValueError(f"unexpected columns {header}")
    records = []
    for row in rows[1:]:
        if len(row) != len(RECORD_COLUMNS):
            raise ValueError(f"malformed row: {row!r}")
        records.append(ExperimentRecord(
            n=int(row[0]), r=float(row[1]), strategy=row[2],
            initiators=int(row[3]), rep=int(row[4]), seed=int(row[5]),
            active_path_size=int(row[6]), depth=float(row[7]),
            total_steps=int(row[8]), total_backtracks=int(row[9]),
            failed=int(row[10]), wall_time_ms=float(row[11])))
    return records


@dataclass(frozen=True)
class SummaryRow:
    group: tuple
    metric: str
    stats: object


def summarize(records, group_keys=DEFAULT_GROUP_KEYS,
              metrics=SUMMARY_METRICS) -> list[SummaryRow]:
    """Box statistics per group for each metric, over non-failed records."""
    for key in group_keys:
        if key not in RECORD_COLUMNS:
            raise ValueError(f"unknown group key {key!r}")
    usable = [rec for rec in records if not rec.failed]
    if not usable:
        raise EmptyGroup("no non-failed records to summarize")
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for rec in usable:
        groups.setdefault(tuple(getattr(rec, k) for k in group_keys),
                          []).append(rec)
    rows = []
    for key in sorted(groups):
        for metric in metrics:
            values = [getattr(rec, metric) for rec in groups[key]]
            rows.append(SummaryRow(group=key, metric=metric,
                                   stats=box_stats(values)))
    return rows


def write_summary_csv(rows, group_keys=DEFAULT_GROUP_KEYS, out=None,
                      metadata=()) -> str | None:
    """Write the summary table; with out=None, return it as a string."""
    if out is None:
        buf = io.StringIO()
        write_summary_csv(rows, group_keys, buf, metadata)
        return buf.getvalue()
    own = isinstance(out, (str, bytes)) or hasattr(out, "__fspath__")
    fh = open(out, "w", encoding="utf-8", newline="") if own else out
    try:
        for line in metadata:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(tuple(group_keys) + ("metric",) + SUMMARY_STAT_COLUMNS)
        for row in rows:
            s = row.stats
            writer.writerow(list(row.group) + [row.metric] + [
                f"{s.minimum:.6f}", f"{s.q1:.6f}", f"{s.median:.6f}",
                f"{s.q3:.6f}", f"{s.maximum:.6f}", f"{s.lower_whisker:.6f}",
                f"{s.upper_whisker:.6f}", str(s.outlier_count), str(s.count)])
    finally:
        if own:
            fh.close()
    return None


def failed_cells(records) -> list[tuple]:
    """Cells (n, strategy, initiators) whose replications all failed."""
    seen: dict[tuple, list[int]] = {}
    for rec in records:
        seen.setdefault((rec.n, rec.strategy, rec.initiators),
                        []).append(rec.failed)
    return sorted(k for k, flags in seen.items() if all(flags))
