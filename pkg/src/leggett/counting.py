"""Heralded coincidence-count simulation, the count-based correlation estimator
and violation significance.

Counts for the four projection combinations (a,b), (-a,-b), (a,-b), (-a,b)
are independent Poisson draws with equal acquisition time.  Finite visibility
``V`` scales every correlation, ``C -> V C``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .correlations import CorrelationValue, e3_from_correlations, fmt, leggett_bound, quantum_correlation
from .settings import PAIR_LABELS, SettingsTriad
from .statespace import InvalidInputError, prepare_phi_plus

COMBOS = ("pp", "mm", "pm", "mp")
_SIGNS = {"pp": (1, 1), "mm": (-1, -1), "pm": (1, -1), "mp": (-1, 1)}

GENERATOR_NAME = "numpy.random.PCG64"
STREAM_SCHEME = "SeedSequence(seed, spawn_key=(phi_index, pair_index))"

COUNT_CSV_HEADER = ("phi_deg", "pair_index", "combo", "count")
REPORT_CSV_HEADER = ("phi_deg", "e3_est", "sigma_e3", "l3", "n_sigma", "flags")


class NoDataError(InvalidInputError):
    pass


class CountsFormatError(InvalidInputError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class CountTable:
    n_pp: int
    n_mm: int
    n_pm: int
    n_mp: int

    def __post_init__(self):
        for name in ("n_pp", "n_mm", "n_pm", "n_mp"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidInputError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def total(self) -> int:
        return self.n_pp + self.n_mm + self.n_pm + self.n_mp

    def get(self, combo: str) -> int:
        return getattr(self, "n_" + combo)


@dataclass(frozen=True)
class ExperimentConfig:
    mean_counts_per_setting: float = 1e4
    visibility: float = 0.96
    rng_seed: int = 0

    def __post_init__(self):
        if not self.mean_counts_per_setting > 0:
            raise InvalidInputError("mean_counts_per_setting must be positive")
        if not 0.0 <= self.visibility <= 1.0:
            raise InvalidInputError(f"visibility must be in [0, 1], got {self.visibility}")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise InvalidInputError("rng_seed must be a non-negative integer")


@dataclass(frozen=True)
class LabeledCounts:
    phi: float
    pair_index: str
    table: CountTable


@dataclass(frozen=True)
class SignificanceReport:
    phi: float
    e3_est: float
    sigma_e3: float
    l3: float
    n_sigma: float
    flags: tuple = field(default=())

    @property
    def complete(self) -> bool:
        return not any(f.startswith("incomplete") for f in self.flags)


def joint_probability(c: float, x: int, y: int) -> float:
    """P(x, y) for +/-1 outcomes with zero marginals and correlation ``c``."""
    if abs(c) > 1:
        raise InvalidInputError(f"correlation {c} outside [-1, 1]")
    if x not in (1, -1) or y not in (1, -1):
        raise InvalidInputError("outcomes must be +1 or -1")
    return (1 + x * y * c) / 4


def _rng(seed: int, stream: tuple = ()) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(stream))))


def simulate_counts(c: float, cfg: ExperimentConfig, stream: tuple = ()) -> CountTable:
    """Poisson coincidence counts for one setting pair with ideal correlation ``c``.

    ``stream`` selects an independent sub-stream of ``cfg.rng_seed`` so grid
    points can be simulated in any order.
    """
    vc = cfg.visibility * c
    means = [cfg.mean_counts_per_setting * 4 * joint_probability(vc, *_SIGNS[k]) for k in COMBOS]
    draws = _rng(cfg.rng_seed, stream).poisson(np.clip(means, 0.0, None))
    return CountTable(*(int(n) for n in draws))


def _sigma(s: int, d: int) -> float:
    n = s + d
    return 2 * math.sqrt(s * d) / n**1.5


def estimate_correlation(t: CountTable) -> CorrelationValue:
    """C = (N++ + N-- - N+- - N-+)/N with sigma = sqrt((1 - C^2)/N).

    With independent Poisson entries, S = N++ + N-- and D = N+- + N-+ give
    sigma^2 = 4 S D / N^3, identical to (1 - C^2)/N.  When S D = 0 that is
    zero; sigma is then floored at the value obtained with every zero entry
    replaced by 1.
    """
    n = t.total
    if n == 0:
        raise NoDataError("count table is empty")
    s, d = t.n_pp + t.n_mm, t.n_pm + t.n_mp
    value = (s - d) / n
    if s * d > 0:
        return CorrelationValue(value, _sigma(s, d))
    bumped = [max(t.get(k), 1) for k in COMBOS]
    return CorrelationValue(value, _sigma(bumped[0] + bumped[1], bumped[2] + bumped[3]), floored=True)


def significance(phi: float, e3: float, sigma: float, flags=()) -> SignificanceReport:
    l3 = leggett_bound(phi)
    if sigma > 0:
        n_sigma = (e3 - l3) / sigma
    else:
        n_sigma = math.copysign(math.inf, e3 - l3) if e3 != l3 else 0.0
    return SignificanceReport(phi, e3, sigma, l3, n_sigma, tuple(flags))


def simulate_sweep_counts(grid: list[SettingsTriad], cfg: ExperimentConfig) -> list[LabeledCounts]:
    """Six count tables per triad, one sub-stream per (phi index, pair index)."""
    state = prepare_phi_plus()
    out = []
    for k, triad in enumerate(grid):
        for j, (label, a, b) in enumerate(triad.pairs()):
            c = quantum_correlation(state, a, b).value
            out.append(LabeledCounts(triad.phi, label, simulate_counts(c, cfg, (k, j))))
    return out


def analyze_counts(labeled: list[LabeledCounts]) -> list[SignificanceReport]:
    """Estimate E3 and its significance for every phi; rows ordered by phi.

    A phi lacking any of the six pairs yields a row with NaN values and an
    ``incomplete`` flag naming the missing pairs.
    """
    by_phi: dict[float, dict[str, CountTable]] = defaultdict(dict)
    for item in labeled:
        by_phi[item.phi][item.pair_index] = item.table
    reports = []
    for phi in sorted(by_phi):
        tables = by_phi[phi]
        missing = [p for p in PAIR_LABELS if p not in tables]
        if missing:
            nan = math.nan
            reports.append(SignificanceReport(phi, nan, nan, leggett_bound(phi), nan,
                                              (f"incomplete:missing={'|'.join(missing)}",)))
            continue
        stat = e3_from_correlations([estimate_correlation(tables[p]) for p in PAIR_LABELS])
        reports.append(significance(phi, stat.e3, stat.sigma_e3, stat.flags))
    return reports


def run_sweep(grid: list[SettingsTriad], cfg: ExperimentConfig) -> list[SignificanceReport]:
    if not grid:
        raise InvalidInputError("sweep grid is empty")
    return analyze_counts(simulate_sweep_counts(grid, cfg))


# --- count CSV ---------------------------------------------------------------

def write_counts_csv(labeled: list[LabeledCounts]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNT_CSV_HEADER)
    for item in labeled:
        for combo in COMBOS:
            w.writerow([fmt(item.phi), item.pair_index, combo, item.table.get(combo)])
    return buf.getvalue()


def ingest_counts(text: str) -> list[LabeledCounts]:
    """Parse a count CSV into labeled tables.

    Rows are grouped by (phi, pair_index); every group must carry all four
    combos.  Errors name the offending line (header is line 1).
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CountsFormatError("empty document", 1) from None
    if tuple(h.strip() for h in header) != COUNT_CSV_HEADER:
        raise CountsFormatError(f"expected header {','.join(COUNT_CSV_HEADER)}, got {','.join(header)}", 1)

    groups: dict[tuple[float, str], dict[str, int]] = {}
    first_line: dict[tuple[float, str], int] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise CountsFormatError(f"expected 4 fields, got {len(row)}", line)
        phi_s, pair, combo, count_s = (c.strip() for c in row)
        try:
            phi = float(phi_s)
        except ValueError:
            raise CountsFormatError(f"phi_deg {phi_s!r} is not a number", line) from None
        if not (0.0 <= phi <= 180.0):
            raise CountsFormatError(f"phi_deg {phi} outside [0, 180]", line)
        if pair not in PAIR_LABELS:
            raise CountsFormatError(f"pair_index {pair!r} not in {PAIR_LABELS}", line)
        if combo not in COMBOS:
            raise CountsFormatError(f"combo {combo!r} not in {COMBOS}", line)
        try:
            count = int(count_s)
        except ValueError:
            raise CountsFormatError(f"count {count_s!r} is not an integer", line) from None
        if count < 0:
            raise CountsFormatError(f"negative count {count}", line)
        key = (phi, pair)
        group = groups.setdefault(key, {})
        first_line.setdefault(key, line)
        if combo in group:
            raise CountsFormatError(f"duplicate entry phi={phi_s} pair={pair} combo={combo}", line)
        group[combo] = count

    out = []
    for key, group in groups.items():
        missing = [c for c in COMBOS if c not in group]
        if missing:
            raise CountsFormatError(
                f"phi={key[0]} pair={key[1]} lacks combos {missing}", first_line[key]
            )
        out.append(LabeledCounts(key[0], key[1], CountTable(*(group[c] for c in COMBOS))))
    return out


# --- report CSV / metadata -------------------------------------------------

def _fmt_or_blank(x: float) -> str:
    return "" if math.isnan(x) else fmt(x)


def write_report_csv(reports: list[SignificanceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_CSV_HEADER)
    for r in reports:
        w.writerow([fmt(r.phi), _fmt_or_blank(r.e3_est), _fmt_or_blank(r.sigma_e3),
                    fmt(r.l3), _fmt_or_blank(r.n_sigma), ";".join(r.flags)])
    return buf.getvalue()


def read_report_csv(text: str) -> list[SignificanceReport]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != REPORT_CSV_HEADER:
        raise CountsFormatError(f"expected header {','.join(REPORT_CSV_HEADER)}", 1)

    def num(s):
        return math.nan if s == "" else float(s)

    out = []
    for r in rows[1:]:
        if not r:
            continue
        flags = tuple(f for f in r[5].split(";") if f) if len(r) > 5 else ()
        out.append(SignificanceReport(float(r[0]), num(r[1]), num(r[2]), float(r[3]), num(r[4]), flags))
    return out


def sweep_metadata(cfg: ExperimentConfig, grid: dict, reports=None) -> dict:
    meta = {
        "seed": int(cfg.rng_seed),
        "generator_name": GENERATOR_NAME,
        "stream_scheme": STREAM_SCHEME,
        "mean_counts_per_setting": cfg.mean_counts_per_setting,
        "visibility": cfg.visibility,
        "grid": grid,
    }
    if reports is not None:
        meta["flags"] = {fmt(r.phi): list(r.flags) for r in reports if r.flags}
    return meta


def dumps_metadata(meta: dict) -> str:
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"
