"""Synthetic instances and contact-trace ingestion.

Trace files are whitespace-separated ``device_a device_b start end`` lines;
``#`` starts a comment. Raw Haggle downloads convert with e.g.::

    awk '{print $1, $2, $3, $4}' contacts.Exp6.dat > trace.txt
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Instance, Task, Worker

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticConfig:
    m: int = 10
    ratio_nm: int = 5
    lambda_range: tuple[float, float] = (1.0, 30.0)
    rst_mean: float = 30.0
    rst_std: float = 30.0 ** 0.5  # variance 30
    p: float = 1.0  # probability that w_i = tau_i
    weight_range: tuple[float, float] = (1.0, 10.0)
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.ratio_nm < 0:
            raise ValueError("need m >= 1 and ratio_nm >= 0")
        lo, hi = self.lambda_range
        if not 0 < lo <= hi:
            raise ValueError(f"bad lambda range {self.lambda_range}")
        if not self.rst_mean > 0 or self.rst_std < 0:
            raise ValueError("rst_mean must be positive and rst_std nonnegative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0 < self.weight_range[0] <= self.weight_range[1]:
            raise ValueError(f"bad weight range {self.weight_range}")

    @property
    def n(self) -> int:
        return self.m * self.ratio_nm


def positive_normal(rng: np.random.Generator, mean: float, std: float, size: int) -> np.ndarray:
    """Normal draws, redrawing any that are not strictly positive."""
    out = rng.normal(mean, std, size)
    bad = out <= 0
    while bad.any():
        out[bad] = rng.normal(mean, std, int(bad.sum()))
        bad = out <= 0
    return out


def gen_synthetic(cfg: SyntheticConfig) -> Instance:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    rst = positive_normal(rng, cfg.rst_mean, cfg.rst_std, n)
    keep = rng.random(n) < cfg.p
    other = rng.uniform(*cfg.weight_range, n)
    weight = np.where(keep, rst, other)
    rates = rng.uniform(*cfg.lambda_range, cfg.m)
    return Instance.from_arrays(rst, weight, rates)


@dataclass(frozen=True)
class Contact:
    a: str
    b: str
    start: float
    end: float


@dataclass
class ContactLog:
    records: list[Contact]
    start: float | None = None  # defaults to the earliest contact start
    end: float | None = None
    errors: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.records:
            if self.start is None:
                self.start = min(r.start for r in self.records)
            if self.end is None:
                self.end = max(r.end for r in self.records)

    def devices(self) -> set[str]:
        return {r.a for r in self.records} | {r.b for r in self.records}

    def write(self, path) -> None:
        lines = [f"# start {self.start!r} end {self.end!r}"]
        lines += [f"{r.a} {r.b} {r.start!r} {r.end!r}" for r in self.records]
        Path(path).write_text("\n".join(lines) + "\n")


class TraceFormatError(ValueError):
    pass


def parse_trace(path, *, strict: bool = False) -> ContactLog:
    """Load a 4-column contact trace.

    Malformed lines are collected in ``ContactLog.errors``; with ``strict``
    any malformed line raises ``TraceFormatError``. A ``# start S end E``
    header (as written by ``ContactLog.write``) sets the trace window.
    """
    records, errors = [], []
    start = end = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 4 and parts[0] == "start" and parts[2] == "end":
                try:
                    start, end = float(parts[1]), float(parts[3])
                except ValueError:
                    errors.append(f"line {lineno}: bad header {raw!r}")
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            errors.append(f"line {lineno}: expected 4 fields, got {len(parts)}")
            continue
        try:
            t0, t1 = float(parts[2]), float(parts[3])
        except ValueError:
            errors.append(f"line {lineno}: non-numeric time in {raw!r}")
            continue
        if not (np.isfinite(t0) and np.isfinite(t1)) or t0 < 0 or t1 < 0:
            errors.append(f"line {lineno}: times must be finite and nonnegative")
            continue
        if t1 < t0:
            errors.append(f"line {lineno}: end {t1} before start {t0}")
            continue
        records.append(Contact(parts[0], parts[1], t0, t1))
    if strict and errors:
        raise TraceFormatError(f"{len(errors)} malformed line(s); first: {errors[0]}")
    for e in errors:
        log.warning("%s: %s", path, e)
    return ContactLog(records, start, end, errors)


@dataclass(frozen=True)
class RateEstimate:
    peer: str
    contacts: int
    rate: float


def estimate_rates(log_: ContactLog, requester: str, *,
                   from_trace_start: bool = True) -> list[RateEstimate]:
    """Contacts divided by summed gaps between consecutive contact starts.

    With ``from_trace_start`` the first gap runs from the trace start, so
    l contacts give l gaps; otherwise the first contact is the reference
    and only l-1 gaps (and l-1 contacts) are counted. Peers with zero total
    gap are dropped with a warning. Sorted by rate, highest first.
    """
    if requester not in log_.devices():
        raise ValueError(f"requester {requester!r} does not appear in the trace")
    starts: dict[str, list[float]] = {}
    for r in log_.records:
        if r.a == requester and r.b != requester:
            starts.setdefault(r.b, []).append(r.start)
        elif r.b == requester and r.a != requester:
            starts.setdefault(r.a, []).append(r.start)
    out = []
    for peer, times in starts.items():
        times = sorted(times)
        if from_trace_start:
            count, span = len(times), times[-1] - log_.start
        else:
            count, span = len(times) - 1, times[-1] - times[0]
        if count <= 0 or span <= 0:
            log.warning("peer %s: no positive inter-contact time, excluded", peer)
            continue
        out.append(RateEstimate(peer, count, count / span))
    out.sort(key=lambda e: (-e.rate, e.peer))
    return out


def estimate_lambdas(log_: ContactLog, requester: str, top_k: int = 128, **kwargs) -> list[Worker]:
    """Workers for the ``top_k`` peers with the highest estimated rate."""
    best = estimate_rates(log_, requester, **kwargs)[:top_k]
    return [Worker.from_rate(j, e.rate) for j, e in enumerate(best)]


def poisson_contacts(rate: float, count: int, seed=None, *, peer: str = "1",
                     requester: str = "0", duration: float = 0.0) -> ContactLog:
    """Synthetic contact stream with exponential gaps, starting at time 0."""
    rng = np.random.default_rng(seed)
    starts = np.cumsum(rng.exponential(1.0 / rate, count))
    recs = [Contact(requester, peer, float(t), float(t) + duration) for t in starts]
    return ContactLog(recs, start=0.0, end=float(starts[-1]) + duration)


def instance_for_workers(workers: Sequence[Worker], rst: Sequence[float],
                         weight: Sequence[float]) -> Instance:
    tasks = [Task(i, float(r), float(w)) for i, (r, w) in enumerate(zip(rst, weight, strict=True))]
    return Instance(tuple(tasks), tuple(workers))
