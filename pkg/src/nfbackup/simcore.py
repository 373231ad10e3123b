"""Epoch-driven simulation of state-update delivery.

Every covered primary instance produces one update per epoch of length ``T``.
In ``bounded_waiting`` mode the instance predicts which piggybackable chains
will send a packet during the epoch and waits for the predicted chain with the
shortest piggyback segment. If that candidate does not show up (or nothing was
predicted) the update rides the first piggybackable packet of the next epoch,
and failing that it is sent stand-alone when the next epoch ends. In ``fcfs``
mode every update rides the first piggybackable packet of its own epoch, or
goes stand-alone at the end of it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence, TextIO

import numpy as np

from nfbackup.costmodel import CostParams
from nfbackup.netgraph import DistanceTable
from nfbackup.planner import UNCOVERED, DeploymentPlan
from nfbackup.workload import PrimaryInstance, ServiceChain

BOUNDED_WAITING = "bounded_waiting"
FCFS = "fcfs"
SELECTION_MODES = (BOUNDED_WAITING, FCFS)

MODE_CANDIDATE = "piggyback_candidate"
MODE_FCFS = "piggyback_fcfs"
MODE_STANDALONE = "standalone"
MODES = (MODE_CANDIDATE, MODE_FCFS, MODE_STANDALONE)


@dataclass(frozen=True)
class SimParams:
    epoch_length: float = 1.0
    num_epochs: int = 1000
    selection_mode: str = BOUNDED_WAITING
    cost: CostParams = CostParams()

    def __post_init__(self):
        if self.epoch_length <= 0:
            raise ValueError("epoch_length must be positive")
        if self.num_epochs < 1:
            raise ValueError("num_epochs must be >= 1")
        if self.selection_mode not in SELECTION_MODES:
            raise ValueError(f"selection_mode must be one of {SELECTION_MODES}")

    @property
    def horizon(self) -> float:
        # one spare epoch so deferred updates of the last epoch can resolve
        return (self.num_epochs + 1) * self.epoch_length


@dataclass(frozen=True, eq=False)
class ArrivalStream:
    horizon: float
    times: Mapping[int, np.ndarray]

    def __getitem__(self, chain_id: int) -> np.ndarray:
        return self.times[chain_id]


def generate_arrivals(
    chains: Sequence[ServiceChain], horizon: float, seed: int | np.random.Generator = 0
) -> ArrivalStream:
    """Poisson packet arrivals per chain on ``[0, horizon)``.

    Each chain draws from its own generator keyed on (seed, chain id), so a
    chain's stream does not depend on which other chains exist.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2**63))
    times = {}
    for c in chains:
        rng = np.random.default_rng([seed, c.id])
        mean_gap = 1.0 / c.rate
        expected = horizon * c.rate
        chunk = int(expected + 6 * np.sqrt(expected) + 16)
        t = np.cumsum(rng.exponential(mean_gap, size=chunk))
        while t[-1] < horizon:
            more = np.cumsum(rng.exponential(mean_gap, size=chunk)) + t[-1]
            t = np.concatenate([t, more])
        t = t[t < horizon]
        t.setflags(write=False)
        times[c.id] = t
    return ArrivalStream(horizon, times)


@dataclass(frozen=True)
class DeliveryRecord:
    instance: int
    epoch: int
    mode: str
    chain: int | None
    hops: int
    bytes: float
    wait: float


RECORD_FIELDS = ("instance", "epoch", "mode", "chain", "hops", "bytes", "wait")


@dataclass(eq=False)
class SimReport:
    """Columnar delivery records plus prediction bookkeeping."""

    epoch_length: float
    num_epochs: int
    selection_mode: str
    instance: np.ndarray
    epoch: np.ndarray
    mode: np.ndarray  # index into MODES
    chain: np.ndarray  # -1 for stand-alone
    hops: np.ndarray
    bytes: np.ndarray
    wait: np.ndarray
    candidate_epochs: int = 0
    candidate_hits: int = 0
    skipped: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.instance.size)

    def records(self) -> Iterator[DeliveryRecord]:
        for i in range(len(self)):
            ch = int(self.chain[i])
            yield DeliveryRecord(
                int(self.instance[i]),
                int(self.epoch[i]),
                MODES[self.mode[i]],
                None if ch < 0 else ch,
                int(self.hops[i]),
                float(self.bytes[i]),
                float(self.wait[i]),
            )

    def mode_counts(self) -> dict[str, int]:
        counts = np.bincount(self.mode, minlength=len(MODES))
        return {m: int(c) for m, c in zip(MODES, counts)}

    @property
    def success_probability(self) -> float:
        """Share of epochs with a predicted candidate in which that candidate arrived."""
        return self.candidate_hits / self.candidate_epochs if self.candidate_epochs else float("nan")

    @property
    def total_hops(self) -> int:
        return int(self.hops.sum())

    @property
    def mean_hops(self) -> float:
        return float(self.hops.mean()) if len(self) else float("nan")

    @property
    def mean_piggyback_hops(self) -> float:
        pg = self.mode != MODES.index(MODE_STANDALONE)
        return float(self.hops[pg].mean()) if pg.any() else float("nan")

    @property
    def mean_wait(self) -> float:
        return float(self.wait.mean()) if len(self) else float("nan")

    @property
    def byte_hops(self) -> float:
        return float((self.bytes * self.hops).sum())

    def summary(self) -> dict:
        return {
            "selection_mode": self.selection_mode,
            "epoch_length": self.epoch_length,
            "num_epochs": self.num_epochs,
            "records": len(self),
            "mode_counts": self.mode_counts(),
            "total_hops": self.total_hops,
            "mean_hops": self.mean_hops,
            "mean_piggyback_hops": self.mean_piggyback_hops,
            "mean_wait": self.mean_wait,
            "byte_hops": self.byte_hops,
            "candidate_epochs": self.candidate_epochs,
            "candidate_hits": self.candidate_hits,
            "success_probability": self.success_probability,
            "skipped_instances": list(self.skipped),
        }

    def to_dict(self) -> dict:
        d = self.summary()
        d["records"] = [r.__dict__ for r in self.records()]
        return d

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in self.records():
            w.writerow(
                [r.instance, r.epoch, r.mode, "" if r.chain is None else r.chain,
                 r.hops, r.bytes, repr(r.wait)]
            )

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def predict_candidates(
    piggybackable: Sequence[tuple[ServiceChain, int]],
    epoch_start: float,
    epoch_length: float,
    last_arrival: Mapping[int, float],
) -> tuple[list[int], int | None]:
    """Chains expected to send a packet in ``[t, t+T)`` and the chosen candidate.

    ``piggybackable`` pairs each usable chain with its segment length to the
    backup. A chain is expected when its previous packet plus one mean gap
    falls before the epoch ends (overdue chains included). The candidate is
    the expected chain with the shortest segment, lowest id on ties.
    """
    end = epoch_start + epoch_length
    predicted = [
        (seg, c.id) for c, seg in piggybackable
        if last_arrival.get(c.id, -1.0 / c.rate) + 1.0 / c.rate < end
    ]
    if not predicted:
        return [], None
    return sorted(cid for _, cid in predicted), min(predicted)[1]


class _ChainEpochs:
    """Per-chain first arrival in each epoch and last arrival before it."""

    def __init__(self, chains, arrivals, T, n_epochs):
        starts = np.arange(n_epochs + 1) * T
        self.first = {}
        self.last_before = {}
        for c in chains:
            t = arrivals[c.id]
            idx = np.searchsorted(t, starts[:-1], side="left")
            padded = np.append(t, np.inf)
            first = padded[idx]
            first[first >= starts[1:]] = np.inf
            self.first[c.id] = first
            prev = np.where(idx > 0, padded[np.maximum(idx - 1, 0)], -1.0 / c.rate)
            self.last_before[c.id] = prev


def run_simulation(
    plan: DeploymentPlan,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    arrivals: ArrivalStream,
    distances: DistanceTable,
    params: SimParams = SimParams(),
) -> SimReport:
    T = params.epoch_length
    E = params.num_epochs
    bounded = params.selection_mode == BOUNDED_WAITING
    ce = _ChainEpochs(chains, arrivals, T, E + 1)
    starts = np.arange(E + 1) * T
    pg_bytes, alone_bytes = params.cost.piggyback_bytes, params.cost.standalone_bytes
    cand_code, fcfs_code, alone_code = range(3)

    cols: dict[str, list[np.ndarray]] = {k: [] for k in RECORD_FIELDS}
    cand_epochs = cand_hits = 0
    skipped = []
    for n in sorted(instances):
        v = plan.assignment.get(n.id)
        if v is None:
            if plan.provenance.get(n.id) != UNCOVERED:
                raise ValueError(f"instance {n.id} has no backup server in the plan")
            skipped.append(n.id)
            continue
        key = (n.server, v)
        usable = sorted((c.segments[key], c.id, c) for c in chains if key in c.segments)
        lmin = int(distances.dist[n.server, v])

        mode = np.full(E, alone_code, dtype=np.int8)
        chain = np.full(E, -1, dtype=np.int64)
        hops = np.full(E, lmin, dtype=np.int64)
        nbytes = np.full(E, alone_bytes, dtype=float)
        wait = np.full(E, 2 * T if bounded else T, dtype=float)

        if usable:
            segs = np.array([s for s, _, _ in usable], dtype=np.int64)
            ids = np.array([cid for _, cid, _ in usable], dtype=np.int64)
            first = np.vstack([ce.first[cid] for cid in ids])  # (chains, E+1)
            # first piggybackable packet per epoch
            fc_row = np.argmin(first, axis=0)
            fc_time = first[fc_row, np.arange(E + 1)]

            if bounded:
                gaps = np.array([1.0 / c.rate for _, _, c in usable])[:, None]
                last = np.vstack([ce.last_before[cid][:E] for cid in ids])
                predicted = last + gaps < starts[1:][None, :]
                has_cand = predicted.any(axis=0)
                cand_row = np.argmax(predicted, axis=0)  # rows sorted by (segment, id)
                cand_time = first[cand_row, np.arange(E)]
                hit = has_cand & np.isfinite(cand_time)
                cand_epochs += int(has_cand.sum())
                cand_hits += int(hit.sum())

                mode[hit] = cand_code
                chain[hit] = ids[cand_row[hit]]
                hops[hit] = segs[cand_row[hit]]
                nbytes[hit] = pg_bytes
                wait[hit] = cand_time[hit] - starts[:E][hit]

                nxt_time = fc_time[1:]
                nxt_row = fc_row[1:]
                late = ~hit & np.isfinite(nxt_time)
                mode[late] = fcfs_code
                chain[late] = ids[nxt_row[late]]
                hops[late] = segs[nxt_row[late]]
                nbytes[late] = pg_bytes
                wait[late] = nxt_time[late] - starts[:E][late]
            else:
                t0 = fc_time[:E]
                ok = np.isfinite(t0)
                mode[ok] = fcfs_code
                chain[ok] = ids[fc_row[:E][ok]]
                hops[ok] = segs[fc_row[:E][ok]]
                nbytes[ok] = pg_bytes
                wait[ok] = t0[ok] - starts[:E][ok]

        cols["instance"].append(np.full(E, n.id, dtype=np.int64))
        cols["epoch"].append(np.arange(E, dtype=np.int64))
        cols["mode"].append(mode)
        cols["chain"].append(chain)
        cols["hops"].append(hops)
        cols["bytes"].append(nbytes)
        cols["wait"].append(wait)

    def cat(k, dtype):
        return np.concatenate(cols[k]) if cols[k] else np.zeros(0, dtype=dtype)

    return SimReport(
        epoch_length=T,
        num_epochs=E,
        selection_mode=params.selection_mode,
        instance=cat("instance", np.int64),
        epoch=cat("epoch", np.int64),
        mode=cat("mode", np.int8),
        chain=cat("chain", np.int64),
        hops=cat("hops", np.int64),
        bytes=cat("bytes", float),
        wait=cat("wait", float),
        candidate_epochs=cand_epochs,
        candidate_hits=cand_hits,
        skipped=skipped,
    )
