"""Event-level Monte Carlo of the coincidence experiment.

Each pair falls into one of three arrival-time-difference classes
(idler minus signal): 0 for same-arm pairs (LL or SS), -tau when the
signal takes the long arm alone and +tau when the idler does. The class
weights at interferometer phase ``phi`` are
``{(1 + mu cos phi)/2, 1/4, 1/4} / (1 + (mu/2) cos phi)``, and the pair
emission rate is modulated by ``1 + (mu/2) cos phi``. Counting every class
then gives ``1 + (mu/2) cos phi`` and counting only the central class gives
``(1 + mu cos phi)/2``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .dispersion import C_LIGHT

SIGNAL, IDLER = 0, 1

EXPERIMENT_ETA_S = 0.32
EXPERIMENT_ETA_I = 0.33
EXPERIMENT_PAIR_RATE = 2000.0  # pairs/s reaching the detectors at 4 mW
EXPERIMENT_TAU = 0.6 / C_LIGHT
DEFAULT_JITTER = 150e-12


@dataclass(frozen=True)
class SourceParams:
    """Rates in 1/s, times in s. ``pair_rate`` is the fringe-averaged rate at the detectors."""

    pair_rate: float
    eta_s: float = 1.0
    eta_i: float = 1.0
    dark_s: float = 0.0
    dark_i: float = 0.0
    background_s: float = 0.0
    background_i: float = 0.0
    mu: float = 1.0
    tau: float = EXPERIMENT_TAU
    jitter_sigma: float = DEFAULT_JITTER

    def __post_init__(self):
        for name in ("pair_rate", "dark_s", "dark_i", "background_s", "background_i",
                     "jitter_sigma"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("eta_s", "eta_i", "mu"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @classmethod
    def experiment(cls, mu=0.83, **kw):
        kw.setdefault("pair_rate", EXPERIMENT_PAIR_RATE)
        return cls(eta_s=EXPERIMENT_ETA_S, eta_i=EXPERIMENT_ETA_I, mu=mu, **kw)

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return SourceParams(**d)


@dataclass(frozen=True)
class GateConfig:
    """Coincidence window ``T`` and TAC histogram binning [s].

    ``tac_range`` is the full span of the start-stop matching; pairs are matched
    inside it and the counter then keeps those with ``|dt| <= T/2``.
    """

    T: float
    tac_bin: float = 50e-12
    tac_range: float = 20e-9

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("gate time must be positive")
        if not 0 < self.tac_bin <= self.T / 4:
            raise ValueError("tac_bin must be positive and at most T/4")
        if not self.tac_range >= self.T:
            raise ValueError("tac_range must cover the gate")

    @property
    def n_bins(self):
        return int(round(self.tac_range / self.tac_bin))

    @property
    def edges(self):
        half = self.n_bins * self.tac_bin / 2
        return np.linspace(-half, half, self.n_bins + 1)


@dataclass
class Events:
    """Time-sorted detector clicks."""

    times: np.ndarray
    detector: np.ndarray
    duration: float
    n_pairs: int = 0

    def channel(self, det):
        return self.times[self.detector == det]


@dataclass
class CoincidenceResult:
    count: int
    histogram: np.ndarray
    edges: np.ndarray
    dt: np.ndarray  # idler minus signal for every TAC-matched pair


@dataclass
class CoincidenceScan:
    delta_x_list: np.ndarray  # nm
    counts: np.ndarray
    duration_per_point: float
    tac_histograms: np.ndarray  # (points, bins)
    tac_edges: np.ndarray  # s
    seed: int
    gate: GateConfig
    params: SourceParams
    pump_nm: float
    singles: np.ndarray = field(default=None)  # (points, 2)
    n_pairs: np.ndarray = field(default=None)

    def rates(self):
        return self.counts / self.duration_per_point

    def summed_histogram(self):
        return self.tac_histograms.sum(axis=0)

    def to_csv(self, path):
        with Path(path).open("w") as fh:
            fh.write("delta_x_nm,coincidences,duration_s\n")
            for dx, c in zip(self.delta_x_list, self.counts):
                fh.write(f"{float(dx)!r},{int(c)},{self.duration_per_point!r}\n")

    def tac_to_csv(self, path):
        centers = 0.5 * (self.tac_edges[1:] + self.tac_edges[:-1]) * 1e9
        with Path(path).open("w") as fh:
            fh.write("dt_ns,counts\n")
            for t, c in zip(centers, self.summed_histogram()):
                fh.write(f"{float(t):.6f},{int(c)}\n")

    def provenance(self):
        return {
            "seed": self.seed,
            "pump_nm": self.pump_nm,
            "duration_per_point_s": self.duration_per_point,
            "delta_x_nm": [float(x) for x in self.delta_x_list],
            "gate": asdict(self.gate),
            "source": asdict(self.params),
        }


def _class_probabilities(mu, phi):
    c = math.cos(phi)
    total = 1.0 + 0.5 * mu * c
    central = 0.5 * (1.0 + mu * c) / total
    side = 0.25 / total
    return central, side, total


def emit_events(params, phi, duration, seed=None, rng=None):
    """Simulate detector clicks for ``duration`` seconds at interferometer phase ``phi``."""
    if rng is None:
        rng = np.random.default_rng(seed)
    if not duration > 0:
        raise ValueError("duration must be positive")
    central, side, total = _class_probabilities(params.mu, phi)
    n = int(rng.poisson(params.pair_rate * total * duration))
    birth = rng.uniform(0.0, duration, n)
    # 0: same arm, 1: signal long / idler short, 2: idler long / signal short
    cls = rng.choice(3, size=n, p=[central, side, 1.0 - central - side])
    both_long = rng.random(n) < 0.5
    tau = params.tau
    t_s = birth + np.where((cls == 1) | ((cls == 0) & both_long), tau, 0.0)
    t_i = birth + np.where((cls == 2) | ((cls == 0) & both_long), tau, 0.0)
    keep_s = rng.random(n) < params.eta_s
    keep_i = rng.random(n) < params.eta_i
    t_s = t_s[keep_s] + rng.normal(0.0, params.jitter_sigma, int(keep_s.sum()))
    t_i = t_i[keep_i] + rng.normal(0.0, params.jitter_sigma, int(keep_i.sum()))
    noise_s = rng.uniform(0.0, duration, int(rng.poisson((params.dark_s + params.background_s) * duration)))
    noise_i = rng.uniform(0.0, duration, int(rng.poisson((params.dark_i + params.background_i) * duration)))
    times = np.concatenate([t_s, noise_s, t_i, noise_i])
    det = np.concatenate([np.full(len(t_s) + len(noise_s), SIGNAL, dtype=np.int8),
                          np.full(len(t_i) + len(noise_i), IDLER, dtype=np.int8)])
    order = np.argsort(times, kind="stable")
    return Events(times[order], det[order], duration, n)


def count_coincidences(events, gate, backend=None):
    """Start-stop matching of signal to idler clicks, then the gate ``|dt| <= T/2``.

    Every signal click, in time order, takes the nearest unused idler click
    inside the TAC range. The histogram covers all matched pairs; the count
    only those inside the gate.
    """
    times = np.asarray(events.times)
    if len(times) > 1 and np.any(np.diff(times) < 0):
        raise ValueError("events must be sorted by time")
    ts = times[events.detector == SIGNAL]
    ti = times[events.detector == IDLER]
    si, ii = kernels.nearest_pairs(ts, ti, gate.tac_range / 2, backend=backend)
    dt = ti[ii] - ts[si]
    edges = gate.edges
    hist = kernels.histogram_fixed(dt, edges[0], edges[-1], len(edges) - 1, backend=backend)
    count = int(np.count_nonzero(np.abs(dt) <= gate.T / 2))
    return CoincidenceResult(count, hist, edges, dt)


def fringe_phase(pump_nm, delta_L, delta_x_nm):
    """2 kp (dL + dx), reduced modulo 2 pi."""
    # split the product so the large path difference does not swamp the small scan step
    kp2 = 4.0 * math.pi / (pump_nm * 1e-9)
    base = math.fmod(kp2 * delta_L, 2 * math.pi)
    return np.mod(base + kp2 * np.asarray(delta_x_nm, dtype=float) * 1e-9, 2 * math.pi)


def scan_fringe(params, gate, delta_x_list, duration_per_point, seed=0, pump_nm=760.4,
                workers=None, backend=None):
    """Coincidence counts along a piezo scan; point ``k`` uses a seed spawned from ``(seed, k)``."""
    dx = np.asarray(delta_x_list, dtype=float)
    delta_L = params.tau * C_LIGHT
    phases = fringe_phase(pump_nm, delta_L, dx)
    seqs = np.random.SeedSequence(seed).spawn(len(dx))

    def run(k):
        rng = np.random.default_rng(seqs[k])
        ev = emit_events(params, float(phases[k]), duration_per_point, rng=rng)
        res = count_coincidences(ev, gate, backend=backend)
        singles = (int(np.count_nonzero(ev.detector == SIGNAL)),
                   int(np.count_nonzero(ev.detector == IDLER)))
        return res.count, res.histogram, singles, ev.n_pairs

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(dx))))
    else:
        results = [run(k) for k in range(len(dx))]
    counts = np.array([r[0] for r in results], dtype=np.int64)
    hists = np.vstack([r[1] for r in results]) if results else np.zeros((0, gate.n_bins), np.int64)
    singles = np.array([r[2] for r in results], dtype=np.int64).reshape(-1, 2)
    n_pairs = np.array([r[3] for r in results], dtype=np.int64)
    return CoincidenceScan(dx, counts, duration_per_point, hists, gate.edges, seed, gate, params,
                           pump_nm, singles, n_pairs)


def accidental_rate(rate_s, rate_i, T):
    """Expected accidental coincidences per second for uncorrelated singles."""
    return rate_s * rate_i * T


def detected_rate_estimate(source_rate, throughput=1.0, eta_s=1.0, eta_i=1.0):
    """Detected coincidence rate [1/s] from the generated pair rate and a loss chain."""
    for v in (throughput, eta_s, eta_i):
        if not 0.0 <= v <= 1.0:
            raise ValueError("throughput and efficiencies must lie in [0, 1]")
    if not source_rate >= 0:
        raise ValueError("source rate must be non-negative")
    return source_rate * throughput * eta_s * eta_i


def rate_provenance(source_rate, throughput, eta_s, eta_i):
    estimate = detected_rate_estimate(source_rate, throughput, eta_s, eta_i)
    return {
        "source_rate_per_s": source_rate,
        "optics_throughput": throughput,
        "eta_s": eta_s,
        "eta_i": eta_i,
        "detected_rate_per_s": estimate,
    }


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")
