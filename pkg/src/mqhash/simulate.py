"""Monte Carlo simulation of single-photon hash verification.

Each qudit of the received hash is projected onto the measurement basis built
from the reference value ``x2``; a shot is accepted only if every qudit
registers a coincidence in channel 0.

Detector model, per pair-emission attempt (first order, independent events):

* idler herald: true click with probability ``eta_idler * (1 - dead_idler)``
  or an accidental dark click with probability ``dark_rate_idler * window``;
* signal: true click in the channel drawn from the outcome distribution with
  probability ``eta_signal * (1 - dead_signal)``, plus an accidental dark
  click in a uniformly random channel with probability
  ``dark_rate_signal * window``;
* dead fractions are ``(pair_rate * eta + dark_rate) * dead_time``, capped at 1.

A coincidence needs a herald and a signal click.  Clicks in two different
channels are ambiguous and never count as a match.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .hashcore import HashParams, hash_fidelity, qudit_hash_state, worst_case_collision
from .measure import orthogonal_basis, outcome_probabilities
from .optimize import SearchConfig, optimize_params

LOSS_POLICIES = ("resend", "count_as_error", "discard")
LOST = -1
AMBIGUOUS = -2
BLOCK = 1 << 16


@dataclass(frozen=True)
class DetectorModel:
    eta_signal: float = 0.45
    eta_idler: float = 0.10
    dark_rate_signal: float = 2e3
    dark_rate_idler: float = 15e3
    coincidence_window: float = 1e-9
    pair_rate: float = 1e5
    dead_time_signal: float = 150e-9
    dead_time_idler: float = 16e-6
    loss_policy: str = "resend"
    max_resends: int = 100

    def __post_init__(self):
        for name in ("eta_signal", "eta_idler"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("dark_rate_signal", "dark_rate_idler", "pair_rate",
                     "dead_time_signal", "dead_time_idler"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.coincidence_window <= 0:
            raise ValueError("coincidence_window must be > 0")
        if self.loss_policy not in LOSS_POLICIES:
            raise ValueError(f"loss_policy must be one of {LOSS_POLICIES}")
        if self.max_resends < 0:
            raise ValueError("max_resends must be >= 0")

    @classmethod
    def ideal(cls, **overrides) -> "DetectorModel":
        base = dict(eta_signal=1.0, eta_idler=1.0, dark_rate_signal=0.0, dark_rate_idler=0.0,
                    dead_time_signal=0.0, dead_time_idler=0.0)
        base.update(overrides)
        return cls(**base)

    @property
    def dead_fraction_signal(self) -> float:
        rate = self.pair_rate * self.eta_signal + self.dark_rate_signal
        return min(1.0, rate * self.dead_time_signal)

    @property
    def dead_fraction_idler(self) -> float:
        rate = self.pair_rate * self.eta_idler + self.dark_rate_idler
        return min(1.0, rate * self.dead_time_idler)

    @property
    def signal_click(self) -> float:
        return self.eta_signal * (1.0 - self.dead_fraction_signal)

    @property
    def idler_click(self) -> float:
        return self.eta_idler * (1.0 - self.dead_fraction_idler)

    @property
    def signal_dark(self) -> float:
        return min(1.0, self.dark_rate_signal * self.coincidence_window)

    @property
    def idler_dark(self) -> float:
        return min(1.0, self.dark_rate_idler * self.coincidence_window)

    def to_dict(self) -> dict:
        return asdict(self)


def detect(rng: np.random.Generator, probs: np.ndarray, n: int, model: DetectorModel) -> np.ndarray:
    """Outcome of ``n`` attempts: a channel index, LOST, or AMBIGUOUS."""
    d = probs.size
    cdf = np.cumsum(probs)
    herald = (rng.random(n) < model.idler_click) | (rng.random(n) < model.idler_dark)
    true_click = rng.random(n) < model.signal_click
    channel = np.minimum(np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right"), d - 1)
    dark = rng.random(n) < model.signal_dark
    dark_channel = rng.integers(d, size=n)
    out = np.where(true_click, channel, np.where(dark, dark_channel, LOST))
    out[true_click & dark & (dark_channel != channel)] = AMBIGUOUS
    out[~herald] = LOST
    return out


@dataclass
class VerificationReport:
    x1: int
    x2: int
    requested: int
    shots: int
    accepts: int
    accept_rate: float
    per_qudit_match_rates: list[float]
    losses: int
    discarded: int
    attempts: int
    theoretical_fidelity: float
    seed: int

    @property
    def stderr(self) -> float:
        """Binomial standard error of accept_rate under the theoretical fidelity."""
        p = self.theoretical_fidelity
        return math.sqrt(max(p * (1 - p), 0.0) / self.shots) if self.shots else float("nan")

    def verdict(self) -> bool:
        """Majority-of-shots rule: True means "x1 = x2"."""
        return self.accept_rate > 0.5

    def to_dict(self) -> dict:
        out = asdict(self)
        out["stderr"] = self.stderr
        out["verdict"] = "equal" if self.verdict() else "different"
        return out


def _basis_probabilities(params: HashParams, x1: int, x2: int) -> list[np.ndarray]:
    out = []
    for j in range(1, params.m + 1):
        basis = orthogonal_basis(params, j, x2)
        out.append(outcome_probabilities(qudit_hash_state(params, j, x1), basis))
    return out


def _run_block(probs: list[np.ndarray], model: DetectorModel, n: int, seed: int, block: int):
    rng = np.random.default_rng([seed, block])
    m = len(probs)
    discarded = np.zeros(n, dtype=bool)
    accepted = np.ones(n, dtype=bool)
    matches = np.zeros(m, dtype=np.int64)
    losses = attempts = 0
    match_masks = []
    for p in probs:
        out = detect(rng, p, n, model)
        attempts += n
        lost = out == LOST
        losses += int(lost.sum())
        if model.loss_policy == "resend":
            for _ in range(model.max_resends):
                idx = np.flatnonzero(lost)
                if idx.size == 0:
                    break
                retry = detect(rng, p, idx.size, model)
                attempts += idx.size
                out[idx] = retry
                lost = out == LOST
                losses += int(lost.sum())
            discarded |= lost
        elif model.loss_policy == "discard":
            discarded |= lost
        match = out == 0
        match_masks.append(match)
        accepted &= match
    kept = ~discarded
    for j, match in enumerate(match_masks):
        matches[j] = int((match & kept).sum())
    return dict(shots=int(kept.sum()), accepts=int((accepted & kept).sum()), matches=matches,
                losses=losses, discarded=int(discarded.sum()), attempts=attempts)


def simulate_verification(params: HashParams, x1: int, x2: int, model: DetectorModel,
                          shots: int, seed: int = 0, workers: int = 1) -> VerificationReport:
    """Run ``shots`` independent verifications of hash(x1) against x2.

    Shots are split into fixed blocks, each with its own stream derived from
    (seed, block index), so results do not depend on ``workers``.
    """
    if int(shots) != shots or shots < 1:
        raise ValueError("shots must be a positive integer")
    probs = _basis_probabilities(params, x1, x2)
    sizes = [min(BLOCK, shots - lo) for lo in range(0, shots, BLOCK)]
    jobs = [(probs, model, n, seed, b) for b, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _run_block(*a), jobs))
    else:
        parts = [_run_block(*a) for a in jobs]
    kept = sum(p["shots"] for p in parts)
    accepts = sum(p["accepts"] for p in parts)
    matches = sum(p["matches"] for p in parts)
    return VerificationReport(
        x1=x1, x2=x2, requested=int(shots), shots=kept, accepts=accepts,
        accept_rate=accepts / kept if kept else 0.0,
        per_qudit_match_rates=[float(v) / kept if kept else 0.0 for v in matches],
        losses=sum(p["losses"] for p in parts),
        discarded=sum(p["discarded"] for p in parts),
        attempts=sum(p["attempts"] for p in parts),
        theoretical_fidelity=hash_fidelity(params, x1, x2),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Rate-threshold mode


@dataclass
class CalibrationResult:
    trials: int
    mean_coincidence_rate: float
    threshold: float
    threshold_fraction: float
    rates: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return asdict(self)


def _channel0_rate(rng, probs, model, integration_time) -> float:
    n = int(round(model.pair_rate * integration_time))
    if n == 0:
        return 0.0
    out = detect(rng, probs, n, model)
    return float((out == 0).sum()) / integration_time


def calibrate(params: HashParams, x: int, model: DetectorModel, trials: int = 200,
              integration_time: float = 1e-2, threshold_fraction: float = 1.0,
              seed: int = 0) -> CalibrationResult:
    """Average channel-0 coincidence rate over projections of equal states.

    Trial t measures qudit (t mod m) of hash(x) against x for
    ``integration_time`` seconds at the model's pair rate.
    """
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be a positive integer")
    if integration_time <= 0:
        raise ValueError("integration_time must be > 0")
    probs = _basis_probabilities(params, x, x)
    rng = np.random.default_rng([seed, 0xCA1])
    rates = [_channel0_rate(rng, probs[t % params.m], model, integration_time)
             for t in range(trials)]
    mean = float(np.mean(rates))
    return CalibrationResult(trials=int(trials), mean_coincidence_rate=mean,
                             threshold=threshold_fraction * mean,
                             threshold_fraction=threshold_fraction, rates=rates)


def threshold_verify(params: HashParams, x1: int, x2: int, model: DetectorModel,
                     calibration: CalibrationResult, integration_time: float = 1e-2,
                     seed: int = 0) -> tuple[bool, list[float]]:
    """Ensemble verdict: every qudit's channel-0 rate must reach the threshold."""
    probs = _basis_probabilities(params, x1, x2)
    rng = np.random.default_rng([seed, 0x7E5])
    rates = [_channel0_rate(rng, p, model, integration_time) for p in probs]
    return all(r >= calibration.threshold for r in rates), rates


# ---------------------------------------------------------------------------
# Collision curves


@dataclass
class CurveRow:
    d: int
    m: int
    x1: int
    x2: int
    shots: int
    accepts: int
    losses: int
    accept_rate: float
    theoretical: float
    stderr: float
    seed: int
    params: HashParams | None = None

    @property
    def empirical(self) -> float:
        return self.accept_rate


def estimate_collision_curve(q: int, d: int, m_range: Sequence[int], model: DetectorModel,
                             shots: int, config: SearchConfig | None = None, seed: int = 0,
                             params: dict[int, HashParams] | None = None) -> list[CurveRow]:
    """Theoretical vs simulated worst-case collision rate for each m.

    Parameters come from ``params[m]`` when given, otherwise from
    :func:`optimize_params`.  The simulated pair is (x_star, 0).
    """
    if int(shots) != shots or shots < 1:
        raise ValueError("shots must be a positive integer")
    rows = []
    for m in m_range:
        p = params[m] if params and m in params else optimize_params(q, d, m, config).params
        x_star, theory = worst_case_collision(p)
        rep = simulate_verification(p, x_star, 0, model, shots, seed=seed)
        rows.append(CurveRow(d=d, m=m, x1=x_star, x2=0, shots=rep.shots, accepts=rep.accepts,
                             losses=rep.losses, accept_rate=rep.accept_rate,
                             theoretical=theory, stderr=rep.stderr, seed=seed, params=p))
    return rows
