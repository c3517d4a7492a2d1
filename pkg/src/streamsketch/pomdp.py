"""Two-state feedback simulator.

A hidden process alternates between a normal state N and an anomalous state
A with switch probabilities p (N to A) and q (A to N); long-run it spends
p/(p+q) of its time in A. A predictor guesses the state every step and
occasionally receives the true state as feedback: two-sided feedback can
arrive at any step, one-sided feedback only while the process is actually
anomalous.

Two predictors are provided. ``imitate`` runs its own chain with estimated
switch rates and resets it to whatever feedback reveals. ``opt`` predicts N
until feedback arrives, and after an anomalous label predicts A for a fixed
number of wait steps before returning to N.

Feedback timing: a label for step t reveals the state at step t only after
the prediction for step t is recorded, so it influences predictions from
step t+1 on.

Runs are vectorised: a two-state chain is reconstructed in closed form from
its per-step uniform draws, so million-step accuracy estimates cost a few
array passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hashing import DEFAULT_SEED


@dataclass(frozen=True)
class TwoStateProcess:
    """Hidden Markov process over {normal, anomalous}.

    ``p`` is the probability of switching N to A, ``q`` of switching A to N.
    In the anomaly-detection regime both are small, p < q, and p + q < 1, so
    states are sticky and anomalies arrive in bursts.
    """

    p: float
    q: float
    start_anomalous: bool = False
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {self.p}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {self.q}")

    @property
    def stationary_anomalous(self) -> float:
        return self.p / (self.p + self.q)


@dataclass(frozen=True)
class PredictorConfig:
    """What the predictor is and how feedback reaches it.

    ``wait_steps`` applies to the ``opt`` kind and defaults to
    ceil(1 / q_hat), the optimal wait given the estimated switch rate.
    """

    kind: str = "imitate"
    p_hat: float | None = None
    q_hat: float | None = None
    wait_steps: int | None = None
    phi: float = 0.0
    one_sided: bool = False

    def __post_init__(self):
        if self.kind not in ("imitate", "opt"):
            raise ValueError(f"kind must be 'imitate' or 'opt', got {self.kind!r}")
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError(f"phi must be in [0, 1], got {self.phi}")
        if self.kind == "imitate":
            for name, value in (("p_hat", self.p_hat), ("q_hat", self.q_hat)):
                if value is None or not 0.0 < value < 1.0:
                    raise ValueError(f"imitate needs {name} in (0, 1), got {value}")
        if self.kind == "opt" and self.wait_steps is not None and self.wait_steps < 1:
            raise ValueError(f"wait_steps must be >= 1, got {self.wait_steps}")

    def resolved_wait(self) -> int:
        if self.wait_steps is not None:
            return self.wait_steps
        if self.q_hat is None:
            raise ValueError("opt needs wait_steps or q_hat to derive it")
        return math.ceil(1.0 / self.q_hat)


def _evolve_chain(u: np.ndarray, p: float, q: float, start: int) -> np.ndarray:
    """State path of a two-state chain from its per-step uniform draws.

    Each draw applies one of three maps to the state: u < min(p, q) flips it,
    min <= u < max pins it (to N when p < q, to A otherwise), anything else
    keeps it. Pinned segments make the whole path computable by prefix sums:
    after the latest pin, the state is the pinned value xor the parity of
    flips since.
    """
    n = u.shape[0]
    states = np.empty(n + 1, dtype=np.int8)
    states[0] = start
    if n == 0:
        return states
    lo, hi = (p, q) if p <= q else (q, p)
    pinned_value = 0 if p <= q else 1
    flips = u < lo
    pins = (u >= lo) & (u < hi)

    cum_flips = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(flips, out=cum_flips[1:])
    pin_positions = np.where(pins, np.arange(n), -1)
    last_pin = np.maximum.accumulate(pin_positions)

    t = np.arange(1, n + 1)
    pin = last_pin[t - 1]
    has_pin = pin >= 0
    flips_since_pin = (cum_flips[t] - cum_flips[np.maximum(pin, 0) + 1]) & 1
    flips_from_start = cum_flips[t] & 1
    states[1:] = np.where(
        has_pin, pinned_value ^ flips_since_pin, start ^ flips_from_start
    )
    return states


def _opt_predictions(
    truth: np.ndarray, delivered: np.ndarray, wait_steps: int
) -> np.ndarray:
    steps = truth.shape[0]
    fb_pos = np.flatnonzero(delivered)
    pred = np.zeros(steps, dtype=np.int8)
    if fb_pos.size == 0:
        return pred
    t = np.arange(steps)
    k = np.searchsorted(fb_pos, t, side="left") - 1
    seen = k >= 0
    last_pos = fb_pos[np.maximum(k, 0)]
    last_label = truth[last_pos]
    inside_wait = (t - last_pos) <= wait_steps
    pred[seen & (last_label == 1) & inside_wait] = 1
    return pred


def _imitate_predictions(
    truth: np.ndarray,
    delivered: np.ndarray,
    u_pred: np.ndarray,
    p_hat: float,
    q_hat: float,
    start: int,
) -> np.ndarray:
    steps = truth.shape[0]
    pred = np.empty(steps, dtype=np.int8)
    pred[0] = start
    if steps == 1:
        return pred
    lo, hi = (p_hat, q_hat) if p_hat <= q_hat else (q_hat, p_hat)
    pinned_value = 0 if p_hat <= q_hat else 1
    flips = u_pred < lo
    pins = (u_pred >= lo) & (u_pred < hi)

    cum_flips = np.zeros(steps + 1, dtype=np.int64)
    np.cumsum(flips, out=cum_flips[1:])
    pin_positions = np.where(pins, np.arange(steps), -1)
    last_pin = np.maximum.accumulate(pin_positions)

    fb_pos = np.flatnonzero(delivered)
    t = np.arange(1, steps)
    if fb_pos.size == 0:
        reset_pos = np.zeros(steps - 1, dtype=np.int64)
        base = np.full(steps - 1, start, dtype=np.int8)
    else:
        k = np.searchsorted(fb_pos, t - 1, side="right") - 1
        has_reset = k >= 0
        reset_pos = np.where(has_reset, fb_pos[np.maximum(k, 0)], 0)
        base = np.where(has_reset, truth[fb_pos[np.maximum(k, 0)]], start)

    # The predictor chain at step t composes its own transition maps over
    # [reset, t) on top of the state revealed at the reset.
    pin = last_pin[t - 1]
    pin_applies = pin >= reset_pos
    flips_since_pin = (cum_flips[t] - cum_flips[np.maximum(pin, 0) + 1]) & 1
    flips_since_reset = (cum_flips[t] - cum_flips[reset_pos]) & 1
    pred[1:] = np.where(
        pin_applies, pinned_value ^ flips_since_pin, base ^ flips_since_reset
    )
    return pred


def run_predictor(
    process: TwoStateProcess,
    config: PredictorConfig,
    steps: int,
    seed: int | None = None,
) -> float:
    """Simulate ``steps`` predictions against the hidden process and return
    the fraction the predictor got right."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    rng = np.random.default_rng(process.seed if seed is None else seed)
    # Fixed draw order so runs are reproducible: chain, feedback, predictor.
    u_chain = rng.random(steps)
    u_feedback = rng.random(steps)
    u_pred = rng.random(steps) if config.kind == "imitate" else None

    start = 1 if process.start_anomalous else 0
    truth = _evolve_chain(u_chain[: steps - 1], process.p, process.q, start)

    candidates = u_feedback < config.phi
    if config.one_sided:
        delivered = candidates & (truth == 1)
    else:
        delivered = candidates

    if config.kind == "opt":
        pred = _opt_predictions(truth, delivered, config.resolved_wait())
    else:
        pred = _imitate_predictions(
            truth, delivered, u_pred, config.p_hat, config.q_hat, start
        )
    return float(np.mean(pred == truth))


def accuracy_sweep(
    process: TwoStateProcess,
    config: PredictorConfig,
    steps: int,
    seeds,
) -> tuple[float, float]:
    """Mean and standard deviation of run accuracy across seeds."""
    values = [run_predictor(process, config, steps, seed=s) for s in seeds]
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std())


def expected_accuracy_one_sided(p: float, q: float, wait_steps: int, phi: float) -> float:
    """Closed-form expected accuracy of the waiting predictor under
    one-sided feedback.

    Valid while the wait fits inside an average feedback gap
    (wait_steps < 1/phi) and below the normal sojourn scale
    (wait_steps < 1/p); outside those ranges the blockwise derivation
    breaks down and the arguments are rejected.
    """
    if not 0.0 < p < 1.0 or not 0.0 < q < 1.0:
        raise ValueError("p and q must be in (0, 1)")
    if wait_steps < 1:
        raise ValueError(f"wait_steps must be >= 1, got {wait_steps}")
    if not 0.0 <= phi < 1.0:
        raise ValueError(f"phi must be in [0, 1), got {phi}")
    if phi > 0.0 and wait_steps >= 1.0 / phi:
        raise ValueError(
            f"requires wait_steps < 1/phi: {wait_steps} >= {1.0 / phi:.6g}"
        )
    if wait_steps >= 1.0 / p:
        raise ValueError(f"requires wait_steps < 1/p: {wait_steps} >= {1.0 / p:.6g}")
    base = q / (p + q)
    if wait_steps <= 1.0 / q:
        return base + phi * wait_steps * p / (p + q)
    return base + phi * (1.0 / q - q * wait_steps / (p + q))
