"""Greedy configuration search over columns and rows of the panel.

Two searches are implemented. The full-surface sweep walks every column
and then every row, keeping a flip only when it strictly improves the
received-power ratio between the intended receiver and the eavesdropper
(or, for the baselines, the single-user power). The partitioned sweep
splits the panel down the middle: the left columns and left half-rows
greedily raise the intended receiver's power while the right ones greedily
lower the eavesdropper's, with separate "last accepted" registers for the
two objectives. Both run a fixed number of passes by default; an optional
fixed-point mode repeats passes until none of the moves is accepted.

An exhaustive enumerator over all 2^M configurations is provided for
auditing the greedy results on small panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .ofdm import TxSignal
from .ris import ElementModel, RisArrayGeometry, RisConfig, flip_column, flip_half_row, flip_row

OBJECTIVES = ("ratio", "lu_power_max", "ed_power_min")

_DIRECTION = {"ratio": "max", "lu_power_max": "max", "ed_power_min": "min"}


@dataclass(frozen=True)
class MeasurementNoise:
    """Emulates noisy power captures during optimization.

    Each power estimate becomes the average of `averages` noisy readings
    with per-subcarrier complex Gaussian noise of variance `n0`.
    """

    n0: float
    averages: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n0 < 0:
            raise ValueError("noise power must be non-negative")
        if self.averages < 1:
            raise ValueError("need at least one reading per estimate")


@dataclass
class TraceStep:
    kind: str            # "column" | "row" | "half_row"
    index: int
    iteration: int
    objective: str       # "ratio" | "lu_power" | "ed_power"
    direction: str       # "max" | "min"
    objective_before: float
    objective_after: float
    accepted: bool
    half: str | None = None

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "index": self.index,
            "iteration": self.iteration,
            "objective": self.objective,
            "direction": self.direction,
            "objective_before": self.objective_before,
            "objective_after": self.objective_after,
            "accepted": self.accepted,
        }
        if self.half is not None:
            out["half"] = self.half
        return out


@dataclass
class OptimizerTrace:
    method: str
    objective_kind: str
    initial_config: RisConfig
    final_config: RisConfig
    final_objective: float
    steps: list = field(default_factory=list)

    def accepted_steps(self) -> list:
        return [s for s in self.steps if s.accepted]

    def replay_accepted(self) -> RisConfig:
        """Re-apply only the accepted flips to the initial configuration.

        The result must equal `final_config`; anything else means a
        rejected step leaked bits into the state.
        """
        cfg = self.initial_config.copy()
        for step in self.accepted_steps():
            if step.kind == "column":
                cfg = flip_column(cfg, step.index)
            elif step.kind == "row":
                cfg = flip_row(cfg, step.index)
            else:
                cfg = flip_half_row(cfg, step.index, step.half)
        return cfg

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "objective": self.objective_kind,
            "initial_config": self.initial_config.to_bitstring(),
            "final_config": self.final_config.to_bitstring(),
            "final_objective": self.final_objective,
            "steps": [s.to_dict() for s in self.steps],
        }


class PowerEvaluator:
    """Cached noiseless power evaluation for candidate configurations.

    Precomputes the per-element cascades h_m * g_m and the two per-bit
    reflection coefficients at every occupied subcarrier, so each candidate
    costs one masked matrix-vector product per receiver.
    """

    def __init__(
        self,
        channels: ChannelSet,
        element_model: ElementModel,
        tx: TxSignal,
        noise: MeasurementNoise | None = None,
    ):
        if tx.num_subcarriers != channels.num_subcarriers:
            raise ValueError("transmit signal and channel set disagree on subcarrier count")
        mask = tx.occupied_mask
        x = tx.amplitudes()[mask]
        self._x = x
        self._hd_lu = channels.h_d_lu[mask]
        self._hd_ed = channels.h_d_ed[mask]
        self._w_lu = (channels.h_ris_lu * channels.g_ris)[mask]
        self._w_ed = (channels.h_ris_ed * channels.g_ris)[mask]
        self._w_lu_sum = self._w_lu.sum(axis=1)
        self._w_ed_sum = self._w_ed.sum(axis=1)
        theta = element_model.phase_curves(channels.freqs[mask])
        self._phi = element_model.amplitude * np.exp(1j * theta)  # (K_occ, 2)
        self._noise = noise
        self._noise_rng = (
            np.random.default_rng(noise.seed) if noise is not None and noise.n0 > 0 else None
        )

    def _effective(self, w, w_sum, hd, bits):
        on = w @ bits.astype(float)
        off = w_sum - on
        return hd + self._phi[:, 0] * off + self._phi[:, 1] * on

    def _power(self, eff) -> float:
        signal = eff * self._x
        if self._noise_rng is None:
            return float((np.abs(signal) ** 2).sum())
        total = 0.0
        scale = math.sqrt(self._noise.n0 / 2.0)
        for _ in range(self._noise.averages):
            n = scale * (
                self._noise_rng.standard_normal(signal.size)
                + 1j * self._noise_rng.standard_normal(signal.size)
            )
            total += float((np.abs(signal + n) ** 2).sum())
        return total / self._noise.averages

    def lu_power(self, config: RisConfig) -> float:
        return self._power(self._effective(self._w_lu, self._w_lu_sum, self._hd_lu, config.bits))

    def ed_power(self, config: RisConfig) -> float:
        return self._power(self._effective(self._w_ed, self._w_ed_sum, self._hd_ed, config.bits))

    def ratio(self, config: RisConfig) -> float:
        p_ed = self.ed_power(config)
        p_lu = self.lu_power(config)
        if p_ed == 0:
            return math.inf if p_lu > 0 else math.nan
        return p_lu / p_ed

    def evaluate(self, objective: str, config: RisConfig) -> float:
        if objective == "ratio":
            return self.ratio(config)
        if objective == "lu_power_max":
            return self.lu_power(config)
        if objective == "ed_power_min":
            return self.ed_power(config)
        raise ValueError(f"unknown objective {objective!r}")


def _better(candidate: float, incumbent: float, direction: str) -> bool:
    # Ties are rejections: the sweeps only keep strict improvements.
    if direction == "max":
        return candidate > incumbent
    return candidate < incumbent


def _initial_config(geometry: RisArrayGeometry, init: RisConfig | None) -> RisConfig:
    if init is None:
        return RisConfig.zeros(geometry.n_v, geometry.n_h)
    if (init.n_v, init.n_h) != (geometry.n_v, geometry.n_h):
        raise ValueError("initial configuration does not match the panel geometry")
    return init.copy()


def uniform_config(n_v: int, n_h: int) -> RisConfig:
    """The all-zeros reference configuration."""
    return RisConfig.zeros(n_v, n_h)


def _full_surface_sweep(
    method: str,
    objective: str,
    evaluator: PowerEvaluator,
    geometry: RisArrayGeometry,
    init: RisConfig | None,
    iters: int,
    run_to_fixpoint: bool,
) -> OptimizerTrace:
    direction = _DIRECTION[objective]
    obj_name = {"ratio": "ratio", "lu_power_max": "lu_power", "ed_power_min": "ed_power"}[objective]
    cfg = _initial_config(geometry, init)
    initial = cfg.copy()
    best = evaluator.evaluate(objective, cfg)
    steps: list = []
    iteration = 0
    max_passes = 64 if run_to_fixpoint else iters
    while iteration < max_passes:
        iteration += 1
        accepted_in_pass = 0
        moves = [("column", c) for c in range(geometry.n_h)] + [
            ("row", r) for r in range(geometry.n_v)
        ]
        for kind, index in moves:
            candidate = flip_column(cfg, index) if kind == "column" else flip_row(cfg, index)
            value = evaluator.evaluate(objective, candidate)
            accepted = _better(value, best, direction)
            steps.append(
                TraceStep(
                    kind=kind,
                    index=index,
                    iteration=iteration,
                    objective=obj_name,
                    direction=direction,
                    objective_before=best,
                    objective_after=value,
                    accepted=accepted,
                )
            )
            if accepted:
                cfg = candidate
                best = value
                accepted_in_pass += 1
        if run_to_fixpoint and accepted_in_pass == 0:
            break
    return OptimizerTrace(
        method=method,
        objective_kind=objective,
        initial_config=initial,
        final_config=cfg,
        final_objective=best,
        steps=steps,
    )


def algorithm1(
    channels: ChannelSet,
    element_model: ElementModel,
    tx: TxSignal,
    geometry: RisArrayGeometry,
    init: RisConfig | None = None,
    iters: int = 2,
    noise: MeasurementNoise | None = None,
    run_to_fixpoint: bool = False,
) -> OptimizerTrace:
    """Full-surface greedy maximization of the LU/ED power ratio.

    Sweeps all columns then all rows per pass, starting from the all-zeros
    configuration, accepting a flip only on strict ratio improvement.
    """
    ev = PowerEvaluator(channels, element_model, tx, noise)
    return _full_surface_sweep("alg1", "ratio", ev, geometry, init, iters, run_to_fixpoint)


def lu_max(
    channels: ChannelSet,
    element_model: ElementModel,
    tx: TxSignal,
    geometry: RisArrayGeometry,
    init: RisConfig | None = None,
    iters: int = 2,
    noise: MeasurementNoise | None = None,
    run_to_fixpoint: bool = False,
) -> OptimizerTrace:
    """Beamform toward the intended receiver, ignoring the eavesdropper."""
    ev = PowerEvaluator(channels, element_model, tx, noise)
    return _full_surface_sweep("lu_max", "lu_power_max", ev, geometry, init, iters, run_to_fixpoint)


def ed_min(
    channels: ChannelSet,
    element_model: ElementModel,
    tx: TxSignal,
    geometry: RisArrayGeometry,
    init: RisConfig | None = None,
    iters: int = 2,
    noise: MeasurementNoise | None = None,
    run_to_fixpoint: bool = False,
) -> OptimizerTrace:
    """Suppress the eavesdropper's power, ignoring the intended receiver."""
    ev = PowerEvaluator(channels, element_model, tx, noise)
    return _full_surface_sweep("ed_min", "ed_power_min", ev, geometry, init, iters, run_to_fixpoint)


def algorithm2(
    channels: ChannelSet,
    element_model: ElementModel,
    tx: TxSignal,
    geometry: RisArrayGeometry,
    init: RisConfig | None = None,
    iters: int = 2,
    noise: MeasurementNoise | None = None,
    run_to_fixpoint: bool = False,
) -> OptimizerTrace:
    """Partitioned greedy sweep: left half serves the intended receiver,
    right half suppresses the eavesdropper.

    Per pass: left columns are flipped for strictly higher LU power, right
    columns for strictly lower ED power; then for every row the left
    half-row is tried for LU power and the right half-row for ED power.
    The two objectives keep independent "last accepted" registers that are
    initialized once from the starting configuration.
    """
    if geometry.n_h % 2:
        raise ValueError("the partitioned sweep needs an even number of columns")
    ev = PowerEvaluator(channels, element_model, tx, noise)
    cfg = _initial_config(geometry, init)
    initial = cfg.copy()
    p_lu = ev.lu_power(cfg)
    p_ed = ev.ed_power(cfg)
    steps: list = []
    split = geometry.n_h // 2
    iteration = 0
    max_passes = 64 if run_to_fixpoint else iters

    def attempt(kind, index, half, objective, incumbent, iteration, cfg):
        if kind == "column":
            candidate = flip_column(cfg, index)
        else:
            candidate = flip_half_row(cfg, index, half)
        direction = "max" if objective == "lu_power" else "min"
        value = ev.lu_power(candidate) if objective == "lu_power" else ev.ed_power(candidate)
        accepted = _better(value, incumbent, direction)
        steps.append(
            TraceStep(
                kind=kind,
                index=index,
                iteration=iteration,
                objective=objective,
                direction=direction,
                objective_before=incumbent,
                objective_after=value,
                accepted=accepted,
                half=half,
            )
        )
        return (candidate, value) if accepted else (cfg, incumbent)

    while iteration < max_passes:
        iteration += 1
        accepted_before = sum(1 for s in steps if s.accepted)
        for col in range(split):
            cfg, p_lu = attempt("column", col, None, "lu_power", p_lu, iteration, cfg)
        for col in range(split, geometry.n_h):
            cfg, p_ed = attempt("column", col, None, "ed_power", p_ed, iteration, cfg)
        for row in range(geometry.n_v):
            cfg, p_lu = attempt("half_row", row, "left", "lu_power", p_lu, iteration, cfg)
            cfg, p_ed = attempt("half_row", row, "right", "ed_power", p_ed, iteration, cfg)
        if run_to_fixpoint and sum(1 for s in steps if s.accepted) == accepted_before:
            break
    final_ratio = ev.ratio(cfg)
    return OptimizerTrace(
        method="alg2",
        objective_kind="ratio",
        initial_config=initial,
        final_config=cfg,
        final_objective=final_ratio,
        steps=steps,
    )


def single_flip_improvements(
    channels: ChannelSet,
    element_model: ElementModel,
    tx: TxSignal,
    config: RisConfig,
    objective: str = "ratio",
) -> list:
    """All column/row flips that strictly improve the objective.

    Empty result means the configuration is single-flip locally optimal.
    """
    ev = PowerEvaluator(channels, element_model, tx)
    direction = _DIRECTION[objective]
    base = ev.evaluate(objective, config)
    improvements = []
    for col in range(config.n_h):
        value = ev.evaluate(objective, flip_column(config, col))
        if _better(value, base, direction):
            improvements.append(("column", col, value))
    for row in range(config.n_v):
        value = ev.evaluate(objective, flip_row(config, row))
        if _better(value, base, direction):
            improvements.append(("row", row, value))
    return improvements


def exhaustive_oracle(
    channels: ChannelSet,
    element_model: ElementModel,
    tx: TxSignal,
    objective: str,
    geometry: RisArrayGeometry,
) -> tuple:
    """Global optimum of an objective over all 2^M configurations.

    Enumerates in lexicographic bit-string order and keeps strictly better
    values only, so ties resolve to the smallest bit-string. Guarded to
    M <= 20.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    m = geometry.num_elements
    if m > 20:
        raise ValueError("exhaustive enumeration is limited to M <= 20 elements")
    ev = PowerEvaluator(channels, element_model, tx)
    direction = _DIRECTION[objective]
    best_bits = None
    best_value = -math.inf if direction == "max" else math.inf
    # Element 0 is the most significant bit so ascending integers enumerate
    # bit-strings lexicographically.
    shifts = np.arange(m - 1, -1, -1, dtype=np.uint64)
    block = 4096
    for start in range(0, 1 << m, block):
        stop = min(start + block, 1 << m)
        ints = np.arange(start, stop, dtype=np.uint64)
        bits = ((ints[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        for row in bits:
            cfg = RisConfig(row, geometry.n_v, geometry.n_h)
            value = ev.evaluate(objective, cfg)
            if _better(value, best_value, direction):
                best_value = value
                best_bits = row.copy()
    return RisConfig(best_bits, geometry.n_v, geometry.n_h), float(best_value)
