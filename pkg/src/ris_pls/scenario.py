"""Scenario files: one JSON document describing a complete simulated setup.

A scenario pins the transmitter placement, the user sector grid, the panel
geometry, the element reflection model, the ray-channel parameters, the
transmit waveform, and the noise power. Everything derived from it
(channels, codebooks, experiment outputs) is reproducible from the file
alone; a digest of the canonical JSON ties derived artifacts back to it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from .channel import ChannelParams, ChannelSet, Placement, SectorGrid, synthesize_channels
from .ofdm import Numerology, ResourceGrid, TxSignal, build_prs_grid, prs_signal, tone_signal
from .ris import ElementModel, RisArrayGeometry
from .secrecy import from_db, link_powers
from .optimize import uniform_config
from . import ris as _ris

SCENARIO_SCHEMA = "ris-pls/scenario-v1"


@dataclass
class Scenario:
    tx: Placement = field(default_factory=lambda: Placement(-15.0, 5.0))
    sector_grid: SectorGrid = field(default_factory=SectorGrid)
    ris: RisArrayGeometry = field(default_factory=RisArrayGeometry)
    element_model: ElementModel = field(default_factory=ElementModel)
    channel: ChannelParams = field(default_factory=ChannelParams)
    tx_mode: str = "tone"
    tone_offset_hz: float = 100e3
    numerology: Numerology = field(default_factory=Numerology)
    num_rb: int = 52
    n0: float | None = None
    target_snr_db: float = 10.0

    def __post_init__(self):
        if self.tx_mode not in ("tone", "prs"):
            raise ValueError("tx_mode must be 'tone' or 'prs'")
        if self.num_rb < 1:
            raise ValueError("need at least one resource block")
        if self.n0 is not None and self.n0 <= 0:
            raise ValueError("n0 must be positive when given")
        self._n0_cache = None

    @property
    def seed(self) -> int:
        return self.channel.rng_seed

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, channel=replace(self.channel, rng_seed=int(seed)))

    def with_element_model(self, model: ElementModel) -> "Scenario":
        return replace(self, element_model=model)

    # ------------------------------------------------------------------
    # Waveform and channels
    # ------------------------------------------------------------------

    def tx_signal(self) -> TxSignal:
        if self.tx_mode == "tone":
            return tone_signal(self.numerology, self.channel.carrier_hz, self.tone_offset_hz)
        return prs_signal(self.prs_grid())

    def prs_grid(self) -> ResourceGrid:
        return build_prs_grid(
            self.numerology,
            num_rb=self.num_rb,
            seed=self.seed,
            center_freq_hz=self.channel.carrier_hz,
        )

    def placement(self, angle_deg: float) -> Placement:
        return Placement(angle_deg, self.sector_grid.user_range_m)

    def channels_for(self, lu: Placement, ed: Placement, freqs=None) -> ChannelSet:
        if freqs is None:
            freqs = self.tx_signal().freqs
        return synthesize_channels(self.tx, lu, ed, self.ris, self.channel, freqs)

    def noise_power(self) -> float:
        """Configured n0, or one calibrated so the uniform-surface LU at the
        front sector center sees the target mean per-subcarrier SNR."""
        if self.n0 is not None:
            return self.n0
        if self._n0_cache is None:
            tx_sig = self.tx_signal()
            lu = Placement(0.0, self.sector_grid.user_range_m)
            ed = Placement(15.0, self.sector_grid.user_range_m)
            channels = self.channels_for(lu, ed, tx_sig.freqs)
            cfg = uniform_config(self.ris.n_v, self.ris.n_h)
            response = _ris.build_response(cfg, self.element_model, tx_sig.freqs)
            per_bin = link_powers(channels, response, tx_sig).p_lu / int(
                tx_sig.occupied_mask.sum()
            )
            self._n0_cache = per_bin / from_db(self.target_snr_db)
        return self._n0_cache

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": SCENARIO_SCHEMA,
            "tx": {
                "azimuth_deg": self.tx.azimuth_deg,
                "range_m": self.tx.range_m,
                "height_m": self.tx.height_m,
            },
            "sector_grid": {
                "sector_width_deg": self.sector_grid.sector_width_deg,
                "sector_centers_deg": list(self.sector_grid.sector_centers_deg),
                "user_range_m": self.sector_grid.user_range_m,
            },
            "ris": {
                "n_v": self.ris.n_v,
                "n_h": self.ris.n_h,
                "element_spacing_m": self.ris.element_spacing_m,
                "tile_rows": self.ris.tile_rows,
                "tile_cols": self.ris.tile_cols,
            },
            "element_model": {
                "mode": self.element_model.mode,
                "phase_at_center": list(self.element_model.phase_at_center),
                "amplitude": self.element_model.amplitude,
                "center_hz": self.element_model.center_hz,
                "dispersion_rad_per_hz": self.element_model.dispersion_rad_per_hz,
                "resonance_hz": self.element_model.resonance_hz,
                "quality_factor": self.element_model.quality_factor,
            },
            "channel": {
                "carrier_hz": self.channel.carrier_hz,
                "num_paths": self.channel.num_paths,
                "rician_k_db": self.channel.rician_k_db,
                "max_excess_delay_s": self.channel.max_excess_delay_s,
                "tx_beamwidth_deg": self.channel.tx_beamwidth_deg,
                "direct_path_suppression_db": self.channel.direct_path_suppression_db,
                "rng_seed": self.channel.rng_seed,
            },
            "tx_signal": {
                "mode": self.tx_mode,
                "tone_offset_hz": self.tone_offset_hz,
                "numerology_mu": self.numerology.mu,
                "cp_mode": self.numerology.cp_mode,
                "num_rb": self.num_rb,
            },
            "noise": {"n0": self.n0, "target_snr_db": self.target_snr_db},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            tx = Placement(**data["tx"])
            grid_raw = dict(data["sector_grid"])
            grid_raw["sector_centers_deg"] = tuple(grid_raw["sector_centers_deg"])
            grid = SectorGrid(**grid_raw)
            ris = RisArrayGeometry(**data["ris"])
            em_raw = dict(data["element_model"])
            em_raw["phase_at_center"] = tuple(em_raw["phase_at_center"])
            model = ElementModel(**em_raw)
            chan = ChannelParams(**data["channel"])
            sig = data["tx_signal"]
            numerology = Numerology(mu=sig["numerology_mu"], cp_mode=sig.get("cp_mode", "extended"))
            noise = data.get("noise", {})
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed scenario document: {exc}") from exc
        return cls(
            tx=tx,
            sector_grid=grid,
            ris=ris,
            element_model=model,
            channel=chan,
            tx_mode=sig["mode"],
            tone_offset_hz=sig.get("tone_offset_hz", 100e3),
            numerology=numerology,
            num_rb=sig.get("num_rb", 52),
            n0=noise.get("n0"),
            target_snr_db=noise.get("target_snr_db", 10.0),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
