"""Desk-scale indoor layout and per-subcarrier channel synthesis.

Coordinate frame: the reflecting panel sits at the origin in the x-z plane
with broadside along +y. A node placed at (azimuth, range, height) is at

    (range * sin(azimuth), range * cos(azimuth), height)

so azimuth 0 is straight in front of the panel and positive azimuths are to
its right. Every link is a sum of rays: a deterministic line-of-sight ray
whose bulk phase follows the geometric path length at each subcarrier
frequency, plus optional scattered rays with random excess delays and
complex gains whose total power is set by the Rician K-factor. Links ending
on the panel additionally carry a plane-wave phase profile over the element
grid, evaluated at the carrier wavelength (narrowband-array model), which
is what makes the configurations angle-selective.

Random draws are taken from per-link streams keyed by (seed, link kind,
endpoint placement), so interchanging the two receiver placements
interchanges their channels exactly.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .ris import SPEED_OF_LIGHT, RisArrayGeometry


@dataclass(frozen=True)
class Placement:
    """Node location relative to the panel center.

    Azimuth is measured from broadside in degrees; range is the distance to
    the panel center in meters.
    """

    azimuth_deg: float
    range_m: float
    height_m: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.azimuth_deg) or not math.isfinite(self.range_m):
            raise ValueError("placement coordinates must be finite")
        if self.range_m <= 0:
            raise ValueError("range must be positive")
        if not -90.0 <= self.azimuth_deg <= 90.0:
            raise ValueError("azimuth must lie in [-90, 90] degrees")

    def position(self) -> np.ndarray:
        az = math.radians(self.azimuth_deg)
        return np.array(
            [self.range_m * math.sin(az), self.range_m * math.cos(az), self.height_m]
        )


@dataclass(frozen=True)
class SectorGrid:
    """Circular sectors covering the service area in front of the panel."""

    sector_width_deg: float = 15.0
    sector_centers_deg: tuple = (0.0, 15.0, 30.0, 45.0)
    user_range_m: float = 7.0

    def __post_init__(self):
        centers = tuple(float(c) for c in self.sector_centers_deg)
        object.__setattr__(self, "sector_centers_deg", centers)
        if len(centers) < 1:
            raise ValueError("grid needs at least one sector")
        if self.user_range_m <= 0:
            raise ValueError("user range must be positive")
        for a, b in zip(centers, centers[1:]):
            if b <= a:
                raise ValueError("sector centers must be strictly increasing")
            if not math.isclose(b - a, self.sector_width_deg, rel_tol=1e-9):
                raise ValueError("adjacent sector centers must differ by the sector width")

    def placement(self, center_deg: float) -> Placement:
        """Placement of a user standing at a sector center."""
        if center_deg not in self.sector_centers_deg:
            raise ValueError(f"{center_deg} is not a sector center of this grid")
        return Placement(center_deg, self.user_range_m)

    def nearest_center(self, angle_deg: float) -> tuple:
        """(center, distance) of the sector center closest to an angle."""
        best = min(self.sector_centers_deg, key=lambda c: abs(c - angle_deg))
        return best, abs(best - angle_deg)


def build_default_geometry() -> tuple:
    """Transmitter placement and user sector grid of the reference setup."""
    tx = Placement(azimuth_deg=-15.0, range_m=5.0)
    grid = SectorGrid()
    return tx, grid


@dataclass(frozen=True)
class ChannelParams:
    """Knobs of the ray-based channel model."""

    carrier_hz: float = 3.55e9
    num_paths: int = 8
    rician_k_db: float = 10.0
    max_excess_delay_s: float = 100e-9
    tx_beamwidth_deg: float = 20.0
    direct_path_suppression_db: float = 30.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.carrier_hz <= 0 or not math.isfinite(self.carrier_hz):
            raise ValueError("carrier frequency must be positive and finite")
        if self.num_paths < 1:
            raise ValueError("need at least one path per link")
        if self.max_excess_delay_s < 0 or not math.isfinite(self.max_excess_delay_s):
            raise ValueError("max excess delay must be finite and non-negative")
        if self.tx_beamwidth_deg <= 0:
            raise ValueError("beamwidth must be positive")
        for name in ("direct_path_suppression_db",):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class ChannelSet:
    """Per-subcarrier channels of all five links.

    Shapes: scalars h_d_* are (K,), the panel-side links are (K, M).
    """

    freqs: np.ndarray
    h_d_lu: np.ndarray
    h_d_ed: np.ndarray
    h_ris_lu: np.ndarray
    h_ris_ed: np.ndarray
    g_ris: np.ndarray

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        for name in ("h_d_lu", "h_d_ed"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=complex))
        for name in ("h_ris_lu", "h_ris_ed", "g_ris"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=complex))
        k = self.freqs.size
        if self.h_d_lu.shape != (k,) or self.h_d_ed.shape != (k,):
            raise ValueError("direct channels must have one entry per subcarrier")
        m = self.g_ris.shape[1] if self.g_ris.ndim == 2 else -1
        for name in ("h_ris_lu", "h_ris_ed", "g_ris"):
            if getattr(self, name).shape != (k, m):
                raise ValueError("panel-side channels must share one (K, M) shape")
        for name in ("h_d_lu", "h_d_ed", "h_ris_lu", "h_ris_ed", "g_ris"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def num_subcarriers(self) -> int:
        return self.freqs.size

    @property
    def num_elements(self) -> int:
        return self.g_ris.shape[1]

    def to_dict(self) -> dict:
        def cplx(a):
            return np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "K": int(self.num_subcarriers),
            "M": int(self.num_elements),
            "freqs": self.freqs.tolist(),
            "h_d_lu": cplx(self.h_d_lu),
            "h_d_ed": cplx(self.h_d_ed),
            "h_ris_lu": cplx(self.h_ris_lu),
            "h_ris_ed": cplx(self.h_ris_ed),
            "g_ris": cplx(self.g_ris),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSet":
        def cplx(entry):
            a = np.asarray(entry, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        return cls(
            freqs=np.asarray(data["freqs"], dtype=float),
            h_d_lu=cplx(data["h_d_lu"]),
            h_d_ed=cplx(data["h_d_ed"]),
            h_ris_lu=cplx(data["h_ris_lu"]),
            h_ris_ed=cplx(data["h_ris_ed"]),
            g_ris=cplx(data["g_ris"]),
        )

    def save(self, path) -> None:
        """Write to `.json` ((re, im) pairs) or `.npz` (split float arrays)."""
        path = str(path)
        if path.endswith(".npz"):
            arrays = {"freqs": self.freqs}
            for name in ("h_d_lu", "h_d_ed", "h_ris_lu", "h_ris_ed", "g_ris"):
                a = getattr(self, name)
                arrays[name + "_re"] = a.real
                arrays[name + "_im"] = a.imag
            np.savez(path, **arrays)
        else:
            with open(path, "w") as fh:
                json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ChannelSet":
        path = str(path)
        if path.endswith(".npz"):
            with np.load(path) as data:
                kwargs = {"freqs": data["freqs"]}
                for name in ("h_d_lu", "h_d_ed", "h_ris_lu", "h_ris_ed", "g_ris"):
                    kwargs[name] = data[name + "_re"] + 1j * data[name + "_im"]
            return cls(**kwargs)
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# Link kind tags for the per-link RNG streams.
_LINK_DIRECT = 1
_LINK_RIS_NODE = 2
_LINK_TX_RIS = 3


def _float_key(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def _placement_key(p: Placement) -> list:
    return [_float_key(p.azimuth_deg), _float_key(p.range_m), _float_key(p.height_m)]


def _link_rng(seed: int, kind: int, *placements: Placement) -> np.random.Generator:
    entropy = [int(seed), kind]
    for p in placements:
        entropy.extend(_placement_key(p))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _free_space_amplitude(distance_m: float, carrier_hz: float) -> float:
    return SPEED_OF_LIGHT / (4.0 * math.pi * distance_m * carrier_hz)


def _scatter_sigma(amp_los: float, params: ChannelParams) -> float:
    # Total scattered power is LOS power divided by the linear K-factor,
    # split evenly across the scattered rays.
    k_lin = 10.0 ** (params.rician_k_db / 10.0)
    if not math.isfinite(k_lin):
        return 0.0
    return amp_los**2 / k_lin / (params.num_paths - 1)


def _outside_beam(tx: Placement, node: Placement, beamwidth_deg: float) -> bool:
    boresight = -tx.position()  # toward the panel center
    toward = node.position() - tx.position()
    cosang = np.dot(boresight, toward) / (
        np.linalg.norm(boresight) * np.linalg.norm(toward)
    )
    return math.degrees(math.acos(np.clip(cosang, -1.0, 1.0))) > beamwidth_deg / 2.0


def _direct_link(tx: Placement, node: Placement, params: ChannelParams, f: np.ndarray):
    rng = _link_rng(params.rng_seed, _LINK_DIRECT, tx, node)
    d = float(np.linalg.norm(node.position() - tx.position()))
    amp = _free_space_amplitude(d, params.carrier_hz)
    if _outside_beam(tx, node, params.tx_beamwidth_deg):
        amp *= 10.0 ** (-params.direct_path_suppression_db / 20.0)
    tau0 = d / SPEED_OF_LIGHT
    h = amp * np.exp(-2j * math.pi * f * tau0)
    n_scatter = params.num_paths - 1
    if n_scatter > 0:
        sigma2 = _scatter_sigma(amp, params)
        excess = rng.uniform(0.0, params.max_excess_delay_s, n_scatter)
        gains = math.sqrt(sigma2 / 2.0) * (
            rng.standard_normal(n_scatter) + 1j * rng.standard_normal(n_scatter)
        )
        h = h + (gains[None, :] * np.exp(-2j * math.pi * np.outer(f, tau0 + excess))).sum(axis=1)
    return h


def _steering(elem: np.ndarray, unit_dir: np.ndarray, carrier_hz: float) -> np.ndarray:
    # Narrowband array model: the element phase profile is evaluated at the
    # carrier wavelength; per-subcarrier selectivity comes from the tapped
    # delays, not from the aperture.
    return np.exp(2j * math.pi * carrier_hz / SPEED_OF_LIGHT * (elem @ unit_dir))


def _panel_link(node: Placement, params: ChannelParams, f, elem: np.ndarray, kind: int):
    """(K, M) channel between the panel and a node (either direction)."""
    rng = _link_rng(params.rng_seed, kind, node)
    pos = node.position()
    d = float(np.linalg.norm(pos))
    u = pos / d
    amp = _free_space_amplitude(d, params.carrier_hz)
    tau0 = d / SPEED_OF_LIGHT
    h = amp * np.outer(np.exp(-2j * math.pi * f * tau0), _steering(elem, u, params.carrier_hz))
    n_scatter = params.num_paths - 1
    if n_scatter > 0:
        sigma2 = _scatter_sigma(amp, params)
        az = np.radians(rng.uniform(-90.0, 90.0, n_scatter))
        el = np.radians(rng.uniform(-30.0, 30.0, n_scatter))
        excess = rng.uniform(0.0, params.max_excess_delay_s, n_scatter)
        gains = math.sqrt(sigma2 / 2.0) * (
            rng.standard_normal(n_scatter) + 1j * rng.standard_normal(n_scatter)
        )
        dirs = np.column_stack(
            [np.sin(az) * np.cos(el), np.cos(az) * np.cos(el), np.sin(el)]
        )
        for l in range(n_scatter):
            h = h + gains[l] * np.outer(
                np.exp(-2j * math.pi * f * (tau0 + excess[l])),
                _steering(elem, dirs[l], params.carrier_hz),
            )
    return h


def synthesize_channels(
    tx: Placement,
    lu: Placement,
    ed: Placement,
    ris: RisArrayGeometry,
    params: ChannelParams,
    freqs,
) -> ChannelSet:
    """Deterministic channel realization for one transmitter/receiver layout.

    The direct transmitter-to-receiver links are attenuated by the
    configured suppression whenever the receiver sits outside the
    transmitter beam aimed at the panel.
    """
    f = np.asarray(freqs, dtype=float)
    if f.size == 0:
        raise ValueError("frequency list must be non-empty")
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        raise ValueError("subcarrier frequencies must be finite and positive")
    elem = ris.element_positions()
    return ChannelSet(
        freqs=f,
        h_d_lu=_direct_link(tx, lu, params, f),
        h_d_ed=_direct_link(tx, ed, params, f),
        h_ris_lu=_panel_link(lu, params, f, elem, _LINK_RIS_NODE),
        h_ris_ed=_panel_link(ed, params, f, elem, _LINK_RIS_NODE),
        g_ris=_panel_link(tx, params, f, elem, _LINK_TX_RIS),
    )
