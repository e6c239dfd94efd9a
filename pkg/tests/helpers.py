"""Shared builders for optimizer and codebook tests."""

import numpy as np

from ris_pls.channel import ChannelParams, ChannelSet, Placement, synthesize_channels
from ris_pls.ofdm import Numerology, TxSignal, tone_signal
from ris_pls.ris import RisArrayGeometry

CARRIER = 3.55e9

SECTOR_ANGLES = (0.0, 15.0, 30.0, 45.0)


def panel(n_v, n_h):
    return RisArrayGeometry(n_v=n_v, n_h=n_h, tile_rows=1, tile_cols=1)


def unit_tone():
    return tone_signal(Numerology())


def model_instance(seed, n_v, n_h, rician_k_db=10.0):
    """One Rician channel draw with sector placements chosen by the seed."""
    rng = np.random.default_rng(seed)
    lu_a, ed_a = rng.choice(SECTOR_ANGLES, size=2, replace=False)
    tx = Placement(-15.0, 5.0)
    params = ChannelParams(rician_k_db=rician_k_db, rng_seed=int(seed))
    sig = unit_tone()
    channels = synthesize_channels(
        tx, Placement(lu_a, 7.0), Placement(ed_a, 7.0), panel(n_v, n_h), params, sig.freqs
    )
    return channels, sig


def handmade_channels(h_d_lu, h_d_ed, w_lu, w_ed):
    """K=1 channel set with the panel cascade set directly (g = 1)."""
    w_lu = np.asarray(w_lu, dtype=complex).reshape(1, -1)
    w_ed = np.asarray(w_ed, dtype=complex).reshape(1, -1)
    return ChannelSet(
        freqs=np.array([CARRIER]),
        h_d_lu=np.array([h_d_lu], dtype=complex),
        h_d_ed=np.array([h_d_ed], dtype=complex),
        h_ris_lu=w_lu,
        h_ris_ed=w_ed,
        g_ris=np.ones_like(w_lu),
    )


def single_tone_tx():
    return TxSignal(
        mode="tone",
        freqs=np.array([CARRIER]),
        symbols=np.array([1.0 + 0.0j]),
        occupied_mask=np.array([True]),
    )
