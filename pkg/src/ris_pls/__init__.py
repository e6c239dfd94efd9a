"""Desk-scale simulator and optimizer for RIS-aided physical-layer security."""

from .channel import (
    ChannelParams,
    ChannelSet,
    Placement,
    SectorGrid,
    build_default_geometry,
    synthesize_channels,
)
from .codebook import (
    Codebook,
    CodebookEntry,
    EdKnowledge,
    detect_side_lobes,
    generate_codebook,
    scan_power_pattern,
    select_config,
)
from .ofdm import (
    Numerology,
    ResourceGrid,
    TxSignal,
    build_prs_grid,
    demodulate,
    modulate,
    prs_signal,
    receive,
    tone_signal,
)
from .optimize import (
    MeasurementNoise,
    OptimizerTrace,
    algorithm1,
    algorithm2,
    ed_min,
    exhaustive_oracle,
    lu_max,
    single_flip_improvements,
    uniform_config,
)
from .ris import (
    ElementModel,
    RisArrayGeometry,
    RisConfig,
    RisResponse,
    build_response,
    flip_column,
    flip_half_row,
    flip_row,
)
from .scenario import Scenario
from .secrecy import (
    LinkPowers,
    SecrecyReport,
    from_db,
    link_powers,
    power_ratio,
    received_power,
    sum_sse,
    to_db,
)

__version__ = "0.1.0"
