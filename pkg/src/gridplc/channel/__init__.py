from .lognormal import (
    CascadeResult,
    LogNormalChannelModel,
    UniformFactor,
    cascade_gain_monte_carlo,
    sample_lognormal_gains,
)
from .multipath import (
    Attenuation,
    ImpulseResponse,
    MultipathChannel,
    Path,
    impulse_response,
    raised_cosine_window,
    synthesize_impulse,
    transfer_function,
)
from .pathloss import TYPICAL_PATH_LOSS, PathLossTable, loss_per_km, pathloss_db
from .twoport import (
    Companion,
    TwoPortNetwork,
    attach_companion,
    cascade,
    detach_companion,
    endtoend_gain,
    line_section,
    lossless_gamma,
    lossy_gamma,
    open_tap_notches,
)
