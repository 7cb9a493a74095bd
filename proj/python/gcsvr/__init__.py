"""GCSVR: graph-convolutional spatial embeddings feeding per-station epsilon-SVR
forecasters, with forecast metrics, MCB rank testing and conformal intervals.

The heavy lifting lives in the native extension; this package re-exports it.
"""

from ._gcsvr import (  # noqa: F401
    GcsvrModel,
    StationNetwork,
    build_network,
    conformal_quantile,
    conformity_score,
    crps_empirical,
    crps_gaussian,
    epsilon_loss,
    estimate_zeta_max,
    fit,
    generate_synthetic,
    haversine_km,
    mae,
    mase,
    mcb_test,
    normal_quantile,
    pinball,
    prediction_interval,
    rbf_kernel,
    rmse,
    smape,
)

__version__ = "0.1.0"
