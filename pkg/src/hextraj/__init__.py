"""Vessel trajectory forecasting on a hexagonal grid.

Raw AIS position reports go in one end; cleaned, resampled trajectories
come out, get discretised to H3 resolution-10 cells, serialised as
pseudo-octal token frames, and fed to an autoregressive sequence model.
A constant-velocity Kalman filter provides the baseline and Frechet
distance over the sphere provides the score.

Heavy kernels (haversine matrices, Frechet DP, DBSCAN) are numba jitted
when numba is importable; set HEXTRAJ_NO_NUMBA=1 to force the pure
numpy path.
"""

from ._kernels import EARTH_RADIUS_M, NUMBA_ENABLED
from .geo_core import GeoPoint, haversine
from .h3_codec import (
    cell_to_geo,
    from_pseudo_octal,
    geo_to_cell,
    to_pseudo_octal,
)
from .metrics import discrete_frechet, relative_deviation
from .predictor import NGramModel, ensemble_predict, generate, train_ngram
from .tokenizer import VOCAB, VOCAB_SIZE, encode_trajectory

__version__ = "0.1.0"

__all__ = [
    "EARTH_RADIUS_M",
    "NUMBA_ENABLED",
    "GeoPoint",
    "haversine",
    "geo_to_cell",
    "cell_to_geo",
    "to_pseudo_octal",
    "from_pseudo_octal",
    "discrete_frechet",
    "relative_deviation",
    "NGramModel",
    "train_ngram",
    "generate",
    "ensemble_predict",
    "VOCAB",
    "VOCAB_SIZE",
    "encode_trajectory",
    "__version__",
]
