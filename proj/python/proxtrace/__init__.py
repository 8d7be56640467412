"""BLE proximity (TC4TL) distance classification toolkit."""

from ._core import (
    ConfigError,
    DataError,
    DivergenceError,
    Error,
    aggregate_event,
    attenuation,
    config_text,
    decide,
    expected_distance,
    feature_rows,
    gen,
    ndcf,
    parse_event,
    predict,
    quantize_distance,
    sample_rssi,
    score,
    score_files,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DivergenceError",
    "Error",
    "aggregate_event",
    "attenuation",
    "config_text",
    "decide",
    "expected_distance",
    "feature_rows",
    "gen",
    "ndcf",
    "parse_event",
    "predict",
    "quantize_distance",
    "sample_rssi",
    "score",
    "score_files",
    "train",
]
