"""
READ/WRITE MODELS, REPORTS & CURVES

Model files are JSON:

  {
    "format": "isurv-model",
    "version": 2,
    "config": {ModelConfig fields},
    "grid": <array>,
    "state": {parameter name: <array>},
    "features": <array>, "pi_hat": <array>, "mask": <array>, "sample_mean": <array> | null,
    "c": [int], "censored": [bool],
    "history": [float], "fine_tune_history": [float], "dropped": int,
    "preprocessor": {"numeric": [str], "mean": <array>, "scale": <array>,
                     "categorical": [str], "levels": [[str]]} | null
  }

where <array> is {"dtype": "<f8", "shape": [...], "data": base64 of the raw
little-endian bytes}, so a loaded model predicts bit-for-bit what the saved
one did.
"""

import base64
import json
import logging
import os
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .baselines import SurvivalCurve
from .errors import FormatError, SchemaError
from .data import FeaturePreprocessor
from .grid import TimeGrid
from .models import ModelConfig, TrainedModel

logger = logging.getLogger(__name__)

model_format: str = "isurv-model"
model_version: int = 2


### GENERIC ###


def read_json(path: str) -> Dict[str, Any]:
    try:
        with open(os.path.expanduser(path), "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} is not valid JSON: {e}") from e


def write_json(path: str, data: Dict[str, Any]) -> None:
    """Sorted keys, so identical content gives identical bytes."""

    path = os.path.expanduser(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, sort_keys=True, indent=2)
        f.write("\n")


def write_csv(path: str, rows: Sequence[Dict[str, Any]], columns: List[str]) -> None:
    path = os.path.expanduser(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    pd.DataFrame(list(rows), columns=columns).to_csv(path, index=False)


### ARRAYS ###


def encode_array(a: np.ndarray) -> Dict[str, Any]:
    a = np.ascontiguousarray(a)
    little: np.ndarray = a.astype(a.dtype.newbyteorder("<"), copy=False)

    return {
        "dtype": little.dtype.str,
        "shape": list(a.shape),
        "data": base64.b64encode(little.tobytes()).decode("ascii"),
    }


def decode_array(blob: Dict[str, Any]) -> np.ndarray:
    try:
        raw: bytes = base64.b64decode(blob["data"], validate=True)
        a: np.ndarray = np.frombuffer(raw, dtype=np.dtype(blob["dtype"]))
        return a.reshape(tuple(blob["shape"])).copy()
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"Malformed array entry: {e}") from e


### MODELS ###


def preprocessor_to_dict(preprocessor: FeaturePreprocessor) -> Dict[str, Any]:
    return {
        "numeric": list(preprocessor.numeric),
        "mean": encode_array(preprocessor.mean),
        "scale": encode_array(preprocessor.scale),
        "categorical": list(preprocessor.categorical),
        "levels": [list(levels) for levels in preprocessor.levels],
    }


def preprocessor_from_dict(d: Dict[str, Any]) -> FeaturePreprocessor:
    return FeaturePreprocessor.restore(
        d["numeric"], decode_array(d["mean"]), decode_array(d["scale"]), d["categorical"], d["levels"]
    )


def model_to_dict(model: TrainedModel) -> Dict[str, Any]:
    return {
        "format": model_format,
        "version": model_version,
        "config": model.config.to_dict(),
        "grid": encode_array(model.grid.boundaries),
        "state": {k: encode_array(v) for k, v in model.state.items()},
        "features": encode_array(model.features),
        "c": [int(x) for x in model.c],
        "censored": [bool(x) for x in model.censored],
        "pi_hat": encode_array(model.pi_hat),
        "mask": encode_array(model.mask.astype(np.uint8)),
        "sample_mean": None if model.sample_mean is None else encode_array(model.sample_mean),
        "history": list(model.history),
        "fine_tune_history": list(model.fine_tune_history),
        "dropped": model.dropped,
        "preprocessor": None if model.preprocessor is None else preprocessor_to_dict(model.preprocessor),
    }


def model_from_dict(d: Dict[str, Any]) -> TrainedModel:
    if d.get("format") != model_format:
        raise FormatError(f"Not an {model_format} file (format={d.get('format')!r})")
    if d.get("version") != model_version:
        raise FormatError(f"Unsupported model file version {d.get('version')!r}")

    try:
        return TrainedModel(
            config=ModelConfig(**d["config"]),
            grid=TimeGrid(decode_array(d["grid"])),
            state={k: decode_array(v) for k, v in d["state"].items()},
            features=decode_array(d["features"]),
            c=np.array(d["c"], dtype=np.int64),
            censored=np.array(d["censored"], dtype=bool),
            pi_hat=decode_array(d["pi_hat"]),
            mask=decode_array(d["mask"]).astype(bool),
            history=tuple(float(x) for x in d["history"]),
            sample_mean=None if d["sample_mean"] is None else decode_array(d["sample_mean"]),
            fine_tune_history=tuple(float(x) for x in d["fine_tune_history"]),
            dropped=int(d["dropped"]),
            preprocessor=None if d["preprocessor"] is None else preprocessor_from_dict(d["preprocessor"]),
        )
    except (KeyError, TypeError, SchemaError) as e:
        raise FormatError(f"Model file is missing or mistypes a field: {e}") from e


def save_model(model: TrainedModel, path: str) -> None:
    write_json(path, model_to_dict(model))
    logger.info("Wrote model to %s", path)


def load_model(path: str) -> TrainedModel:
    return model_from_dict(read_json(path))


### CURVES ###


def write_curves(
    path: str,
    rows: Sequence[Tuple[int, SurvivalCurve, SurvivalCurve, SurvivalCurve]],
) -> None:
    """Long-format plot data: instance, time, S_lower, S, S_upper on each curve's own step times."""

    records: List[Dict[str, Any]] = []
    for instance, lower, precise, upper in rows:
        for t in precise.times:
            records.append(
                {
                    "instance": instance,
                    "time": float(t),
                    "S_lower": float(lower.at(t)),
                    "S": float(precise.at(t)),
                    "S_upper": float(upper.at(t)),
                }
            )

    write_csv(path, records, ["instance", "time", "S_lower", "S", "S_upper"])


def write_curve_table(path: str, curves: Dict[str, SurvivalCurve]) -> None:
    """Wide format: one time column (the union of step times) and one column per named curve."""

    times: np.ndarray = np.unique(np.concatenate([c.times for c in curves.values()]))
    table: Dict[str, np.ndarray] = {"time": times}
    for name, curve in curves.items():
        table[name] = curve.at(times)

    path = os.path.expanduser(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    pd.DataFrame(table).to_csv(path, index=False)


### END ###
