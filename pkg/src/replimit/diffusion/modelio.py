"""JSON persistence for trained denoisers (weights + sampling metadata)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .net import DenoiserNet
from .schedule import DiffusionSchedule, make_schedule

MODEL_FORMAT = "replimit-model"
MODEL_VERSION = 1


def save_model(net: DenoiserNet, path, *, height: int, width: int, pool: int,
               t_max: int, beta_start: float, beta_end: float) -> None:
    obj = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "d_lat": net.d_lat,
        "d_time": net.d_time,
        "d_text": net.d_text,
        "hidden": net.hidden,
        "height": height,
        "width": width,
        "pool": pool,
        "t_max": t_max,
        "beta_start": beta_start,
        "beta_end": beta_end,
        "layers": {name: param.tolist()
                   for name, param in zip(("w1", "b1", "w2", "b2", "w3", "b3"), net.params())},
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> tuple[DenoiserNet, DiffusionSchedule, dict]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != MODEL_FORMAT or obj.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} v{MODEL_VERSION} file")
    layers = obj["layers"]
    net = DenoiserNet(
        w1=np.asarray(layers["w1"], dtype=np.float64),
        b1=np.asarray(layers["b1"], dtype=np.float64),
        w2=np.asarray(layers["w2"], dtype=np.float64),
        b2=np.asarray(layers["b2"], dtype=np.float64),
        w3=np.asarray(layers["w3"], dtype=np.float64),
        b3=np.asarray(layers["b3"], dtype=np.float64),
        d_lat=int(obj["d_lat"]), d_time=int(obj["d_time"]), d_text=int(obj["d_text"]),
    )
    schedule = make_schedule(int(obj["t_max"]), float(obj["beta_start"]), float(obj["beta_end"]))
    meta = {"height": int(obj["height"]), "width": int(obj["width"]), "pool": int(obj["pool"]),
            "t_max": int(obj["t_max"]), "beta_start": float(obj["beta_start"]),
            "beta_end": float(obj["beta_end"])}
    return net, schedule, meta
