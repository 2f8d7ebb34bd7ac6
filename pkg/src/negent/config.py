"""Run configuration: parsing, validation and echo."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .models import FourBandParams, Geometry, ModelSpec, TwoBandParams

TASKS = ("spectrum", "entropy", "sweep", "hierarchy", "classify-ep",
         "gapped-scaling", "bulk-ep-scan", "oracle-check")
FORMATS = ("csv", "json")
OUTPUT_DIR_ENV = "NEGENT_OUTPUT_DIR"

TWO_BAND_KEYS = ("t", "a0", "b0", "B")
FOUR_BAND_KEYS = ("M", "delta", "alpha", "lambda", "Z", "k0")

DEFAULTS = {
    "model": "two-band", "task": "entropy",
    "t": 0.5, "a0": 2.0, "b0": 1.0, "B": 1,
    "M": 3.0, "delta": 2.0, "alpha": 0.0, "lambda": 1.0, "Z": 1.0, "k0": None,
    "L": 100, "Ly": 3, "bc": "open", "subregion_fraction": 0.5,
    "ef": 0.0, "renyi": [2, 3], "L_list": None, "Ly_list": None,
    "saturation_L": None, "branch": "symmetric",
    "out": None, "format": "csv", "threads": 1, "plot": False,
}


def parse_int_list(value) -> list | None:
    """Accept a list, ``"a,b,c"``, or ``"logspace:lo:hi:n"`` (even integers, deduplicated)."""
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    text = str(value).strip()
    if text.startswith("logspace:"):
        try:
            lo, hi, n = (float(v) for v in text.split(":")[1:])
        except ValueError as exc:
            raise ConfigError(f"expected logspace:lo:hi:n, got {text!r}") from exc
        raw = np.geomspace(lo, hi, int(n))
        out = []
        for v in raw:
            e = int(2 * round(v / 2))
            if e not in out:
                out.append(e)
        return out
    if text.startswith("range:"):
        lo, hi, step = (int(v) for v in text.split(":")[1:])
        return list(range(lo, hi + 1, step))
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    geometry: Geometry
    task: str
    E_F: float = 0.0
    renyi_orders: tuple = (2, 3)
    L_list: tuple | None = None
    Ly_list: tuple | None = None
    saturation_L: int | None = None
    branch: str = "symmetric"
    output_path: str | None = None
    output_format: str = "csv"
    threads: int = 1
    plot: bool = False
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        unknown = set(mapping) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        d = dict(DEFAULTS)
        d.update({k: v for k, v in mapping.items() if v is not None})
        if d["task"] not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {d['task']!r}")
        if d["format"] not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {d['format']!r}")
        model = _build_model(d)
        geometry = Geometry(int(d["L"]), int(d["Ly"]), d["bc"], float(d["subregion_fraction"]))
        renyi = tuple(parse_int_list(d["renyi"]) or ())
        for n in renyi:
            if n < 2:
                raise ConfigError(f"Renyi orders must be >= 2, got {n}")
        L_list = parse_int_list(d["L_list"])
        Ly_list = parse_int_list(d["Ly_list"])
        if L_list is not None:
            bad = [L for L in L_list if L <= 0 or L % 2]
            if bad:
                raise ConfigError(f"all L must be positive and even; offending values {bad}")
        threads = int(d["threads"])
        if threads < 0:
            raise ConfigError("threads must be >= 0")
        if threads == 0:
            threads = os.cpu_count() or 1
        needs = {"sweep": "L_list", "hierarchy": "L_list", "bulk-ep-scan": "L_list"}
        if d["task"] in needs and L_list is None:
            raise ConfigError(f"task {d['task']} needs --L-list (e.g. logspace:100:600:9)")
        if d["task"] == "gapped-scaling" and (L_list is None or Ly_list is None):
            raise ConfigError("task gapped-scaling needs --L-list and --Ly-list")
        two_band_only = ("hierarchy", "gapped-scaling")
        if d["task"] in two_band_only and not isinstance(model, TwoBandParams):
            raise ConfigError(f"task {d['task']} is defined for the two-band model")
        four_band_only = ("classify-ep", "bulk-ep-scan")
        if d["task"] in four_band_only and not isinstance(model, FourBandParams):
            raise ConfigError(f"task {d['task']} is defined for the four-band model")
        return cls(model=model, geometry=geometry, task=d["task"], E_F=float(d["ef"]),
                   renyi_orders=renyi, L_list=tuple(L_list) if L_list else None,
                   Ly_list=tuple(Ly_list) if Ly_list else None,
                   saturation_L=None if d["saturation_L"] is None else int(d["saturation_L"]),
                   branch=d["branch"], output_path=d["out"], output_format=d["format"],
                   threads=threads, plot=bool(d["plot"]), raw=d)

    def echo(self) -> dict:
        """Mapping that rebuilds this configuration through :meth:`from_mapping`."""
        e = {"model": self.model.kind, "task": self.task, "L": self.geometry.L,
             "Ly": self.geometry.Ly, "bc": self.geometry.y_boundary,
             "subregion_fraction": self.geometry.subregion_fraction, "ef": self.E_F,
             "renyi": list(self.renyi_orders), "branch": self.branch, "format": self.output_format}
        params = self.model.as_dict()
        params.pop("model")
        e.update(params)
        if self.L_list is not None:
            e["L_list"] = list(self.L_list)
        if self.Ly_list is not None:
            e["Ly_list"] = list(self.Ly_list)
        if self.saturation_L is not None:
            e["saturation_L"] = self.saturation_L
        return e


def _build_model(d: dict) -> ModelSpec:
    if d["model"] == "two-band":
        return TwoBandParams(t=float(d["t"]), a0=float(d["a0"]), b0=float(d["b0"]), B=int(d["B"]))
    if d["model"] == "four-band":
        kw = dict(M=float(d["M"]), delta=float(d["delta"]), alpha=float(d["alpha"]),
                  lam=float(d["lambda"]), Z=float(d["Z"]))
        if d["k0"] is None:
            return FourBandParams.general(**kw)
        return FourBandParams(k0=float(d["k0"]), **kw)
    raise ConfigError(f"model must be 'two-band' or 'four-band', got {d['model']!r}")


def load_config_file(path: str) -> dict:
    """Read a JSON configuration file; keys use the flag names with underscores."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_") if k not in DEFAULTS else k: v for k, v in data.items()}
