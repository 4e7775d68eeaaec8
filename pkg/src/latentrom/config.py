"""Run configuration: a single versioned JSON document driving every command.

Defaults are materialized at load time, so the resolved configuration written
into run metadata is self-describing; unknown keys are rejected to catch
typos before any compute starts.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .burgers import FomConfig
from .dynamics import BasisSpec
from .errors import ConfigError
from .greedy import GreedyConfig
from .params import DiscreteParamSpace, build_grid
from .training import LossWeights, TrainConfig

SCHEMA_VERSION = 1

_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "output_dir": "runs/default",
    "fom": {
        "domain": [[-3.0, 3.0], [-3.0, 3.0]],
        "nx": 30,
        "ny": 30,
        "re": 10000.0,
        "dt": 1.0 / 200.0,
        "t_final": 1.0,
        "newton_tol": 1e-8,
        "newton_max_iter": 10,
    },
    "space": {
        "bounds": [[0.7, 0.9], [0.9, 1.1]],
        "resolution": [11, 11],
    },
    "autoencoder": {
        "layer_sizes": [1800, 50, 3],  # encoder; decoder is the mirror image
        "activation": "tanh",
    },
    "di": {
        "poly_order": 1,
        "include_trig": False,
        "k": 4,
        "p": 2.0,
    },
    "training": {
        "beta_zdot": 0.1,
        "beta_udot": 0.1,
        "lr": 1e-3,
        "adam_beta1": 0.9,
        "adam_beta2": 0.999,
        "adam_eps": 1e-8,
        "batch_size": 64,
    },
    "greedy": {
        "n_target": 16,
        "tol": 0.0,
        "n_epochs_between": 200,
        "subset_size": 32,
        "n_ts_fraction": 0.1,
        "init": "corners",
        "indicator_window": "strided",
    },
    "lasdi": {
        "grid": [4, 4],
        "recon_epochs": 2000,
    },
}


def _merge(defaults: dict, user: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


@dataclass
class RunConfig:
    """Typed view over the resolved configuration document."""

    raw: dict
    fom: FomConfig
    space: DiscreteParamSpace
    arch: list[int]
    activation: str
    basis: BasisSpec
    k: int
    p: float
    train: TrainConfig
    greedy: GreedyConfig
    lasdi_grid: list[int]
    lasdi_recon_epochs: int
    seed: int
    output_dir: Path


def resolve_config(user: dict) -> RunConfig:
    """Merge with defaults, validate cross-field invariants, build objects."""
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    version = user.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema_version {version!r}")
    doc = _merge(_DEFAULTS, user)

    f = doc["fom"]
    try:
        fom = FomConfig(domain=tuple(tuple(map(float, ax)) for ax in f["domain"]),
                        nx=int(f["nx"]), ny=int(f["ny"]), re=float(f["re"]),
                        dt=float(f["dt"]), t_final=float(f["t_final"]),
                        newton_tol=float(f["newton_tol"]),
                        newton_max_iter=int(f["newton_max_iter"]))
        space = build_grid(doc["space"]["bounds"], doc["space"]["resolution"])
        basis = BasisSpec(poly_order=int(doc["di"]["poly_order"]),
                          include_trig=bool(doc["di"]["include_trig"]))
        t = doc["training"]
        train = TrainConfig(weights=LossWeights(float(t["beta_zdot"]),
                                                float(t["beta_udot"])),
                            lr=float(t["lr"]), adam_beta1=float(t["adam_beta1"]),
                            adam_beta2=float(t["adam_beta2"]),
                            adam_eps=float(t["adam_eps"]),
                            batch_size=None if t["batch_size"] is None
                            else int(t["batch_size"]))
        g = doc["greedy"]
        greedy = GreedyConfig(n_target=int(g["n_target"]), tol=float(g["tol"]),
                              n_epochs_between=int(g["n_epochs_between"]),
                              subset_size=int(g["subset_size"]),
                              n_ts_fraction=float(g["n_ts_fraction"]),
                              init=g["init"],
                              indicator_window=g["indicator_window"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    arch = [int(s) for s in doc["autoencoder"]["layer_sizes"]]
    if len(arch) < 2:
        raise ConfigError("autoencoder needs at least input and latent layers")
    if doc["autoencoder"]["activation"] != "tanh":
        raise ConfigError(
            f"unsupported activation {doc['autoencoder']['activation']!r}")
    if arch[0] != fom.n_u:
        raise ConfigError(
            f"autoencoder outer layer size {arch[0]} does not match the state "
            f"dimension 2*nx*ny = {fom.n_u}")
    if int(doc["di"]["k"]) < 1:
        raise ConfigError("di.k must be >= 1")
    if len(doc["lasdi"]["grid"]) != space.dim:
        raise ConfigError("lasdi.grid needs one entry per parameter dimension")

    return RunConfig(
        raw=doc,
        fom=fom,
        space=space,
        arch=arch,
        activation=doc["autoencoder"]["activation"],
        basis=basis,
        k=int(doc["di"]["k"]),
        p=float(doc["di"]["p"]),
        train=train,
        greedy=greedy,
        lasdi_grid=[int(n) for n in doc["lasdi"]["grid"]],
        lasdi_recon_epochs=int(doc["lasdi"]["recon_epochs"]),
        seed=int(doc["seed"]),
        output_dir=Path(doc["output_dir"]),
    )


def load_config(path) -> RunConfig:
    try:
        user = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return resolve_config(user)
