"""Model checkpoints: JSON documents holding the autoencoder and all anchored
coefficient matrices, keyed by their anchor parameters.

Floats are serialized with Python's shortest round-trip repr, so a
save/load cycle is lossless at full 64-bit precision.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dynamics import BasisSpec, DiModel
from .mlp import MlpParams

SCHEMA_VERSION = 1


def _net_to_doc(net: MlpParams) -> dict:
    return {
        "layer_sizes": list(net.layer_sizes),
        "activation": net.activation,
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _net_from_doc(doc: dict) -> MlpParams:
    return MlpParams(
        layer_sizes=[int(s) for s in doc["layer_sizes"]],
        weights=[np.array(w, dtype=float) for w in doc["weights"]],
        biases=[np.array(b, dtype=float) for b in doc["biases"]],
        activation=doc["activation"],
    )


def save_checkpoint(path, enc: MlpParams, dec: MlpParams,
                    di_models: list[DiModel]) -> None:
    if not di_models:
        raise ValueError("checkpoint requires at least one anchored model")
    spec = di_models[0].spec
    doc = {
        "schema_version": SCHEMA_VERSION,
        "encoder": _net_to_doc(enc),
        "decoder": _net_to_doc(dec),
        "basis": {"poly_order": spec.poly_order, "include_trig": spec.include_trig},
        "di_models": [
            {"mu": np.asarray(m.owner_mu, dtype=float).tolist(),
             "xi": m.xi.tolist()}
            for m in di_models
        ],
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path):
    """Returns ``(enc, dec, di_models)``."""
    doc = json.loads(Path(path).read_text())
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported checkpoint schema {version!r}")
    spec = BasisSpec(poly_order=int(doc["basis"]["poly_order"]),
                     include_trig=bool(doc["basis"]["include_trig"]))
    models = [
        DiModel(xi=np.array(m["xi"], dtype=float), spec=spec,
                owner_mu=np.array(m["mu"], dtype=float))
        for m in doc["di_models"]
    ]
    return _net_from_doc(doc["encoder"]), _net_from_doc(doc["decoder"]), models
