import json

import numpy as np
import pytest

from latentrom.checkpoint import load_checkpoint, save_checkpoint
from latentrom.dynamics import BasisSpec, DiModel
from latentrom.mlp import init_mlp


def test_checkpoint_roundtrip_lossless(tmp_path):
    rng = np.random.default_rng(0)
    enc = init_mlp([10, 5, 2], seed=1)
    dec = init_mlp([2, 5, 10], seed=2)
    for net in (enc, dec):
        for l in range(net.n_layers):
            net.biases[l] = rng.normal(size=net.biases[l].shape)
    spec = BasisSpec(poly_order=2, include_trig=True)
    models = [DiModel(xi=rng.normal(size=(spec.n_basis(2), 2)), spec=spec,
                      owner_mu=rng.uniform(size=2)) for _ in range(3)]
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, enc, dec, models)

    enc2, dec2, models2 = load_checkpoint(path)
    assert enc2.layer_sizes == enc.layer_sizes
    assert enc2.activation == enc.activation
    for a, b in zip(enc.weights + dec.weights, enc2.weights + dec2.weights):
        assert np.array_equal(a, b)
    for a, b in zip(enc.biases + dec.biases, enc2.biases + dec2.biases):
        assert np.array_equal(a, b)
    assert len(models2) == 3
    for m, m2 in zip(models, models2):
        assert np.array_equal(m.xi, m2.xi)
        assert np.array_equal(np.asarray(m.owner_mu), m2.owner_mu)
        assert m2.spec == spec


def test_checkpoint_requires_models(tmp_path):
    enc = init_mlp([4, 2], seed=0)
    dec = init_mlp([2, 4], seed=1)
    with pytest.raises(ValueError):
        save_checkpoint(tmp_path / "x.json", enc, dec, [])


def test_checkpoint_rejects_unknown_schema(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ValueError):
        load_checkpoint(path)
