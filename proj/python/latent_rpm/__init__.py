"""Python access to the latent_rpm native core.

Problems and panels cross the boundary as plain dicts in the dataset JSON layout.
"""

import json

from . import _core

__all__ = [
    "configurations",
    "generate",
    "solve_symbolic",
    "shared_rules",
    "encode_panel",
    "decode_panel",
    "render_panel",
    "render_sheet",
    "write_dataset",
    "train",
    "manifest",
    "solve",
    "evaluate",
    "default_config",
    "grad_check_mlp",
    "UsageError",
    "Error",
]

UsageError = _core.UsageError
Error = _core.Error
configurations = _core.configurations
default_config = _core.default_config
write_dataset = _core.write_dataset
grad_check_mlp = _core.grad_check_mlp


def generate(config, count, seed=0, first_index=0):
    return [json.loads(p) for p in _core.generate(config, count, seed, first_index)]


def solve_symbolic(problem):
    return _core.solve_symbolic(json.dumps(problem))


def shared_rules(problem):
    return _core.shared_rules(json.dumps(problem))


def encode_panel(panel, config):
    return _core.encode_panel(json.dumps(panel), config)


def decode_panel(vector, config):
    return json.loads(_core.decode_panel(list(vector), config))


def render_panel(panel, config, size=64):
    """PGM (P5) bytes of one panel."""
    return _core.render_panel(json.dumps(panel), config, size)


def render_sheet(problem, size=64):
    return _core.render_sheet(json.dumps(problem), size)


def train(stage, train_path, bundle, val_path="", config=""):
    """Run one training stage (ae, rules or img); `config` is key = value text."""
    _core.train(stage, str(train_path), str(val_path), str(bundle), config)


def manifest(bundle):
    return json.loads(_core.manifest(str(bundle)))


def solve(data, bundle, mode="c", tau=0.5):
    return _core.solve(str(data), str(bundle), mode, tau)


def evaluate(data, bundle, mode="c", tau=0.5, out=""):
    return _core.evaluate(str(data), str(bundle), mode, tau, str(out))
