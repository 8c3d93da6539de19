"""
Run configuration. A config file is TOML, JSON or a Python script; scripts
call ``study()``, ``thresholds()`` and ``workers()`` from this module.
"""
import json
import os
from pathlib import Path

import toml

from .lib.errors import UsageError
from .lib.logger import debug
from .models.run_config import RunConfig

RUN_DEFAULTS = {
    "problem": "hertz",
    "stage": "full",
    "design": "uniform:12",
    "validation": None,
    "delta": 1e-6,
    "tau": None,
    "k_max": 50,
    "conv_tol": 1e-5,
    "hf_tol": 1e-8,
    "seed": 0,
    "output_dir": "results",
    "model_path": None,
    "warm_pairing": False,
    "delta_B": 1e-7,
    "sketch_size": None,
    "tau_query": None,
    "mesh": {},
}

WORKER_DEFAULT = 1

_STUDY = dict(RUN_DEFAULTS)
_THRESHOLDS = {}
_WORKERS = {"count": None}


def study(**settings):
    """Set study fields (problem, stage, design, delta, tau, ...)."""
    unknown = set(settings) - set(RUN_DEFAULTS)
    if unknown:
        names = ", ".join(sorted(unknown))
        raise UsageError(f"unknown study setting(s): {names}")
    _STUDY.update(settings)
    debug(f"CONFIG: study {settings}")


def thresholds(**limits):
    """
    Acceptance limits per report metric, e.g.
    ``thresholds(mean_dual_err={"max": 0.15}, speedup={"min": 10})``.
    Prefix a metric with ``ratio_`` to bound the ratio to a baseline report.
    """
    for metric, bounds in limits.items():
        if isinstance(bounds, (tuple, list)):
            pairs = zip(("min", "max"), bounds)
            bounds = {k: v for k, v in pairs if v is not None}
        _THRESHOLDS[_metric_name(metric)] = dict(bounds)


def _metric_name(name):
    if name.startswith("ratio_"):
        return "ratio:" + name[len("ratio_") :]
    return name


def workers(count):
    if int(count) < 1:
        raise UsageError(f"workers must be at least 1, got {count}")
    _WORKERS["count"] = int(count)


# needed for testing teardowns
def reset_configuration():
    """reset configuration settings completely"""
    _STUDY.clear()
    _STUDY.update(RUN_DEFAULTS)
    _THRESHOLDS.clear()
    _WORKERS["count"] = None


def _threads_from_env():
    env = os.environ.get("CONTACTROM_THREADS")
    if not env:
        return None
    try:
        return int(env)
    except ValueError:
        msg = f"CONTACTROM_THREADS={env!r} is not a number"
        raise UsageError(msg) from None


def get_configuration(**overrides):
    """
    The effective ``RunConfig``: defaults, then the loaded config, then
    CONTACTROM_THREADS, then ``overrides`` (command-line flags). ``None``
    overrides are ignored.
    """
    data = dict(_STUDY)
    data["thresholds"] = dict(_THRESHOLDS)
    data["workers"] = _WORKERS["count"] or WORKER_DEFAULT
    env = _threads_from_env()
    if env is not None:
        data["workers"] = env
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**data)


def _apply(data, path):
    data = dict(data)
    if "thresholds" in data:
        thresholds(**data.pop("thresholds"))
    if "workers" in data:
        workers(data.pop("workers"))
    study(**data.pop("study", {}))
    study(**data)
    debug(f"CONFIG: loaded {path}")


def load_config(path):
    """Load a TOML or JSON config file into the current configuration."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file {path} does not exist")
    try:
        if path.suffix == ".toml":
            data = toml.load(str(path))
        elif path.suffix == ".json":
            data = json.loads(path.read_text())
        else:
            raise UsageError(f"config {path} must be .toml, .json or .py")
    except (toml.TomlDecodeError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot parse {path}: {e}") from None
    _apply(data, path)
