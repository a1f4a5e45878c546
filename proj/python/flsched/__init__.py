"""Federated learning client scheduling simulator.

Thin wrapper over the C++ core. Configs are passed as JSON text with the
same keys as the ``flsched`` command line tool.
"""

import json as _json

from ._core import (  # noqa: F401
    AouState,
    ChannelConfig,
    ChannelRealization,
    ConfigError,
    FormatError,
    IoError,
    LabeledDataset,
    ModelParams,
    NumericalError,
    ValueLedger,
    aou_step,
    default_config,
    draw_round,
    evaluate,
    grad_check,
    init_values,
    load_idx,
    local_loss,
    metrics_csv,
    partition_iid,
    partition_shards,
    reliable_set,
    resolve_config,
    select,
    synth_gaussian,
)
from . import _core


def _text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def run(config=None, threads=1):
    """Run one simulation; ``config`` is a dict or JSON text."""
    return _core.run(_text(config), threads)


def sweep(config=None, threads=1):
    """Run the config's policy x seed cross product."""
    return _core.sweep(_text(config), threads)
