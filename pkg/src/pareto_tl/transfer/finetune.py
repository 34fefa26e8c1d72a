"""Model-based transfer: pretrain the MLP on source rows, copy it, fine-tune on target rows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import LabeledDataset
from ..errors import ShapeMismatch
from ..mlp import MlpParams, MlpSpec, mlp_init, mlp_train
from ..seeding import derive_seed


@dataclass(frozen=True)
class FineTuneConfig:
    epochs_source: int = 100
    epochs_target: int = 50
    lr: float = 0.005
    dropout_prob: float = 0.05

    def __post_init__(self):
        if self.epochs_source < 0 or self.epochs_target < 0:
            raise ValueError("epochs must be >= 0")


def pretrain_source(source: LabeledDataset | None, n_in: int, n_out: int,
                    cfg: FineTuneConfig = FineTuneConfig(), seed=0) -> MlpParams:
    """Initialise from ``seed`` and train ``epochs_source`` epochs on the source rows."""
    rng = np.random.default_rng(seed)
    params = mlp_init(MlpSpec(n_in, n_out, cfg.dropout_prob), rng)
    if source is None or source.n_rows == 0:
        return params
    if source.n_in != n_in or source.n_out != n_out:
        raise ShapeMismatch("source widths do not match the network")
    return mlp_train(params, source, cfg.epochs_source, cfg.lr, rng)


def finetune(source_params: MlpParams, target: LabeledDataset, cfg: FineTuneConfig = FineTuneConfig(),
             seed=0) -> MlpParams:
    """Copy every source parameter into the target model (fresh Adam state) and train on target rows."""
    if target.n_in != source_params.spec.n_in or target.n_out != source_params.spec.n_out:
        raise ShapeMismatch("target widths do not match the network")
    rng = np.random.default_rng(seed)
    return mlp_train(source_params.fresh_optimizer(), target, cfg.epochs_target, cfg.lr, rng)


def fit_ftann(source: LabeledDataset, target: LabeledDataset, cfg: FineTuneConfig = FineTuneConfig(),
              seed=0, finetune_seed=None) -> MlpParams:
    if source.n_in != target.n_in or source.n_out != target.n_out:
        raise ShapeMismatch("source and target widths differ")
    params = pretrain_source(source, target.n_in, target.n_out, cfg, seed)
    if finetune_seed is None:
        finetune_seed = derive_seed(int(seed), 1)
    return finetune(params, target, cfg, finetune_seed)


def fit_target_only(target: LabeledDataset, epochs: int, cfg: FineTuneConfig = FineTuneConfig(),
                    seed=0) -> MlpParams:
    """No-transfer baseline: the same network trained from scratch on target rows."""
    rng = np.random.default_rng(seed)
    params = mlp_init(MlpSpec(target.n_in, target.n_out, cfg.dropout_prob), rng)
    return mlp_train(params, target, epochs, cfg.lr, rng)
