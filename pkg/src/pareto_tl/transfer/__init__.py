from .boosting import (
    BoostedTrees,
    IdtrModel,
    TwoStageBoostConfig,
    adaboost_r2,
    fit_idtr,
    idtr_predict,
    weighted_median,
)
from .finetune import FineTuneConfig, finetune, fit_ftann, fit_target_only, pretrain_source
from .losses import (
    beta_step,
    coral,
    mmd,
    multi_order_discrepancy,
    regressor_distance,
    total_loss,
)
from .multisource import (
    MsAnnConfig,
    MsAnnModel,
    fit_msann,
    msann_init,
    msann_loss_grad,
    msann_param_count,
    msann_predict,
)
