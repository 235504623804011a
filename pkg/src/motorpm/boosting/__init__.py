"""Multiclass gradient boosting: shared softmax core and three tree learners."""

from motorpm.boosting.cat import (
    CatBoostStyle,
    ObliviousTree,
    OrderedTargetStats,
    cat_fit,
    ordered_ctr,
    ordered_target_stat,
)
from motorpm.boosting.core import (
    BoostedEnsemble,
    RegressionTree,
    boosted_predict,
    softmax_grad_hess,
)
from motorpm.boosting.lgbm import LightGBMStyle, lgbm_fit
from motorpm.boosting.xgb import XGBoostStyle, xgb_fit, xgb_leaf_weight, xgb_split_gain

__all__ = [
    "BoostedEnsemble",
    "CatBoostStyle",
    "LightGBMStyle",
    "ObliviousTree",
    "OrderedTargetStats",
    "RegressionTree",
    "XGBoostStyle",
    "boosted_predict",
    "cat_fit",
    "lgbm_fit",
    "ordered_ctr",
    "ordered_target_stat",
    "softmax_grad_hess",
    "xgb_fit",
    "xgb_leaf_weight",
    "xgb_split_gain",
]
