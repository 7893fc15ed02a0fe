"""SGD, learning-rate schedule and EMA weight averaging."""

from maskface_utils.optim.ema import EMAConfig, EMAState, ModelEMA, ema_init, ema_swap, ema_update
from maskface_utils.optim.schedule import RESTART_POLICIES, ScheduleConfig, lr_at
from maskface_utils.optim.sgd import SGD, SGDConfig, sgd_step

__all__ = [
    "SGD",
    "SGDConfig",
    "sgd_step",
    "ScheduleConfig",
    "RESTART_POLICIES",
    "lr_at",
    "EMAConfig",
    "EMAState",
    "ModelEMA",
    "ema_init",
    "ema_update",
    "ema_swap",
]
