from .pgd import AttackError, PGDConfig, pgd_attack
from .robustness import robustness_eval, write_robustness_csv
from .training import DEFAULT_EPSILON_POOL, AdvTrainPolicy, adversarial_train

__all__ = [name for name in dir() if not name.startswith("_")]
