"""Timing-attack entropy, reflection-traffic simulation and deployment cost."""

from .cost import CostInputs, CostReport, cost_model
from .entropy import T_E, EntropyResult, EntropyScenario, entropy, entropy_sweep, mean_entropy
from .reflection import Attacker, ReflectionResult, random_attack_schedule, reflection_sim

__all__ = [
    "CostInputs", "CostReport", "cost_model", "T_E", "EntropyResult", "EntropyScenario", "entropy",
    "entropy_sweep", "mean_entropy", "Attacker", "ReflectionResult", "random_attack_schedule", "reflection_sim",
]
