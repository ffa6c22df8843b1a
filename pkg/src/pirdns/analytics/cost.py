"""Back-of-the-envelope monthly cost of running the resolver per user."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

KB_PER_GB = 1_000_000
SECONDS_PER_DAY = 86_400


@dataclass(frozen=True)
class CostInputs:
    queries_per_user_day: float = 3724
    qps_capacity: float = 8
    machine_monthly_cost: float = 149.0
    egress_cost_per_gb: float = 0.09
    response_kb: float = 40
    burst_qps: float = 126
    burst_users: int = 1033
    days_per_month: int = 30

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v <= 0:
                raise ValueError(f"{k} must be positive")


@dataclass(frozen=True)
class CostReport:
    users_per_machine: int
    compute_per_user: float
    egress_per_user: float
    burst_machines: int
    burst_compute_per_user: float

    @property
    def total_per_user(self) -> float:
        return self.compute_per_user + self.egress_per_user

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total_per_user"] = self.total_per_user
        return d


def cost_model(inp: CostInputs) -> CostReport:
    # rounded to the nearest user: 86400 * 8 / 3724 = 185.6 is reported as 186
    users = round(SECONDS_PER_DAY * inp.qps_capacity / inp.queries_per_user_day)
    egress = inp.queries_per_user_day * inp.days_per_month * inp.response_kb / KB_PER_GB * inp.egress_cost_per_gb
    machines = math.ceil(inp.burst_qps / inp.qps_capacity)
    return CostReport(
        users_per_machine=users,
        compute_per_user=inp.machine_monthly_cost / users,
        egress_per_user=egress,
        burst_machines=machines,
        burst_compute_per_user=machines * inp.machine_monthly_cost / inp.burst_users,
    )
