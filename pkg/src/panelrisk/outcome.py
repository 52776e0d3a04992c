from __future__ import annotations

import math
from dataclasses import dataclass, field

ALPHAS = (0.01, 0.05, 0.10)


def decide(p_value: float, alpha: float, reject_label: str = "reject") -> str:
    """Decision as a pure function of the p-value and the level."""
    if math.isnan(p_value):
        return "undefined"
    return reject_label if p_value < alpha else "fail_to_reject"


@dataclass(frozen=True)
class TestOutcome:
    test_name: str
    statistic: float
    distribution: str
    p_value: float
    dof: int | tuple[int, int] | None = None
    reject_label: str = "reject"
    extra: dict = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if not math.isnan(self.p_value) and not 0.0 <= self.p_value <= 1.0:
            object.__setattr__(self, "p_value", min(1.0, max(0.0, self.p_value)))
        if self.distribution == "chi_squared" and (self.dof is None or self.dof < 1):
            raise ValueError("chi-squared outcomes need dof >= 1")

    @property
    def decision_at(self) -> dict[float, str]:
        return {a: decide(self.p_value, a, self.reject_label) for a in ALPHAS}

    def decision(self, alpha: float = 0.05) -> str:
        return decide(self.p_value, alpha, self.reject_label)

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return {
            "test": self.test_name,
            "statistic": self.statistic,
            "distribution": self.distribution,
            "dof": list(self.dof) if isinstance(self.dof, tuple) else self.dof,
            "p_value": self.p_value,
            "decision_at": {f"{a:.2f}": d for a, d in self.decision_at.items()},
            **({"extra": self.extra} if self.extra else {}),
        }
