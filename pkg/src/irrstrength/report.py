"""Structured pass/fail reports for the randomized-stage condition checks.

Checks never raise; they return a report so a Las Vegas driver can decide
whether to resample and so failures always carry a concrete witness
(the violated inequality instantiated with numbers).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class ConditionCheck:
    """One condition evaluated over all its instances.

    ``measured`` and ``bound`` describe the worst instance: the largest
    deviation seen against the allowed bound (slack already applied).
    """

    cond: str
    label: str
    passed: bool
    measured: float
    bound: float
    witness: str = ""
    violations: int = 0

    def line(self) -> str:
        state = "pass" if self.passed else "FAIL"
        text = (
            f"{self.cond} {self.label}: {state} "
            f"measured={self.measured!r} bound={self.bound!r}"
        )
        if self.witness:
            text += f" witness[{self.witness}]"
        return text


@dataclass
class ConditionReport:
    """Outcome of one full check pass (a set of conditions)."""

    checks: list[ConditionCheck] = field(default_factory=list)
    slack: float = 1.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_checks(self) -> list[ConditionCheck]:
        return [c for c in self.checks if not c.passed]

    def worst(self) -> ConditionCheck | None:
        """The failed check with the largest relative overshoot."""
        bad = self.failed_checks()
        if not bad:
            return None

        def overshoot(c: ConditionCheck) -> float:
            if c.bound > 0:
                return c.measured / c.bound
            return float("inf") if c.measured > 0 else 1.0

        return max(bad, key=overshoot)

    def to_text(self) -> str:
        """Flat key-value block, one line per field, deterministic."""
        lines = [f"slack={self.slack!r}"]
        for c in self.checks:
            key = c.cond
            lines.append(f"{key}.passed={str(c.passed).lower()}")
            lines.append(f"{key}.label={c.label}")
            lines.append(f"{key}.measured={c.measured!r}")
            lines.append(f"{key}.bound={c.bound!r}")
            lines.append(f"{key}.violations={c.violations}")
            lines.append(f"{key}.witness={c.witness}")
        return "\n".join(lines) + "\n"
