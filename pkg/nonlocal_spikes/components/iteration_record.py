from .constants import MAX_HISTORY_LENGTH


class IterationRecord:
    """Class representing one step of a Newton-type iteration."""

    def __init__(self, iteration: int, residual: float, step: float = 0.0):
        self.iteration = iteration
        self.residual = residual
        self.step = step

    def to_dict(self) -> dict[str, float]:
        return {"iteration": self.iteration, "residual": self.residual, "step": self.step}


class IterationHistory:
    """Bounded history of iteration records."""

    def __init__(self, label: str):
        self.label = label
        self.records: list[IterationRecord] = []

    def record(self, iteration: int, residual: float, step: float = 0.0) -> None:
        self.records.append(IterationRecord(iteration, residual, step))
        if len(self.records) > MAX_HISTORY_LENGTH:
            self.records.pop(0)

    @property
    def residuals(self) -> list[float]:
        return [item.residual for item in self.records]

    def is_monotone(self) -> bool:
        """Whether the recorded residuals never increase."""
        values = self.residuals
        return all(b <= a for a, b in zip(values, values[1:]))

    def __len__(self) -> int:
        return len(self.records)
