"""Insertion plan data model for caimbench."""

from pydantic import BaseModel, ConfigDict, Field, field_validator

from caimbench.config import DEFAULT_INSERTION_PLAN


class InsertionPlan(BaseModel):
    """
    Backbone stages after which a CAIM block is placed.

    Positions are 1-based and refer to the output of that stage; a block is
    never placed in front of the first stage.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    positions: tuple[int, ...] = Field(
        default=DEFAULT_INSERTION_PLAN,
        description="Strictly increasing 1-based stage indices",
    )

    @field_validator("positions")
    @classmethod
    def validate_positions(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        """Positions must be positive and strictly increasing."""
        if any(p < 1 for p in v):
            raise ValueError(f"insertion positions are 1-based, got {list(v)}")
        if any(b <= a for a, b in zip(v, v[1:], strict=False)):
            raise ValueError(f"insertion positions must be strictly increasing, got {list(v)}")
        return v

    @classmethod
    def first(cls, k: int) -> "InsertionPlan":
        """Plan {1, ..., k}."""
        return cls(positions=tuple(range(1, k + 1)))

    def label(self) -> str:
        """Short label: "none", "1", "1-3" or "1,3,5"."""
        if not self.positions:
            return "none"
        if len(self.positions) > 1 and self.positions == tuple(
            range(self.positions[0], self.positions[-1] + 1)
        ):
            return f"{self.positions[0]}-{self.positions[-1]}"
        return ",".join(str(p) for p in self.positions)

    def __contains__(self, position: object) -> bool:
        return position in self.positions

    def __len__(self) -> int:
        return len(self.positions)

    def __str__(self) -> str:
        return f"InsertionPlan({self.label()})"
