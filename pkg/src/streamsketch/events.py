"""Stream element types: timestamped edges and multi-aspect records."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True, slots=True)
class EdgeEvent:
    """One directed edge from a dynamic-graph stream.

    Ticks are discrete and non-decreasing across a stream; several edges may
    share a tick. Weight defaults to 1 for unweighted streams.
    """

    source: object
    dest: object
    tick: int
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"edge weight must be >= 0, got {self.weight}")
        if self.tick < 1:
            raise ValueError(f"tick must be >= 1, got {self.tick}")

    @property
    def key(self) -> tuple:
        return (self.source, self.dest)


@dataclass(frozen=True, slots=True)
class MultiAspectRecord:
    """A data point with ordered categorical and numeric attributes.

    The attribute arity is fixed over the lifetime of a detector; every
    record scored by one detector must carry the same split.
    """

    categorical: tuple = field(default=())
    numeric: tuple = field(default=())
    tick: int = 1

    def __post_init__(self):
        object.__setattr__(self, "categorical", tuple(self.categorical))
        object.__setattr__(self, "numeric", tuple(float(x) for x in self.numeric))
        if self.tick < 1:
            raise ValueError(f"tick must be >= 1, got {self.tick}")

    @property
    def arity(self) -> int:
        return len(self.categorical) + len(self.numeric)
