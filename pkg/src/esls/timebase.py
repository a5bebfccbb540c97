"""Step index ``k`` and the derived research-step / inner-iteration counters."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Timebase:
    """Counters driven by the global step index ``k`` (1-based).

    ``t`` is the research step, ``tau`` the inner iteration in ``1..N``;
    ``tau`` resets and ``t`` increments every ``N`` steps.
    """

    k: int = 1
    N: int = 200

    def __post_init__(self):
        if self.k < 1 or self.N < 1:
            raise ValueError("k and N must be positive")

    @property
    def t(self) -> int:
        return -(-self.k // self.N)

    @property
    def tau(self) -> int:
        return self.k - (self.t - 1) * self.N

    @property
    def end_of_research_step(self) -> bool:
        return self.tau == self.N


def advance(tb: Timebase) -> Timebase:
    return Timebase(tb.k + 1, tb.N)


def start_of(t: int, N: int) -> Timebase:
    """Timebase at ``tau = 1`` of research step ``t``."""
    return Timebase((t - 1) * N + 1, N)
