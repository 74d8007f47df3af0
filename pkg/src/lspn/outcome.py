from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

STATUSES = ("ok", "capped", "starved", "error")


@dataclass
class Outcome:
    """What a solver run produced.

    ``secret`` is None when nothing verified. ``status`` is "ok" for a normal
    run (found or not), "capped" when an iteration cap cut the theoretical
    budget short, "starved" when BKW ran out of votes.
    """

    secret: Optional[tuple]
    status: str = "ok"
    iterations: int = 0
    samples: int = 0
    detail: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.secret is not None
