"""Stream policy: an ambiguous frame is replaced by the most recent regular one."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from voxradar.framefilter.network import Verdict
from voxradar.reconstruct import PowerGrid


class Flag(str, enum.Enum):
    FRESH = "fresh"
    HELD = "held"
    UNVERIFIED = "unverified"


@dataclass(frozen=True)
class StreamState:
    last_regular: PowerGrid | None = None
    held_count: int = 0


def stream_filter(state: StreamState, frame: PowerGrid,
                  verdict: Verdict) -> tuple[StreamState, PowerGrid, Flag]:
    if Verdict(verdict) is Verdict.REGULAR:
        return StreamState(frame, 0), frame, Flag.FRESH
    if state.last_regular is not None:
        return replace(state, held_count=state.held_count + 1), state.last_regular, Flag.HELD
    # nothing to hold yet
    return state, frame, Flag.UNVERIFIED
