"""Round-trip clock offset estimation.

The server pings, the device echoes receive/send timestamps, and each
exchange yields one sample (t0, t1, t2, t3): server send, device receive,
device send, server receive.  Per sample

    offset = ((t1 - t0) + (t2 - t3)) / 2      (device clock - server clock)
    rtt    = (t3 - t0) - (t2 - t1)

Asymmetric network delay biases a single sample by at most rtt/2, so the
estimator keeps the minimum-RTT sample and reports confidence = rtt_min / 2.
"""

from __future__ import annotations

from dataclasses import dataclass

E_NO_SAMPLES = "E_NO_SAMPLES"


class ClockSyncError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class PingSample:
    t0: int
    t1: int
    t2: int
    t3: int

    @property
    def offset(self) -> float:
        return ((self.t1 - self.t0) + (self.t2 - self.t3)) / 2

    @property
    def rtt(self) -> int:
        return (self.t3 - self.t0) - (self.t2 - self.t1)


def estimate_clock_offset(samples: list[PingSample]) -> tuple[float, float]:
    """(offset, confidence) in ms from the minimum-RTT sample.

    Ties go to the earliest sample, which keeps the estimate stable when a
    device reports identical RTTs.
    """
    if not samples:
        raise ClockSyncError(E_NO_SAMPLES, "need at least one ping sample")
    best = min(samples, key=lambda s: s.rtt)
    return best.offset, best.rtt / 2
