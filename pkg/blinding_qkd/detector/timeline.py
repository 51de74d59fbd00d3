"""Per-gate state tags over one blinding interval."""
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict

import numpy as np

from blinding_qkd.errors import ProfileError
from blinding_qkd.models import AttackWindowProfile, BlindingConfig


class GateTag(IntEnum):
    BLIND_PULSE = 0
    DEAD = 1
    BLINDED_CONTROLLABLE = 2
    BLINDED_UNCONTROLLABLE = 3
    NORMAL = 4


@dataclass(frozen=True)
class GateTimeline:
    """
    Gate states of one interval.

    Gate 0 is the group-initial click (BLIND_PULSE); together with the DEAD
    gates after it, it fills the n_dead dead-time window. `pulse_mask` marks
    gates that are followed by a blinding pulse of the group.
    """
    tags: np.ndarray
    pulse_mask: np.ndarray

    def __len__(self) -> int:
        return int(self.tags.size)

    def counts(self) -> Dict[GateTag, int]:
        binned = np.bincount(self.tags, minlength=len(GateTag))
        return {tag: int(binned[tag]) for tag in GateTag}

    @property
    def blinded_start(self) -> int:
        """Index of the first gate after the dead time."""
        dead_window = np.flatnonzero(
            (self.tags == GateTag.BLIND_PULSE) | (self.tags == GateTag.DEAD)
        )
        return int(dead_window[-1] + 1) if dead_window.size else 0


def build_timeline(profile: AttackWindowProfile, blinding: BlindingConfig) -> GateTimeline:
    """
    Lay out one interval as: click gate, dead gates, blinded gates (the first
    n_control of them controllable), then normal gates up to n_interval.
    """
    n = profile.n_interval
    if blinding.cycle_count > n:
        raise ProfileError(f"{blinding.cycle_count} blinding cycles do not fit in {n} gates")

    tags = np.full(n, GateTag.NORMAL, dtype=np.int8)
    pulse_mask = np.zeros(n, dtype=bool)

    if profile.is_identity:
        return GateTimeline(tags=tags, pulse_mask=pulse_mask)

    if profile.n_dead < 1:
        raise ProfileError("A blinding group needs at least one dead-time gate for its initial click")

    pulse_mask[:blinding.cycle_count] = True
    tags[0] = GateTag.BLIND_PULSE
    tags[1:profile.n_dead] = GateTag.DEAD
    start = profile.n_dead
    tags[start:start + profile.n_control] = GateTag.BLINDED_CONTROLLABLE
    tags[start + profile.n_control:start + profile.n_blind] = GateTag.BLINDED_UNCONTROLLABLE

    timeline = GateTimeline(tags=tags, pulse_mask=pulse_mask)
    counts = timeline.counts()
    expected_normal = n - profile.n_dead - profile.n_blind
    if (counts[GateTag.BLINDED_CONTROLLABLE] != profile.n_control
            or counts[GateTag.NORMAL] != expected_normal):
        raise ProfileError(f"Timeline tag counts {counts} do not match profile {profile}")
    return timeline
