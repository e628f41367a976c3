"""Protocol constants.

Defaults are the reference configuration; simulations and genesis files may
override any of them (``ProtocolParams.with_overrides``).  All amounts are
indivisible passive-capital units unless stated otherwise.
"""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class ProtocolParams:
    # capital
    passive_budget: int = 100            # per-identity endorsement budget
    full_endorsement: int = 100          # one follower's whole budget
    redistribution_delay_epochs: int = 2
    penalty_epochs: int = 8
    penalty_minor_factor: float = 2.0
    penalty_major_factor: float = 4.0
    endorsement_fee: float = 1.0         # flat, paid by the sponsored creator
    scaling_function: str = "sqrt"       # default creator scaling
    # participation: active capital must EXCEED multiplier * full_endorsement
    participation_multiplier: int = 10_000
    # consensus
    slots_per_epoch: int = 32
    activation_delay_slots: int = 64
    inactivity_limit: int = 8            # consecutive missed proposals
    proposer_reward: float = 1.0
    attester_reward: float = 0.01
    justification_numerator: int = 2     # weight threshold = 2/3
    justification_denominator: int = 3
    # simulated time
    slot_ms: int = 12_000

    @property
    def participation_threshold(self) -> int:
        return self.participation_multiplier * self.full_endorsement

    def epoch_of_slot(self, slot: int) -> int:
        return slot // self.slots_per_epoch

    def with_overrides(self, overrides: dict) -> "ProtocolParams":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError("unknown protocol constants: %s" % sorted(unknown))
        return replace(self, **overrides)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_PARAMS = ProtocolParams()
