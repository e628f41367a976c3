"""Domain exceptions.

The CLI maps any ``ProtocolError`` subclass to exit code 1 and prints the
class name on stderr, so error names here are part of the tool's surface.
"""


class ProtocolError(Exception):
    """Base class for every domain error raised by this package."""


# --- identity ---------------------------------------------------------------

class ValidationError(ProtocolError):
    """Malformed input (empty field, wrong byte length, bad date range)."""


class UnknownIssuer(ProtocolError):
    pass


class InvalidProof(ProtocolError):
    pass


class Unauthorized(ProtocolError):
    """Registration signature does not verify under the statement's key."""


class DuplicateIdentity(ProtocolError):
    """The identity digest is already present in the global state."""


class NotFound(ProtocolError):
    pass


class GovernanceRejected(ProtocolError):
    """Issuer-set change without the required approving weight."""


# --- capital ----------------------------------------------------------------

class UnknownAccount(ProtocolError):
    pass


class InsufficientBudget(ProtocolError):
    pass


class BadSignature(ProtocolError):
    pass


class SponsorNotCreator(ProtocolError):
    pass


class NothingToReassign(ProtocolError):
    pass


class InsufficientTokens(ProtocolError):
    pass


class EmptyValidatorSet(ProtocolError):
    pass


# --- consensus --------------------------------------------------------------

class BelowThreshold(ProtocolError):
    pass


class AlreadyMember(ProtocolError):
    pass


class NoCommitment(ProtocolError):
    pass


class CommitmentMismatch(ProtocolError):
    pass


class DoubleAttestation(ProtocolError):
    pass


class BadEvidence(ProtocolError):
    pass


# --- ledger -----------------------------------------------------------------

class WrongProposer(ProtocolError):
    pass


class StateRootMismatch(ProtocolError):
    pass


class NotLeader(ProtocolError):
    pass


class InvalidTransaction(ProtocolError):
    pass


class CorruptLine(ProtocolError):
    """Unparseable chain-file line; carries the 1-based line number and the
    valid chain prefix loaded so far (``.chain``)."""

    def __init__(self, line_no, chain=None):
        super().__init__("corrupt chain file line %d" % line_no)
        self.line_no = line_no
        self.chain = chain


class RootMismatch(ProtocolError):
    """Replayed state root differs from the stored block's root."""

    def __init__(self, slot):
        super().__init__("state root mismatch at slot %d" % slot)
        self.slot = slot


# --- netsim / analysis ------------------------------------------------------

class ConfigError(ProtocolError):
    pass


class BadShares(ProtocolError):
    pass


class BadParams(ProtocolError):
    pass


class AllZero(ProtocolError):
    pass
