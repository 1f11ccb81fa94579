"""Exception types shared across the platform."""


class TeamtrisError(Exception):
    """Base class for all platform errors."""


# -- engine --

class IllegalPlacement(TeamtrisError):
    pass


class GameNotActive(TeamtrisError):
    pass


class EmptyPieceSet(TeamtrisError):
    pass


# -- learner --

class DimensionMismatch(TeamtrisError):
    pass


class NoLegalPlacement(TeamtrisError):
    pass


class NoEligibleDecisions(TeamtrisError):
    pass


class EmptySampleList(TeamtrisError):
    pass


# -- team --

class UnknownGame(TeamtrisError):
    pass


class FeedbackOnDependentGame(TeamtrisError):
    pass


class ArchitectureMismatch(TeamtrisError):
    pass


# -- rules --

class UnknownPieceForBias(TeamtrisError):
    pass


class RemovalWouldEmptyPieceSet(TeamtrisError):
    pass


# -- session --

class InvalidConfig(TeamtrisError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class InvalidBoardIndex(TeamtrisError):
    pass


class FreezeBudgetExhausted(TeamtrisError):
    pass


class FreezeUnsupported(TeamtrisError):
    pass


class SessionEnded(TeamtrisError):
    pass


# -- protocol / persistence --

class MalformedMessage(TeamtrisError):
    pass


class SequenceGap(TeamtrisError):
    pass


class IoFailure(TeamtrisError):
    pass


class CorruptLog(TeamtrisError):
    pass
