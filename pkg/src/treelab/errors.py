"""Exception types shared across the package."""


class TreeLabError(Exception):
    """Base class for all treelab errors."""


class InvalidAlphabetError(TreeLabError):
    """A vertex word uses a letter outside 1..q or is not reduced."""


class InvalidAutomorphismError(TreeLabError):
    """An automorphism description is malformed (non-bijective local map etc.)."""


class WrongWitnessError(TreeLabError):
    """A witness automorphism does not move the required configuration."""


class ReachViolationError(TreeLabError):
    """A windowed solve was asked to run with margin smaller than a generator reach."""


class DegenerateWindowError(TreeLabError):
    """The window of a truncated solve is empty."""


class NumericalInconsistencyError(TreeLabError):
    """Two independent numerical routes disagree beyond tolerance."""


class SolverFailureError(TreeLabError):
    """An iterative solver failed to converge within its iteration cap."""


class CocycleInconsistencyError(TreeLabError):
    """Two words for the same group element received different derivation values."""

    def __init__(self, word_a, word_b, message="cocycle table is not extendable"):
        super().__init__(f"{message}: {word_a!r} vs {word_b!r}")
        self.word_a = word_a
        self.word_b = word_b


class InvarianceFailureError(TreeLabError):
    """A subspace expected to be invariant is moved by a group element."""


class ConfigError(TreeLabError):
    """A configuration file is malformed or uses unknown fields."""
