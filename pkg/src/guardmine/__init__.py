"""Mining semantic categories of revert-guard invariants from failed transactions."""

__version__ = "0.1.0"
