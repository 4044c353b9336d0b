"""Exception types raised by the simulator."""


class GridFreqError(Exception):
    """Base class for all simulator errors."""


class ConfigError(GridFreqError, ValueError):
    """Invalid or inconsistent configuration (unknown ids, bad curves, ...)."""


class NumericalError(GridFreqError, RuntimeError):
    """The integrated state became non-finite.

    Attributes
    ----------
    t : float
        Simulation time (s) of the first non-finite value.
    culprit : str
        ``"delta_f"`` or the id of the offending resource.
    """

    def __init__(self, t, culprit):
        self.t = t
        self.culprit = culprit
        super().__init__(f"non-finite state at t={t:.3f} s (culprit: {culprit})")


class MarketInfeasibleError(GridFreqError):
    """Market clearing has no feasible solution.

    Attributes
    ----------
    shortfall_mw : float
        Missing MW of energy or reserve capability.
    reason : str
        Which constraint could not be met.
    t : float or None
        Clearing time, when known.
    """

    def __init__(self, shortfall_mw, reason, t=None):
        self.shortfall_mw = float(shortfall_mw)
        self.reason = reason
        self.t = t
        where = "" if t is None else f" at t={t:.1f} s"
        super().__init__(f"market infeasible{where}: {reason}, shortfall {self.shortfall_mw:.3f} MW")
