"""Exception types raised by the estimation core."""


class AdaptmagError(Exception):
    """Base class for package errors."""


class DegenerateUpdateError(AdaptmagError):
    """A Bayesian update annihilated the posterior (zero total mass).

    Signals inconsistent inputs: the supplied outcome has zero probability
    under the current posterior and measurement model.
    """


class DegenerateDistributionError(AdaptmagError):
    """An estimate was requested from a distribution with no circular mean."""


class TrimError(AdaptmagError):
    """A coefficient-trim request would drop an index that is still needed."""
