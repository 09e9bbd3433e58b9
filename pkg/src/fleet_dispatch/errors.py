class FleetError(Exception):
    """Base class for all errors raised by fleet_dispatch."""


class InputError(FleetError, ValueError):
    """Malformed input: unknown ids, bad parameters, broken files."""


class InfeasibleRouteError(FleetError):
    """A route needs a leg that the reduced network does not contain."""


class ConstraintViolation(FleetError):
    """A request or vehicle is already in violation of one of its limits."""


class OracleCapExceeded(FleetError):
    """An exhaustive oracle was asked to handle a too-large instance."""


class InfeasibleError(FleetError):
    """No feasible schedule exists for a set of requests that must be served."""
