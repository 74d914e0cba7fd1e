"""Exception hierarchy shared by every hglab module."""


class HGLabError(Exception):
    """Base class for all errors raised by hglab."""


# projlin
class NotCollinear(HGLabError):
    pass


class DegenerateQuadruple(HGLabError):
    pass


class Singular(HGLabError):
    pass


class EmptyProduct(HGLabError):
    pass


class IndexOutOfRange(HGLabError, IndexError):
    pass


# domains
class NotInterior(HGLabError):
    pass


class CoincidentPoints(HGLabError):
    pass


class NotOnBoundary(HGLabError):
    pass


class UnsupportedRepresentation(HGLabError):
    pass


class BadDimensions(HGLabError):
    pass


class BadCartanData(HGLabError):
    pass


class NotProximalEnough(HGLabError):
    pass


class BadExponent(HGLabError):
    pass


class DomainFormatError(HGLabError):
    pass


# hilbert
class OutOfRange(HGLabError):
    pass


class SamplerProducedIntersectingBall(HGLabError):
    pass


# groups
class ExplosionGuard(HGLabError):
    pass


class RayExitsReach(HGLabError):
    pass


class NotCommuting(HGLabError):
    pass


class DegenerateWeights(HGLabError):
    pass


class NotBiproximal(HGLabError):
    pass


# regularity
class EndpointNotBoundary(HGLabError):
    pass


class NonUniqueSupportRequired(HGLabError):
    pass


class InsufficientScales(HGLabError):
    pass


class NotC1Point(HGLabError):
    pass


class NotDivergent(HGLabError):
    pass


class TooShort(HGLabError):
    pass


class EmptyAnnulus(HGLabError):
    pass


class NoStableGap(HGLabError):
    pass


class NotTracking(HGLabError):
    pass


# benzecri
class DimensionMismatch(HGLabError):
    pass


class DegenerateDomain(HGLabError):
    pass


# cli
class ConfigInvalid(HGLabError):
    pass


class ScenarioFailed(HGLabError):
    pass
