"""Exception hierarchy shared by every module of the package."""


class CovertDnsError(Exception):
    """Base class for all errors raised by covertdns."""


# domain sets
class EmptyDataset(CovertDnsError, ValueError):
    pass


class MalformedDomain(CovertDnsError, ValueError):
    pass


class InvalidModel(CovertDnsError, ValueError):
    pass


# capture
class BadMagic(CovertDnsError, ValueError):
    pass


class TruncatedHeader(CovertDnsError, ValueError):
    pass


class UnsupportedLinkType(CovertDnsError, ValueError):
    pass


class EmptySeries(CovertDnsError, ValueError):
    pass


class IoFailure(CovertDnsError, OSError):
    pass


# time-series analysis
class SeriesTooShort(CovertDnsError, ValueError):
    pass


class ConstantSeries(CovertDnsError, ValueError):
    pass


class LagTooLarge(CovertDnsError, ValueError):
    pass


class SingularDesign(CovertDnsError, ValueError):
    pass


# IoC statistics and database
class DegenerateGroups(CovertDnsError, ValueError):
    pass


class ZeroWithinVariance(CovertDnsError, ValueError):
    pass


class NotReached(CovertDnsError, LookupError):
    pass


class EmptyDatabase(CovertDnsError, LookupError):
    pass


class ConfigMismatch(CovertDnsError, ValueError):
    pass


class SchemaViolation(CovertDnsError, ValueError):
    pass


class DuplicateFamily(CovertDnsError, ValueError):
    pass


# detection
class ConfigError(CovertDnsError, ValueError):
    pass
