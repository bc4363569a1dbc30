"""Exception types shared across the package."""


class ErgochainError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ErgochainError):
    pass


class NegativeEntry(ErgochainError):
    def __init__(self, i, j, value):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"entry ({i},{j}) is negative: {value!r}")


class RowSumViolation(ErgochainError):
    def __init__(self, i, row_sum):
        self.i, self.row_sum = i, row_sum
        super().__init__(f"row {i} sums to {row_sum!r}, not 1")


class IndexOutOfRange(ErgochainError):
    pass


class SizeLimitExceeded(ErgochainError):
    def __init__(self, size, limit):
        self.size, self.limit = size, limit
        super().__init__(
            f"s={size} exceeds the exhaustive-enumeration limit s_max={limit}"
        )


class EmptyOrFullSubset(ErgochainError):
    pass


class CardinalityMismatch(ErgochainError):
    pass


class AsymmetricNeighborSet(ErgochainError):
    def __init__(self, i, j, n):
        self.i, self.j, self.n = i, j, n
        super().__init__(
            f"neighbor sets are asymmetric at n={n}: {j} in D_{i} but {i} not in D_{j}"
        )


class SelfConfidenceViolated(ErgochainError):
    def __init__(self, i, n, value):
        self.i, self.n, self.value = i, n, value
        super().__init__(
            f"diagonal rate a_{{{i}{i}}}({n}) = {value!r} is not positive; "
            "interaction kernel is too large for this population"
        )


class InvalidParameter(ErgochainError):
    pass


class IntegralEstimateUnreliable(ErgochainError):
    pass


class ParseError(ErgochainError):
    def __init__(self, where, message):
        self.where, self.message = where, message
        super().__init__(f"{where}: {message}")


class ValidationError(ErgochainError):
    def __init__(self, field, message=""):
        self.field = field
        super().__init__(f"invalid scenario field {field!r}" + (f": {message}" if message else ""))
