"""Exception hierarchy shared by all lotmorph modules."""


class LotmorphError(Exception):
    """Base class for every error raised by lotmorph."""


class ZeroMass(LotmorphError, ValueError):
    pass


class NegativeValue(LotmorphError, ValueError):
    pass


class NotNormalized(LotmorphError, ValueError):
    pass


class NonPositiveDensity(LotmorphError, ValueError):
    pass


class GridMismatch(LotmorphError, ValueError):
    pass


class FormatError(LotmorphError, ValueError):
    """Array container file has a bad magic string, header or dtype."""


class ShapeError(LotmorphError, ValueError):
    pass


class LengthMismatch(LotmorphError, ValueError):
    pass


class DimMismatch(LotmorphError, ValueError):
    pass


class EmptyInput(LotmorphError, ValueError):
    pass


class MissingColumn(LotmorphError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing column"


class EmptyManifest(LotmorphError, ValueError):
    pass


class UnreadableFile(LotmorphError, OSError):
    pass


class DegenerateData(LotmorphError, ValueError):
    pass


class DegenerateTarget(LotmorphError, ValueError):
    pass


class SingularPencil(LotmorphError, ValueError):
    pass


class ClassTooSmall(LotmorphError, ValueError):
    pass


class SingleClass(LotmorphError, ValueError):
    pass


class WriteError(LotmorphError, OSError):
    pass
