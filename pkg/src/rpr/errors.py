"""Exception hierarchy shared by every rpr module."""


class RprError(Exception):
    pass


# -- format / codec ----------------------------------------------------------

class FormatError(RprError):
    """Any malformed log, trace or checkpoint file."""


class TraceSyntaxError(FormatError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownFunction(FormatError):
    def __init__(self, line, name):
        super().__init__(f"line {line}: unknown function {name!r}")
        self.line = line
        self.name = name


class VersionMismatch(FormatError):
    pass


class BadMagic(FormatError):
    pass


class TruncatedRecord(FormatError):
    def __init__(self, offset):
        super().__init__(f"truncated data at byte offset {offset}")
        self.offset = offset


class DigestMismatch(FormatError):
    def __init__(self, digest):
        super().__init__(f"blob content does not hash to {digest.hex()}")
        self.digest = digest


class BadImage(FormatError):
    pass


class MissingBlob(RprError, KeyError):
    def __init__(self, digest):
        super().__init__(digest)
        self.digest = digest

    def __str__(self):
        return f"blob {self.digest.hex()} not in store"


# -- id translation ----------------------------------------------------------

class TableError(RprError):
    pass


class DuplicateReal(TableError):
    def __init__(self, kind, real):
        super().__init__(f"real id {real} already mapped for {kind.name}")
        self.kind = kind
        self.real = real


class UnknownVirtualId(TableError):
    def __init__(self, kind, vid):
        super().__init__(f"{kind.name}#{vid} has no real id")
        self.kind = kind
        self.vid = vid


class UntranslatableRealId(TableError):
    def __init__(self, kind, real):
        super().__init__(f"real {kind.name} id {real} has no virtual id")
        self.kind = kind
        self.real = real


# -- driver ------------------------------------------------------------------

class DriverError(RprError):
    pass


class NoContext(DriverError):
    pass


class ContextExists(DriverError):
    pass


class UseAfterDelete(DriverError):
    def __init__(self, kind, vid):
        super().__init__(f"{kind.name}#{vid} used after delete")
        self.kind = kind
        self.vid = vid


class InvalidCall(DriverError):
    """Argument outside the domain the catalog allows for that slot."""


# -- sessions ----------------------------------------------------------------

class SessionClosed(RprError):
    pass


class ReplayMismatch(RprError):
    pass
