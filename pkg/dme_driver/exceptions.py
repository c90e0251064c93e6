class DmeDriverError(Exception):
    """Base class for every error raised by dme_driver."""


class ShapeError(DmeDriverError):
    pass


class ContractError(DmeDriverError):
    """A caller broke an operation's precondition."""


class EmptyContextError(ContractError):
    pass


class NonFiniteError(DmeDriverError):
    pass


class GenerationError(DmeDriverError):
    pass


class TransportError(DmeDriverError):
    def __init__(self, message: str, attempts: int = 1):
        super().__init__(f"{message} (after {attempts} attempt{'s' if attempts != 1 else ''})")
        self.attempts = attempts


class RecordFormatError(DmeDriverError):
    def __init__(self, message: str, line_number: int | None = None):
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line_number = line_number


class TrainingDivergedError(DmeDriverError):
    pass
