"""Exception hierarchy shared by the library and the CLI."""


class CDMError(Exception):
    """Base class for all errors raised by cdmloc."""


class DomainError(CDMError, ValueError):
    """An argument lies outside the domain of an operation."""


class SchemaError(CDMError):
    """A data file does not match the expected layout."""


class RowError(SchemaError):
    """A single row of a data file could not be parsed."""

    def __init__(self, row_index, message):
        super().__init__(f"row {row_index}: {message}")
        self.row_index = row_index


class ConfigurationError(CDMError):
    """A run or manifest configuration is inconsistent."""
