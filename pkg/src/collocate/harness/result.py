"""Unified result for harness commands."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

#: Process exit codes of the command line.
EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_USAGE = 2


@dataclass
class CommandResult:
    """Result of a harness command.

    Attributes:
        success: Whether the command ran and its acceptance checks passed
        data: Result payload (JSON-serializable)
        error: Error message if the command failed
        exit_code: Process exit code for the command line

    Examples:
        >>> result = CommandResult.ok(match=True)
        >>> result.exit_code
        0

        >>> result = CommandResult.fail("slope 2.1 outside [3.7, 4.3]")
        >>> result.exit_code
        1
    """

    success: bool
    data: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    exit_code: int = EXIT_OK

    @classmethod
    def ok(cls, **data) -> "CommandResult":
        return cls(success=True, data=data)

    @classmethod
    def fail(cls, error: str, exit_code: int = EXIT_ACCEPTANCE, **data) -> "CommandResult":
        """Create a failed result; exit code 1 (acceptance) unless given."""
        return cls(success=False, data=data, error=error, exit_code=exit_code)

    @classmethod
    def usage_error(cls, error: str, **data) -> "CommandResult":
        return cls.fail(error, exit_code=EXIT_USAGE, **data)

    def to_wire(self) -> Dict[str, Any]:
        """Serialize for JSON output.

        Example:
            >>> CommandResult.ok(value=42).to_wire()
            {'success': True, 'data': {'value': 42}}
        """
        d = {"success": self.success, "data": self.data}
        if self.error:
            d["error"] = self.error
        return d

    def __bool__(self) -> bool:
        return self.success
