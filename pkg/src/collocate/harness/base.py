"""Command registry shared by the experiment harness."""

import logging
from typing import Any, Callable, Dict, List

from pydantic import ValidationError

from ..exceptions import CollocateError, DimensionError, SchemeError
from .result import CommandResult

logger = logging.getLogger(__name__)


class CommandRegistry:
    """Dispatch named commands to handler methods.

    Handlers are registered explicitly with register_handler or discovered
    by method-name prefix. `execute` always returns a CommandResult:
    invalid input maps to a usage error (exit 2), other library errors to an
    acceptance failure (exit 1).

    Example:
        >>> class Harness(CommandRegistry):
        ...     def __init__(self):
        ...         super().__init__()
        ...         self.register_handlers_by_prefix("_cmd_")
        ...
        ...     def _cmd_ping(self, params):
        ...         return CommandResult.ok(pong=True)
        ...
        >>> Harness().execute("ping", {}).data
        {'pong': True}
    """

    def __init__(self):
        self._handlers: Dict[str, Callable[[Dict[str, Any]], Any]] = {}

    def register_handler(self, command: str, handler: Callable[[Dict[str, Any]], Any]) -> None:
        self._handlers[command] = handler

    def register_handlers_by_prefix(self, prefix: str = "_cmd_") -> None:
        """Register every method named {prefix}{command} for {command}."""
        prefix_len = len(prefix)
        for name in dir(self):
            if name.startswith(prefix):
                handler = getattr(self, name)
                if callable(handler):
                    self._handlers[name[prefix_len:]] = handler
                    logger.debug(f"Registered handler: {name[prefix_len:]} -> {name}")

    def execute(self, command: str, params: Dict[str, Any]) -> CommandResult:
        """Run a command; dict results are wrapped, exceptions become failed results."""
        handler = self._handlers.get(command)
        if handler is None:
            logger.warning(f"Unknown command: {command}")
            return CommandResult.usage_error(f"Unknown command: {command}")

        try:
            result = handler(params)
        except (ValidationError, DimensionError, SchemeError) as e:
            logger.error(f"Invalid input for {command}: {e}")
            return CommandResult.usage_error(str(e))
        except CollocateError as e:
            logger.error(f"{command} failed: {e}")
            return CommandResult.fail(str(e))
        except Exception as e:
            logger.exception(f"Handler error for {command}")
            return CommandResult.fail(str(e))

        if isinstance(result, CommandResult):
            return result
        if isinstance(result, dict):
            return CommandResult(success=True, data=result)
        return CommandResult.ok()

    def get_supported_commands(self) -> List[str]:
        return list(self._handlers.keys())
