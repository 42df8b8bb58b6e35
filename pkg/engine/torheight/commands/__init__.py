"""Command registry for the CLI.

Commands register on a :class:`CommandRouter` with a decorator, the way
handlers attach to a router; the application includes every router and
dispatches by name.
"""
import argparse
from dataclasses import dataclass, field
from typing import Callable, Optional

from pydantic import BaseModel

from ..errors import InputError
from ..exact import ValueGroup


@dataclass
class CommandContext:
    args: argparse.Namespace
    document: Optional[BaseModel]
    group: ValueGroup
    tolerance: float


@dataclass
class CommandOutput:
    payload: dict
    exact: bool = True
    # header + rows for --format csv; without them the payload is flattened
    table: Optional[tuple[list[str], list[list[str]]]] = None
    failure: Optional[str] = None


@dataclass
class Command:
    name: str
    handler: Callable[[CommandContext], CommandOutput]
    schema: Optional[type[BaseModel]]
    input_required: bool = True
    help: str = ""


@dataclass
class CommandRouter:
    tags: tuple[str, ...] = ()
    commands: dict[str, Command] = field(default_factory=dict)

    def command(self, name: str, schema: Optional[type[BaseModel]] = None, input_required: bool = True):
        def decorator(handler):
            if name in self.commands:
                raise ValueError(f"command {name!r} registered twice")
            self.commands[name] = Command(name, handler, schema, input_required, (handler.__doc__ or "").strip())
            return handler

        return decorator

    def include_router(self, router: "CommandRouter"):
        for name, command in router.commands.items():
            if name in self.commands:
                raise ValueError(f"command {name!r} registered twice")
            self.commands[name] = command

    def resolve(self, name: str) -> Command:
        try:
            return self.commands[name]
        except KeyError:
            raise InputError(f"unknown command {name!r}; expected one of {', '.join(sorted(self.commands))}") from None
