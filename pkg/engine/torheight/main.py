import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import time
from typing import Optional, Sequence, TextIO

from pydantic import ValidationError

from .commands import CommandContext, CommandRouter
from .commands.check import router as check_router
from .commands.compute import router as compute_router
from .config import settings
from .errors import CheckFailed, GeometryError, InputError, TorheightError
from .exact import ValueGroup
from .schemas import CommandResult, dump_json

logger = logging.getLogger(__name__)

app = CommandRouter()
app.include_router(compute_router)
app.include_router(check_router)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torheight",
        description="Exact convex geometry for toric local and global heights.",
    )
    parser.add_argument("command", help=f"one of: {', '.join(sorted(app.commands))}")
    parser.add_argument("--input", help="JSON instance file")
    parser.add_argument("--output", help="write the result here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--tol", type=float, default=settings.TOLERANCE)
    parser.add_argument("--gamma", default="divisible", help="divisible | discrete:P/Q")
    parser.add_argument("--seed", type=int, default=0, help="seed for check")
    parser.add_argument("--instances", type=int, default=None, help="random instances per dimension for check")
    parser.add_argument("--mode", choices=("ambient", "relative"), default="ambient", help="volume mode")
    parser.add_argument("--place", help="place id for emit-roof")
    parser.add_argument("--resolution", type=int, default=1, help="grid refinement for emit-roof")
    parser.add_argument("--log-level", default=None)
    return parser


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(x) for x in error["loc"]) or "document"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def _read_document(path: str) -> tuple[bytes, object]:
    try:
        with open(path, "rb") as handle:
            raw = handle.read()
    except OSError as exc:
        raise InputError(f"cannot read input file {path!r}: {exc.strerror}") from None
    try:
        return raw, json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"input is not valid JSON: {exc}") from None


def _flatten(value, prefix: str = "") -> list[list[str]]:
    if isinstance(value, dict):
        rows = []
        for key in sorted(value):
            rows.extend(_flatten(value[key], f"{prefix}.{key}" if prefix else str(key)))
        return rows
    if isinstance(value, list):
        rows = []
        for i, item in enumerate(value):
            rows.extend(_flatten(item, f"{prefix}[{i}]"))
        return rows
    return [[prefix, dump_json(value, settings.FLOAT_DIGITS).strip('"')]]


def render(result: CommandResult, output_format: str, table=None) -> str:
    if output_format == "json":
        return dump_json(result.model_dump(), settings.FLOAT_DIGITS) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if table is not None:
        header, rows = table
    else:
        header, rows = ["key", "value"], _flatten(result.payload)
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def execute(args: argparse.Namespace) -> tuple[str, Optional[str]]:
    """Run one command; returns the rendered output and a failure message for ``check``."""
    command = app.resolve(args.command)
    raw, document = b"", None
    if args.input is not None:
        raw, data = _read_document(args.input)
        try:
            document = command.schema.model_validate(data)
        except ValidationError as exc:
            raise InputError(f"schema violation: {_validation_message(exc)}") from None
    elif command.input_required:
        raise InputError(f"{command.name} needs --input")
    if args.tol <= 0:
        raise InputError("--tol must be positive")
    try:
        group = ValueGroup.parse(args.gamma)
    except GeometryError as exc:
        raise InputError(exc.detail) from None

    logger.info("running %s", command.name)
    start = time.perf_counter()
    output = command.handler(CommandContext(args, document, group, args.tol))
    elapsed_ms = (time.perf_counter() - start) * 1000
    result = CommandResult(
        command=command.name,
        inputs_digest=hashlib.sha256(raw).hexdigest(),
        payload=output.payload,
        exact=output.exact,
        elapsed_ms=elapsed_ms,
    )
    return render(result, args.format, output.table), output.failure


def run(argv: Optional[Sequence[str]] = None, stdout: TextIO = None, stderr: TextIO = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.LOG_LEVEL).upper(),
        stream=stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    try:
        text, failure = execute(args)
        if args.output:
            try:
                with open(args.output, "w", encoding="utf-8", newline="") as handle:
                    handle.write(text)
            except OSError as exc:
                raise InputError(f"cannot write output file {args.output!r}: {exc.strerror}") from None
        else:
            stdout.write(text)
        if failure:
            raise CheckFailed(failure)
    except TorheightError as exc:
        print(f"error: {exc.detail}", file=stderr)
        return exc.exit_code
    return 0


def main() -> None:
    sys.exit(run())
