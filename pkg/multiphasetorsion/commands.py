import argparse
import json
import logging
import sys
import typing
from typing import Dict, List, Optional

from multiphasetorsion.exceptions import TorsionException
from multiphasetorsion.reports import to_jsonable

# Get an instance of a logger
logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class CommandMetaclass(type):
    """
    Metaclass that records command methods
    """

    def __new__(mcs, name, bases, body):
        cls = type.__new__(mcs, name, bases, body)

        cls.available_commands = {}
        for method_name in dir(cls):
            attr = getattr(cls, method_name)
            is_command = getattr(attr, "command", False)
            if is_command:
                kwargs = getattr(attr, "kwargs", {})
                name = kwargs.get("name", method_name)
                cls.available_commands[name] = method_name

        return cls


class CommandConsumer(metaclass=CommandMetaclass):
    """
    Command-line front end: builds an argparse parser from the `@command()`
    methods, dispatches to them and maps exceptions to exit codes.

    Commands receive the parsed options and return a JSON-serialisable summary
    that :meth:`reply` prints (as one JSON object with ``--json``).
    """

    prog: Optional[str] = None
    description: Optional[str] = None

    def __init__(self, stdout: typing.TextIO = None, stderr: typing.TextIO = None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr
        self.json_output = False

    def get_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.prog, description=self.description)
        parser.add_argument(
            "--json", action="store_true", help="print a JSON summary on stdout"
        )
        parser.add_argument(
            "-v", "--verbose", action="store_true", help="log debug records to stderr"
        )
        subparsers = parser.add_subparsers(dest="command", metavar="command")
        subparsers.required = True
        for name in sorted(self.available_commands):
            method = getattr(self, self.available_commands[name])
            subparser = subparsers.add_parser(name, help=method.kwargs.get("help"))
            for flags, kwargs in method.arguments:
                subparser.add_argument(*flags, **kwargs)
        return parser

    def configure_logging(self, verbose: bool):
        handler = logging.StreamHandler(self.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root = logging.getLogger("multiphasetorsion")
        root.handlers = [handler]
        root.setLevel(logging.DEBUG if verbose else logging.INFO)
        root.propagate = False

    def handle_exception(self, exc: Exception, command: Optional[str]) -> int:
        """
        Report an exception and return the exit code it maps to.
        """
        if isinstance(exc, TorsionException):
            logger.error("%s failed: %s", command, exc.detail)
            self.reply(command, errors=[exc.as_dict()], status=exc.exit_code)
            return exc.exit_code
        logger.error(f"Error when handling command: {command}", exc_info=exc)
        self.reply(
            command,
            errors=[{"code": "error", "detail": str(exc)}],
            status=TorsionException.exit_code,
        )
        return TorsionException.exit_code

    def handle_command(self, command: str, options: argparse.Namespace) -> int:
        """
        Call the method registered for ``command`` and reply with its summary.
        """
        try:
            method_name = self.available_commands[command]
            method = getattr(self, method_name)
            data = method(options)
            self.reply(command, data=data, status=0)
            return 0
        except Exception as exc:
            return self.handle_exception(exc, command)

    def reply(
        self,
        command: Optional[str],
        data: Optional[Dict] = None,
        errors: Optional[List] = None,
        status: int = 0,
    ):
        if errors is None:
            errors = []

        if self.json_output:
            payload = {
                "command": command,
                "data": data,
                "errors": errors,
                "status": status,
            }
            self.stdout.write(json.dumps(to_jsonable(payload), sort_keys=True) + "\n")
            return

        for key, value in sorted((data or {}).items()):
            self.stdout.write(f"{key}: {to_jsonable(value)}\n")

    def run(self, argv: Optional[List[str]] = None) -> int:
        parser = self.get_parser()
        try:
            options = parser.parse_args(argv)
        except SystemExit as e:
            # argparse exits 2 on usage errors and 0 after --help
            return 0 if not e.code else 2
        self.json_output = options.json
        self.configure_logging(options.verbose)
        return self.handle_command(options.command, options)
