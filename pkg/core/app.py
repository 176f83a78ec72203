"""
Основной класс приложения командной строки
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from core.errors import EXIT_OK, EXIT_USAGE, FairPostError, UsageError
from core.module_manager import ModuleManager, module_manager
from modules.base import BaseModule, CommandSpec
from modules.logging_handler import get_recent_logs, run_log_handler

logger = logging.getLogger(__name__)


class CommandParser(argparse.ArgumentParser):
    """argparse parser that raises UsageError instead of exiting"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


class FairPostApp:
    """
    Fair post-processing toolkit.
    Команды регистрируются модулями через менеджер модулей.
    """

    def __init__(self, manager: ModuleManager = module_manager):
        self.manager = manager
        self.parser = CommandParser(
            prog="fairpost",
            description="Fair post-processing of classifier scores with group-wise thresholds",
        )
        self.parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        self._subparsers = self.parser.add_subparsers(dest="command", parser_class=CommandParser)
        self._commands: Dict[str, Tuple[CommandSpec, BaseModule]] = {}

    def add_command(self, command: CommandSpec, module: BaseModule) -> None:
        if command.name in self._commands:
            raise RuntimeError(f"command {command.name} registered twice")
        sub = self._subparsers.add_parser(command.name, help=command.help, description=command.help)
        command.configure(sub)
        self._commands[command.name] = (command, module)

    @property
    def commands(self) -> List[str]:
        return list(self._commands)

    def setup(self) -> "FairPostApp":
        """Регистрирует команды всех модулей"""
        self.manager.set_application(self)
        return self

    def _summarize_warnings(self) -> None:
        if run_log_handler.warning_count:
            print(get_recent_logs(), file=sys.stderr)

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Разбирает аргументы, выполняет команду и возвращает код выхода"""
        run_log_handler.reset()
        try:
            try:
                args = self.parser.parse_args(argv)
            except SystemExit as e:
                # --help
                return EXIT_OK if not e.code else EXIT_USAGE
            if args.command is None:
                self.parser.print_help(sys.stderr)
                return EXIT_USAGE
            if args.verbose:
                logging.getLogger().setLevel(logging.DEBUG)

            command, module = self._commands[args.command]
            if not module.enabled:
                raise UsageError(f"command {command.name} is disabled")

            logger.info(f"Command {command.name} started")
            return command.handler(args)
        except FairPostError as e:
            logger.error(str(e))
            return e.exit_code
        finally:
            self._summarize_warnings()

