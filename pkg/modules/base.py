"""
Базовый класс для всех модулей командной строки
"""
import argparse
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, List

if TYPE_CHECKING:
    from core.app import FairPostApp


@dataclass(frozen=True)
class CommandSpec:
    """
    Подкоманда: имя, справка, настройка аргументов и обработчик.
    Обработчик возвращает код выхода.
    """
    name: str
    help: str
    configure: Callable[[argparse.ArgumentParser], None]
    handler: Callable[[argparse.Namespace], int]


class BaseModule(ABC):
    """
    Абстрактный базовый класс для модулей.
    Модуль объявляет свои подкоманды в get_handlers.
    """

    def __init__(self, name: str, description: str):
        self.name = name
        self.description = description
        self.enabled = True

    def register(self, app: "FairPostApp") -> None:
        """Добавляет подкоманды модуля в приложение"""
        for command in self.get_handlers():
            app.add_command(command, self)

    @abstractmethod
    def get_handlers(self) -> List[CommandSpec]:
        """Возвращает список команд модуля"""

    def __repr__(self) -> str:
        status = "enabled" if self.enabled else "disabled"
        return f"<Module {self.name} ({status}): {self.description}>"
