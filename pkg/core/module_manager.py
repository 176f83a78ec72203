"""
Менеджер модулей: хранит модули и передаёт их команды приложению
"""
import logging
from typing import TYPE_CHECKING, Dict, List, Optional

from modules.base import BaseModule

if TYPE_CHECKING:
    from core.app import FairPostApp

logger = logging.getLogger(__name__)


class ModuleManager:
    """
    Реестр модулей fairpost.
    Модуль можно зарегистрировать до или после создания приложения,
    отключённый модуль остаётся в справке, но его команды не выполняются.
    """

    def __init__(self):
        self._modules: Dict[str, BaseModule] = {}
        self._app: Optional["FairPostApp"] = None

    def register_module(self, module: BaseModule) -> None:
        if module.name in self._modules:
            logger.debug(f"Module {module.name} already registered, skipping")
            return
        self._modules[module.name] = module
        if self._app is not None:
            module.register(self._app)
        logger.debug(f"Module {module.name} registered")

    def set_application(self, app: "FairPostApp") -> None:
        """Передаёт приложению команды всех уже зарегистрированных модулей"""
        self._app = app
        for module in self._modules.values():
            module.register(app)

    def get_module(self, name: str) -> Optional[BaseModule]:
        return self._modules.get(name)

    def _set_enabled(self, name: str, enabled: bool) -> bool:
        module = self.get_module(name)
        if module is None:
            logger.warning(f"Unknown module {name}")
            return False
        module.enabled = enabled
        logger.info(f"Module {name} {'enabled' if enabled else 'disabled'}")
        return True

    def enable_module(self, name: str) -> bool:
        return self._set_enabled(name, True)

    def disable_module(self, name: str) -> bool:
        return self._set_enabled(name, False)

    def summary(self) -> List[str]:
        return [repr(module) for module in self._modules.values()]

    def __len__(self) -> int:
        return len(self._modules)


# Глобальный экземпляр менеджера модулей
module_manager = ModuleManager()
