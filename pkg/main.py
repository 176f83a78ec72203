#!/usr/bin/env python3
"""
fairpost - fair post-processing of classifier scores

Модули:
- data: разбиение выборки и калибровка отступов
- optimizer: обучение порогов групп (fit)
- decision: применение модели (apply)
- metrics: аудит смещения и нижняя граница (audit, bound)
- oracle: точные решения и синтетические данные (oracle-check, bayes-rule, synth)

Запуск:
    python main.py fit --input train.csv --out model.txt
"""
import logging
import sys
from pathlib import Path

# Add root directory to path
sys.path.insert(0, str(Path(__file__).parent))

from config.settings import DATA_DIR, LOG_FILE, LOG_LEVEL
from core.app import FairPostApp
from core.module_manager import ModuleManager, module_manager

# Import modules
from modules.data.module import data_module
from modules.decision.module import decision_module
from modules.logging_handler import run_log_handler
from modules.metrics.module import metrics_module
from modules.optimizer.module import optimizer_module
from modules.oracle.module import oracle_module

logger = logging.getLogger(__name__)


def configure_logging() -> None:
    handlers = [logging.StreamHandler(), run_log_handler]
    if LOG_FILE:
        DATA_DIR.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(DATA_DIR / LOG_FILE))
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=getattr(logging, LOG_LEVEL),
        handlers=handlers,
    )


def register_modules(manager: ModuleManager = module_manager) -> ModuleManager:
    """Регистрирует все модули в менеджере"""
    manager.register_module(data_module)
    manager.register_module(optimizer_module)
    manager.register_module(decision_module)
    manager.register_module(metrics_module)
    manager.register_module(oracle_module)
    return manager


def build_application(manager: ModuleManager = None) -> FairPostApp:
    """Создаёт приложение со всеми командами"""
    manager = register_modules(manager if manager is not None else ModuleManager())
    return FairPostApp(manager).setup()


def main() -> int:
    configure_logging()
    application = build_application(module_manager)
    logger.debug(f"Modules: {module_manager.summary()}, commands: {application.commands}")
    return application.run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
