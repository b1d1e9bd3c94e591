"""
Latticeworks v1.0 - Logging Module
===================================
Centralized logging system
"""

import logging
import sys
from typing import Optional
import config

class LatticeLogger:
    """Centralized logger for the application"""

    _instance: Optional[logging.Logger] = None

    @classmethod
    def get_logger(cls, name: str = "latticeworks") -> logging.Logger:
        """Get or create logger instance"""
        if cls._instance is None:
            cls._instance = cls._setup_logger("latticeworks")
        if name == "latticeworks":
            return cls._instance
        return cls._instance.getChild(name)

    @classmethod
    def set_level(cls, level: str) -> None:
        """Change the level of the shared logger and its console handler"""
        root = cls.get_logger()
        root.setLevel(getattr(logging, level.upper()))
        for handler in root.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
                handler.setLevel(getattr(logging, level.upper()))

    @classmethod
    def _setup_logger(cls, name: str) -> logging.Logger:
        """Setup logger with console and optional file handlers"""
        logger = logging.getLogger(name)
        logger.setLevel(getattr(logging, config.LOG_LEVEL))

        # Prevent duplicate handlers
        if logger.handlers:
            return logger

        # Console handler: stderr, stdout несе JSON/CSV звіти
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, config.LOG_LEVEL))
        console_formatter = logging.Formatter(
            '%(levelname)s - %(message)s'
        )
        console_handler.setFormatter(console_formatter)

        # File handler
        if config.LOG_TO_FILE:
            try:
                log_path = config.get_project_root() / config.LOG_FILE
                file_handler = logging.FileHandler(log_path, encoding='utf-8')
                file_handler.setLevel(logging.DEBUG)
                file_formatter = logging.Formatter(config.LOG_FORMAT)
                file_handler.setFormatter(file_formatter)
                logger.addHandler(file_handler)
            except Exception as e:
                print(f"Warning: Could not setup file logging: {e}", file=sys.stderr)

        logger.addHandler(console_handler)
        logger.propagate = False
        return logger

# Convenience function
def get_logger(name: str = "latticeworks") -> logging.Logger:
    """Get logger instance"""
    return LatticeLogger.get_logger(name)
