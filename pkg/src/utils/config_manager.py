"""
Configuration manager: loads run configurations, applies overrides and keeps the last run.
"""
import logging
from pathlib import Path
from typing import Optional, Union

from src.models.run_config import ConfigError, RunConfig

logger = logging.getLogger(__name__)


class ConfigManager:
    """Manages run configuration with file persistence."""

    def __init__(self, config_dir: Optional[Path] = None):
        """
        Initialize configuration manager.

        Args:
            config_dir: Directory for persisted state (last validated run).
                       Defaults to user's home directory/.picard-chain/
        """
        if config_dir is None:
            home = Path.home()
            self.config_dir = home / '.picard-chain'
        else:
            self.config_dir = Path(config_dir)

        # Create config directory if it doesn't exist
        self.config_dir.mkdir(parents=True, exist_ok=True)

        self.last_run_path = self.config_dir / 'last_run.json'
        self.run_config: Optional[RunConfig] = None

    def load_run_config(self, file_path: Union[str, Path]) -> RunConfig:
        """
        Load and validate a run configuration.

        Raises:
            ConfigError: invalid or unreadable configuration
        """
        self.run_config = RunConfig.load_from_file(Path(file_path))
        logger.debug("loaded run configuration from %s", file_path)
        return self.run_config

    def get_run_config(self) -> Optional[RunConfig]:
        """Get current run configuration."""
        return self.run_config

    def update_run_config(self, **kwargs):
        """
        Apply command-line overrides; None values are ignored.

        Keys may name top-level attributes (mode) or attributes of the solver
        and output blocks (n_max, csv, json). Unknown keys are ignored.

        Raises:
            ConfigError: if the result is no longer valid
        """
        if self.run_config is None:
            raise ConfigError("config", "no configuration loaded")

        for key, value in kwargs.items():
            if value is None:
                continue
            for target in (self.run_config, self.run_config.solver, self.run_config.output):
                if hasattr(target, key):
                    setattr(target, key, value)
                    break

        self.run_config.validate()

    def save_last_run(self, config: Optional[RunConfig] = None):
        """Persist the last validated configuration."""
        config = config or self.run_config
        if config is None:
            return
        try:
            config.save_to_file(self.last_run_path)
        except OSError as e:
            logger.error("Error saving last run: %s", e)
            raise

    def load_last_run(self) -> Optional[RunConfig]:
        """Load the last persisted configuration, or None when absent or unreadable."""
        if not self.last_run_path.exists():
            return None
        try:
            return RunConfig.load_from_file(self.last_run_path)
        except ConfigError as e:
            logger.warning("Error loading last run: %s", e)
            return None
