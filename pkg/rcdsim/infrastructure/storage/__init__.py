# Results storage package
from rcdsim.infrastructure.storage.config_files import load_config_file, normalize_key
from rcdsim.infrastructure.storage.repository import ResultsRepository

__all__ = ["ResultsRepository", "load_config_file", "normalize_key"]
