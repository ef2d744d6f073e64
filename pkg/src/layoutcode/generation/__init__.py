from .baseline import BaselineModel, complete_baseline, fit_baseline
from .llm import (ChatClient, ConfigurationError, GenConfig, GenerationError, PermanentError,
                  TransportError, complete_llm)
from .records import GenerationRecord, read_records, write_records

__all__ = [
    "BaselineModel", "ChatClient", "ConfigurationError", "GenConfig", "GenerationError",
    "GenerationRecord", "PermanentError", "TransportError", "complete_baseline", "complete_llm",
    "fit_baseline", "read_records", "write_records",
]
