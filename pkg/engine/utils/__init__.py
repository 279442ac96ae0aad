from engine.utils.errors import EngineError
from engine.utils.logger import current_trace_id, engine_logger, get_component_logger

__all__ = ["EngineError", "current_trace_id", "engine_logger", "get_component_logger"]
