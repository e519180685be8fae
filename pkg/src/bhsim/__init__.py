"""Black-hole search simulator for mobile agents on time-varying port-labeled graphs."""

from .engine import ConfigError, Engine, Outcome, TraceSink, detection_report, simulate
from .graph import Footprint, generate, load, validate

__all__ = ["ConfigError", "Engine", "Footprint", "Outcome", "TraceSink", "detection_report", "generate",
           "load", "simulate", "validate"]
__version__ = "0.1.0"
