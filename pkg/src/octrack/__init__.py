"""Online multi-object tracking with overlap-aware post-association
identity correction, plus evaluation and synthetic-scenario tooling."""

from .config import TrackerConfig
from .geometry import BoundingBox
from .tracker import Detection, Tracker

__all__ = ["BoundingBox", "Detection", "Tracker", "TrackerConfig"]
__version__ = "0.1.0"
