from .base import get_run_path
from .artifact_manager import ArtifactManager
