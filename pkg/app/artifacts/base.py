import os
from app.artifacts.config import Config

def get_run_path(run_dir=None, artifact=None, create=False):
    """
    Resolves a path inside the run directory.

    Args:
        run_dir (str): Run directory; falls back to Config.RUN_DIR.
        artifact (str): Artifact key from Config.ARTIFACTS, or None for the directory itself.
        create (bool): Create the run directory if it does not exist.

    Returns:
        The resolved path as a string.
    """
    run_dir = run_dir or Config.RUN_DIR
    if create:
        os.makedirs(run_dir, exist_ok=True)
    if artifact is None:
        return run_dir
    return os.path.join(run_dir, Config.get_artifact_name(artifact))
