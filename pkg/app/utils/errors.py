class DataError(ValueError):
    """Input data is empty, malformed or unusable for the requested operation."""


class ArtifactError(ValueError):
    """A model artifact has the wrong header or would be overwritten."""
