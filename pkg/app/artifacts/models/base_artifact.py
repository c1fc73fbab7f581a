from typing import List, Optional, Type, TypeVar

from app.artifacts.artifact_manager import ArtifactManager

T = TypeVar("T", bound="BaseArtifact")


class BaseArtifact:
    """
    Persistence mixin for model objects stored as versioned text files.

    Subclasses set `_magic` (e.g. 'VOCAB v1') and implement `header_fields`,
    `to_lines` and `from_lines`.
    """
    _magic: Optional[str] = None

    def header_fields(self) -> List[str]:
        return []

    def to_lines(self) -> List[str]:
        raise NotImplementedError

    @classmethod
    def from_lines(cls: Type[T], fields: List[str], body: List[str]) -> T:
        raise NotImplementedError

    def save(self, path: str, force: bool = False) -> str:
        if not self._magic:
            raise ValueError("Artifact must define _magic")
        header = " ".join([self._magic] + [str(f) for f in self.header_fields()])
        return ArtifactManager.write_artifact(path, header, self.to_lines(), force=force)

    @classmethod
    def load(cls: Type[T], path: str) -> T:
        if not cls._magic:
            raise ValueError("Artifact must define _magic")
        fields, body = ArtifactManager.read_artifact(path, cls._magic)
        return cls.from_lines(fields, body)
