import os
from typing import Iterable, List, Tuple

from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import ArtifactError


class ArtifactManager:
    """
    A centralized manager for reading and writing versioned text artifacts.
    Every artifact starts with a header line `<MAGIC> <version> [fields...]`.
    """

    @staticmethod
    def write_artifact(path: str, header: str, lines: Iterable[str], force: bool = False) -> str:
        """
        Writes header and body lines to path.
        Refuses to replace an existing file unless force is set.
        The file is written to a temporary name first and moved into place.
        """
        ArtifactManager.check_writable([path], force)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        tmp_path = f"{path}.tmp"
        try:
            with open(tmp_path, "w", encoding="utf-8") as f:
                f.write(header.rstrip("\n") + "\n")
                for line in lines:
                    f.write(line.rstrip("\n") + "\n")
            os.replace(tmp_path, path)
        except Exception:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
        return path

    @staticmethod
    def check_writable(paths: Iterable[str], force: bool = False) -> None:
        """Raises before anything is written when one of several outputs already exists."""
        if force:
            return
        for path in paths:
            if os.path.exists(path):
                raise ArtifactError(ERROR_MESSAGES["artifact"]["exists"].format(path=path))

    @staticmethod
    def read_artifact(path: str, magic: str) -> Tuple[List[str], List[str]]:
        """
        Reads an artifact and checks its magic/version prefix, e.g. 'VOCAB v1'.
        Returns (extra header fields, body lines without trailing newlines).
        """
        if not os.path.exists(path):
            raise FileNotFoundError(ERROR_MESSAGES["not_found"]["artifact"].format(path=path))
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            body = [line.rstrip("\n") for line in f]
        if not header.startswith(magic):
            raise ArtifactError(ERROR_MESSAGES["artifact"]["bad_header"].format(path=path, expected=magic))
        fields = header[len(magic):].split()
        return fields, body

    @staticmethod
    def split_sections(body: List[str]) -> dict:
        """
        Groups body lines under `[section]` markers.
        Lines before the first marker are stored under ''.
        """
        sections = {"": []}
        current = ""
        for line in body:
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections.setdefault(current, [])
                continue
            if line:
                sections[current].append(line)
        return sections
