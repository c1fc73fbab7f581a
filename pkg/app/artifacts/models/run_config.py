import configparser
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from app.artifacts.artifact_manager import ArtifactManager
from app.utils.helpers import drop_none, require_file, validate_config


@dataclass(frozen=True)
class PathsConfig:
    pairs: Optional[str] = None
    test_pairs: Optional[str] = None
    stop_words: Optional[str] = None
    word_vectors: Optional[str] = None


@dataclass(frozen=True)
class CorpusConfig:
    min_count: int = 2
    raw: bool = False
    buckets: str = "b1:3-6,b2:7-15,b3:16-25"
    per_bucket: int = 100
    seed: int = 13


@dataclass(frozen=True)
class SifConfig:
    a: float = 1e-3
    dim: int = 50
    seed: int = 13


@dataclass(frozen=True)
class EvalConfig:
    bootstrap_iterations: int = 10000
    topic_words_per_topic: int = 10
    seed: int = 13


SECTIONS = ("paths", "corpus", "hmmlda", "sif", "lm", "decoder", "eval")


@dataclass(frozen=True)
class RunConfig:
    """
    All settings of a pipeline run, stored as a sectioned `key = value` file.
    Unset keys take the schema defaults.
    """
    paths: Any = None
    corpus: Any = None
    hmmlda: Any = None
    sif: Any = None
    lm: Any = None
    decoder: Any = None
    eval: Any = None
    source: Optional[str] = field(default=None, compare=False)

    MAGIC = "# RUNCONFIG v1"

    @classmethod
    def from_sections(cls, sections: Dict[str, Dict[str, Any]], source: Optional[str] = None) -> "RunConfig":
        """Validates each section through its schema; missing sections get defaults."""
        from app.schemas.config_schema import SECTION_SCHEMAS

        unknown = set(sections) - set(SECTIONS)
        if unknown:
            raise ValueError({name: ["Unknown section."] for name in sorted(unknown)})
        values = {}
        for name in SECTIONS:
            data = {k: v for k, v in sections.get(name, {}).items() if v != ""}
            values[name] = validate_config(SECTION_SCHEMAS[name](), data)
        return cls(source=source, **values)

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> "RunConfig":
        """
        Reads the file at path (if any) and applies command-line overrides on
        top; None-valued overrides are ignored.
        """
        sections: Dict[str, Dict[str, Any]] = {}
        if path:
            parser = configparser.ConfigParser(interpolation=None)
            parser.optionxform = str
            with open(require_file(path), "r", encoding="utf-8") as f:
                parser.read_file(f)
            sections = {name: dict(parser[name]) for name in parser.sections()}
        for name, values in (overrides or {}).items():
            sections.setdefault(name, {}).update(drop_none(values))
        return cls.from_sections(sections, source=path)

    def to_sections(self) -> Dict[str, Dict[str, str]]:
        from app.schemas.config_schema import SECTION_SCHEMAS

        sections = {}
        for name in SECTIONS:
            dumped = SECTION_SCHEMAS[name]().dump(getattr(self, name))
            sections[name] = {k: str(v) for k, v in dumped.items() if v is not None}
        return sections

    def to_lines(self) -> List[str]:
        lines: List[str] = []
        for name, values in self.to_sections().items():
            lines.append(f"[{name}]")
            lines.extend(f"{key} = {value}" for key, value in values.items())
            lines.append("")
        return lines

    def dump(self, path: str, force: bool = False) -> str:
        return ArtifactManager.write_artifact(path, self.MAGIC, self.to_lines(), force=force)
