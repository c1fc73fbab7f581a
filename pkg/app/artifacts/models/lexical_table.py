from typing import Dict, List

import numpy as np

from .base_artifact import BaseArtifact


class LexicalTransTable(BaseArtifact):
    """
    IBM Model 1 translation table t(target | source) over vocabulary ids.
    The `<null>` id is an ordinary source row. Every row sums to one.
    """
    _magic = "LEXTRANS v1"

    def __init__(self, V: int, table: Dict[int, Dict[int, float]]) -> None:
        self.V = V
        self.table = table
        self._rows: Dict[int, np.ndarray] = {}

    def __contains__(self, source_id: int) -> bool:
        return source_id in self.table

    def prob(self, target_id: int, source_id: int) -> float:
        return self.table.get(source_id, {}).get(target_id, 0.0)

    def row(self, source_id: int) -> np.ndarray:
        """Dense t(. | source) over all vocabulary ids."""
        row = self._rows.get(source_id)
        if row is None:
            row = np.zeros(self.V)
            for target_id, p in self.table.get(source_id, {}).items():
                row[target_id] = p
            row.flags.writeable = False
            self._rows[source_id] = row
        return row

    # --- Persistence ---

    def header_fields(self) -> List[str]:
        return [f"V={self.V}"]

    def to_lines(self) -> List[str]:
        return [
            f"{src}\t{tgt}\t{p!r}"
            for src in sorted(self.table)
            for tgt, p in sorted(self.table[src].items())
        ]

    @classmethod
    def from_lines(cls, fields: List[str], body: List[str]) -> "LexicalTransTable":
        values = dict(f.split("=", 1) for f in fields)
        table: Dict[int, Dict[int, float]] = {}
        for line in body:
            if not line:
                continue
            src, tgt, p = line.split("\t")
            table.setdefault(int(src), {})[int(tgt)] = float(p)
        return cls(int(values["V"]), table)
