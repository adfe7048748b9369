"""Flat little-endian float64 parameter files with a JSON sidecar"""
import json
import logging
import math
from pathlib import Path

import numpy as np

from src.domain.repositories import ParameterRepository

logger = logging.getLogger(__name__)


class BinaryParameterRepository(ParameterRepository):
    """`<name>.bin` holds the vector, `<name>.json` lists {name, offset, shape} per segment"""

    @staticmethod
    def _paths(path: str) -> tuple[Path, Path]:
        base = Path(path).with_suffix("")
        return base.with_suffix(".bin"), base.with_suffix(".json")

    def save(self, path: str, values, segments: dict) -> None:
        binary, sidecar = self._paths(path)
        binary.parent.mkdir(parents=True, exist_ok=True)
        values = np.asarray(values, dtype="<f8")
        values.tofile(binary)
        table = [{"name": name, "offset": offset, "shape": list(shape)} for name, (offset, shape) in segments.items()]
        sidecar.write_text(json.dumps({"segments": table, "total": int(values.size)}, indent=2) + "\n")
        logger.info(f"Saved {values.size} parameters to {binary}")

    def load(self, path: str) -> tuple:
        binary, sidecar = self._paths(path)
        layout = json.loads(sidecar.read_text())
        values = np.fromfile(binary, dtype="<f8").astype(np.float64)
        if values.size != layout["total"]:
            raise ValueError(f"{binary} holds {values.size} values, sidecar declares {layout['total']}")
        segments = {entry["name"]: (entry["offset"], tuple(entry["shape"])) for entry in layout["segments"]}
        covered = sum(math.prod(shape) for _, shape in segments.values())
        if covered != values.size:
            raise ValueError(f"sidecar segments cover {covered} of {values.size} values")
        return values, segments
