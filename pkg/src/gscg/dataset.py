"""Labeled classification samples: (graph, target node, true label) + JSONL IO."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .graph import GSCG, GraphFormatError, deserialize, serialize


@dataclass(frozen=True)
class Sample:
    graph: GSCG
    target_id: int
    label: str


def save_dataset(samples, path) -> None:
    """One JSON object per line: {"graph": <doc>, "target_id": n, "label": s}."""
    with open(path, "w") as f:
        for s in samples:
            rec = {"graph": json.loads(serialize(s.graph)),
                   "target_id": s.target_id, "label": s.label}
            f.write(json.dumps(rec, separators=(",", ":")))
            f.write("\n")


def load_dataset(path) -> list[Sample]:
    samples = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                graph = deserialize(json.dumps(rec["graph"]))
                samples.append(Sample(graph=graph, target_id=int(rec["target_id"]),
                                      label=str(rec["label"])))
            except (KeyError, ValueError, GraphFormatError) as exc:
                raise GraphFormatError(f"{Path(path).name}:{lineno}: {exc}") from exc
    return samples


def dataset_vocabularies(samples) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """(class vocab, material vocab) covering sample labels, node labels,
    and node materials across all graphs; sorted for determinism."""
    classes: set[str] = set()
    materials: set[str] = set()
    for s in samples:
        classes.add(s.label)
        for node in s.graph.nodes.values():
            if node.label is not None:
                classes.add(node.label)
            for part in node.materials:
                materials.add(part.material)
    return tuple(sorted(classes)), tuple(sorted(materials))
