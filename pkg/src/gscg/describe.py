"""Deterministic English descriptions of a node's context, and riddle rounds.

Templated text, fixed section order (geometry, materials, colors, neighbor
relations, scene contents), sections gated by the ablation configuration.
The target's own label never appears: mentioning it would answer the riddle,
so matching neighbor or scene labels are rendered as unidentified objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import AblationConfig, GraphObjectClassifier
from .graph import GSCG, label_histogram, neighbors


@dataclass(frozen=True)
class Description:
    text: str
    config: AblationConfig
    target_id: int


@dataclass(frozen=True)
class RiddleRound:
    riddle_text: str
    choices: tuple[str, ...]
    correct_index: int
    ai_top1: str
    ai_top5: tuple[str, ...]


def _an(noun: str) -> str:
    return f"an {noun}" if noun[:1].lower() in "aeiou" else f"a {noun}"


def _join(items: list[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def _geometry_sentence(node) -> str:
    s = node.geometry.size
    dist = float(np.linalg.norm(node.geometry.centroid))
    return (f"It measures about {s[0]:.2f} m by {s[1]:.2f} m by {s[2]:.2f} m "
            f"along its principal axes and sits {dist:.2f} m from the camera.")


def _materials_sentence(node) -> str | None:
    if not node.materials:
        return None
    parts = [f"{round(p.area_fraction * 100)}% {p.material}" for p in node.materials]
    return f"Its surface is {_join(parts)}."


def _colors_sentence(node) -> str | None:
    totals: dict[str, float] = {}
    for part in node.materials:
        for share in part.colors:
            totals[share.name] = totals.get(share.name, 0.0) + part.area_fraction * share.fraction
    if not totals:
        return None
    grand = sum(totals.values())
    ordered = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    bits = [f"{round(v / grand * 100)}% {name}" for name, v in ordered]
    return f"Its coloring is {_join(bits)}."


_RELATION_PHRASE = {
    "touch": "It touches {what} (strength {w:.3f}).",
    "near": "It is near {what} (strength {w:.3f}).",
    "mixed": "It touches and sits near {what} (strength {w:.3f}).",
}


def _neighbor_sentences(graph: GSCG, target_id: int, hidden_label: str | None) -> list[str]:
    out = []
    for node, edge in neighbors(graph, target_id):
        if node.label is None or node.label == hidden_label:
            what = "an unidentified object"
        else:
            what = _an(node.label)
        out.append(_RELATION_PHRASE[edge.kind].format(what=what, w=edge.weight))
    return out


def _scene_sentence(graph: GSCG, target_id: int, hidden_label: str | None) -> str | None:
    hist = label_histogram(graph, exclude=target_id)
    hist.pop(hidden_label, None)
    if not hist:
        return None
    ordered = sorted(hist.items(), key=lambda kv: (-kv[1], kv[0]))
    bits = [f"{count} x {label}" for label, count in ordered]
    return f"The scene also contains {_join(bits)}."


def describe_object(graph: GSCG, target_id: int,
                    config: AblationConfig | None = None) -> Description:
    """Byte-deterministic context description honoring the configuration."""
    config = config or AblationConfig()
    if target_id not in graph.nodes:
        raise KeyError(f"unknown target node {target_id}")
    node = graph.nodes[target_id]
    hidden = node.label
    sentences: list[str] = ["Guess the object."]
    if config.use_geometry:
        sentences.append(_geometry_sentence(node))
    if config.use_materials:
        mat = _materials_sentence(node)
        if mat:
            sentences.append(mat)
    if config.use_materials and config.use_colors:
        col = _colors_sentence(node)
        if col:
            sentences.append(col)
    if config.use_neighbors:
        sentences.extend(_neighbor_sentences(graph, target_id, hidden))
    if config.use_extended_context:
        scene = _scene_sentence(graph, target_id, hidden)
        if scene:
            sentences.append(scene)
    return Description(text=" ".join(sentences), config=config, target_id=target_id)


def build_round(graph: GSCG, target_id: int, model: GraphObjectClassifier,
                seed: int = 0, n_choices: int = 5) -> RiddleRound:
    """Riddle text plus the model's top predictions as the choice list.

    Choices are the model's top five by probability; a missing correct
    answer replaces the lowest-probability incorrect choice. Choice order is
    shuffled by the seeded RNG; the model's unmodified top-1 is recorded for
    scoring.
    """
    truth = graph.nodes[target_id].label
    if truth is None:
        raise ValueError(f"target node {target_id} has no label to use as the answer")
    vocab = model.class_vocab
    if len(vocab) < 2:
        raise ValueError("need at least two classes for a round")
    proba = model.predict_proba(graph, target_id)
    order = np.argsort(-proba, kind="stable")
    top = [vocab[i] for i in order[:n_choices]]
    ai_top5 = tuple(top)
    if len(vocab) < n_choices:
        choices = list(vocab)
    elif truth in top:
        choices = list(top)
    else:
        choices = list(top[:-1]) + [truth]
    rng = np.random.default_rng(seed)
    rng.shuffle(choices)
    text = describe_object(graph, target_id, model.config).text
    return RiddleRound(
        riddle_text=text,
        choices=tuple(choices),
        correct_index=choices.index(truth),
        ai_top1=vocab[int(order[0])],
        ai_top5=ai_top5,
    )
