"""Contextual object classifier over geo-semantic graphs.

Embeds the target object (label masked), aggregates its direct neighbors
with multi-head attention over edge-typed representations, folds in a
global label-histogram context, and classifies with an MLP head. Ablation
configurations disable feature branches by substituting zero vectors at
fixed width, so one architecture serves every configuration; removing the
neighborhood switches to a separate neighborless head.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .graph import EDGE_KINDS, GSCG, label_histogram, neighbors
from .nn import ParamStore, Tensor


@dataclass(frozen=True)
class AblationConfig:
    use_geometry: bool = True
    use_materials: bool = True
    use_colors: bool = True
    use_neighbors: bool = True
    use_extended_context: bool = True


# The twelve benchmark configurations.
ABLATION_CONFIGS: dict[str, AblationConfig] = {
    "full_model": AblationConfig(),
    "no_geometry": AblationConfig(use_geometry=False),
    "no_colors": AblationConfig(use_colors=False),
    "no_colors_no_geometry": AblationConfig(use_colors=False, use_geometry=False),
    "no_materials": AblationConfig(use_materials=False, use_colors=False),
    "no_materials_no_geometry": AblationConfig(use_materials=False, use_colors=False,
                                               use_geometry=False),
    "no_neighbors": AblationConfig(use_neighbors=False),
    "no_neighbors_no_geometry": AblationConfig(use_neighbors=False, use_geometry=False),
    "no_extended_context": AblationConfig(use_extended_context=False),
    "no_extended_context_no_materials": AblationConfig(use_extended_context=False,
                                                       use_materials=False, use_colors=False),
    "no_neighbors_no_extended_context": AblationConfig(use_neighbors=False,
                                                       use_extended_context=False),
    # neighbor labels only: no geometry, no materials, no global context
    "minimal_model": AblationConfig(use_geometry=False, use_materials=False,
                                    use_colors=False, use_extended_context=False),
}


@dataclass(frozen=True)
class ModelDims:
    base_embed: int = 32
    geom_embed: int = 32
    color_embed: int = 32
    color_hidden: int = 64
    material_label_embed: int = 32
    material_embed: int = 64
    edge_type_embed: int = 16
    global_embed: int = 64
    attention_heads: int = 8
    classifier_hidden: int = 256
    dropout: float = 0.3
    object_embed: int = 128
    neighbor_proj: int = 128

    def __post_init__(self):
        if self.neighbor_proj % self.attention_heads:
            raise ValueError("neighbor_proj must be divisible by attention_heads")

    @property
    def geometry_input(self) -> int:
        return 15  # 3 size + 9 orientation (row-major) + 3 centroid

    @property
    def object_input(self) -> int:
        return self.base_embed + self.geom_embed + self.material_embed

    @property
    def neighbor_input(self) -> int:
        return self.object_embed + self.edge_type_embed + 1  # + scalar edge weight

    @property
    def full_head_input(self) -> int:
        return self.object_embed + self.neighbor_proj + self.global_embed

    @property
    def neighborless_head_input(self) -> int:
        return self.object_embed + self.global_embed


def geometry_vector(node) -> np.ndarray:
    g = node.geometry
    return np.concatenate([g.size, g.orientation.reshape(-1), g.centroid])


@dataclass
class SamplePack:
    """Precomputed per-sample feature matrices (parameters not involved).

    Node row 0 is the target (label one-hot zeroed); rows 1..M are its
    neighbors ordered by node id.
    """

    label_onehots: np.ndarray   # (1+M, C)
    geom: np.ndarray            # (1+M, 15)
    part_weights: np.ndarray    # (1+M, P) area fractions normalized per node
    part_label_onehots: np.ndarray  # (P, num_materials)
    color_weights: np.ndarray   # (P, K) color fractions per part
    color_labs: np.ndarray      # (K, 3)
    edge_kind_onehots: np.ndarray   # (M, 3)
    edge_weights: np.ndarray    # (M, 1)
    hist_counts: np.ndarray     # (1, C)
    target_index: int | None    # class index of the target's true label, if known
    n_target_parts: int = 0     # the target's parts/colors are stored first
    n_target_colors: int = 0


def prepare_sample(graph: GSCG, target_id: int, class_to_idx: dict[str, int],
                   material_to_idx: dict[str, int],
                   true_label: str | None = None) -> SamplePack:
    """Extract all model inputs for one (graph, target) pair."""
    if target_id not in graph.nodes:
        raise KeyError(f"unknown target node {target_id}")
    c = len(class_to_idx)
    nbrs = neighbors(graph, target_id)
    nodes = [graph.nodes[target_id]] + [n for n, _ in nbrs]
    n = len(nodes)

    label_onehots = np.zeros((n, c))
    for row, node in enumerate(nodes):
        if row == 0:
            continue  # target label is always masked
        if node.label is not None and node.label in class_to_idx:
            label_onehots[row, class_to_idx[node.label]] = 1.0

    geom = np.stack([geometry_vector(node) for node in nodes])

    parts = []
    part_owner = []
    for row, node in enumerate(nodes):
        for part in node.materials:
            parts.append(part)
            part_owner.append(row)
    p = len(parts)
    part_weights = np.zeros((n, p))
    for j, (row, part) in enumerate(zip(part_owner, parts)):
        part_weights[row, j] = part.area_fraction
    sums = part_weights.sum(axis=1, keepdims=True)
    np.divide(part_weights, sums, out=part_weights, where=sums > 0)

    part_label_onehots = np.zeros((p, len(material_to_idx)))
    colors = []
    color_owner = []
    for j, part in enumerate(parts):
        if part.material in material_to_idx:
            part_label_onehots[j, material_to_idx[part.material]] = 1.0
        for share in part.colors:
            colors.append(share)
            color_owner.append(j)
    k = len(colors)
    color_weights = np.zeros((p, k))
    for i, (j, share) in enumerate(zip(color_owner, colors)):
        color_weights[j, i] = share.fraction
    # LAB scaled to roughly unit range; raw L/a/b magnitudes (~100) would
    # dwarf every other branch at init
    color_labs = (np.array([list(s.lab) for s in colors]) / 100.0
                  if k else np.zeros((0, 3)))

    m = len(nbrs)
    edge_kind_onehots = np.zeros((m, len(EDGE_KINDS)))
    edge_weights = np.zeros((m, 1))
    for i, (_, edge) in enumerate(nbrs):
        edge_kind_onehots[i, EDGE_KINDS.index(edge.kind)] = 1.0
        edge_weights[i, 0] = edge.weight

    hist_counts = np.zeros((1, c))
    for lbl, count in label_histogram(graph, exclude=target_id).items():
        if lbl in class_to_idx:
            hist_counts[0, class_to_idx[lbl]] = count

    target_index = class_to_idx[true_label] if true_label is not None else None
    n_target_parts = len(nodes[0].materials)
    n_target_colors = sum(len(part.colors) for part in nodes[0].materials)
    return SamplePack(label_onehots=label_onehots, geom=geom,
                      part_weights=part_weights, part_label_onehots=part_label_onehots,
                      color_weights=color_weights, color_labs=color_labs,
                      edge_kind_onehots=edge_kind_onehots, edge_weights=edge_weights,
                      hist_counts=hist_counts, target_index=target_index,
                      n_target_parts=n_target_parts, n_target_colors=n_target_colors)


def target_only(pack: SamplePack) -> SamplePack:
    """Restrict a pack to node row 0. Parts and colors are stored in node
    order, so the target's entries form a prefix of those matrices. Keeps
    the neighborless path bit-independent of the neighborhood."""
    p0 = pack.n_target_parts
    k0 = pack.n_target_colors
    return SamplePack(
        label_onehots=pack.label_onehots[:1],
        geom=pack.geom[:1],
        part_weights=pack.part_weights[:1, :p0],
        part_label_onehots=pack.part_label_onehots[:p0],
        color_weights=pack.color_weights[:p0, :k0],
        color_labs=pack.color_labs[:k0],
        edge_kind_onehots=pack.edge_kind_onehots[:0],
        edge_weights=pack.edge_weights[:0],
        hist_counts=pack.hist_counts,
        target_index=pack.target_index,
        n_target_parts=p0,
        n_target_colors=k0,
    )


class GraphObjectClassifier:
    """Embedders + attention aggregation + classifier heads, all on the
    minimal tape kernel. One instance per ablation configuration."""

    def __init__(self, class_vocab, material_vocab, config: AblationConfig,
                 dims: ModelDims | None = None, seed: int = 0):
        self.class_vocab = tuple(class_vocab)
        self.material_vocab = tuple(material_vocab)
        self.class_to_idx = {c: i for i, c in enumerate(self.class_vocab)}
        self.material_to_idx = {m: i for i, m in enumerate(self.material_vocab)}
        self.config = config
        self.dims = dims or ModelDims()
        self.seed = seed
        if len(self.class_vocab) == 0:
            raise ValueError("empty class vocabulary")
        self.store = self._build_params(np.random.default_rng(seed))

    def _build_params(self, rng: np.random.Generator) -> ParamStore:
        d = self.dims
        c = len(self.class_vocab)
        nm = max(len(self.material_vocab), 1)
        s = ParamStore()
        # one-hot embedding tables (no bias: absent label stays a zero vector)
        s.add("label_embed.w", nn.kaiming_uniform(rng, c, d.base_embed))
        s.add("mat_label_embed.w", nn.kaiming_uniform(rng, nm, d.material_label_embed))
        s.add("edge_embed.w", nn.kaiming_uniform(rng, len(EDGE_KINDS), d.edge_type_embed))
        s.add_linear("geom.l1", d.geometry_input, d.geom_embed, rng)
        s.add_linear("geom.l2", d.geom_embed, d.geom_embed, rng)
        s.add_linear("color.l1", 3, d.color_hidden, rng)
        s.add_linear("color.l2", d.color_hidden, d.color_embed, rng)
        s.add_linear("color.l3", d.color_embed, d.color_embed, rng)
        s.add_linear("material.l1", d.material_label_embed + d.color_embed,
                     d.material_embed, rng)
        s.add_linear("material.l2", d.material_embed, d.material_embed, rng)
        s.add_linear("object.l1", d.object_input, d.object_embed, rng)
        s.add_linear("object.l2", d.object_embed, d.object_embed, rng)
        s.add_linear("nbr_proj", d.neighbor_input, d.neighbor_proj, rng)
        for name in ("attn.wq", "attn.wk", "attn.wv", "attn.wo"):
            s.add_linear(name, d.neighbor_proj, d.neighbor_proj, rng)
        s.add_linear("global.l1", c, d.global_embed, rng)
        s.add_linear("global.l2", d.global_embed, d.global_embed, rng)
        s.add_linear("head.l1", d.full_head_input, d.classifier_hidden, rng)
        s.add_linear("head.l2", d.classifier_hidden, d.classifier_hidden, rng)
        s.add_linear("head.out", d.classifier_hidden, c, rng)
        s.add_linear("nl_head.l1", d.neighborless_head_input, d.classifier_hidden, rng)
        s.add_linear("nl_head.l2", d.classifier_hidden, d.classifier_hidden, rng)
        s.add_linear("nl_head.out", d.classifier_hidden, c, rng)
        return s

    # -- branch params actually consumed under the active configuration ----
    def active_parameter_count(self) -> int:
        cfg, d = self.config, self.dims
        prefixes = ["label_embed", "object."]
        if cfg.use_geometry:
            prefixes.append("geom.")
        if cfg.use_materials:
            prefixes += ["material.", "mat_label_embed"]
            if cfg.use_colors:
                prefixes.append("color.")
        if cfg.use_neighbors:
            prefixes += ["edge_embed", "nbr_proj", "attn.", "head."]
        else:
            prefixes.append("nl_head.")
        if cfg.use_extended_context:
            prefixes.append("global.")
        return self.store.num_parameters(prefixes)

    def _mlp2(self, x: Tensor, name: str) -> Tensor:
        s = self.store
        h = nn.relu(nn.linear(x, s[f"{name}.l1.w"], s[f"{name}.l1.b"]))
        return nn.linear(h, s[f"{name}.l2.w"], s[f"{name}.l2.b"])

    def _color_mlp(self, labs: Tensor) -> Tensor:
        s = self.store
        h = nn.relu(nn.linear(labs, s["color.l1.w"], s["color.l1.b"]))
        h = nn.relu(nn.linear(h, s["color.l2.w"], s["color.l2.b"]))
        return nn.linear(h, s["color.l3.w"], s["color.l3.b"])

    # -- single-item embedding views (the batched pack path uses the same
    #    parameters and MLPs; these exist for inspection and tests) ---------
    def embed_colors(self, shares) -> np.ndarray:
        """Fraction-weighted average of per-color MLP embeddings, (32,)."""
        shares = list(shares)
        if not shares:
            return np.zeros(self.dims.color_embed)
        labs = nn.constant(np.array([list(c.lab) for c in shares]) / 100.0)
        weights = nn.constant(np.array([[c.fraction for c in shares]]))
        return nn.matmul(weights, self._color_mlp(labs)).data[0]

    def embed_materials(self, parts) -> np.ndarray:
        """Area-weighted material embedding over <= 3 parts, (64,)."""
        parts = list(parts)
        if not parts:
            return np.zeros(self.dims.material_embed)
        onehots = np.zeros((len(parts), max(len(self.material_vocab), 1)))
        colors = np.zeros((len(parts), self.dims.color_embed))
        for i, part in enumerate(parts):
            if part.material in self.material_to_idx:
                onehots[i, self.material_to_idx[part.material]] = 1.0
            if self.config.use_colors:
                colors[i] = self.embed_colors(part.colors)
        label_e = nn.matmul(nn.constant(onehots), self.store["mat_label_embed.w"])
        part_e = self._mlp2(nn.concat([label_e, nn.constant(colors)], axis=1), "material")
        fracs = np.array([p.area_fraction for p in parts], dtype=float)
        weights = nn.constant((fracs / fracs.sum()).reshape(1, -1))
        return nn.matmul(weights, part_e).data[0]

    def embed_object(self, node, mask_label: bool = False) -> np.ndarray:
        """Concatenated label/geometry/material branches through the object
        MLP, (object_embed,). Disabled branches contribute zeros at width."""
        d, cfg = self.dims, self.config
        label = np.zeros((1, len(self.class_vocab)))
        if not mask_label and node.label is not None and node.label in self.class_to_idx:
            label[0, self.class_to_idx[node.label]] = 1.0
        label_e = nn.matmul(nn.constant(label), self.store["label_embed.w"])
        if cfg.use_geometry:
            geom_e = self._mlp2(nn.constant(geometry_vector(node).reshape(1, -1)), "geom")
        else:
            geom_e = nn.constant(np.zeros((1, d.geom_embed)))
        if cfg.use_materials:
            mat = nn.constant(self.embed_materials(node.materials).reshape(1, -1))
        else:
            mat = nn.constant(np.zeros((1, d.material_embed)))
        obj = self._mlp2(nn.concat([label_e, geom_e, mat], axis=1), "object")
        return obj.data[0]

    def global_context_vector(self, histogram: dict[str, int]) -> np.ndarray:
        """Raw label counts through the global MLP, (64,). No normalization:
        doubling every count changes the output."""
        counts = np.zeros((1, len(self.class_vocab)))
        for lbl, count in histogram.items():
            if lbl in self.class_to_idx:
                counts[0, self.class_to_idx[lbl]] = count
        return self._mlp2(nn.constant(counts), "global").data[0]

    def _embed_objects(self, pack: SamplePack) -> Tensor:
        """(1+M, object_embed) for the target (row 0) and neighbors."""
        s, d, cfg = self.store, self.dims, self.config
        n = pack.label_onehots.shape[0]
        label_e = nn.matmul(nn.constant(pack.label_onehots), s["label_embed.w"])
        if cfg.use_geometry:
            geom_e = self._mlp2(nn.constant(pack.geom), "geom")
        else:
            geom_e = nn.constant(np.zeros((n, d.geom_embed)))
        if cfg.use_materials and pack.part_weights.shape[1] > 0:
            p = pack.part_weights.shape[1]
            if cfg.use_colors and pack.color_labs.shape[0] > 0:
                h = self._color_mlp(nn.constant(pack.color_labs))
                part_colors = nn.matmul(nn.constant(pack.color_weights), h)
            else:
                part_colors = nn.constant(np.zeros((p, d.color_embed)))
            part_labels = nn.matmul(nn.constant(pack.part_label_onehots),
                                    s["mat_label_embed.w"])
            part_in = nn.concat([part_labels, part_colors], axis=1)
            part_e = self._mlp2(part_in, "material")
            mat_e = nn.matmul(nn.constant(pack.part_weights), part_e)
        else:
            mat_e = nn.constant(np.zeros((n, d.material_embed)))
        obj_in = nn.concat([label_e, geom_e, mat_e], axis=1)
        return self._mlp2(obj_in, "object")

    def _head(self, x: Tensor, prefix: str, training: bool,
              rng: np.random.Generator | None) -> Tensor:
        s, d = self.store, self.dims
        h = nn.relu(nn.linear(x, s[f"{prefix}.l1.w"], s[f"{prefix}.l1.b"]))
        h = nn.dropout(h, d.dropout, training, rng)
        h = nn.relu(nn.linear(h, s[f"{prefix}.l2.w"], s[f"{prefix}.l2.b"]))
        h = nn.dropout(h, d.dropout, training, rng)
        return nn.linear(h, s[f"{prefix}.out.w"], s[f"{prefix}.out.b"])

    def forward_pack(self, pack: SamplePack, training: bool = False,
                     rng: np.random.Generator | None = None) -> Tensor:
        """Logits (1, C) for a prepared sample."""
        s, d, cfg = self.store, self.dims, self.config
        if not cfg.use_neighbors:
            # slice down to the target row so the computation is bit-identical
            # for any neighborhood the graph might carry
            pack = target_only(pack)
        n = pack.label_onehots.shape[0]
        m = n - 1
        obj = self._embed_objects(pack)
        sel_target = np.zeros((1, n))
        sel_target[0, 0] = 1.0
        target_e = nn.matmul(nn.constant(sel_target), obj)

        if cfg.use_extended_context:
            glob = self._mlp2(nn.constant(pack.hist_counts), "global")
        else:
            glob = nn.constant(np.zeros((1, d.global_embed)))

        if not cfg.use_neighbors:
            return self._head(nn.concat([target_e, glob], axis=1), "nl_head", training, rng)

        if m == 0:
            local = nn.constant(np.zeros((1, d.neighbor_proj)))
        else:
            sel_nbrs = np.zeros((m, n))
            sel_nbrs[np.arange(m), np.arange(1, n)] = 1.0
            nbr_e = nn.matmul(nn.constant(sel_nbrs), obj)
            kind_e = nn.matmul(nn.constant(pack.edge_kind_onehots), s["edge_embed.w"])
            reps = nn.concat([nbr_e, kind_e, nn.constant(pack.edge_weights)], axis=1)
            kv = nn.linear(reps, s["nbr_proj.w"], s["nbr_proj.b"])
            local = nn.multihead_attention(
                target_e, kv, kv,
                s["attn.wq.w"], s["attn.wq.b"], s["attn.wk.w"], s["attn.wk.b"],
                s["attn.wv.w"], s["attn.wv.b"], s["attn.wo.w"], s["attn.wo.b"],
                d.attention_heads)
        return self._head(nn.concat([target_e, local, glob], axis=1), "head", training, rng)

    def classify(self, graph: GSCG, target_id: int, training: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        """Logits for one target node; its own label never enters the input."""
        pack = prepare_sample(graph, target_id, self.class_to_idx, self.material_to_idx)
        return self.forward_pack(pack, training=training, rng=rng)

    def predict_proba(self, graph: GSCG, target_id: int) -> np.ndarray:
        logits = self.classify(graph, target_id).data[0]
        shifted = logits - logits.max()
        e = np.exp(shifted)
        return e / e.sum()

    def predict_label(self, graph: GSCG, target_id: int) -> str:
        return self.class_vocab[int(np.argmax(self.predict_proba(graph, target_id)))]
