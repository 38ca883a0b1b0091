import numpy as np
import pytest

from gscg.classifier import ABLATION_CONFIGS, GraphObjectClassifier
from gscg.describe import build_round, describe_object
from gscg.graph import GSCG, Edge

from test_classifier import CLASSES, MATERIALS, mk_model, mk_node, toy_graph


class TestDescribeObject:
    def test_full_config_has_all_sections(self):
        d = describe_object(toy_graph(), 1, ABLATION_CONFIGS["full_model"])
        assert "m by" in d.text                  # geometry
        assert "Its surface is" in d.text        # materials
        assert "Its coloring is" in d.text       # colors
        assert "It touches and sits near" in d.text  # mixed edge to table
        assert "The scene also contains" in d.text

    def test_minimal_config_neighbor_labels_only(self):
        d = describe_object(toy_graph(), 1, ABLATION_CONFIGS["minimal_model"])
        assert "m by" not in d.text
        assert "surface" not in d.text and "coloring" not in d.text
        assert "The scene also contains" not in d.text
        assert "a table" in d.text and "a lamp" in d.text

    def test_no_colors_config_omits_color_names(self):
        d = describe_object(toy_graph(), 1, ABLATION_CONFIGS["no_colors"])
        assert "coloring" not in d.text
        for name in ("peru", "gray", "silver"):
            assert name not in d.text

    def test_deterministic(self):
        d1 = describe_object(toy_graph(), 1)
        d2 = describe_object(toy_graph(), 1)
        assert d1.text == d2.text

    def test_never_mentions_target_label(self):
        g = toy_graph()
        for target in g.nodes:
            d = describe_object(g, target)
            assert g.nodes[target].label not in d.text

    def test_same_label_neighbor_masked(self):
        g = toy_graph()
        n = g.nodes[2]
        g.nodes[2] = type(n)(id=2, label="mug", geometry=n.geometry,
                             materials=n.materials, point_count=n.point_count)
        d = describe_object(g, 1)  # target is also a mug
        assert "mug" not in d.text
        assert "unidentified" in d.text

    def test_section_subset_property(self):
        # fewer enabled sections -> attribute kinds are a subset
        markers = {
            "geometry": "m by",
            "materials": "Its surface",
            "colors": "Its coloring",
            "neighbors": "It ",
            "scene": "scene also contains",
        }
        full = describe_object(toy_graph(), 1, ABLATION_CONFIGS["full_model"]).text
        for name, cfg in ABLATION_CONFIGS.items():
            sub = describe_object(toy_graph(), 1, cfg).text
            for marker in markers.values():
                if marker in sub:
                    assert marker in full

    def test_unknown_target(self):
        with pytest.raises(KeyError):
            describe_object(toy_graph(), 99)

    def test_weights_three_decimals_sizes_two(self):
        d = describe_object(toy_graph(), 1)
        assert "(strength 0.800)" in d.text
        assert "0.10 m by 0.08 m by 0.07 m" in d.text


class TestBuildRound:
    def test_round_structure(self):
        model = mk_model()
        g = toy_graph()
        r = build_round(g, 1, model, seed=3)
        assert len(r.choices) == min(5, len(CLASSES))
        assert len(set(r.choices)) == len(r.choices)
        assert r.choices[r.correct_index] == "mug"
        assert r.ai_top1 in model.class_vocab
        assert "mug" not in r.riddle_text

    def test_correct_always_present_even_when_unranked(self):
        # vocabulary > 5 so the truth can fall outside the top five
        classes = tuple(f"cls{i}" for i in range(12)) + ("mug",)
        model = mk_model(classes=classes)
        g = toy_graph()
        r = build_round(g, 1, model, seed=0)
        assert len(r.choices) == 5
        assert "mug" in r.choices
        # the displaced choice is the lowest-probability one of the top five
        if "mug" not in r.ai_top5:
            assert set(r.choices) == set(r.ai_top5[:4]) | {"mug"}

    def test_all_classes_when_vocab_small(self):
        model = mk_model()  # 4 classes < 5
        r = build_round(toy_graph(), 1, model, seed=1)
        assert set(r.choices) == set(CLASSES)

    def test_seed_changes_order_not_content(self):
        model = mk_model()
        r1 = build_round(toy_graph(), 1, model, seed=1)
        r2 = build_round(toy_graph(), 1, model, seed=2)
        assert set(r1.choices) == set(r2.choices)
        assert r1.riddle_text == r2.riddle_text
        assert r1.ai_top1 == r2.ai_top1

    def test_unlabeled_target_rejected(self):
        g = toy_graph()
        n = g.nodes[1]
        g.nodes[1] = type(n)(id=1, label=None, geometry=n.geometry,
                             materials=n.materials, point_count=n.point_count)
        with pytest.raises(ValueError):
            build_round(g, 1, mk_model(), seed=0)
