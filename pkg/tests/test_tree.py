from __future__ import annotations

import random

from educompress.tree import (
    Diagnostic,
    SpanRef,
    StructureTree,
    backbone,
    coverage,
    has_errors,
    parse_augmented_markdown,
    realize_tree,
    serialize,
    tree_from_json,
    tree_to_json,
    validate,
)

from helpers import adversarial_flat_headings, node, random_structure_tree, struct_tree


def errors(diags):
    return [d for d in diags if d.severity == "error"]


def warnings(diags):
    return [d for d in diags if d.severity == "warning"]


# --- parsing ---------------------------------------------------------------


def test_parse_single_heading():
    tree, diags = parse_augmented_markdown("## [12--15] Concept Title", 20)
    assert diags == []
    assert len(tree.roots) == 1
    root = tree.roots[0]
    assert (root.level, root.span, root.title) == (2, SpanRef(12, 15), "Concept Title")


def test_parse_empty_input():
    tree, diags = parse_augmented_markdown("", 5)
    assert tree.roots == []
    assert diags == []


def test_parse_accepts_en_dash_and_single_dash():
    for sep in ("--", "–", "-"):
        tree, diags = parse_augmented_markdown(f"# [1{sep}2] T", 3, mode="strict")
        assert diags == []
        assert tree.roots[0].span == SpanRef(1, 2)


def test_canonical_output_uses_double_dash():
    tree, _ = parse_augmented_markdown("# [1–2] T", 3)
    assert serialize(tree) == "# [1--2] T"


def test_out_of_range_strict_errors_lenient_clamps():
    strict_tree, strict_diags = parse_augmented_markdown("# [1--25] A", 10, mode="strict")
    assert strict_tree is None
    assert [d.code for d in errors(strict_diags)] == ["span-out-of-range"]

    lenient_tree, lenient_diags = parse_augmented_markdown("# [1--25] A", 10, mode="lenient")
    assert lenient_tree.roots[0].span == SpanRef(1, 10)
    assert [d.code for d in warnings(lenient_diags)] == ["span-out-of-range"]


def test_inverted_span_swapped_in_lenient():
    tree, diags = parse_augmented_markdown("# [5--2] A", 10)
    assert tree.roots[0].span == SpanRef(2, 5)
    assert [d.code for d in diags] == ["span-inverted"]


def test_two_heading_nesting():
    tree, diags = parse_augmented_markdown("# [1--3] A\n## [2--3] B", 3)
    assert diags == []
    assert len(tree.roots) == 1
    assert tree.roots[0].title == "A"
    assert [c.title for c in tree.roots[0].children] == ["B"]


def test_bad_syntax_line_skipped_in_lenient():
    tree, diags = parse_augmented_markdown("not a heading\n# [1--2] A", 5)
    assert [d.code for d in diags] == ["bad-syntax"]
    assert diags[0].severity == "warning"
    assert diags[0].line == 1
    assert [r.title for r in tree.roots] == ["A"]


def test_bad_syntax_is_error_in_strict():
    tree, diags = parse_augmented_markdown("# [1--2] A\ngarbage", 5, mode="strict")
    assert tree is None
    assert [(d.code, d.line) for d in errors(diags)] == [("bad-syntax", 2)]


def test_indices_only_parses_with_empty_title_warning():
    tree, diags = parse_augmented_markdown("## [12--15]", 20)
    assert tree.roots[0].title == ""
    assert [d.code for d in diags] == ["empty-title"]


def test_heading_without_span_is_bad_syntax():
    _, diags = parse_augmented_markdown("# Title without anchor", 5)
    assert [d.code for d in diags] == ["bad-syntax"]


def test_parser_never_crashes_on_fuzz():
    rng = random.Random(99)
    pool = "#[]-–0123456789 \nabcXYZ中文\t()"
    for _ in range(500):
        text = "".join(rng.choice(pool) for _ in range(rng.randint(0, 80)))
        for mode in ("strict", "lenient"):
            tree, diags = parse_augmented_markdown(text, rng.randint(0, 9), mode=mode)
            if mode == "strict" and has_errors(diags):
                assert tree is None
            else:
                assert tree is not None
                assert not has_errors(validate(tree))


# --- realize_tree ----------------------------------------------------------


def test_realize_empty():
    tree, diags = realize_tree([], 5)
    assert tree.roots == [] and diags == []


def test_realize_levels_1_2_2_1():
    flat = [
        (1, (1, 6), "A"),
        (2, (2, 3), "B"),
        (2, (4, 6), "C"),
        (1, (7, 8), "D"),
    ]
    tree, diags = realize_tree(flat, 8)
    assert diags == []
    assert [r.title for r in tree.roots] == ["A", "D"]
    assert [c.title for c in tree.roots[0].children] == ["B", "C"]
    assert tree.roots[1].children == []


def test_realize_level_jump_down_at_start():
    tree, diags = realize_tree([(2, (1, 2), "A"), (1, (3, 4), "B")], 4)
    assert [r.title for r in tree.roots] == ["A", "B"]
    jump = [d for d in diags if d.code == "level-jump"]
    assert len(jump) == 1
    assert "level 2" in jump[0].message


def test_realize_skipping_level_warns_but_attaches():
    tree, diags = realize_tree([(1, (1, 4), "A"), (3, (2, 3), "C")], 4)
    assert [c.title for c in tree.roots[0].children] == ["C"]
    assert [d.code for d in diags] == ["level-jump"]


def test_realize_repairs_sibling_overlap():
    flat = [(1, (1, 4), "A"), (1, (3, 6), "B")]
    tree, diags = realize_tree(flat, 6)
    assert [r.span for r in tree.roots] == [SpanRef(1, 4), SpanRef(5, 6)]
    assert [d.code for d in diags] == ["overlap"]
    assert not has_errors(validate(tree))


def test_realize_drops_contained_sibling():
    flat = [(1, (1, 6), "A"), (1, (2, 4), "B")]
    tree, diags = realize_tree(flat, 6)
    assert [r.title for r in tree.roots] == ["A"]
    assert any(d.code == "overlap" and "dropped" in d.message for d in diags)


def test_realize_clamps_child_into_parent():
    flat = [(1, (2, 5), "A"), (2, (1, 9), "B")]
    tree, diags = realize_tree(flat, 9)
    child = tree.roots[0].children[0]
    assert child.span == SpanRef(2, 5)
    assert any(d.code == "non-nested" for d in diags)
    assert not has_errors(validate(tree))


# --- validate ---------------------------------------------------------------


def test_validate_clean_fixture():
    tree = struct_tree("d", 10, node("A", 1, 1, 6, node("B", 2, 2, 4)), node("C", 1, 7, 9))
    assert validate(tree) == []


def test_validate_non_nested_child():
    tree = struct_tree("d", 10, node("A", 1, 2, 5, node("B", 2, 1, 9)))
    assert "non-nested" in [d.code for d in errors(validate(tree))]


def test_validate_sibling_overlap():
    tree = struct_tree("d", 10, node("A", 1, 1, 4), node("B", 1, 3, 6))
    assert "overlap" in [d.code for d in errors(validate(tree))]


def test_validate_sibling_order():
    tree = struct_tree("d", 10, node("B", 1, 5, 6), node("A", 1, 1, 2))
    assert "overlap" in [d.code for d in errors(validate(tree))]


def test_validate_bounds_and_inversion():
    bad_bounds = struct_tree("d", 3, node("A", 1, 1, 9))
    assert "span-out-of-range" in [d.code for d in errors(validate(bad_bounds))]
    inverted = struct_tree("d", 3, node("A", 1, 3, 1))
    assert "span-inverted" in [d.code for d in errors(validate(inverted))]


def test_validate_level_monotonicity_error():
    tree = struct_tree("d", 9, node("A", 2, 1, 6, node("B", 2, 2, 4)))
    codes = [(d.severity, d.code) for d in validate(tree)]
    assert ("error", "level-jump") in codes


# --- serialize / round trip ---------------------------------------------------


def test_serialize_empty_tree():
    assert serialize(StructureTree(doc_id="d", n_edus=4)) == ""


def test_serialize_single_node_format():
    tree = struct_tree("d", 20, node("Concept Title", 2, 12, 15))
    assert serialize(tree) == "## [12--15] Concept Title"


def test_serialize_empty_title_has_no_trailing_space():
    tree = struct_tree("d", 20, node("", 2, 12, 15))
    assert serialize(tree) == "## [12--15]"


def test_round_trip_random_trees():
    rng = random.Random(4242)
    for _ in range(150):
        tree = random_structure_tree(rng)
        text = serialize(tree)
        parsed, diags = parse_augmented_markdown(
            text, tree.n_edus, mode="strict", doc_id=tree.doc_id
        )
        assert diags == []
        assert parsed == tree


def test_adversarial_lenient_trees_validate_clean():
    rng = random.Random(31337)
    for _ in range(200):
        n = rng.randint(0, 12)
        tree, _ = realize_tree(adversarial_flat_headings(rng, n), n)
        assert not has_errors(validate(tree))


# --- backbone / coverage / json ----------------------------------------------


def deep_tree():
    return struct_tree(
        "d", 12,
        node("A", 1, 1, 8,
             node("B", 2, 2, 5, node("C", 3, 3, 4)),
             node("D", 2, 6, 8)),
        node("E", 1, 9, 12, node("F", 2, 10, 11, node("G", 3, 10, 10))),
    )


def test_backbone_depth_one_is_fixed_point():
    flat = struct_tree("d", 4, node("A", 1, 1, 2), node("B", 1, 3, 4))
    assert backbone(flat) == flat


def test_backbone_removes_grandchildren():
    trimmed = backbone(deep_tree())
    assert [r.title for r in trimmed.roots] == ["A", "E"]
    assert [c.title for c in trimmed.roots[0].children] == ["B", "D"]
    assert trimmed.roots[0].children[0].children == []
    assert trimmed.roots[1].children[0].children == []


def test_backbone_empty_tree():
    empty = StructureTree(doc_id="d", n_edus=0)
    assert backbone(empty) == empty


def test_backbone_idempotent():
    rng = random.Random(5)
    for _ in range(50):
        tree = random_structure_tree(rng)
        once = backbone(tree)
        assert backbone(once) == once


def test_coverage_counts_covered_ids():
    tree = struct_tree("d", 10, node("A", 1, 1, 4), node("B", 1, 7, 8))
    assert coverage(tree) == 0.6
    assert coverage(StructureTree(doc_id="d", n_edus=0)) == 1.0


def test_json_round_trip():
    tree = deep_tree()
    assert tree_from_json(tree_to_json(tree)) == tree


def test_diagnostic_fields():
    d = Diagnostic("warning", "overlap", 3, "msg")
    assert (d.severity, d.code, d.line, d.message) == ("warning", "overlap", 3, "msg")
