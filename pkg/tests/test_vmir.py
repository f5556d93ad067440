import numpy as np
import pytest

from earlywcet.dataset import default_cost_model, synthesize_corpus
from earlywcet.errors import (
    EmptyProgramError,
    IoFailure,
    UnknownMnemonicError,
    UnresolvedLabelError,
)
from earlywcet.vmir import (
    FEATURE_NAMES,
    MNEMONIC_TABLE,
    Category,
    FeatureVector,
    extract_features,
    extract_features_batch,
    feature_csv_text,
    parse_vmir,
    render_vmir,
    write_feature_csv,
)


def test_empty_text_rejected():
    with pytest.raises(EmptyProgramError):
        parse_vmir("")


def test_comment_and_blank_only_rejected():
    with pytest.raises(EmptyProgramError):
        parse_vmir("# just a comment\n\n   \n# another\n")


def test_two_instruction_program():
    program = parse_vmir("add r1 r2 r3\nret")
    assert [i.category for i in program.instructions] == [Category.ADD, Category.RETURN]
    assert program.instructions[0].operands == ("r1", "r2", "r3")


def test_unresolved_jump_target_is_named():
    lines = ["add r1 r2 r3"] * 18 + ["jmp missing", "ret"]
    with pytest.raises(UnresolvedLabelError) as exc_info:
        parse_vmir("\n".join(lines))
    assert exc_info.value.name == "missing"
    assert exc_info.value.line_number == 19


def test_unknown_mnemonic_reports_line():
    with pytest.raises(UnknownMnemonicError) as exc_info:
        parse_vmir("add r1 r2 r3\nmov r1 r2\nret")
    assert exc_info.value.mnemonic == "mov"
    assert exc_info.value.line_number == 2


def test_mnemonics_case_insensitive_commas_ok():
    program = parse_vmir("ADD r1, r2, r3\nShl r4, r5, 3\nRET")
    categories = [i.category for i in program.instructions]
    assert categories == [Category.ADD, Category.SHIFT, Category.RETURN]


def test_inline_comments_stripped():
    program = parse_vmir("add r1 r2 r3  # accumulate\nret # done")
    assert len(program.instructions) == 2
    assert program.instructions[0].operands == ("r1", "r2", "r3")


def test_labels_recorded_with_positions():
    program = parse_vmir("top:\nadd r1 r2 r3\njmp top\nend:\nret")
    assert program.labels == frozenset({"top", "end"})
    assert program.label_positions["top"] == 0
    assert program.label_positions["end"] == 2


def test_source_lines_strictly_increasing():
    program = parse_vmir("add r1 r2 r3\n\n# gap\nsub r1 r2 r3\nret")
    lines = [i.source_line for i in program.instructions]
    assert lines == [1, 4, 5]


def test_extract_single_return():
    vector = extract_features(parse_vmir("ret"))
    assert vector.counts == (0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0)


def test_extract_mixed_program():
    text = "add r1 r2 r3\nadd r1 r1 r4\nmul r2 r1 r1\nload r3 r2\nstore r3 r1\ncmp r1 r3\njmp L\nL:\nret"
    vector = extract_features(parse_vmir(text))
    assert vector.counts == (2, 0, 1, 0, 0, 0, 0, 1, 1, 1, 1, 1)
    assert vector.total == 8


def test_every_table_mnemonic_parses():
    for mnemonic, category in MNEMONIC_TABLE.items():
        operands = {"ret": "", "jmp": "L", "br": "r1 L", "call": "f"}.get(mnemonic, "r1 r2 r3")
        text = f"L:\n{mnemonic} {operands}".strip()
        program = parse_vmir(text)
        assert program.instructions[0].category is category


@pytest.mark.parametrize("bad", ["nop", "mov r1 r2", "fmul r1 r2 r3", "addi r1 r2 4"])
def test_off_table_mnemonics_rejected(bad):
    with pytest.raises(UnknownMnemonicError):
        parse_vmir(bad + "\nret")


def test_concatenation_adds_features():
    model = default_cost_model()
    _, programs = synthesize_corpus(6, 31, model)
    for first, second in zip(programs[:3], programs[3:]):
        combined = parse_vmir(render_vmir(first) + render_vmir(second))
        assert (
            extract_features(combined).counts
            == (extract_features(first) + extract_features(second)).counts
        )


def test_line_order_does_not_change_features():
    model = default_cost_model()
    _, programs = synthesize_corpus(3, 77, model)
    rng = np.random.default_rng(5)
    for program in programs:
        lines = render_vmir(program).splitlines()
        shuffled = [lines[i] for i in rng.permutation(len(lines))]
        reparsed = parse_vmir("\n".join(shuffled))
        assert extract_features(reparsed).counts == extract_features(program).counts


def test_render_parse_round_trip_preserves_categories():
    model = default_cost_model()
    _, programs = synthesize_corpus(5, 13, model)
    for program in programs:
        reparsed = parse_vmir(render_vmir(program), name=program.name)
        assert [i.category for i in reparsed.instructions] == [
            i.category for i in program.instructions
        ]
        assert [i.mnemonic for i in reparsed.instructions] == [
            i.mnemonic for i in program.instructions
        ]


def test_feature_vector_validation():
    with pytest.raises(ValueError):
        FeatureVector((1,) * 11)
    with pytest.raises(ValueError):
        FeatureVector((1,) * 11 + (-1,))
    vector = FeatureVector(tuple(range(12)))
    assert vector[Category.COMPARE] == 11
    assert vector.to_array().dtype == np.float64


def test_feature_csv_schema():
    rows = [("p", FeatureVector((1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0)))]
    text = feature_csv_text(rows)
    header, row = text.strip().splitlines()
    assert header == "name," + ",".join(FEATURE_NAMES)
    assert row == "p,1,0,0,0,0,0,0,1,0,0,0,0"


def test_batch_matches_per_file_extraction(tmp_path):
    model = default_cost_model()
    _, programs = synthesize_corpus(3, 8, model)
    paths = []
    for program in programs:
        path = tmp_path / f"{program.name}.vmir"
        path.write_text(render_vmir(program))
        paths.append(path)
    rows = extract_features_batch(paths)
    assert [name for name, _ in rows] == [p.name for p in programs]
    for (_, vector), program in zip(rows, programs):
        assert vector.counts == extract_features(program).counts


def test_batch_empty_input():
    assert extract_features_batch([]) == []


def test_batch_unreadable_path_fails_whole_call(tmp_path):
    good = tmp_path / "ok.vmir"
    good.write_text("ret\n")
    with pytest.raises(IoFailure) as exc_info:
        extract_features_batch([good, tmp_path / "absent.vmir"])
    assert "absent.vmir" in exc_info.value.path


def test_batch_parse_error_carries_path(tmp_path):
    bad = tmp_path / "bad.vmir"
    bad.write_text("ret\nbogus r1\n")
    with pytest.raises(UnknownMnemonicError) as exc_info:
        extract_features_batch([bad])
    assert exc_info.value.path == str(bad)
    assert exc_info.value.line_number == 2


def test_write_feature_csv(tmp_path):
    out = tmp_path / "features.csv"
    write_feature_csv(out, [("p", FeatureVector((0,) * 11 + (3,)))])
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[1].endswith(",3")
