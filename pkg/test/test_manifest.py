"""Manifest and pair-list CSV parsing and validation."""

import pytest

from maskface_utils.data.manifest import (
    MANIFEST_HEADER,
    ManifestRecord,
    PairRecord,
    check_identities,
    load_manifest,
    load_pairs,
    num_identities,
    resolve_image_path,
    write_manifest,
    write_pairs,
)
from maskface_utils.exceptions import FileFormatError, ManifestParseError, ManifestValidationError

HEADER = ",".join(MANIFEST_HEADER)
LANDMARKS = "38.3,51.7,73.5,51.5,56.0,71.7,41.5,92.4,70.7,92.2"


def write(tmp_path, text, name="manifest.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadManifest:
    def test_parses_rows_in_order(self, tmp_path):
        path = write(tmp_path, f"{HEADER}\na.ppm,0,0,{LANDMARKS}\nb.ppm,1,1,{LANDMARKS}\n")
        records = load_manifest(path, image_size=(112, 112))
        assert [r.image_path for r in records] == ["a.ppm", "b.ppm"]
        assert records[1].masked and not records[0].masked
        assert records[0].landmarks[2] == (56.0, 71.7)
        assert records[0].landmark_array().shape == (5, 2)
        assert num_identities(records) == 2

    def test_blank_lines_are_skipped(self, tmp_path):
        path = write(tmp_path, f"{HEADER}\n\na.ppm,0,0,{LANDMARKS}\n\n")
        assert len(load_manifest(path, check_images=False)) == 1

    @pytest.mark.parametrize(
        "row,fragment",
        [
            ("a.ppm,0,0,1,2", "columns"),
            ("a.ppm,x,0," + LANDMARKS, "identity"),
            ("a.ppm,-1,0," + LANDMARKS, "non-negative"),
            ("a.ppm,0,yes," + LANDMARKS, "masked"),
            ("a.ppm,0,0,nan" + LANDMARKS[4:], "finite"),
            ("a.ppm,0,0,abc" + LANDMARKS[4:], "numbers"),
            (" ,0,0," + LANDMARKS, "empty path"),
        ],
    )
    def test_malformed_row_reports_line(self, tmp_path, row, fragment):
        path = write(tmp_path, f"{HEADER}\nok.ppm,0,0,{LANDMARKS}\n{row}\n")
        with pytest.raises(ManifestParseError, match=fragment) as info:
            load_manifest(path, check_images=False)
        assert info.value.line == 3
        assert f"{path}:3:" in str(info.value)

    def test_bad_header(self, tmp_path):
        path = write(tmp_path, "path,identity\n")
        with pytest.raises(ManifestParseError) as info:
            load_manifest(path, check_images=False)
        assert info.value.line == 1

    def test_landmark_outside_image(self, tmp_path):
        path = write(tmp_path, f"{HEADER}\na.ppm,0,0,{LANDMARKS}\n")
        with pytest.raises(ManifestValidationError, match="landmark 4"):
            load_manifest(path, image_size=(80, 80))

    def test_bounds_use_image_headers(self, tmp_path, tiny_dataset):
        path = tmp_path / "manifest.csv"
        write_manifest(path, tiny_dataset)
        assert len(load_manifest(path)) == 12

    def test_missing_image_is_a_validation_error(self, tmp_path):
        path = write(tmp_path, f"{HEADER}\nmissing.ppm,0,0,{LANDMARKS}\n")
        with pytest.raises(ManifestValidationError, match=":2:"):
            load_manifest(path)

    def test_identity_gap(self, tmp_path):
        path = write(tmp_path, f"{HEADER}\na.ppm,0,0,{LANDMARKS}\nb.ppm,2,0,{LANDMARKS}\n")
        with pytest.raises(ManifestValidationError, match="missing 1"):
            load_manifest(path, check_images=False)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileFormatError):
            load_manifest(tmp_path / "none.csv")


class TestManifestHelpers:
    def test_write_then_load_keeps_records(self, tmp_path, tiny_dataset):
        path = tmp_path / "manifest.csv"
        write_manifest(path, tiny_dataset)
        loaded = load_manifest(path)
        assert [(r.image_path, r.identity, r.masked) for r in loaded] == [
            (r.image_path, r.identity, r.masked) for r in tiny_dataset
        ]
        for a, b in zip(loaded, tiny_dataset):
            assert a.landmark_array() == pytest.approx(b.landmark_array(), abs=1e-4)

    def test_resolve_image_path(self, tmp_path):
        assert resolve_image_path("images/a.ppm", tmp_path) == tmp_path / "images" / "a.ppm"
        absolute = str(tmp_path / "x.ppm")
        assert str(resolve_image_path(absolute, "/elsewhere")) == absolute

    def test_empty_records_have_no_identities(self):
        check_identities([])
        assert num_identities([]) == 0

    def test_check_identities_on_records(self):
        record = ManifestRecord("a.ppm", 1, False, ((0.0, 0.0),) * 5)
        with pytest.raises(ManifestValidationError):
            check_identities([record])


class TestPairs:
    def test_four_column_list(self, tmp_path):
        path = write(tmp_path, "path_a,path_b,same_identity,masked_pair\na,b,1,0\nc,d,0,1\n", "pairs.csv")
        pairs = load_pairs(path)
        assert pairs == [PairRecord("a", "b", True, False), PairRecord("c", "d", False, True)]

    def test_subset_column(self, tmp_path):
        path = write(
            tmp_path, "path_a,path_b,same_identity,masked_pair,subset\na,b,1,0,wild\nc,d,0,1,\n", "pairs.csv"
        )
        pairs = load_pairs(path)
        assert pairs[0].subset == "wild"
        assert pairs[1].subset is None

    def test_errors_carry_line_numbers(self, tmp_path):
        path = write(tmp_path, "path_a,path_b,same_identity,masked_pair\na,b,1,0\na,b,2,0\n", "pairs.csv")
        with pytest.raises(ManifestParseError, match=":3:"):
            load_pairs(path)
        path = write(tmp_path, "path_a,path_b,same_identity,masked_pair\na,b,1\n", "pairs.csv")
        with pytest.raises(ManifestParseError, match="columns"):
            load_pairs(path)
        path = write(tmp_path, "a,b\n", "pairs.csv")
        with pytest.raises(ManifestParseError):
            load_pairs(path)

    def test_write_then_load(self, tmp_path):
        pairs = [PairRecord("a", "b", True, False, "wild"), PairRecord("c", "d", False, True, None)]
        write_pairs(tmp_path / "pairs.csv", pairs)
        assert load_pairs(tmp_path / "pairs.csv") == pairs
        plain = [PairRecord("a", "b", True, False)]
        write_pairs(tmp_path / "plain.csv", plain)
        assert (tmp_path / "plain.csv").read_text().splitlines()[0] == "path_a,path_b,same_identity,masked_pair"
