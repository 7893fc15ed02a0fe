"""Dataset manifest and evaluation pair-list CSV files."""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from maskface_utils.data.imageio import ImageFileHandler
from maskface_utils.exceptions import (
    FileFormatError,
    ManifestParseError,
    ManifestValidationError,
)

PathLike = Union[str, Path]

NUM_LANDMARKS = 5
LANDMARK_COLUMNS = [c for i in range(1, NUM_LANDMARKS + 1) for c in (f"lx{i}", f"ly{i}")]
MANIFEST_HEADER = ["path", "identity", "masked"] + LANDMARK_COLUMNS

PAIRS_HEADER = ["path_a", "path_b", "same_identity", "masked_pair"]
PAIRS_HEADER_WITH_SUBSET = PAIRS_HEADER + ["subset"]

Landmarks = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class ManifestRecord:
    """
    One face image.

    Landmarks are pixel coordinates ordered left eye, right eye, nose tip, left mouth
    corner, right mouth corner.
    """

    image_path: str
    identity: int
    masked: bool
    landmarks: Landmarks

    def landmark_array(self) -> np.ndarray:
        return np.asarray(self.landmarks, dtype=np.float64)


@dataclass(frozen=True)
class PairRecord:
    """One verification pair; ``subset`` is an optional free-form group name."""

    path_a: str
    path_b: str
    same_identity: bool
    masked_pair: bool
    subset: Optional[str] = None


def resolve_image_path(image_path: str, base_dir: PathLike) -> Path:
    """Paths in a manifest are relative to the manifest's directory unless absolute."""
    p = Path(image_path)
    return p if p.is_absolute() else Path(base_dir) / p


def _parse_flag(value: str, column: str, path: PathLike, line: int) -> bool:
    if value not in ("0", "1"):
        raise ManifestParseError(f"column {column} must be 0 or 1, got {value!r}", path, line)
    return value == "1"


def _parse_row(row: List[str], path: PathLike, line: int) -> ManifestRecord:
    if len(row) != len(MANIFEST_HEADER):
        raise ManifestParseError(
            f"expected {len(MANIFEST_HEADER)} columns, got {len(row)}", path, line
        )
    image_path = row[0].strip()
    if not image_path:
        raise ManifestParseError("empty path", path, line)
    try:
        identity = int(row[1])
    except ValueError:
        raise ManifestParseError(f"identity must be an integer, got {row[1]!r}", path, line)
    if identity < 0:
        raise ManifestParseError(f"identity must be non-negative, got {identity}", path, line)
    masked = _parse_flag(row[2].strip(), "masked", path, line)
    try:
        coords = [float(v) for v in row[3:]]
    except ValueError:
        raise ManifestParseError("landmark coordinates must be numbers", path, line)
    if not all(np.isfinite(coords)):
        raise ManifestParseError("landmark coordinates must be finite", path, line)
    landmarks = tuple((coords[2 * i], coords[2 * i + 1]) for i in range(NUM_LANDMARKS))
    return ManifestRecord(image_path, identity, masked, landmarks)


def load_manifest(
    path: PathLike,
    image_size: Optional[Tuple[int, int]] = None,
    check_images: bool = True,
) -> List[ManifestRecord]:
    """
    Read and validate a manifest CSV.

    Args:
        path: Manifest file
        image_size: (width, height) shared by all images; when None each image header is read
        check_images: Read image headers to bound landmarks; False skips the bounds check
            unless image_size is given

    Returns:
        Records in file order

    Raises:
        ManifestParseError: Malformed header or row, with the line number
        ManifestValidationError: Landmark outside its image, missing image or identity gap
    """
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"Manifest not found: {path}")
    base_dir = path.parent
    records: List[ManifestRecord] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ManifestParseError("missing header", path, 1)
        if [h.strip() for h in header] != MANIFEST_HEADER:
            raise ManifestParseError(f"header must be {','.join(MANIFEST_HEADER)}", path, 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not v.strip() for v in row):
                continue
            record = _parse_row(row, path, line)
            if image_size is not None or check_images:
                if image_size is not None:
                    width, height = image_size
                else:
                    try:
                        width, height = ImageFileHandler.size(resolve_image_path(record.image_path, base_dir))
                    except FileFormatError as e:
                        raise ManifestValidationError(f"{path}:{line}: {e}") from e
                for k, (x, y) in enumerate(record.landmarks, start=1):
                    if not (0 <= x < width and 0 <= y < height):
                        raise ManifestValidationError(
                            f"{path}:{line}: landmark {k} ({x}, {y}) outside {width}x{height} image"
                        )
            records.append(record)

    check_identities(records, path)
    return records


def check_identities(records: Sequence[ManifestRecord], source: PathLike = "manifest") -> None:
    """Identity labels must form the contiguous range [0, num_identities)."""
    if not records:
        return
    labels = {r.identity for r in records}
    missing = sorted(set(range(max(labels) + 1)) - labels)
    if missing:
        shown = ", ".join(str(v) for v in missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        raise ManifestValidationError(
            f"{source}: identity labels are not contiguous, missing {shown}{more}"
        )


def num_identities(records: Sequence[ManifestRecord]) -> int:
    return max((r.identity for r in records), default=-1) + 1


def write_manifest(path: PathLike, records: Sequence[ManifestRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in records:
            coords = [f"{v:.4f}" for point in r.landmarks for v in point]
            writer.writerow([r.image_path, r.identity, int(r.masked)] + coords)


def load_pairs(path: PathLike) -> List[PairRecord]:
    """
    Read a verification pair list.

    The optional fifth column ``subset`` names a group (for example wild or controlled) that
    gets its own metrics.
    """
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"Pair list not found: {path}")
    pairs: List[PairRecord] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = [h.strip() for h in (next(reader, None) or [])]
        if header not in (PAIRS_HEADER, PAIRS_HEADER_WITH_SUBSET):
            raise ManifestParseError(f"header must be {','.join(PAIRS_HEADER)}[,subset]", path, 1)
        with_subset = len(header) == len(PAIRS_HEADER_WITH_SUBSET)
        for row in reader:
            line = reader.line_num
            if not row or all(not v.strip() for v in row):
                continue
            if len(row) != len(header):
                raise ManifestParseError(f"expected {len(header)} columns, got {len(row)}", path, line)
            subset = (row[4].strip() or None) if with_subset else None
            pairs.append(PairRecord(
                path_a=row[0].strip(),
                path_b=row[1].strip(),
                same_identity=_parse_flag(row[2].strip(), "same_identity", path, line),
                masked_pair=_parse_flag(row[3].strip(), "masked_pair", path, line),
                subset=subset,
            ))
    return pairs


def write_pairs(path: PathLike, pairs: Sequence[PairRecord]) -> None:
    with_subset = any(p.subset for p in pairs)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PAIRS_HEADER_WITH_SUBSET if with_subset else PAIRS_HEADER)
        for p in pairs:
            row = [p.path_a, p.path_b, int(p.same_identity), int(p.masked_pair)]
            if with_subset:
                row.append(p.subset or "")
            writer.writerow(row)
