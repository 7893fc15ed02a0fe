"""Shared test helpers: finite-difference gradient checks, a TAR@FAR oracle and small fixtures."""

from pathlib import Path
from typing import Callable, List, Sequence

import numpy as np
import pytest

from maskface_utils.data.align import TEMPLATE_112
from maskface_utils.data.imageio import write_image
from maskface_utils.data.manifest import ManifestRecord
from maskface_utils.tensor.engine import Tape, Tensor, backward, precision


class GradientReport:
    def __init__(self):
        self.max_rel_error = 0.0
        self.checked = 0
        self.skipped = 0
        self.worst = None

    def add(self, name: str, index, analytic: float, numeric: float, floor: float) -> None:
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
        self.checked += 1
        if err > self.max_rel_error:
            self.max_rel_error = err
            self.worst = (name, index, analytic, numeric)


def check_gradients(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    names: Sequence[str] = (),
    eps: float = 1e-3,
    max_checks: int = 40,
    skip_kinks: bool = False,
    max_skip_fraction: float = 0.25,
    floor: float = 1e-6,
    seed: int = 0,
) -> GradientReport:
    """
    Compare tape gradients of the scalar ``fn()`` with central differences.

    Runs in float64. At most ``max_checks`` entries per input are perturbed. With ``skip_kinks``
    an entry is skipped when halving the step does not halve the gap between the one-sided
    differences, which is what happens when a ReLU/PReLU input changes sign inside the step.
    """
    names = list(names) or [f"input{i}" for i in range(len(inputs))]
    for t in inputs:
        assert t.dtype == np.float64, "gradient checks need float64 tensors"
        t.zero_grad()

    with precision(np.float64):
        with Tape() as tape:
            out = fn()
        backward(out, tape)

        def value() -> float:
            return float(fn().item())

        report = GradientReport()
        rng = np.random.default_rng(seed)
        for name, t in zip(names, inputs):
            assert t.grad is not None, f"{name} received no gradient"
            flat = t.data.reshape(-1)
            grad = t.grad.reshape(-1)
            picks = np.arange(flat.size)
            if flat.size > max_checks:
                picks = rng.choice(flat.size, size=max_checks, replace=False)
            for i in picks:
                original = flat[i]

                def at(delta: float) -> float:
                    flat[i] = original + delta
                    try:
                        return value()
                    finally:
                        flat[i] = original

                plus, minus = at(eps), at(-eps)
                numeric = (plus - minus) / (2 * eps)
                if skip_kinks:
                    center = value()
                    half_plus, half_minus = at(eps / 2), at(-eps / 2)
                    gap = (plus - center) - (center - minus)
                    half_gap = (half_plus - center) - (center - half_minus)
                    kink_error = abs(gap - 4 * half_gap) / (2 * eps)
                    if kink_error > 1e-5 * max(abs(numeric), floor) + 1e-11:
                        report.skipped += 1
                        continue
                report.add(name, int(i), float(grad[i]), numeric, floor)
        total = report.checked + report.skipped
        assert report.skipped <= max_skip_fraction * total, (
            f"skipped {report.skipped} of {total} perturbations at kinks"
        )
    return report


def tar_at_far_oracle(scores: Sequence[float], labels: Sequence[bool], far: float):
    """Exhaustive search: the smallest accepting threshold whose FAR does not exceed ``far``."""
    scores = [float(s) for s in scores]
    negatives = [s for s, y in zip(scores, labels) if not y]
    positives = [s for s, y in zip(scores, labels) if y]
    candidates = sorted(set(scores)) + [float(np.nextafter(max(scores), np.inf))]
    for t in candidates:
        false_accepts = sum(1 for s in negatives if s >= t)
        if false_accepts / len(negatives) <= far:
            tar = sum(1 for s in positives if s >= t) / len(positives)
            return t, tar
    raise AssertionError("no threshold satisfies the FAR target")


def param64(rng: np.random.Generator, *shape, scale: float = 1.0) -> Tensor:
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True, dtype=np.float64)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def template_landmarks(offset: float = 8.0) -> np.ndarray:
    """Canonical landmarks shifted into a 128x128 canvas."""
    return TEMPLATE_112 + offset


@pytest.fixture
def tiny_dataset(tmp_path: Path) -> List[ManifestRecord]:
    """Three identities, four images each (one masked), written as 128x128 PPMs."""
    rng = np.random.default_rng(7)
    records = []
    (tmp_path / "images").mkdir()
    for identity in range(3):
        colour = rng.integers(0, 256, size=3)
        for index in range(4):
            image = np.clip(colour + rng.normal(0, 10, size=(128, 128, 3)), 0, 255).astype(np.uint8)
            name = f"images/{identity}_{index}.ppm"
            write_image(tmp_path / name, image)
            records.append(ManifestRecord(
                image_path=name,
                identity=identity,
                masked=index == 0,
                landmarks=tuple(tuple(float(v) for v in p) for p in template_landmarks()),
            ))
    return records
