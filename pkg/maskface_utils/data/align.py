"""Five-point similarity alignment to the canonical 112x112 face template."""

from typing import Optional, Tuple

import numpy as np
from skimage import transform as trans

from maskface_utils.exceptions import DimensionError, GeometryError

ALIGNED_SIZE = 112

# left eye, right eye, nose tip, left mouth corner, right mouth corner
TEMPLATE_112 = np.array(
    [
        [38.2946, 51.6963],
        [73.5318, 51.5014],
        [56.0252, 71.7366],
        [41.5493, 92.3655],
        [70.7299, 92.2041],
    ],
    dtype=np.float64,
)

_DEGENERATE_EPS = 1e-12


def estimate_similarity(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """
    Least-squares similarity (rotation, uniform scale, translation) taking src onto dst.

    Args:
        src: [n, 2] source points (x, y)
        dst: [n, 2] target points

    Returns:
        2x3 matrix T with dst ~= T @ [x, y, 1]

    Raises:
        GeometryError: If the source points coincide or the cross-covariance is rank 0
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape or src.shape[0] < 2:
        raise DimensionError(f"need matching [n>=2, 2] point sets, got {src.shape} and {dst.shape}")

    num, dim = src.shape
    src_mean = src.mean(axis=0)
    dst_mean = dst.mean(axis=0)
    src_demean = src - src_mean
    dst_demean = dst - dst_mean

    src_var = src_demean.var(axis=0).sum()
    if src_var < _DEGENERATE_EPS:
        raise GeometryError("source landmarks coincide; similarity is undefined")

    A = dst_demean.T @ src_demean / num
    if np.linalg.matrix_rank(A) == 0:
        raise GeometryError("landmark cross-covariance is rank deficient")

    d = np.ones(dim)
    if np.linalg.det(A) < 0:
        d[dim - 1] = -1
    U, S, Vt = np.linalg.svd(A)
    if np.linalg.matrix_rank(A) == dim - 1:
        # collinear points: pick the proper rotation among the two SVD solutions
        if np.linalg.det(U) * np.linalg.det(Vt) < 0:
            d[dim - 1] = -1
        else:
            d[dim - 1] = 1
    R = U @ np.diag(d) @ Vt
    scale = (S @ d) / src_var
    if not np.isfinite(scale) or scale <= 0:
        raise GeometryError("landmark configuration yields a non-positive scale")

    T = np.zeros((2, 3))
    T[:, :2] = scale * R
    T[:, 2] = dst_mean - scale * R @ src_mean
    return T


def to_homogeneous(T: np.ndarray) -> np.ndarray:
    T = np.asarray(T, dtype=np.float64)
    if T.shape != (2, 3):
        raise DimensionError(f"expected a 2x3 transform, got {T.shape}")
    return np.vstack([T, [0.0, 0.0, 1.0]])


def invert_transform(T: np.ndarray) -> np.ndarray:
    """Inverse of a 2x3 affine transform."""
    M = to_homogeneous(T)
    if abs(np.linalg.det(M[:2, :2])) < _DEGENERATE_EPS:
        raise GeometryError("transform is not invertible")
    return np.linalg.inv(M)[:2]


def compose(T2: np.ndarray, T1: np.ndarray) -> np.ndarray:
    """T2 after T1."""
    return (to_homogeneous(T2) @ to_homogeneous(T1))[:2]


def transform_points(T: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return points @ np.asarray(T)[:, :2].T + np.asarray(T)[:, 2]


def warp_to_template(image: np.ndarray, T: np.ndarray, size: int = ALIGNED_SIZE) -> np.ndarray:
    """
    Resample ``image`` so that source point p lands at T(p) in a size x size output.

    Bilinear interpolation; samples outside the source are black.

    Raises:
        GeometryError: If T is not invertible
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError(f"expected an [h, w, 3] image, got shape {image.shape}")
    M = to_homogeneous(T)
    if abs(np.linalg.det(M[:2, :2])) < _DEGENERATE_EPS:
        raise GeometryError("alignment transform is not invertible")
    inverse = trans.AffineTransform(matrix=np.linalg.inv(M))
    out = trans.warp(
        image,
        inverse,
        output_shape=(size, size),
        order=1,
        mode="constant",
        cval=0,
        preserve_range=True,
    )
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def align_face(
    image: np.ndarray,
    landmarks: np.ndarray,
    template: Optional[np.ndarray] = None,
    size: int = ALIGNED_SIZE,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Align a face to the canonical template.

    Returns:
        (aligned size x size image, landmarks in aligned coordinates)
    """
    template = TEMPLATE_112 if template is None else np.asarray(template, dtype=np.float64)
    if size != ALIGNED_SIZE and template is TEMPLATE_112:
        template = TEMPLATE_112 * (size / ALIGNED_SIZE)
    T = estimate_similarity(landmarks, template)
    return warp_to_template(image, T, size), transform_points(T, landmarks)
