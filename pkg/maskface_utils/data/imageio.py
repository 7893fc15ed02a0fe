"""Image file handler for binary PPM (P6) face images"""

from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image

from maskface_utils.exceptions import DimensionError, FileFormatError

PathLike = Union[str, Path]


class ImageFileHandler:
    """Handler for 8-bit RGB PPM files"""

    SUPPORTED_EXTENSIONS = {".ppm"}

    @classmethod
    def is_supported(cls, path: PathLike) -> bool:
        """Check if file extension is supported"""
        return Path(path).suffix.lower() in cls.SUPPORTED_EXTENSIONS

    @classmethod
    def _open(cls, path: PathLike) -> Image.Image:
        path = Path(path)
        if not cls.is_supported(path):
            raise FileFormatError(f"Unsupported image type {path.suffix or '(none)'}: {path} (expected .ppm)")
        if not path.exists():
            raise FileFormatError(f"Image file not found: {path}")
        try:
            image = Image.open(path)
        except Exception as e:
            raise FileFormatError(f"Failed to open image {path}: {str(e)}") from e
        if image.format != "PPM":
            image.close()
            raise FileFormatError(f"{path} is {image.format or 'unknown'} data, not PPM")
        return image

    @classmethod
    def read(cls, path: PathLike) -> np.ndarray:
        """
        Load a PPM image.

        Args:
            path: Path to image file

        Returns:
            uint8 array of shape [h, w, 3]

        Raises:
            FileFormatError: If file doesn't exist, isn't a .ppm file or isn't valid PPM data
        """
        with cls._open(path) as image:
            try:
                if image.mode != "RGB":
                    image = image.convert("RGB")
                return np.asarray(image, dtype=np.uint8).copy()
            except Exception as e:
                raise FileFormatError(f"Failed to load image {path}: {str(e)}") from e

    @classmethod
    def size(cls, path: PathLike) -> Tuple[int, int]:
        """(width, height) read from the file header only."""
        with cls._open(path) as image:
            return image.size

    @classmethod
    def write(cls, path: PathLike, image: np.ndarray) -> None:
        """Write a [h, w, 3] uint8 array as binary P6."""
        if not cls.is_supported(path):
            raise FileFormatError(f"Images are written as .ppm, got {path}")
        image = np.asarray(image)
        if image.ndim != 3 or image.shape[2] != 3:
            raise DimensionError(f"expected an [h, w, 3] RGB image, got shape {image.shape}")
        if image.dtype != np.uint8:
            raise FileFormatError(f"expected uint8 pixels, got {image.dtype}")
        Image.fromarray(image).save(path, format="PPM")


def read_image(path: PathLike) -> np.ndarray:
    return ImageFileHandler.read(path)


def write_image(path: PathLike, image: np.ndarray) -> None:
    ImageFileHandler.write(path, image)
