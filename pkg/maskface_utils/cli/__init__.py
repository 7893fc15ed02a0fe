"""Command-line interface for maskface-utils"""

import sys
from pathlib import Path
from typing import NoReturn, Union

from maskface_utils.exceptions import OutputExistsError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def exit_with_error(error: BaseException) -> NoReturn:
    """Print ``Error: ...`` and exit 1 for validation errors, 2 for everything else."""
    if isinstance(error, KeyboardInterrupt):
        print("\nInterrupted by user.", file=sys.stderr)
        sys.exit(EXIT_RUNTIME)
    print(f"Error: {error}", file=sys.stderr)
    sys.exit(EXIT_VALIDATION if isinstance(error, ValidationError) else EXIT_RUNTIME)


def prepare_output_dir(path: Union[str, Path], force: bool) -> Path:
    """Create ``path``; an existing non-empty directory needs ``force``."""
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise OutputExistsError(f"Output path exists and is not a directory: {path}")
    if path.is_dir() and any(path.iterdir()) and not force:
        raise OutputExistsError(f"Output directory {path} is not empty (use --force to overwrite)")
    path.mkdir(parents=True, exist_ok=True)
    return path


def prepare_output_file(path: Union[str, Path], force: bool) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise OutputExistsError(f"Output file {path} already exists (use --force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path
