"""
Path validation for ddfilter input and output files.

Every path the command line reads (schedule documents, sweep configs,
tabulated spectral densities, bath tables) or writes (schedules, CSV
tables, diagnose reports, workbooks) passes through here before any file
is opened.
"""

import os
import logging
from pathlib import Path
from typing import Optional, List

logger = logging.getLogger(__name__)


class PathValidationError(Exception):
    """Raised when path validation fails."""
    pass


# System locations ddfilter never reads from or writes to
SUSPICIOUS_PATH_PATTERNS = [
    'etc/passwd', 'etc/shadow', 'windows/system32', 'system32',
    '.ssh', 'id_rsa', 'authorized_keys', 'private_key',
    'boot/', '/dev/', '/proc/', '/sys/'
]

SCHEDULE_EXTENSIONS = ['.json']
CONFIG_EXTENSIONS = ['.json']
TABLE_INPUT_EXTENSIONS = ['.csv', '.txt']
TABLE_OUTPUT_EXTENSIONS = ['.csv']
REPORT_EXTENSIONS = ['.json']
WORKBOOK_EXTENSIONS = ['.xlsx']


def _check_patterns(path_obj: Path, path: str, patterns: List[str]) -> None:
    path_str_lower = str(path_obj).lower().replace('\\', '/')
    for pattern in patterns:
        if pattern in path_str_lower:
            logger.warning(f"Suspicious path pattern detected: {pattern} in {sanitize_path_for_logging(path)}")
            raise PathValidationError(
                f"Path contains suspicious pattern: {pattern}. "
                "Access to system directories is not allowed."
            )


def _check_extension(path_obj: Path, allowed_extensions: Optional[List[str]]) -> None:
    if allowed_extensions and path_obj.suffix.lower() not in [ext.lower() for ext in allowed_extensions]:
        raise PathValidationError(
            f"Invalid file extension: {path_obj.suffix or '(none)'}. "
            f"Allowed extensions: {', '.join(allowed_extensions)}"
        )


def validate_safe_path(
    path: str,
    base_dir: Optional[str] = None,
    must_exist: bool = True,
    allowed_extensions: Optional[List[str]] = None,
    path_type: str = 'file'
) -> Path:
    """
    Validate a path the program is about to read.

    Args:
        path: User-provided path
        base_dir: Optional directory the path must stay inside
        must_exist: Whether the path must exist
        allowed_extensions: Allowed suffixes, e.g. ['.json']
        path_type: 'file' or 'directory'

    Returns:
        Resolved absolute Path

    Raises:
        PathValidationError: If the path is missing, of the wrong kind, outside
            base_dir, has a disallowed suffix or points at a system location
    """
    if not path or not isinstance(path, str):
        raise PathValidationError("Path must be a non-empty string")

    try:
        path_obj = Path(path).resolve()
    except (ValueError, OSError, RuntimeError) as e:
        raise PathValidationError(f"Invalid path format: {str(e)}")

    if must_exist and not path_obj.exists():
        raise PathValidationError(f"Path does not exist: {path}")

    if path_obj.exists():
        if path_type == 'file' and not path_obj.is_file():
            raise PathValidationError(f"Expected a file, but got a directory: {path}")
        elif path_type == 'directory' and not path_obj.is_dir():
            raise PathValidationError(f"Expected a directory, but got a file: {path}")

    if base_dir:
        base_path = Path(base_dir).resolve()
        try:
            path_obj.relative_to(base_path)
        except ValueError:
            raise PathValidationError(
                f"Path '{path}' is outside allowed directory '{base_dir}'. "
                "Path traversal attempts are not allowed."
            )

    if path_type == 'file':
        _check_extension(path_obj, allowed_extensions)

    _check_patterns(path_obj, path, SUSPICIOUS_PATH_PATTERNS)
    return path_obj


def validate_output_path(
    path: str,
    allowed_extensions: Optional[List[str]] = None,
    check_writable: bool = True,
    allow_overwrite: bool = True
) -> Path:
    """
    Validate a path the program is about to write.

    The parent directory must exist (and be writable when check_writable).

    Raises:
        PathValidationError: If the file cannot or may not be written
    """
    if not path or not isinstance(path, str):
        raise PathValidationError("Output path must be a non-empty string")

    try:
        path_obj = Path(path).resolve()
    except (ValueError, OSError, RuntimeError) as e:
        raise PathValidationError(f"Invalid output path format: {str(e)}")

    parent = path_obj.parent
    if not parent.exists():
        raise PathValidationError(
            f"Output directory does not exist: {parent}. "
            "Please create the directory first."
        )
    if check_writable and not os.access(parent, os.W_OK):
        raise PathValidationError(f"No write permission for directory: {parent}")
    if path_obj.is_dir():
        raise PathValidationError(f"Output path is a directory: {path}")

    _check_extension(path_obj, allowed_extensions)

    if not allow_overwrite and path_obj.exists():
        raise PathValidationError(f"File already exists and overwrite is not allowed: {path}")

    _check_patterns(path_obj, path, ['etc/passwd', 'etc/shadow', 'windows/system32', 'system32'])
    return path_obj


def sanitize_path_for_logging(path: str) -> str:
    """
    Shorten a path for log messages: '.../parent/name' for absolute paths,
    the bare file name otherwise.
    """
    try:
        path_obj = Path(path)
        if path_obj.is_absolute():
            parts = path_obj.parts
            if len(parts) > 2:
                return f".../{parts[-2]}/{parts[-1]}"
            return str(path_obj.name)
        return str(path_obj.name)
    except Exception:
        return os.path.basename(path) if path else "unknown"


def validate_batch_paths(
    paths: List[str],
    base_dir: Optional[str] = None,
    allowed_extensions: Optional[List[str]] = None,
    path_type: str = 'file'
) -> List[Path]:
    """
    Validate several input paths, reporting every failure at once.

    Raises:
        PathValidationError: listing each invalid path
    """
    validated_paths = []
    errors = []

    for i, path in enumerate(paths):
        try:
            validated_paths.append(validate_safe_path(
                path, base_dir=base_dir, allowed_extensions=allowed_extensions, path_type=path_type
            ))
        except PathValidationError as e:
            errors.append(f"Path {i+1} ({sanitize_path_for_logging(str(path))}): {str(e)}")

    if errors:
        raise PathValidationError(
            f"Validation failed for {len(errors)} path(s):\n" + "\n".join(errors)
        )
    return validated_paths


# ============================================================================
# Convenience validators
# ============================================================================

def validate_schedule_input(path: str) -> Path:
    """Schedule JSON document to load."""
    return validate_safe_path(path, must_exist=True, allowed_extensions=SCHEDULE_EXTENSIONS)


def validate_config_input(path: str) -> Path:
    """Sweep configuration JSON to load."""
    return validate_safe_path(path, must_exist=True, allowed_extensions=CONFIG_EXTENSIONS)


def validate_table_input(path: str) -> Path:
    """Two-column numeric table (spectral density or bath modes)."""
    return validate_safe_path(path, must_exist=True, allowed_extensions=TABLE_INPUT_EXTENSIONS)


def validate_table_output(path: str) -> Path:
    """CSV table to write."""
    return validate_output_path(path, allowed_extensions=TABLE_OUTPUT_EXTENSIONS)


def validate_report_output(path: str) -> Path:
    """JSON schedule or diagnose report to write."""
    return validate_output_path(path, allowed_extensions=REPORT_EXTENSIONS)


def validate_workbook_output(path: str) -> Path:
    """XLSX workbook to write."""
    return validate_output_path(path, allowed_extensions=WORKBOOK_EXTENSIONS)
