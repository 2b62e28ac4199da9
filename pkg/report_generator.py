"""
Diagnose report for ddfilter.

Collects the analysis outputs of one schedule (rolloff fits, spectral
peaks, DFS map, singular points) into named sections, together with the
warnings raised along the way, and writes them as one JSON document.

The document carries no timestamps, so the same inputs give a
byte-identical file.
"""

import json
import logging
import math
from datetime import datetime
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """numpy scalars, tuples and tuple keys to JSON-friendly values."""
    if isinstance(value, dict):
        return {(",".join(str(k) for k in key) if isinstance(key, tuple) else str(key)): _plain(v)
                for key, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, 'item') and callable(value.item):
        return value.item()
    return value


class DiagnosticReport:
    """
    Accumulates the sections of a diagnose run.
    """

    def __init__(self):
        self.sections: Dict[str, Any] = {}
        self.warnings: List[str] = []
        self.errors: List[str] = []
        self.metadata: Dict[str, Any] = {}
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None

    def set_metadata(self, **metadata):
        """Schedule description, topology, pulse width and similar run parameters."""
        self.metadata.update(_plain(metadata))

    def start_processing(self):
        self.start_time = datetime.now()

    def end_processing(self):
        self.end_time = datetime.now()
        if self.start_time:
            elapsed = (self.end_time - self.start_time).total_seconds()
            logger.info(f"Diagnose finished in {elapsed:.2f}s")

    def add_section(self, name: str, content: Any):
        self.sections[name] = _plain(content)

    def add_entry(self, section: str, key: str, content: Any):
        """Add one keyed entry to a dict-valued section."""
        self.sections.setdefault(section, {})[key] = _plain(content)

    def add_warning(self, message: str):
        logger.warning(message)
        self.warnings.append(message)

    def add_error(self, message: str):
        logger.error(message)
        self.errors.append(message)

    def get_statistics(self) -> Dict:
        singular = self.sections.get('singularities', {})
        dfs = self.sections.get('dfs', {})
        markers = []
        if isinstance(singular, dict):
            markers = [m for entries in singular.values() for m in entries or [] if isinstance(m, dict)]
        return {
            'sections': len(self.sections),
            'warnings': len(self.warnings),
            'errors': len(self.errors),
            'singular_points': len(markers),
            'periodic_singular_points': sum(1 for m in markers if m.get('family') == 'periodic'),
            'protected_elements': sum(1 for v in dfs.values() if v is True) if isinstance(dfs, dict) else 0,
        }

    def to_dict(self) -> Dict:
        return {
            'metadata': self.metadata,
            **self.sections,
            'statistics': self.get_statistics(),
            'warnings': list(self.warnings),
            'errors': list(self.errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write_json(self, output_path: str) -> bool:
        """
        Write the report.

        Returns:
            bool: True if successful, False otherwise
        """
        try:
            with open(output_path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(self.to_json())
            logger.info(f"Diagnose report written with {len(self.sections)} section(s)")
            return True
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"Failed to write diagnose report: {e}")
            return False


def load_report(path: str) -> Dict:
    """Read a diagnose report back."""
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def finite_or_none(value: float) -> Optional[float]:
    """NaN and infinities become null in the report."""
    return float(value) if value is not None and math.isfinite(value) else None


def create_diagnostic_report() -> DiagnosticReport:
    """
    Factory function to create a new DiagnosticReport instance.
    """
    return DiagnosticReport()
