"""
Named presets for ddfilter.

Grid presets describe the frequency grids filter curves are evaluated on;
sweep presets are ready-made sweep configuration documents (the same
JSON layout `ddfilter sweep --config` reads). Built-in presets can be
extended with custom ones persisted to a JSON file.
"""

import json
import os
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from sampling import FrequencyGrid, concatenate_grids, log_grid, make_grid

logger = logging.getLogger(__name__)

# Custom presets file
PRESETS_CONFIG_FILE = "ddfilter_presets.json"

DEFAULT_GRID_PRESETS = {
    "fig4": {
        "segments": [
            {"z_min": 1e-3, "z_max": 10.0, "spacing": "linear", "step": 1e-4},
            {"z_min": 10.0, "z_max": 1e8, "spacing": "linear", "step": 100.0},
        ],
        "description": "Step 1e-4 on [1e-3, 10], then step 100 on [10, 1e8]",
        "is_custom": False,
    },
    "standard": {
        "segments": [
            {"z_min": 1e-3, "z_max": 1e4, "spacing": "logarithmic", "points_per_decade": 100},
        ],
        "description": "Log grid 1e-3..1e4, 100 points per decade",
        "is_custom": False,
    },
    "rolloff": {
        "segments": [
            {"z_min": 1e-4, "z_max": 1e4, "spacing": "logarithmic", "points_per_decade": 50},
        ],
        "description": "Log grid 1e-4..1e4, 50 points per decade, for low-frequency fits",
        "is_custom": False,
    },
}

DEFAULT_SWEEP_PRESETS = {
    "matched_pulses": {
        "nudd": ["2,2", "4,4", "6,6", "8,8", "16,16"],
        "pair_sdd": True,
        "filters": ["F14c", "F23c", "F14i", "F23i"],
        "alphas": [1.0, 4.0],
        "T": 1.0,
        "pulse_width": 0.0,
    },
}


@dataclass
class GridPreset:
    """A frequency grid assembled from linear and logarithmic segments."""
    name: str
    segments: List[Dict]
    description: str = ""
    is_custom: bool = True

    def to_dict(self) -> Dict:
        return {'segments': self.segments, 'description': self.description, 'is_custom': self.is_custom}

    @classmethod
    def from_dict(cls, name: str, data: Dict) -> 'GridPreset':
        return cls(
            name=name,
            segments=list(data.get('segments', [])),
            description=data.get('description', ''),
            is_custom=data.get('is_custom', True)
        )

    def build(self) -> FrequencyGrid:
        """Evaluate the segments into one grid."""
        if not self.segments:
            raise ValueError(f"grid preset '{self.name}' has no segments")
        grids = []
        for segment in self.segments:
            spacing = segment.get('spacing', 'logarithmic')
            if spacing == 'logarithmic' and 'points_per_decade' in segment:
                grids.append(log_grid(segment['z_min'], segment['z_max'], segment['points_per_decade']))
            else:
                grids.append(make_grid(segment['z_min'], segment['z_max'], points=segment.get('points'),
                                       step=segment.get('step'), spacing=spacing))
        return grids[0] if len(grids) == 1 else concatenate_grids(*grids)


@dataclass
class SweepPreset:
    name: str
    document: Dict = field(default_factory=dict)
    is_custom: bool = True


class PresetsManager:
    """
    Manages built-in and custom grid and sweep presets.
    """

    def __init__(self, config_file: str = PRESETS_CONFIG_FILE):
        self.config_file = config_file
        self.grids: Dict[str, GridPreset] = {}
        self.sweeps: Dict[str, SweepPreset] = {}
        self._load()

    def _load(self) -> None:
        """Built-in presets first, then custom ones from the presets file."""
        for name, data in DEFAULT_GRID_PRESETS.items():
            self.grids[name] = GridPreset.from_dict(name, data)
        for name, document in DEFAULT_SWEEP_PRESETS.items():
            self.sweeps[name] = SweepPreset(name, dict(document), is_custom=False)

        if not os.path.exists(self.config_file):
            logger.info("No custom presets file found, using built-in presets only")
            return
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                loaded = json.load(f)
            for name, data in loaded.get('grids', {}).items():
                if name not in DEFAULT_GRID_PRESETS:
                    self.grids[name] = GridPreset.from_dict(name, data)
            for name, document in loaded.get('sweeps', {}).items():
                if name not in DEFAULT_SWEEP_PRESETS:
                    self.sweeps[name] = SweepPreset(name, document)
            logger.info(f"Loaded custom presets from {self.config_file}")
        except json.JSONDecodeError as e:
            logger.error(f"Failed to parse presets file: {e}")

    def _save(self) -> bool:
        try:
            data = {
                'grids': {name: preset.to_dict() for name, preset in self.grids.items() if preset.is_custom},
                'sweeps': {name: preset.document for name, preset in self.sweeps.items() if preset.is_custom},
            }
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=2)
            logger.info(f"Saved presets to {self.config_file}")
            return True
        except OSError as e:
            logger.error(f"Failed to save presets: {e}")
            return False

    def get_grid_preset(self, name: str) -> Optional[GridPreset]:
        return self.grids.get(name)

    def get_sweep_document(self, name: str) -> Optional[Dict]:
        preset = self.sweeps.get(name)
        return dict(preset.document) if preset else None

    def get_preset_names(self) -> Dict[str, List[str]]:
        return {'grids': sorted(self.grids), 'sweeps': sorted(self.sweeps)}

    def add_grid_preset(self, name: str, segments: List[Dict], description: str = "") -> bool:
        """
        Add a custom grid preset.

        Returns:
            bool: False when the name belongs to a built-in preset
        """
        if name in self.grids and not self.grids[name].is_custom:
            logger.warning(f"Cannot override built-in grid preset: {name}")
            return False
        preset = GridPreset(name=name, segments=segments, description=description, is_custom=True)
        preset.build()
        self.grids[name] = preset
        return self._save()

    def add_sweep_preset(self, name: str, document: Dict) -> bool:
        if name in self.sweeps and not self.sweeps[name].is_custom:
            logger.warning(f"Cannot override built-in sweep preset: {name}")
            return False
        self.sweeps[name] = SweepPreset(name, dict(document))
        return self._save()

    def delete_preset(self, name: str) -> bool:
        """Delete a custom grid or sweep preset."""
        for table in (self.grids, self.sweeps):
            if name in table:
                if not table[name].is_custom:
                    logger.warning(f"Cannot delete built-in preset: {name}")
                    return False
                del table[name]
                return self._save()
        logger.warning(f"Preset not found: {name}")
        return False


_manager_instance: Optional[PresetsManager] = None


def get_presets_manager() -> PresetsManager:
    """Get the singleton PresetsManager instance."""
    global _manager_instance
    if _manager_instance is None:
        _manager_instance = PresetsManager()
    return _manager_instance


def grid_from_preset(name: str) -> FrequencyGrid:
    """
    Build a named grid.

    Raises:
        KeyError: if no grid preset has this name
    """
    preset = get_presets_manager().get_grid_preset(name)
    if preset is None:
        raise KeyError(f"unknown grid preset '{name}'")
    grid = preset.build()
    logger.debug(f"Grid preset '{name}': {len(grid)} points")
    return grid


def sweep_document(name: str) -> Dict:
    """
    Named sweep configuration document.

    Raises:
        KeyError: if no sweep preset has this name
    """
    document = get_presets_manager().get_sweep_document(name)
    if document is None:
        raise KeyError(f"unknown sweep preset '{name}'")
    return document
