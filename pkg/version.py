"""
ddfilter Version Information

Single source of truth for version number.
Update this file when releasing a new version.
"""

__version__ = "1.0.0"
__version_info__ = (1, 0, 0)

# Version components
MAJOR = 1
MINOR = 0
PATCH = 0

# Full version string
FULL_VERSION = __version__  # "1.0.0"

# Version name (optional, for major releases)
VERSION_NAME = "Filter functions and factor sweeps"
