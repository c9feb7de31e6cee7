"""Power-grid topology analysis and PLC network planning."""

from importlib import resources

__version__ = "0.1.0"


def ieee300_paths():
    """(edge-list path, bus-file path) of the bundled IEEE 300-bus test system."""
    base = resources.files(__package__) / "data"
    return base / "ieee300_branches.csv", base / "ieee300_buses.csv"
