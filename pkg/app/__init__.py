"""nhq-search: hybrid vector + attribute nearest-neighbor search over navigable proximity graphs."""

__version__ = "1.0.0"
__author__ = "VoxHash"
__email__ = "contact@voxhash.dev"
