"""
Picard chain solver - command-line entry point.

Runs Picard iteration for initial value problems on a chain of weighted
sup-metrics and reports the observed error next to its certified bounds.
"""
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
