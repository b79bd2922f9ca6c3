import sys
from pathlib import Path

# Expose tests/ as an import root so test modules can share oracles and helpers.
sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
