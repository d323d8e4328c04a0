import sys
from pathlib import Path

# Oracle modules live beside the tests, not in the package under test.
sys.path.insert(0, str(Path(__file__).parent))
