import sys
from pathlib import Path

# let test modules import the shared helpers without packaging them
sys.path.insert(0, str(Path(__file__).parent))
