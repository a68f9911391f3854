import sys
from pathlib import Path

# make sibling helper modules (chemgen, validity_cases, ...) importable
sys.path.insert(0, str(Path(__file__).resolve().parent))
