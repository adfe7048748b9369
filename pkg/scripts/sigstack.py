"""Run the sigstack CLI from a source checkout"""
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.presentation.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
