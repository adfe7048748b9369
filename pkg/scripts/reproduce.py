"""Run the desk-scale experiment set and write every report into the output directory"""
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.dependencies import get_settings  # noqa: E402
from src.presentation.cli import main  # noqa: E402


def runs(output_dir: Path) -> list[list[str]]:
    """Argument vectors of the reproduction runs, in order"""
    out = str(output_dir)
    return [
        ["gradcheck"],
        ["invert", "--pen-style", "0", "--length", "30", "--depth", "12", "--output", f"{out}/pen0.csv",
         "--report", f"{out}/invert.json", "--tol", "1e-4"],
        *[
            ["hurst", "--model", model, "--output", f"{out}/hurst-{model}.json"]
            for model in ("rr", "feedforward", "neural-sig", "deep-sig")
        ],
        ["gan", "--output", f"{out}/gan.json", "--samples", f"{out}/gan_samples.jsonl"],
    ]


def reproduce() -> int:
    output_dir = Path(get_settings().output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for argv in runs(output_dir):
        print(f"sigstack {' '.join(argv)}", file=sys.stderr)
        code = main(argv)
        if code != 0:
            print(f"  exited with {code}", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(reproduce())
