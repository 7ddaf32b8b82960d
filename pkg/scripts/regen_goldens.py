"""Regenerate the byte goldens under tests/golden/ from the fixtures.

Run from the repository root after an intentional output change:

    python scripts/regen_goldens.py

Inspect the diff before committing; these files pin exact bytes.
"""

from pathlib import Path
import sys

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from solq import cli  # noqa: E402

FIXTURES = ROOT / "fixtures"
GOLDEN = ROOT / "tests" / "golden"

MODELS = ("latin", "cakes", "meal", "energy", "threesat")
TABLES = (("latin", "table", "txt"), ("latin", "csv", "csv"), ("latin", "json", "json"))


def main() -> int:
    GOLDEN.mkdir(exist_ok=True)
    for stem in MODELS:
        out = GOLDEN / f"{stem}.mzn"
        code = cli.main(
            ["run", str(FIXTURES / f"{stem}.ra"), "--backend", "mzn-emit", "-o", str(out)]
        )
        if code != 0:
            print(f"emit failed for {stem}", file=sys.stderr)
            return code
        print(f"wrote {out}")
    for stem, fmt, ext in TABLES:
        out = GOLDEN / f"{stem}.{ext}"
        code = cli.main(
            ["run", str(FIXTURES / f"{stem}.ra"), "--format", fmt, "-o", str(out)]
        )
        if code != 0:
            print(f"run failed for {stem}/{fmt}", file=sys.stderr)
            return code
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
