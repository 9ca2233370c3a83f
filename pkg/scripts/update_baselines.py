#!/usr/bin/env python3
"""Regenerate the golden audit tables in tests/baselines/.

The tables come from the deterministic prediction fixture used by the
test suite. Overwrites existing baselines.

Usage:
    uv run python scripts/update_baselines.py
    # or via pytest:
    uv run pytest tests/test_fairaudit.py --update-baselines

The experiment pilot numbers (experiments_pilot.json) need trained models
and are only rewritten by the slow suite:
    uv run pytest tests/test_experiments.py --update-baselines
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

GOLDEN_FILES = ("audit.csv", "dca_overall.csv", "dca_age.csv", "risk_obesity_1.csv")


def main() -> None:
    from disentlab.config import AuditConfig
    from disentlab.fairaudit import audit, write_audit
    from tests.conftest import BASELINES_DIR, make_records

    BASELINES_DIR.mkdir(parents=True, exist_ok=True)
    report = audit(make_records(), AuditConfig(bootstrap_resamples=200))
    with tempfile.TemporaryDirectory() as tmp:
        write_audit(report, tmp)
        for name in GOLDEN_FILES:
            text = (Path(tmp) / name).read_text(encoding="utf-8")
            (BASELINES_DIR / name).write_text(text, encoding="utf-8")
            print(f"  Updated: {name}")

    print(f"\nAll {len(GOLDEN_FILES)} baselines updated in {BASELINES_DIR}")


if __name__ == "__main__":
    main()
