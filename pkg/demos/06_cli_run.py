"""Running the command line harness programmatically.

Equivalent shell commands::

    canmeas check --out runs/check
    canmeas sweep --config my.json --out runs/sweep --threads 4
    canmeas mean-dependence --out runs/md
"""
import tempfile
from pathlib import Path

import canmeas
from canmeas.cli import main

commuting = Path(canmeas.__file__).parent / "configs" / "commuting.json"

with tempfile.TemporaryDirectory() as out:
    print("exit code:", main(["sweep", "--out", out]))
    print("exit code:", main(["check", "--config", str(commuting), "--out", out]))
