"""Driving the command line tool from a problem file.

Writes a small problem to a temporary directory, runs two subcommands and
lists the CSV tables written next to the JSON report.
"""

import json
import tempfile
from pathlib import Path

from salvage.cli import run

problem = {
    "name": "shifted",
    "domain": [0, 4],
    "omega": "x - 1",
    "g_prime": "3",
    "link": "x + 2",
    "tolerances": {"n_schedule": [16, 32, 64]},
}

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "shifted.json"
    path.write_text(json.dumps(problem))
    print("exit code", run(["link-check", "--problem", str(path)]))
    out = Path(tmp) / "out"
    print("exit code", run(["salvage", "--problem", str(path), "--bins", "32", "--out", str(out)]))
    for f in sorted(out.iterdir()):
        print(f.name, len(f.read_text().splitlines()), "lines")
