"""
The command line, end to end
============================

Every library capability is also reachable as a subcommand; this demo
drives a census update and a bootstrap run through the CLI entry point
and shows the files they leave behind.  Invoking ``spreekit`` from a
shell is equivalent.
"""

import json
import tempfile
from pathlib import Path

from spreekit.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
MINI = FIXTURES / "mini"

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "update"
    code = main([
        "update",
        "--seed", str(MINI / "census2002.csv"),
        "--col-margin", str(MINI / "survey_margin.csv"),
        "--projections", str(MINI / "projections.csv"),
        "--hierarchy", str(MINI / "hierarchy.csv"),
        "--shares-mode", "fixed",
        "--year", "2013",
        "--unit", "persons",
        "--out", str(out),
    ])
    print(f"update exit code: {code}")
    print("files written:", sorted(p.name for p in out.iterdir()))
    provenance = json.loads((out / "provenance.json").read_text())
    print("provenance:", {k: provenance[k]
                          for k in ("shares_mode", "iterations", "converged")})

    out = Path(tmp) / "bootstrap"
    code = main([
        "bootstrap",
        "--census", str(MINI / "census2002.csv"),
        "--col-margin", str(MINI / "survey_margin.csv"),
        "--projections", str(MINI / "projections.csv"),
        "--hierarchy", str(MINI / "hierarchy.csv"),
        "--shares-mode", "fixed",
        "--year", "2013",
        "--design", str(MINI / "design.csv"),
        "--replicates", "50",
        "--seed", "7",
        "--out", str(out),
    ])
    print(f"\nbootstrap exit code: {code}")
    print("files written:", sorted(p.name for p in out.iterdir()))

    # Every run also drops a manifest: inputs with checksums, the
    # library version, the seed, and a digest of the configuration.
    manifest = json.loads((out / "manifest.json").read_text())
    print("manifest keys:", sorted(manifest))
    print("inputs recorded:", sorted(manifest["inputs"]))
