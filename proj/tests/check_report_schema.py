#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Runs a small pipeline through the CLI and validates the report JSON."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def run(cli, *args):
    subprocess.run([cli, *args], check=True, stdout=subprocess.DEVNULL)


def main():
    cli, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(Path(schema_path).read_text())
    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        run(cli, "benchmark", "--patients", "200", "--seed", "1", "--out", str(d / "bench"))
        run(cli, "prepare", "--schema", str(d / "bench/schema.json"), "--input", str(d / "bench/raw.csv"),
            "--seed", "1", "--out", str(d / "prep"))
        (d / "cfg.json").write_text(json.dumps({"E": 4, "h": 4, "epochs": 4}))
        run(cli, "train", "--data", str(d / "prep"), "--config", str(d / "cfg.json"), "--out", str(d / "m.ckpt"))
        run(cli, "evaluate", "--data", str(d / "prep"), "--model", str(d / "m.ckpt"), "--factors", "2,5",
            "--classifiers", "logreg,mlp,forest", "--seeds", "2", "--out", str(d / "report.json"))
        report = json.loads((d / "report.json").read_text())
    jsonschema.validate(report, schema)
    assert len(report["reports"]) == 3 * 3 * 2, len(report["reports"])
    print("report validates")


if __name__ == "__main__":
    main()
