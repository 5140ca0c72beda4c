"""Round trip through the binary dataset formats and the CLI.

Writes a benchmark as ADPT/ADPL/manifest files, runs the command-line
pipeline on them, and reads the JSON report back.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from gaussadapt import load_manifest

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    subprocess.run(
        [sys.executable, "-m", "gaussadapt.cli", "synth",
         "--out-dir", str(out), "--n-per-class", "80", "--seed", "11"],
        check=True,
    )
    print("dataset files:", sorted(p.name for p in out.iterdir()))

    dataset = load_manifest(out / "manifest.json")
    print(f"loaded: N={dataset.n_samples} d={dataset.dim} "
          f"K={dataset.n_classes} tau={dataset.tau}")

    report_path = out / "report.json"
    subprocess.run(
        [sys.executable, "-m", "gaussadapt.cli", "run",
         "--manifest", str(out / "manifest.json"),
         "--mode", "transductive", "--out", str(report_path)],
        check=True,
    )
    report = json.loads(report_path.read_text())
    print(f"report: top-1 {100 * report['top1_accuracy']:.2f}%  "
          f"zero-shot {100 * report['zero_shot_accuracy']:.2f}%  "
          f"gain {100 * report['gain']:+.2f}")
    print(f"dataset hash: {report['dataset_hash'][:16]}...")
