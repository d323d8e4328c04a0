#!/usr/bin/env python3
"""Record dynamic indirect-call targets for the resolver fixtures.

Compiles each executable fixture together with its driver (clang, -O0),
runs the binary, and logs which function each indirect call site actually
reached.  The result is frozen into tests/fixtures/ground_truth.json; the
test suite asserts the statically resolved target sets contain these
observed targets.  Run once per fixture change:

    python scripts/record_ground_truth.py
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# message printed by the called function -> (fixture, function containing the
# indirect site that reaches it)
GROUPS = {
    "listing1": {
        "modules": ["listing1.ll"],
        "driver": "drivers/listing1_main.ll",
        "observations": [
            {
                "message": "CALLED open_file",
                "site_function": "_ZN11wasi_common9preview_19path_open28_$u7b$$u7b$closure$u7d$$u7d$17h9876543210fedcbaE",
                "called": "_ZN60_$LT$host..dir..Dir$u20$as$u20$wasi_common..dir..WasiDir$GT$9open_file17h9999888877776666E",
            },
            {
                "message": "CALLED open_file_closure",
                "site_function": "poll",
                "called": "_ZN60_$LT$host..dir..Dir$u20$as$u20$wasi_common..dir..WasiDir$GT$9open_file28_$u7b$$u7b$closure$u7d$$u7d$17h5555aaaa6666bbbbE",
            },
        ],
    },
    "type_analysis": {
        "modules": ["mlta_ground.ll", "generic_template.ll"],
        "driver": "drivers/mlta_main.ll",
        "observations": [
            {"message": "CALLED mlta_inc", "site_function": "mlta_run", "called": "mlta_inc"},
            {"message": "CALLED tmpl_on_alpha", "site_function": "tmpl_dispatch_a", "called": "tmpl_on_alpha"},
            {"message": "CALLED tmpl_on_beta", "site_function": "tmpl_dispatch_b", "called": "tmpl_on_beta"},
        ],
    },
}


def main() -> int:
    result: dict = {}
    for name, group in GROUPS.items():
        sources = [FIXTURES / m for m in group["modules"]] + [FIXTURES / group["driver"]]
        with tempfile.TemporaryDirectory() as tmp:
            binary = Path(tmp) / name
            compile_cmd = ["clang", "-O0", "-Wno-override-module", *map(str, sources), "-o", str(binary)]
            subprocess.run(compile_cmd, check=True)
            run = subprocess.run([str(binary)], capture_output=True, text=True, check=True)
        lines = run.stdout.splitlines()
        observations = []
        for obs in group["observations"]:
            if obs["message"] not in lines:
                print(f"FATAL: {name}: expected output {obs['message']!r} not observed", file=sys.stderr)
                return 1
            observations.append(
                {"site_function": obs["site_function"], "called": obs["called"]}
            )
        result[name] = {"modules": group["modules"], "observations": observations}
        print(f"{name}: {len(observations)} indirect targets observed")
    out = FIXTURES / "ground_truth.json"
    out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
