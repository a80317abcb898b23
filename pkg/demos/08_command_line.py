"""
Driving experiments from the command line
=========================================

Every experiment is a small TOML file. ``fastkm run`` writes a CSV trace
with the columns ``k,residual,residual_times_k,gap,energy,variance`` and a
JSON sidecar that echoes the configuration; ``fastkm sweep`` fans a grid
out over worker processes; ``fastkm plotdata`` stacks traces into long
format for plotting. This script calls the same entry point in-process.
"""

from pathlib import Path

from fastkm.cli import main

here = Path(__file__).parent
out = here / "configs" / "out"

main(["run", "--config", str(here / "configs" / "skew.toml")])
main(["run", "--config", str(here / "configs" / "median.toml")])
main(["sweep", "--eta", "0.1:0.9:9", "--alpha", "4", "--sigma", "2", "--iterations", "2000",
      "--workers", "2", "--out", str(out / "sweep")])
main(["plotdata", *map(str, sorted((out / "sweep").glob("*.csv"))), "--out", str(out / "sweep_long.csv")])
main(["dynamics", "--experiment", "edge", "--t-end", "100", "--out", str(out / "edge.csv")])

print((out / "skew.csv").read_text().splitlines()[:3])
