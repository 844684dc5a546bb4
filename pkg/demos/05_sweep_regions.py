"""Sweep duration targets over two profiles and map feasibility regions.

Reproduces the sweep the command line runs, then prints a compact region
chart: green rows meet the target for every profile, yellow rows only for
some, red rows for none.
"""

from pathlib import Path

from edgemig import load_scenario
from edgemig.cli import emit_report, sweep_rows

scenario = load_scenario(Path(__file__).parent / "scenario.json")
rows = sweep_rows(scenario)

print(emit_report(rows))

by_target: dict[float, list] = {}
for row in rows:
    by_target.setdefault(row["target_s"], []).append(row)

print("region chart (duration target vs. profiles):")
for target, group in sorted(by_target.items()):
    marks = " ".join(
        f"{r['profile']}:{'Y' if r['met'] else 'n'}" for r in group)
    print(f"  {target:5.1f} s  [{group[0]['region']:6s}]  {marks}")
