"""Run every numerical audit on the four reference models and list the failures."""
from collections import Counter

from qswlab import fixture
from qswlab.bounds import run_checks

for name in "ABCD":
    reports = run_checks(fixture(name), "all", n=10)
    counts = Counter(r.verdict for r in reports)
    print(f"model {name}: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
    for r in reports:
        if r.verdict == "fails":
            mode = r.params.get("mode", "")
            print(f"   {r.check_id:36s} {mode:9s} margin {r.margin:+.3e}  {r.note}")
