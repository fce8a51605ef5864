"""
The closed loop on the shipped scenario
=======================================

Three UAVs, five drifting containers, a stationary vessel.  Detection,
local tracking, fusion on the vessel, allocation and hover selection all
run in one deterministic loop.  Takes roughly ten seconds.
"""
from collections import Counter
from pathlib import Path

from maritrack import parse_config, run_scenario
from maritrack.metrics import evaluate

scenario = Path(__file__).resolve().parents[1] / "scenarios" / "paper_like.yaml"
cfg = parse_config(scenario)
log = run_scenario(cfg)
print(f"{len(log.records)} log records, digest {log.digest()[:16]}")

# %%
# Mission events: each container is marked done on the vessel and the
# tracking UAV hands it off.
for e in log.stream("event"):
    if e["kind"] in ("done", "handoff"):
        extra = f"logdet {e['logdet']:.2f}" if e["kind"] == "done" else f"uav {e['uav']}"
        print(f"t={e['t']:6.1f}  {e['kind']:8s} target {e['target']}  {extra}")

# %%
# How the UAVs spent their time.
modes = Counter((u[0], u[7]) for r in log.stream("truth") for u in r["uavs"])
for (j, mode), n in sorted(modes.items()):
    print(f"UAV {j} {mode:12s} {n / 10:.1f} s")

# %%
# Scorecard.
m = evaluate(log)
print(f"IDF1 {m.idf1:.3f}  IDSW {m.idsw}  Frag {m.frag}")
print(f"median error {m.med_err:.3f} m, RMSE {m.rmse:.3f} m, P95 {m.p95:.3f} m")
print(f"depth sigma at the typical range of {m.typical_range:.1f} m: {m.injected_sigma:.3f} m")
print(f"bus load {m.bytes_per_s:.1f} B/s, containers done {m.containers_done}/{m.n_containers}")
