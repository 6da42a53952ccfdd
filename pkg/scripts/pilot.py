"""Pilot runs that pin the statistical fixtures used by the test suite.

Run from the repository root:

    python scripts/pilot.py [--seed 20240601] [--out tests/fixtures/pilot.json]

The pilot seed differs from the seeds used in tests, so the fixtures are
not tuned to the exact samples the tests draw. Each entry stores the
summary rows of one configuration.
"""

import argparse
import json
import time

from rmtlab.harness import ExperimentConfig, run_experiment

PILOTS = {
    "converge_z025": dict(experiment="converge", dist="gaussian", z=0.25, m_list=[100, 200, 400], trials=50),
    "converge_z081": dict(experiment="converge", dist="gaussian", z=0.81, m_list=[324], trials=50),
    "heavy_tail_pareto": dict(
        experiment="heavy-tail", dist="symmetric-pareto:alpha=2.5", z=0.25, m_list=[200, 400], trials=50, eps=0.1
    ),
    "mp_gaussian": dict(experiment="mp-check", dist="gaussian", z=0.25, m_list=[100, 400], trials=20),
    "mp_pareto": dict(experiment="mp-check", dist="symmetric-pareto:alpha=2.5", z=0.25, m_list=[400], trials=20),
    "truncate_pareto": dict(
        experiment="truncate-pipeline", dist="symmetric-pareto:alpha=2.5", z=0.25, m_list=[400], trials=50, eta=0.1
    ),
    "truncate_gaussian": dict(experiment="truncate-pipeline", dist="gaussian", z=0.25, m_list=[400], trials=20, eta=0.1),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--out", default="tests/fixtures/pilot.json")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    result = {"seed": args.seed, "runs": {}}
    for name, spec in PILOTS.items():
        t0 = time.perf_counter()
        cfg = ExperimentConfig.from_dict({**spec, "seed": args.seed})
        _, summary = run_experiment(cfg, args.workers)
        elapsed = time.perf_counter() - t0
        result["runs"][name] = {"config": spec, "summary": summary, "seconds": round(elapsed, 1)}
        print(f"{name}: {elapsed:.1f}s", flush=True)
        for row in summary:
            print(f"  m={row['m']} {row['stat']}: mean={row['mean']:.4f} median={row['median']:.4f} "
                  f"[{row['min']:.4f}, {row['max']:.4f}]", flush=True)
    with open(args.out, "w") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
