"""Sweep the builtin agents over a seed list and tabulate the results."""

import argparse
import sys
from pathlib import Path

from ycbench.analytics import compute_stats, privileged_client_flags, write_tables
from ycbench.config import load_preset
from ycbench.harness import make_builtin, run_episode
from ycbench.runlog import read_log


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", default="greedy,silent",
                        help="comma-separated builtin agent names")
    parser.add_argument("--seeds", default="1,2,3", help="comma-separated seeds")
    parser.add_argument("--preset", default="default")
    parser.add_argument("--max-turns", type=int, default=None)
    parser.add_argument("--out", type=Path, default=Path("runs"))
    args = parser.parse_args()

    if args.out.exists() and any(args.out.iterdir()):
        sys.exit(f"{args.out} is not empty; pick a fresh --out so sessions never mix")

    config = load_preset(args.preset)
    runs = []
    for name in args.agents.split(","):
        for seed in (int(s) for s in args.seeds.split(",")):
            root = args.out / f"{name}-seed{seed}"
            report = run_episode(root, seed=seed, config=config,
                                 agent=make_builtin(name, config),
                                 max_turns=args.max_turns)
            print(f"{name} seed {seed}: {report.outcome} after {report.turn_count} "
                  f"turns, ${report.final_funds / 100:,.2f}")
            records = read_log(root / "run.log")
            flags = privileged_client_flags(root / "snapshot.json")
            runs.append(compute_stats(records, adversarial_clients=flags, label=name))
    for path in write_tables(args.out, runs):
        print("wrote", path)


if __name__ == "__main__":
    main()
