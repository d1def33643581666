"""Print what a seed generates: roster, clients, market composition."""

import argparse
from collections import Counter

from ycbench.config import load_preset
from ycbench.model import Domain
from ycbench.worldgen import generate_world


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("seed", type=int)
    parser.add_argument("--preset", default="default")
    parser.add_argument("--privileged", action="store_true",
                        help="include ground-truth client flags hidden from agents")
    args = parser.parse_args()

    state = generate_world(args.seed, load_preset(args.preset))
    print(f"seed {args.seed}: ${state.funds / 100:,.2f}, "
          f"{len(state.market)} market tasks, start {state.clock.timestamp}")

    print("\nroster")
    for e in state.roster:
        rates = " ".join(f"{d.value}={e.rates[d]:.2f}" for d in Domain)
        print(f"  {e.id:8s} {e.tier:6s} ${e.monthly_salary / 100:>9,.2f}/mo  {rates}")

    print("\nclients")
    for c in state.clients:
        flag = ""
        if args.privileged and c.adversarial:
            flag = f"  [adversarial, creep {c.scope_creep_factor:.2f}]"
        print(f"  {c.id:18s} trust {c.trust:.1f}{flag}")

    rewards = [t.advertised_reward for t in state.market]
    domains = Counter(d for t in state.market for d in t.domain_work)
    gated = sum(t.required_trust > 0 for t in state.market)
    print(f"\nmarket: reward ${min(rewards) / 100:,.0f}..${max(rewards) / 100:,.0f} "
          f"(mean ${sum(rewards) / len(rewards) / 100:,.0f}), {gated} trust-gated")
    for domain, count in domains.most_common():
        print(f"  {domain.value:17s} {count} tasks")


if __name__ == "__main__":
    main()
