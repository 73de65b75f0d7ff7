"""XOR signals: hill climbing from silence never finds the fully informative protocol."""

from multistable.optimization import full_partition, global_optimum, local_search, objective
from multistable.scenarios import xor2


def main():
    theta = xor2()
    for beta in (0.3, 0.4, 0.5, 0.6):
        res = local_search(theta, beta)
        val, best = global_optimum(theta, beta)
        print(f"beta={beta}: local {res.objective:+.2f} ({len(res.partition.leaves)} leaf), "
              f"global {val:+.2f} ({len(best.leaves)} leaves), full reveal {objective(theta, full_partition(theta), beta):+.2f}")


if __name__ == "__main__":
    main()
