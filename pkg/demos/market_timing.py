"""When to trade in an LMSR market: substitutes reward speed, complements reward patience."""

import math

from multistable.market import evaluate_strategy_timing, liquidity_sweep
from multistable.scenarios import noisy_copies, xor2

GRID = ["reveal", "reveal:1", "silent"]


def table(theta, title):
    print(title)
    rows = evaluate_strategy_timing(theta, 1.0, GRID)
    for row in rows:
        s0, s1 = (str(s) for s in row.strategies)
        p0, p1 = (p / math.log(2) for p in row.expected_profit)
        print(f"  {s0:>9} vs {s1:<9} {p0:+.4f} {p1:+.4f} bits")


def main():
    table(noisy_copies(), "noisy copies (substitutes)")
    table(xor2(), "xor (complements)")
    print("liquidity, capped at 0.5 shares per trade:")
    for row in liquidity_sweep(noisy_copies(), (1, 1), [(0, "truthful"), (1, "truthful")], [0.25, 1, 4], share_cap=0.5):
        print(f"  alpha={row.alpha:<5} converged at trade {row.convergence_trade}, largest jump {row.max_tv_jump:.3f}")


if __name__ == "__main__":
    main()
