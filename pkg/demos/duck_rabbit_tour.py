"""Walk through the duck-rabbit structure: beliefs, consensuses, multistability, switching."""

from multistable import io as mio
from multistable.complexity import detect_multistability, gestalt_stimulus
from multistable.consensus import enumerate_consensus_rectangles
from multistable.scenarios import duckrabbit3x3
from multistable.structure import posterior_global, posterior_ground_truth
from multistable.switching import min_switching_cost


def main():
    theta = duckrabbit3x3()
    x = (1, 1)
    print("Pr[W=1 | x] table")
    print(mio.export_heatmap(theta))
    print(f"ground truth at {x}: {posterior_ground_truth(theta, x)[1]:.3f}")
    print(f"\nperfect consensuses containing {x}:")
    for c in enumerate_consensus_rectangles(theta, 0.0, x):
        print(f"  {mio.format_rect(theta, c.rect):<16} q={c.belief[1]:.3f} regret={c.regret:.4f}")
    print(f"Gestalt complexity at {x}: {gestalt_stimulus(theta, x, 0.0):.4f} bits")
    for w in detect_multistability(theta, x, 0.0, 0.5):
        a, b = mio.format_rect(theta, w.h), mio.format_rect(theta, w.h_prime)
        print(f"\nmultistable pair {a} / {b}: TV {w.tv:.2f}, overlaps {w.overlap[0]:.2f}, {w.overlap[1]:.2f}")
        rep = min_switching_cost(theta, w.h, w.h_prime)
        print(f"switching via {mio.format_rect(theta, rep.best_hat)} costs {rep.cost_bits:.5f} bits "
              f"(overlap bound {rep.ell_lower_bound_bits:.5f})")
    full = theta.full_rect()
    print(f"\nprior belief {posterior_global(theta, full)[1]:.3f}")


if __name__ == "__main__":
    main()
