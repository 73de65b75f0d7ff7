"""Same agents, same thresholds, different speaking order, different stable percept."""

from multistable import io as mio
from multistable.infotheory import tv_distance
from multistable.protocol import run
from multistable.scenarios import duckrabbit3x3


def show(theta, name, x):
    tr = run(theta, mio.parse_protocol(name, theta), x)
    print(f"{name}:")
    for r in tr.rounds:
        print(f"  t={r.t} agent {r.speaker} -> {mio.format_rect(theta, r.rect):<16} q={r.belief[1]:.3f} cost={r.cost_bits:.3f}")
    print(f"  stops by {tr.terminated_by}")
    return tr


def main():
    theta = duckrabbit3x3()
    a = show(theta, "order_effect_a", (1, 1))
    b = show(theta, "order_effect_b", (1, 1))
    print(f"TV between the two endings: {tv_distance(a.final_belief, b.final_belief):.3f}")


if __name__ == "__main__":
    main()
