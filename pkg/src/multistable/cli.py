"""Command line front end.

Exit status: 0 on success, 1 on a domain error (bad scenario, failed
precondition), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as mio
from .complexity import (
    detect_multistability,
    gestalt_history,
    gestalt_stimulus_argmax,
    gestalt_structure,
)
from .consensus import b_of_epsilon, enumerate_consensus_rectangles, is_beta_equilibrium, is_epsilon_consensus
from .errors import MultistableError
from .market import Strategy, nats_to_bits, run_market_session
from .optimization import (
    expected_regret,
    full_partition,
    global_optimum,
    local_search,
    partition_from_protocol,
    trivial_partition,
)
from .protocol import count_disagreements, run, run_all
from .structure import posterior_global, regret
from .switching import min_switching_cost, switching_matrix


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, np.ndarray):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def _table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines) + "\n"


def _csv(header, rows) -> str:
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        if isinstance(v, np.ndarray):
            return ";".join(repr(float(x)) for x in v)
        return v

    return mio._write(header, [[cell(v) for v in r] for r in rows], None)


def _render(args, header, rows) -> str:
    return _csv(header, rows) if args.format == "csv" else _table(header, rows)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = "-d" if name == "d" else "--" + name.replace("_", "-")
            raise _Usage(f"{args.verb} {args.target}: {flag} is required")


class _Usage(Exception):
    pass


# ---------------------------------------------------------------------------
# verbs


def _analyze_consensus(args, theta):
    _need(args, "epsilon")
    if args.rect:
        h = mio.parse_rect(theta, args.rect[0])
        rep = is_epsilon_consensus(theta, h, args.epsilon)
        rows = [[f"I(X{i};W|h)", v] for i, v in enumerate(rep.per_agent_mi)]
        rows += [["consensus", rep.is_consensus], ["regret", regret(theta, h)]]
        rows += [["q_h", posterior_global(theta, h)]]
        if 0 < args.epsilon <= 1:
            rows.append(["b(epsilon)", b_of_epsilon(args.epsilon)])
        if args.beta is not None:
            eq = is_beta_equilibrium(theta, h, args.beta)
            rows.append([f"{args.beta}-equilibrium", eq.is_equilibrium])
            if eq.worst is not None:
                rows.append(["best deviation utility", eq.worst.utility])
        return _render(args, ["quantity", "value"], rows)
    x = mio.parse_stimulus(theta, args.stimulus) if args.stimulus else None
    found = enumerate_consensus_rectangles(theta, args.epsilon, x)
    rows = [[c.rect.format(theta), c.belief, c.regret] for c in found]
    return _render(args, ["rect", "q", "regret"], rows)


def _analyze_complexity(args, theta):
    _need(args, "epsilon")
    if args.rect:
        h = mio.parse_rect(theta, args.rect[0])
        rows = [["history", h.format(theta), gestalt_history(theta, h, args.epsilon)]]
    elif args.stimulus:
        x = mio.parse_stimulus(theta, args.stimulus)
        g, h = gestalt_stimulus_argmax(theta, x, args.epsilon)
        rows = [["stimulus", h.format(theta), g]]
    else:
        rows = [["structure", "", gestalt_structure(theta, args.epsilon)]]
    return _render(args, ["level", "argmax", "complexity"], rows)


def _analyze_multistable(args, theta):
    _need(args, "stimulus", "epsilon", "d")
    x = mio.parse_stimulus(theta, args.stimulus)
    wits = detect_multistability(theta, x, args.epsilon, args.d)
    if args.format == "json":
        return mio.witnesses_json(theta, wits)
    if args.format == "csv":
        return mio.witnesses_csv(theta, wits)
    rows = [[w.h.format(theta), w.h_prime.format(theta), w.q_h, w.q_h_prime, w.tv, w.overlap[0], w.overlap[1]]
            for w in wits]
    verdict = f"multistable: {bool(wits)} ({len(wits)} witness pairs)\n"
    return verdict + _table(["h", "h_prime", "q_h", "q_h_prime", "tv", "Pr[h'|h]", "Pr[h|h']"], rows)


def _analyze_switching(args, theta):
    if len(args.rect) == 2:
        h, h2 = (mio.parse_rect(theta, r) for r in args.rect)
        rep = min_switching_cost(theta, h, h2)
        rows = [["cost_bits", rep.cost_bits], ["via", rep.best_hat.format(theta)],
                ["ell_lower_bound_bits", rep.ell_lower_bound_bits], ["tv", rep.tv]]
        return _render(args, ["quantity", "value"], rows)
    _need(args, "stimulus", "epsilon")
    x = mio.parse_stimulus(theta, args.stimulus)
    rects = [c.rect for c in enumerate_consensus_rectangles(theta, args.epsilon, x)]
    m = switching_matrix(theta, rects)
    if args.format == "csv":
        return mio.switching_matrix_csv(theta, rects, m)
    names = [h.format(theta) for h in rects]
    return _table(["rect"] + names, [[names[a]] + list(m[a]) for a in range(len(rects))])


def _simulate_protocol(args, theta):
    _need(args, "protocol")
    proto = mio.parse_protocol(args.protocol, theta)
    if args.beta is not None:
        proto = replace(proto, beta=args.beta)
    if args.stimulus:
        tr = run(theta, proto, mio.parse_stimulus(theta, args.stimulus))
        if args.format == "csv":
            return mio.transcript_csv(theta, tr)
        rows = [[r.t, r.speaker, r.rect.format(theta), r.belief, r.reward_bits, r.cost_bits] for r in tr.rounds]
        head = f"final {tr.final.format(theta)} q={_fmt(tr.final_belief)} terminated_by={tr.terminated_by}\n"
        return head + _table(["t", "speaker", "rect", "q", "reward_bits", "cost_bits"], rows)
    d = 0.5 if args.d is None else args.d
    rep = count_disagreements(theta, proto, d)
    rows = []
    for x, tr in sorted(run_all(theta, proto).items()):
        label = ",".join(str(theta.signal_spaces[i][k]) for i, k in enumerate(x))
        rows.append([label, tr.final.format(theta), tr.final_belief, len(tr.rounds), tr.terminated_by, rep.counts[x]])
    text = _render(args, ["stimulus", "final", "q", "rounds", "terminated_by", "disagreements"], rows)
    if args.format != "csv":
        for dl, qv in rep.quantiles.items():
            text += f"{1 - dl:g}-quantile of disagreements: {qv} (bound {rep.bounds[dl]:.6g})\n"
    return text


def _simulate_market(args, theta):
    _need(args, "stimulus", "alpha")
    x = mio.parse_stimulus(theta, args.stimulus)
    names = args.strategies.split(",") if args.strategies else ["truthful"] * theta.n
    traders = [(k % theta.n, Strategy.parse(s)) for k, s in enumerate(names)]
    settlement = args.settlement or ("sampled" if args.seed is not None else "expected")
    sess = run_market_session(theta, x, traders, args.alpha, seed=args.seed, settlement=settlement,
                              share_cap=args.share_cap, fee=args.fee)
    if args.format == "csv":
        return mio.trades_csv(sess)
    rows = [[t.turn, t.trader, t.agent, t.record.s_after, t.record.cash_cost, t.price_after, t.reward]
            for t in sess.trades]
    text = _table(["turn", "trader", "agent", "s_after", "cost", "price_after", "reward_nats"], rows)
    text += f"final price {_fmt(sess.final_price)}; settlement {settlement}"
    text += f" (omega={sess.omega})\n" if sess.omega is not None else "\n"
    for k, p in enumerate(sess.profits):
        text += f"trader {k} ({traders[k][1]}): profit {p:.6g} nats = {nats_to_bits(p, args.alpha):.6g} bits\n"
    for f in sess.flags:
        text += f"flag: {f}\n"
    return text


def _optimize_protocol(args, theta):
    _need(args, "beta")
    start = args.start or "trivial"
    if start == "trivial":
        part = trivial_partition(theta)
    elif start == "full":
        part = full_partition(theta)
    else:
        part = partition_from_protocol(theta, mio.parse_protocol(start, theta))
    seed = 0 if args.seed is None else args.seed
    res = local_search(theta, args.beta, start=part, seed=seed, strategy=args.strategy)
    if args.format == "csv":
        return mio.trace_csv(res.trace)
    text = _table(["step", "move", "objective", "accuracy", "cost"],
                  [[s.step, s.move, s.objective, s.accuracy, s.cost] for s in res.trace])
    text += f"local optimum: {res.partition.describe(theta)} objective {res.objective:.6g}"
    text += f" expected regret {expected_regret(theta, res.partition):.6g}\n"
    if args.global_opt:
        val, best = global_optimum(theta, args.beta)
        text += f"global optimum: {best.describe(theta)} objective {val:.6g}\n"
    return text


def _export_heatmap(args, theta):
    return mio.export_heatmap(theta)


VERBS = {
    ("analyze", "consensus"): _analyze_consensus,
    ("analyze", "complexity"): _analyze_complexity,
    ("analyze", "multistable"): _analyze_multistable,
    ("analyze", "switching"): _analyze_switching,
    ("simulate", "protocol"): _simulate_protocol,
    ("simulate", "market"): _simulate_market,
    ("optimize", "protocol"): _optimize_protocol,
    ("export", "heatmap"): _export_heatmap,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario file, bundled name or builtin name")
    p.add_argument("--protocol", help="protocol file or bundled protocol name")
    p.add_argument("--stimulus", help="comma separated signal labels")
    p.add_argument("--rect", action="append", default=[],
                   help="hyperrectangle such as {1,2}x{0,1}; give two for a switching pair")
    p.add_argument("--epsilon", type=float)
    p.add_argument("-d", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="accepted for compatibility; evaluation is serial and deterministic")
    p.add_argument("--start", help="trivial, full or a protocol file")
    p.add_argument("--strategy", choices=("best", "first"), default="best")
    p.add_argument("--global", dest="global_opt", action="store_true", help="also report the global optimum")
    p.add_argument("--strategies", help="comma separated market strategies, trader k holds agent k mod n")
    p.add_argument("--settlement", choices=("expected", "sampled"))
    p.add_argument("--share-cap", type=float)
    p.add_argument("--fee", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multistable", description="Distributed-consensus perception lab")
    verbs = parser.add_subparsers(dest="verb", required=True)
    for verb in ("analyze", "simulate", "optimize", "export"):
        vp = verbs.add_parser(verb)
        targets = vp.add_subparsers(dest="target", required=True)
        for (v, target) in VERBS:
            if v == verb:
                _common(targets.add_parser(target))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        theta = mio.load_scenario(args.scenario)
        text = VERBS[(args.verb, args.target)](args, theta)
        _emit(args, text)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (MultistableError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
