"""Command-line surface: bounds, searches, sweeps, and reproduction targets."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import channels as chmod
from . import presets as pre
from . import qgraph as qgmod
from .beliefdp import value_iteration
from .errors import FscapError, ParseError, UnknownChannel
from .horizon import (analytic_noisy_ising_bound, channel_capacity, noisy_ising_root,
                      sandwich_bounds, shannon_strategy_capacity)
from .infomeasures import binary_entropy


@dataclass
class ReportRow:
    label: str
    value: float
    reference_value: float | None = None
    flags: str = ""

    @property
    def abs_error(self) -> float | None:
        if self.reference_value is None:
            return None
        return abs(self.value - self.reference_value)


@dataclass
class Report:
    rows: list[ReportRow] = field(default_factory=list)

    def add(self, *args, **kwargs):
        self.rows.append(ReportRow(*args, **kwargs))

    def print(self, stream=sys.stdout):
        width = max([len(r.label) for r in self.rows] + [8])
        header = f"{'label':<{width}}  {'value':>15}  {'reference':>15}  {'abs_err':>10}  flags"
        print(header, file=stream)
        print("-" * len(header), file=stream)
        for r in self.rows:
            ref = f"{r.reference_value:.9g}" if r.reference_value is not None else "-"
            err = f"{r.abs_error:.3g}" if r.abs_error is not None else "-"
            print(f"{r.label:<{width}}  {r.value:>15.9g}  {ref:>15}  {err:>10}  {r.flags}",
                  file=stream)

    def write_csv(self, path: str):
        with open(path, "w") as fh:
            fh.write("label,value,reference,abs_err,flags\n")
            for r in self.rows:
                ref = f"{r.reference_value:.9g}" if r.reference_value is not None else ""
                err = f"{r.abs_error:.9g}" if r.abs_error is not None else ""
                fh.write(f"{r.label},{r.value:.9g},{ref},{err},{r.flags}\n")


def load_channel(spec: str, eta=None, eps=None, lookahead: int = 0) -> chmod.Fsc:
    """A builtin channel by name, or a JSON kernel file by path."""
    if spec in chmod.BUILTIN_CHANNELS:
        if spec == "zs_iid_dmc" and lookahead:
            dmc, pmf = chmod.zs_dmc_pair()
            return chmod.make_lookahead_fsc(dmc, pmf, lookahead)
        return chmod.builtin_channel(spec, eta=eta, eps=eps)
    try:
        with open(spec) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UnknownChannel(f"'{spec}' is neither a builtin channel nor a readable file "
                             f"({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{spec}: {exc}") from exc
    try:
        kernel = doc["kernel"]
        initial = doc["initial_state"]
    except KeyError as exc:
        raise ParseError(f"{spec}: missing key {exc}") from exc
    return chmod.validate_fsc(kernel, initial, tol=chmod.FILE_KERNEL_TOL)


def load_qgraph(spec: str) -> qgmod.QGraph:
    try:
        return qgmod.builtin_qgraph(spec)
    except FscapError:
        pass
    try:
        with open(spec) as fh:
            doc = json.load(fh)
        return qgmod.validate_qgraph(int(doc["nq"]), doc["g"])
    except OSError as exc:
        raise ParseError(f"'{spec}' is neither a builtin Q-graph nor readable: {exc}") from exc
    except (KeyError, json.JSONDecodeError) as exc:
        raise ParseError(f"{spec}: {exc}") from exc


def load_policy(path: str, nu: int, nq: int) -> np.ndarray:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return qgmod.validate_policy(np.asarray(doc["probs"], dtype=float), nu, nq)
    except OSError as exc:
        raise ParseError(f"cannot read policy file '{path}': {exc}") from exc
    except (KeyError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


NAMED_STRATEGIES = {
    "xor": pre.xor_strategies,
    "identity": pre.identity_strategies,
    "bec": pre.bec_strategies,
    "lookahead": pre.lookahead_strategies,
}


def resolve_strategies(fsc: chmod.Fsc, name: str | None, card_u: int | None):
    """A named strategy table, a JSON file of value vectors, or full enumeration."""
    if name is None or name == "full":
        table = chmod.enumerate_strategies(fsc.nx, fsc.ns)
    elif name in NAMED_STRATEGIES:
        table = NAMED_STRATEGIES[name]()
    else:
        try:
            with open(name) as fh:
                doc = json.load(fh)
            table = chmod.strategy_table(fsc.nx, fsc.ns, doc["tables"])
        except OSError as exc:
            raise ParseError(f"'{name}' is neither a named strategy set nor readable: "
                             f"{exc}") from exc
        except (KeyError, json.JSONDecodeError) as exc:
            raise ParseError(f"{name}: {exc}") from exc
    if card_u is not None and table.nu != card_u:
        raise ParseError(f"strategy set has |U|={table.nu}, but --card-u={card_u}")
    return table


# --- reproduction registry ----------------------------------------------------

def _rt_trapdoor_qgraph():
    s = pre.trapdoor_setup()
    res = qgmod.qgraph_bound(s.channel, s.graph, s.policy)
    return res.rate, _result_flags(res)


def _rt_ising_qgraph(a):
    s = pre.ising_setup(a)
    res = qgmod.qgraph_bound(s.channel, s.graph, s.policy)
    return res.rate, _result_flags(res)


def _rt_bec_qgraph():
    s = pre.bec_setup(0.5, 0.4)
    res = qgmod.qgraph_bound(s.channel, s.graph, s.policy)
    return res.rate, _result_flags(res)


def _rt_lookahead(alpha, beta):
    s = pre.lookahead_setup(alpha, beta)
    res = qgmod.qgraph_bound(s.channel, s.graph, s.policy)
    return res.rate, _result_flags(res)


def _rt_noisy_qgraph(eta):
    s = pre.noisy_ising_setup(eta, noisy_ising_root(eta))
    res = qgmod.qgraph_bound(s.channel, s.graph, s.policy)
    return res.rate, _result_flags(res)


def _rt_shannon_zs():
    dmc, pmf = chmod.zs_dmc_pair()
    return shannon_strategy_capacity(dmc, pmf).rate, ""


def _rt_shannon_zs_nosi():
    dmc, pmf = chmod.zs_dmc_pair()
    law = np.einsum("yxs,s->xy", dmc, pmf)
    return channel_capacity(law).rate, ""


def _rt_dp(channel, strategies, grid_res):
    fsc = chmod.builtin_channel(channel) if channel != "noisy_ising_half" \
        else chmod.builtin_channel("noisy_ising", eta=0.5)
    induced = chmod.induce_strategy_channel(fsc, strategies())
    sol = value_iteration(induced, grid_res=grid_res, action_res=4)
    return sol.rate, "" if sol.converged else "no-convergence"


def _rt_search(kind):
    if kind == "ising":
        fsc = chmod.builtin_channel("ising")
        induced = chmod.induce_strategy_channel(fsc, pre.identity_strategies())
        graph = qgmod.builtin_qgraph("ising4")
    else:
        fsc = chmod.builtin_channel("constrained_bec", eps=0.5)
        induced = chmod.induce_strategy_channel(fsc, pre.bec_strategies())
        graph = qgmod.builtin_qgraph("bec3")
    sr = qgmod.search_policy(induced, graph, restarts=20, seed=0)
    return sr.result.rate, "" if sr.feasible else "BCJR-infeasible"


def _result_flags(res: qgmod.QBoundResult, tol: float = qgmod.DEFAULT_BCJR_TOL) -> str:
    flags = []
    if res.bcjr_violation > tol:
        flags.append("BCJR-infeasible")
    if not res.aperiodic:
        flags.append("periodic")
    return "+".join(flags)


def _registry():
    """name -> (runner, reference, tolerance, slow)."""
    half = 1.0 - binary_entropy(0.25)
    _, ising_max = pre.scan_max(pre.ising_rate, 0.0, 1.0, 1e-6)
    _, bec_max = pre.scan_max(lambda p: pre.bec_rate(0.5, p), 0.0, 0.5, 1e-6)
    targets = {
        "trapdoor-qgraph": (_rt_trapdoor_qgraph, pre.GOLDEN_RATIO_RATE, 1e-9, False),
        "bec-qgraph": (_rt_bec_qgraph, pre.bec_rate(0.5, 0.4), 1e-9, False),
        "zs-la1": (lambda: _rt_lookahead(4.0 / 7.0, 0.0), pre.lookahead_rate(), 1e-9, False),
        "zs-la1-alt": (lambda: _rt_lookahead(3.0 / 7.0, 1.0), pre.lookahead_rate(), 1e-9, False),
        "shannon-zs": (_rt_shannon_zs, half, 1e-6, False),
        "shannon-zs-nosi": (_rt_shannon_zs_nosi, half, 1e-6, False),
        "ising-search": (lambda: _rt_search("ising"), ising_max, 1e-4, True),
        "bec-search": (lambda: _rt_search("bec"), bec_max, 1e-4, True),
        "trapdoor-dp": (lambda: _rt_dp("trapdoor", pre.xor_strategies, 128),
                        pre.GOLDEN_RATIO_RATE, 2e-3, True),
        "ising-dp": (lambda: _rt_dp("ising", pre.identity_strategies, 64),
                     ising_max, 2e-3, True),
        "noisy-ising-dp": (lambda: _rt_dp("noisy_ising_half", pre.identity_strategies, 64),
                           half, 2e-3, True),
    }
    for a in (0.2, 0.45, 0.7):
        targets[f"ising-qgraph-a{a}"] = (
            lambda a=a: _rt_ising_qgraph(a), pre.ising_rate(a), 1e-10, False)
    for eta in (0.1, 0.2, 0.3, 0.4, 0.5):
        targets[f"noisy-ising-eta{eta}"] = (
            lambda eta=eta: _rt_noisy_qgraph(eta), analytic_noisy_ising_bound(eta),
            1e-6, False)
    return targets


# --- commands -------------------------------------------------------------------

def _cmd_bound_qgraph(args) -> int:
    fsc = load_channel(args.channel, eta=args.eta, eps=args.eps, lookahead=args.lookahead)
    strategies = resolve_strategies(fsc, args.strategy_fn, args.card_u)
    induced = chmod.induce_strategy_channel(fsc, strategies)
    graph = load_qgraph(args.graph)
    pol = load_policy(args.policy, induced.nu, graph.nq)
    res = qgmod.qgraph_bound(induced, graph, pol, bcjr_tol=args.tol)
    report = Report()
    flags = _result_flags(res, args.tol)
    report.add("rate", res.rate, flags=flags)
    report.add("bcjr_violation", res.bcjr_violation)
    for q in range(graph.nq):
        report.add(f"node{q + 1}_reward", res.per_node_rewards[q])
        report.add(f"node{q + 1}_weight", res.node_weights[q])
    report.print()
    if args.csv:
        report.write_csv(args.csv)
    return 2 if flags else 0


def _cmd_search_qgraph(args) -> int:
    fsc = load_channel(args.channel, eta=args.eta, eps=args.eps, lookahead=args.lookahead)
    strategies = resolve_strategies(fsc, args.strategy_fn, args.card_u)
    induced = chmod.induce_strategy_channel(fsc, strategies)
    graph = load_qgraph(args.graph)
    sr = qgmod.search_policy(induced, graph, restarts=args.restarts, seed=args.seed,
                             tol=args.tol)
    report = Report()
    flags = "" if sr.feasible else "BCJR-infeasible"
    if not sr.result.aperiodic:
        flags = (flags + "+periodic").lstrip("+")
    report.add("rate", sr.result.rate, flags=flags)
    report.add("bcjr_violation", sr.result.bcjr_violation)
    report.print()
    if args.save_policy:
        with open(args.save_policy, "w") as fh:
            json.dump({"probs": sr.policy.tolist()}, fh, indent=1)
    if args.csv:
        report.write_csv(args.csv)
    return 2 if flags else 0


def _cmd_bound_dp(args) -> int:
    fsc = load_channel(args.channel, eta=args.eta, eps=args.eps, lookahead=args.lookahead)
    strategies = resolve_strategies(fsc, args.strategy_fn, args.card_u)
    induced = chmod.induce_strategy_channel(fsc, strategies)
    sol = value_iteration(induced, grid_res=args.grid_res, action_res=args.action_res,
                          tol=args.tol)
    report = Report()
    flags = "" if sol.converged else "no-convergence"
    report.add("rate", sol.rate, flags=flags)
    report.add("residual_span", sol.residual_span)
    report.add("iterations", float(sol.iterations))
    report.print()
    if args.csv:
        report.write_csv(args.csv)
    return 2 if flags else 0


def _cmd_bound_finite_n(args) -> int:
    fsc = load_channel(args.channel, eta=args.eta, eps=args.eps, lookahead=args.lookahead)
    strategies = resolve_strategies(fsc, args.strategy_fn, args.card_u)
    induced = chmod.induce_strategy_channel(fsc, strategies)
    sw = sandwich_bounds(induced, args.N, grid=args.grid_res, seed=args.seed)
    report = Report()
    flags = "" if sw.global_flag else "non-global-certificate"
    report.add("lower", sw.lower)
    report.add("upper", sw.upper, flags=flags)
    report.print()
    if not sw.global_flag:
        print("note: the optimizer certificate is heuristic; the upper value is "
              "only a bound if the inner maximization is global", file=sys.stderr)
    if args.csv:
        report.write_csv(args.csv)
    return 2 if flags else 0


def _cmd_capacity_shannon(args) -> int:
    if args.channel != "zs_iid_dmc":
        raise UnknownChannel("capacity-shannon supports the memoryless builtin "
                             "'zs_iid_dmc' (state pmf uniform)")
    dmc, pmf = chmod.zs_dmc_pair()
    report = Report()
    if args.no_si:
        law = np.einsum("yxs,s->xy", dmc, pmf)
        res = channel_capacity(law)
        report.add("capacity_no_si", res.rate)
    else:
        res = shannon_strategy_capacity(dmc, pmf)
        report.add("capacity_causal_si", res.rate)
    report.add("iterations", float(res.iterations))
    report.print()
    if args.csv:
        report.write_csv(args.csv)
    return 0


def _cmd_sweep_noisy_ising(args) -> int:
    etas = np.arange(args.start, args.stop + args.step / 2, args.step)
    lines = ["eta,R_Analytic,R_DP,R_4node"]
    report = Report()
    for eta in etas:
        eta = float(round(eta, 10))
        analytic = analytic_noisy_ising_bound(eta)
        fsc = chmod.builtin_channel("noisy_ising", eta=eta)
        induced = chmod.induce_strategy_channel(fsc, pre.identity_strategies())
        sol = value_iteration(induced, grid_res=args.grid_res, action_res=args.action_res,
                              tol=args.tol)
        sr = qgmod.search_policy(induced, qgmod.builtin_qgraph("ising4"),
                                 restarts=args.restarts, seed=args.seed)
        lines.append(f"{eta:.9g},{analytic:.9g},{sol.rate:.9g},{sr.result.rate:.9g}")
        report.add(f"eta={eta:.2f} analytic", analytic)
        report.add(f"eta={eta:.2f} dp", sol.rate, flags="" if sol.converged else "no-convergence")
        report.add(f"eta={eta:.2f} 4node", sr.result.rate,
                   flags="" if sr.feasible else "BCJR-infeasible")
    report.print()
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _cmd_reproduce(args) -> int:
    registry = _registry()
    if args.target == "list":
        for name, (_, ref, tol, slow) in sorted(registry.items()):
            print(f"{name:24s} reference={ref:.9g} tolerance={tol:g}"
                  f"{' (slow)' if slow else ''}")
        return 0
    if args.target == "all":
        names = [n for n, spec in sorted(registry.items()) if args.slow or not spec[3]]
    else:
        if args.target not in registry:
            raise ParseError(f"unknown target '{args.target}'; try 'reproduce list'")
        names = [args.target]
    report = Report()
    ok = True
    for name in names:
        runner, ref, tol, _ = registry[name]
        value, flags = runner()
        err = abs(value - ref)
        if err > tol:
            flags = (flags + f"+exceeds-tol({tol:g})").lstrip("+")
            ok = False
        report.add(name, value, ref, flags=flags)
    report.print()
    if args.csv:
        report.write_csv(args.csv)
    return 0 if ok else 2


def _add_common(p: argparse.ArgumentParser, channel=True):
    if channel:
        p.add_argument("--channel", required=True,
                       help="builtin name or JSON kernel file")
        p.add_argument("--eta", type=float, default=None, help="noisy state crossover")
        p.add_argument("--eps", type=float, default=None, help="erasure probability")
        p.add_argument("--lookahead", type=int, default=0,
                       help="look-ahead depth for zs_iid_dmc")
        p.add_argument("--strategy-fn", default=None,
                       help="named strategy set (full, xor, identity, bec, lookahead) "
                            "or JSON file")
        p.add_argument("--card-u", type=int, default=None,
                       help="assert the strategy cardinality")
    p.add_argument("--csv", default=None, help="also write the rows to this CSV file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS worker threads (needs threadpoolctl, else env)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fscap",
                                 description="Feedback-capacity bounds for finite-state "
                                             "channels with causal state at the encoder")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound-qgraph", help="evaluate a fixed policy on a Q-graph")
    _add_common(p)
    p.add_argument("--graph", required=True, help="builtin name or JSON file")
    p.add_argument("--policy", required=True, help="JSON policy file [q][u][u+]")
    p.add_argument("--tol", type=float, default=qgmod.DEFAULT_BCJR_TOL)
    p.set_defaults(fn=_cmd_bound_qgraph)

    p = sub.add_parser("search-qgraph", help="search policies on a Q-graph")
    _add_common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--tol", type=float, default=qgmod.SEARCHED_BCJR_TOL)
    p.add_argument("--save-policy", default=None)
    p.set_defaults(fn=_cmd_search_qgraph)

    p = sub.add_parser("bound-dp", help="belief-grid value iteration achievable rate")
    _add_common(p)
    p.add_argument("--grid-res", type=int, default=64)
    p.add_argument("--action-res", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(fn=_cmd_bound_dp)

    p = sub.add_parser("bound-finite-n", help="finite-horizon sandwich bounds")
    _add_common(p)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--grid-res", type=int, default=4)
    p.set_defaults(fn=_cmd_bound_finite_n)

    p = sub.add_parser("capacity-shannon", help="memoryless strategy-channel capacity")
    _add_common(p)
    p.add_argument("--no-si", action="store_true",
                   help="restrict strategies to plain inputs (no state knowledge)")
    p.set_defaults(fn=_cmd_capacity_shannon)

    p = sub.add_parser("sweep-noisy-ising", help="analytic/DP/4-node rates over eta")
    _add_common(p, channel=False)
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", dest="stop", type=float, default=0.5)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--grid-res", type=int, default=64)
    p.add_argument("--action-res", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--restarts", type=int, default=6)
    p.set_defaults(fn=_cmd_sweep_noisy_ising)

    p = sub.add_parser("reproduce", help="run named reproduction targets")
    _add_common(p, channel=False)
    p.add_argument("target", help="target name, 'all', or 'list'")
    p.add_argument("--slow", action="store_true", help="include the slow targets")
    p.set_defaults(fn=_cmd_reproduce)
    return ap


def _apply_thread_cap(n: int | None):
    if n is None:
        return
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(n)
    except ImportError:
        import os
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _apply_thread_cap(getattr(args, "threads", None))
    try:
        return args.fn(args)
    except FscapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
