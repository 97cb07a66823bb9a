"""Command-line interface and experiment orchestration."""

from __future__ import annotations

import json
import sys
import time

import click
import numpy as np

from . import comm, convergence, dflsim, mixing, netmodel, routing

EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_INFEASIBLE = 4

METHODS = ("fmmd", "fmmd-w", "fmmd-p", "fmmd-wp", "ring", "prim", "clique")

CSV_HEADER = "method,T,rho,tau_bar,tau_opt,K_pred,total_pred,design_ms"


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _load_net(path: str) -> netmodel.UnderlayNet:
    try:
        return netmodel.load_topology(path)
    except netmodel.TopologyError as exc:
        raise click.ClickException(str(exc)) from exc
    except OSError as exc:
        raise click.ClickException(str(exc)) from exc


def design_matrix(method: str, cats, kappa: float, iterations: int):
    """Run one design method; benchmarks always get optimized weights."""
    m = cats.m
    if method in ("ring", "prim", "clique"):
        e_a = mixing.benchmark_topology(method, cats, kappa, m)
        alpha, rho_val = mixing.optimize_weights(e_a, m)
        return mixing.MixingMatrix(m=m, alpha=alpha), rho_val
    flags = {
        "fmmd": (False, False),
        "fmmd-w": (True, False),
        "fmmd-p": (False, True),
        "fmmd-wp": (True, True),
    }
    if method not in flags:
        raise click.ClickException(f"unknown method {method!r}")
    weight_opt, priority = flags[method]
    result = mixing.fmmd(
        cats, kappa, iterations, weight_opt=weight_opt, priority=priority
    )
    return result.matrix, result.rho


def design_to_json(method: str, matrix, rho_val: float) -> dict:
    edges = mixing.complete_edges(matrix.m)
    return {
        "method": method,
        "m": matrix.m,
        "alpha": [
            {"i": i, "j": j, "w": float(a)}
            for (i, j), a in zip(edges, matrix.alpha)
            if abs(a) > mixing.SUPPORT_TOL
        ],
        "rho": float(rho_val),
    }


def design_from_json(doc: dict, m: int):
    edges = mixing.complete_edges(m)
    index = {e: k for k, e in enumerate(edges)}
    alpha = np.zeros(len(edges))
    for entry in doc["alpha"]:
        i, j = int(entry["i"]), int(entry["j"])
        key = (min(i, j), max(i, j))
        if key not in index:
            raise click.ClickException(f"design references unknown link {key}")
        alpha[index[key]] = float(entry["w"])
    return mixing.MixingMatrix(m=m, alpha=alpha)


def _constants(m: int, **kw) -> convergence.ConvergenceConstants:
    return convergence.ConvergenceConstants(agents=m, **kw)


constants_options = [
    click.option("--smoothness", default=1.0, show_default=True),
    click.option("--grad-noise", default=1.0, show_default=True),
    click.option("--heterogeneity", default=1.0, show_default=True),
    click.option("--m1", default=0.0, show_default=True),
    click.option("--m2", default=0.0, show_default=True),
    click.option("--epsilon", default=0.1, show_default=True),
    click.option("--objective-gap", default=1.0, show_default=True),
]


def add_options(opts):
    def wrap(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn

    return wrap


@click.group()
def main():
    """Mixing-matrix and overlay-routing design for decentralized learning."""


@main.command()
@click.argument("topology", type=click.Path())
@click.option("--json-out", "json_out", type=click.Path(), default=None)
def categories(topology, json_out):
    """Print the link categories of a topology with their bottlenecks."""
    net = _load_net(topology)
    paths = netmodel.shortest_paths(net)
    cats = netmodel.compute_categories(net, paths)
    payload = []
    for cat in cats.categories:
        payload.append(
            {
                "overlay_links": sorted(list(e) for e in cat.key),
                "underlay_links": [list(l) for l in cat.members],
                "capacity": cat.capacity,
            }
        )
    for entry in payload:
        links = " ".join(
            f"({net.agents[i]},{net.agents[j]})" for i, j in entry["overlay_links"]
        )
        members = " ".join(f"{a}-{b}" for a, b in entry["underlay_links"])
        click.echo(f"category [{links}] capacity={_fmt(entry['capacity'])}: {members}")
    text = json.dumps({"categories": payload}, indent=2)
    if json_out:
        with open(json_out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@main.command()
@click.argument("topology", type=click.Path())
@click.option("--method", type=click.Choice(METHODS), required=True)
@click.option("-T", "--iterations", default=12, show_default=True)
@click.option("--kappa", default=1.0, show_default=True)
@click.option("--output", type=click.Path(), default=None)
def design(topology, method, iterations, kappa, output):
    """Design a mixing matrix and report its spectral quality."""
    net = _load_net(topology)
    paths = netmodel.shortest_paths(net)
    cats = netmodel.compute_categories(net, paths)
    matrix, rho_val = design_matrix(method, cats, kappa, iterations)
    doc = design_to_json(method, matrix, rho_val)
    text = json.dumps(doc, indent=2)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)
    tb = routing.tau_bar(matrix.support(), cats, kappa)
    click.echo(
        f"method={method} rho={_fmt(rho_val)} links={len(matrix.support())} "
        f"tau_bar={_fmt(tb)}",
        err=True,
    )


@main.command()
@click.argument("topology", type=click.Path())
@click.option("--design", "design_path", type=click.Path(), required=True)
@click.option("--kappa", default=1.0, show_default=True)
@click.option(
    "--solver",
    type=click.Choice(["default", "local", "exact"]),
    default="default",
    show_default=True,
)
@click.option("--relay-depth", default=2, show_default=True)
@click.option("--budget", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--output", type=click.Path(), default=None)
def route(topology, design_path, kappa, solver, relay_depth, budget, seed, output):
    """Route the demands triggered by a design and report completion times."""
    net = _load_net(topology)
    paths = netmodel.shortest_paths(net)
    cats = netmodel.compute_categories(net, paths)
    with open(design_path, "r", encoding="utf-8") as fh:
        matrix = design_from_json(json.load(fh), net.m)
    support = matrix.support()
    demands = comm.demands_from_activation(support, kappa)
    if solver == "default":
        sol = routing.default_routing(demands)
    elif solver == "local":
        sol = routing.optimize_routing_local(demands, cats, budget=budget, seed=seed)
    else:
        sol = routing.optimize_routing_exact(
            demands, cats, net, paths, relay_depth=relay_depth
        )
    tau = comm.completion_time(comm.link_loads(sol, paths), net, kappa)
    tb = routing.tau_bar(support, cats, kappa)
    text = sol.to_json()
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)
    click.echo(f"tau_bar={_fmt(tb)} tau={_fmt(tau)}", err=True)


@main.command()
@click.argument("topology", type=click.Path())
@click.option("--design", "design_path", type=click.Path(), required=True)
@click.option("--kappa", default=1.0, show_default=True)
@click.option(
    "--solver",
    type=click.Choice(["default", "local", "exact"]),
    default="default",
    show_default=True,
)
@add_options(constants_options)
def predict(topology, design_path, kappa, solver, **constants):
    """Predict total training time for a design (up to the bound constant)."""
    net = _load_net(topology)
    paths = netmodel.shortest_paths(net)
    cats = netmodel.compute_categories(net, paths)
    with open(design_path, "r", encoding="utf-8") as fh:
        matrix = design_from_json(json.load(fh), net.m)
    consts = _constants(net.m, **constants)
    pred = convergence.total_time(
        matrix, cats, kappa, consts, router=solver, net=net, paths=paths
    )
    click.echo(
        json.dumps(
            {
                "rho": pred.rho,
                "tau": pred.tau,
                "iterations": pred.iterations,
                "total": pred.total,
                "convergent": pred.convergent,
            },
            indent=2,
        )
    )
    if not pred.convergent:
        raise SystemExit(EXIT_INFEASIBLE)


@main.command()
@click.argument("topology", type=click.Path())
@click.option("--design", "design_path", type=click.Path(), required=True)
@click.option("--eta", default=0.05, show_default=True)
@click.option("--steps", default=500, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--dim", default=5, show_default=True)
@click.option("--output", type=click.Path(), default=None)
def simulate(topology, design_path, eta, steps, seed, noise, dim, output):
    """Simulate D-PSGD on a synthetic quadratic task under a design."""
    net = _load_net(topology)
    with open(design_path, "r", encoding="utf-8") as fh:
        matrix = design_from_json(json.load(fh), net.m)
    rng = np.random.default_rng(seed)
    task = dflsim.QuadraticTask(
        centers=rng.standard_normal((net.m, dim)),
        curvatures=np.ones(net.m),
        noise=noise,
    )
    try:
        state = dflsim.run_dpsgd(task, matrix, eta=eta, k_max=steps, seed=seed + 1)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        raise SystemExit(EXIT_INFEASIBLE)
    lines = ["iteration,consensus_distance,mean_distance_to_opt"]
    for k, (cons, dist) in enumerate(
        zip(state.consensus_history, state.opt_distance_history), start=1
    ):
        lines.append(f"{k},{_fmt(cons)},{_fmt(dist)}")
    text = "\n".join(lines) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def run_experiment(config: dict) -> str:
    """Run every configured method through design, routing, and prediction.

    Returns the CSV text; deterministic for fixed seeds unless timing
    measurement is enabled.
    """
    methods = config.get("methods") or []
    if not methods:
        raise click.ClickException("config error: methods list is empty")
    for method in methods:
        if method not in METHODS:
            raise click.ClickException(f"config error: unknown method {method!r}")
    net = _load_net(config["topology"])
    paths = netmodel.shortest_paths(net)
    cats = netmodel.compute_categories(net, paths)
    kappa = float(config.get("kappa", 1.0))
    iterations = int(config.get("T", 12))
    router = config.get("router", "default")
    relay_depth = int(config.get("relay_depth", 2))
    budget = int(config.get("budget", 1000))
    seed = int(config.get("seed", 0))
    timing = bool(config.get("timing", False))
    consts = _constants(net.m, **config.get("constants", {}))

    rows = [CSV_HEADER]
    for method in methods:
        start = time.perf_counter()
        matrix, rho_val = design_matrix(method, cats, kappa, iterations)
        design_ms = (time.perf_counter() - start) * 1000.0 if timing else 0.0
        tb = routing.tau_bar(matrix.support(), cats, kappa)
        pred = convergence.total_time(
            matrix,
            cats,
            kappa,
            consts,
            router=router,
            net=net,
            paths=paths,
            relay_depth=relay_depth,
            budget=budget,
            seed=seed,
        )
        rows.append(
            ",".join(
                [
                    method,
                    str(iterations),
                    _fmt(pred.rho),
                    _fmt(tb),
                    _fmt(pred.tau),
                    _fmt(pred.iterations),
                    _fmt(pred.total),
                    _fmt(design_ms),
                ]
            )
        )
    return "\n".join(rows) + "\n"


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--topology", type=click.Path(), default=None)
@click.option("--methods", default=None, help="comma-separated method list")
@click.option("-T", "--iterations", type=int, default=None)
@click.option("--kappa", type=float, default=None)
@click.option(
    "--router", type=click.Choice(["default", "local", "exact"]), default=None
)
@click.option("--seed", type=int, default=None)
@click.option("--timing/--no-timing", default=None)
@click.option("--output", type=click.Path(), default=None)
def experiment(config_path, topology, methods, iterations, kappa, router, seed,
               timing, output):
    """Compare design methods end to end; emits one CSV row per method."""
    config = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise click.ClickException(f"config error: {exc}")
    if topology:
        config["topology"] = topology
    if methods:
        config["methods"] = [m.strip() for m in methods.split(",") if m.strip()]
    if iterations is not None:
        config["T"] = iterations
    if kappa is not None:
        config["kappa"] = kappa
    if router is not None:
        config["router"] = router
    if seed is not None:
        config["seed"] = seed
    if timing is not None:
        config["timing"] = timing
    if "topology" not in config:
        raise click.ClickException("config error: no topology given")
    text = run_experiment(config)
    out_path = output or config.get("output")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def entry():  # pragma: no cover - exercised via subprocess in tests
    try:
        main(standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_CONFIG)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        message = exc.format_message()
        if "config error" in message or "unknown method" in message:
            sys.exit(EXIT_CONFIG)
        sys.exit(EXIT_INPUT)
    except routing.InstanceTooLargeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    except click.Abort:
        sys.exit(EXIT_CONFIG)


if __name__ == "__main__":  # pragma: no cover
    entry()
