"""Command-line front end.

Subcommands: `gen` writes benchmark instance files, `solve` runs one robust
solve (optionally selecting a prescribed solution from the robust set),
`sweep` runs a study grid and writes a results file (plus figures on
request), `bound` evaluates the flip-count failure bound directly.

Exit codes: 0 on success, 2 when a model is infeasible, 3 on input errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .harness import default_plan, generate_instance, run_study, write_results
from .instance import RobustConfig, load_instance, save_instance
from .probability import FlipModel, infeasibility_upper_bound, pmf_exact_flips
from .reformulate import (
    build_rbiu_delta,
    build_rbiu_delta_cc,
    expand_robust_set,
    solve_deterministic,
    solve_rbiu_delta,
    solve_rbiu_delta_cc,
    solve_reduced_knapsack,
)
from .selection import (
    select_deterministic,
    select_lower_bound,
    select_relaxed,
    select_upper_bound,
)
from .simulate import objective_ratio, violation_level

EXIT_INFEASIBLE = 2
EXIT_INPUT_ERROR = 3


class InfeasibleModel(click.ClickException):
    exit_code = EXIT_INFEASIBLE


def _parse_delta(text: str, b: np.ndarray) -> np.ndarray:
    """'1.3' means the same absolute slack on every row, '5%' a fraction of b."""
    text = text.strip()
    try:
        if text.endswith("%"):
            frac = float(text[:-1]) / 100.0
            return frac * b
        return np.full(b.shape, float(text))
    except ValueError:
        raise click.UsageError(f"cannot parse delta value {text!r}")


@click.group()
def cli():
    """Robust binary programs under implementation-time value flips."""


@cli.command()
@click.option("--n", default=100, show_default=True, help="Variables per instance.")
@click.option("--count", default=1, show_default=True, help="Instances to write.")
@click.option("--seed", default=20240, show_default=True)
@click.option("--u", default=0.05, show_default=True, help="Uncertain fraction of n.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
def gen(n, count, seed, u, out_dir):
    """Write benchmark knapsack instance files."""
    plan = default_plan("delta", n=n, seed=seed, u_grid=(u,), replications=max(count, 1))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for rep in range(count):
        inst, part = generate_instance(plan, rep, u=u)
        path = out / f"instance_{rep:03d}.json"
        save_instance(inst, part, path)
        click.echo(str(path))


def _selector_fn(name):
    return {
        "sp1": lambda inst, part, sol, cfg: select_deterministic(inst, part, sol),
        "sp2": select_relaxed,
        "sp3": lambda inst, part, sol, cfg: select_upper_bound(sol, inst, part),
        "sp4": lambda inst, part, sol, cfg: select_lower_bound(sol, inst, part),
    }[name]


@cli.command()
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--delta", "delta_text", default="0", show_default=True,
              help="Row slack: absolute value or percentage like '5%'.")
@click.option("--cc", is_flag=True, help="Use the protection-budget model.")
@click.option("--gamma", "gamma_cap", type=int, default=None,
              help="Protection budget (implies --cc); defaults to |U|.")
@click.option("--selector", type=click.Choice(["sp1", "sp2", "sp3", "sp4"]), default=None,
              help="Also pick one prescribed solution from the robust set.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
@click.option("--dump-lp", type=click.Path(dir_okay=False), default=None,
              help="Write the built model as a plain-text dump.")
@click.option("--verbose", is_flag=True, help="Stream search progress to stderr.")
def solve(instance_file, delta_text, cc, gamma_cap, selector, fmt, dump_lp, verbose):
    """Solve one instance file robustly."""
    inst, part = load_instance(instance_file)
    delta = _parse_delta(delta_text, inst.b)
    use_cc = cc or gamma_cap is not None
    cfg = RobustConfig(delta, gamma_cap)

    if dump_lp:
        model = (
            build_rbiu_delta_cc(inst, part, cfg) if use_cc else build_rbiu_delta(inst, part, cfg)
        )
        Path(dump_lp).write_text(model.to_lp_text())

    log = (lambda msg: click.echo(msg, err=True)) if verbose else None
    if use_cc:
        sol = solve_rbiu_delta_cc(inst, part, cfg, log=log)
    elif inst.m == 1 and inst.sense == "max" and np.all(inst.c >= 0) and np.all(inst.a >= 0):
        sol = solve_reduced_knapsack(inst, part, float(delta[0]))
    else:
        sol = solve_rbiu_delta(inst, part, cfg, log=log)

    if sol.status != "optimal":
        if fmt == "json":
            click.echo(json.dumps({"status": sol.status}))
        raise InfeasibleModel(f"robust model is {sol.status}")

    reference, _ = solve_deterministic(inst)
    payload = {
        "status": sol.status,
        "model": "budgeted" if use_cc else "slack-only",
        "gamma": sol.gamma,
        "deterministic_optimum": reference,
        "x": sol.x_star.tolist(),
        "outcome_set_size": 2**part.num_uncertain,
    }
    if selector:
        cfg_full = RobustConfig(delta, None)
        chosen = _selector_fn(selector)(inst, part, sol, cfg_full)
        if chosen is None:
            payload["selection"] = {"selector": selector, "status": "not-found"}
        else:
            payload["selection"] = {
                "selector": selector,
                "x": chosen.tolist(),
                "objective": float(inst.c @ chosen),
                "objective_ratio": objective_ratio(chosen, inst, reference),
                "violation_level": violation_level(chosen, inst),
            }
    if fmt == "json":
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(f"status: optimal ({payload['model']} model)")
        click.echo(f"guaranteed objective level: {sol.gamma:g}")
        click.echo(f"deterministic optimum:      {reference:g}")
        click.echo(f"representative solution:    {''.join(str(v) for v in sol.x_star)}")
        click.echo(f"outcome set size:           {payload['outcome_set_size']}")
        if selector:
            sel = payload["selection"]
            if sel.get("status") == "not-found":
                click.echo(f"{selector}: no feasible completion")
            else:
                click.echo(
                    f"{selector}: x={''.join(str(v) for v in sel['x'])} "
                    f"objective={sel['objective']:g} "
                    f"ratio={sel['objective_ratio']:.4f} "
                    f"violation={sel['violation_level']:.4f}"
                )


@cli.command()
@click.option("--study", type=click.Choice(["delta", "cc", "selection", "bound"]), required=True)
@click.option("--replications", default=3, show_default=True)
@click.option("--full", is_flag=True, help="Use the full 12-replication protocol.")
@click.option("--n", default=100, show_default=True)
@click.option("--seed", default=20240, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--plot", is_flag=True, help="Render figures next to the results file.")
def sweep(study, replications, full, n, seed, out, plot):
    """Run a study grid and write a results file."""
    if full:
        replications = 12
    plan = default_plan(study, replications=replications, seed=seed, n=n)
    table = run_study(plan)
    write_results(table, out)
    click.echo(f"{len(table.rows)} rows -> {out}")
    if plot:
        from .plots import PLOTTERS

        fig_path = str(Path(out).with_suffix(".png"))
        PLOTTERS[study](table, fig_path)
        click.echo(f"figure -> {fig_path}")


@cli.command()
@click.option("--u0", required=True, type=int, help="Uncertain variables prescribed 0.")
@click.option("--u1", required=True, type=int, help="Uncertain variables prescribed 1.")
@click.option("--p", default=0.5, show_default=True, help="Stay-put odds of a prescribed 0.")
@click.option("--q", default=0.5, show_default=True, help="Stay-put odds of a prescribed 1.")
@click.option("--gamma-cap", required=True, type=int, help="Protection budget.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
              show_default=True)
def bound(u0, u1, p, q, gamma_cap, fmt):
    """Failure-probability bound for a protection budget."""
    fm = FlipModel(u0=u0, u1=u1, p=p, q=q)
    value = infeasibility_upper_bound(fm, gamma_cap)
    pmf = [pmf_exact_flips(fm, k) for k in range(fm.total + 1)]
    if fmt == "json":
        click.echo(json.dumps({"bound": value, "pmf": pmf}))
    else:
        click.echo(f"P(failure) <= {value:.9g}")
        for k, prob in enumerate(pmf):
            click.echo(f"  P(flips = {k}) = {prob:.9g}")


def main(argv=None):
    try:
        return cli.main(args=argv, standalone_mode=False)
    except InfeasibleModel as exc:
        click.echo(f"error: {exc.message}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    except click.exceptions.Abort:
        sys.exit(EXIT_INPUT_ERROR)
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)


if __name__ == "__main__":
    main()
