"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 numerical
failure, 4 a verification or study check failed.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .controlled import SmoothCoefficient, compose_smooth, local_error_certificate
from .errors import CheckFailed, ConfigError, GridError, NumericalError
from .experiment import (
    ExperimentConfig,
    probe_averaged_drift,
    run_convergence_study,
    seed_noise,
    write_drift_probes_csv,
    write_failures,
    write_study_csv,
    write_summary_csv,
)
from .fastslow import solve_fastslow
from .fbm import lift_piecewise_linear, sample_fbm
from .grid import GridPath
from .rde import RdeProblem, solution_norm_report, solve_rde
from .variation import (
    RoughnessParams,
    check_partition_inequality,
    p_var_norm,
)


def _load_config(config_path) -> ExperimentConfig:
    if config_path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_yaml(config_path)


def _out_dir(out, config: ExperimentConfig | None = None) -> Path:
    if out is not None:
        d = Path(out)
    elif config is not None:
        d = config.resolved_out_dir()
    else:
        d = Path("out")
    d.mkdir(parents=True, exist_ok=True)
    return d


_config_opt = click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
    default=None, help="YAML experiment config.",
)
_seed_opt = click.option("--seed", type=int, default=0, show_default=True)
_out_opt = click.option("--out", type=click.Path(file_okay=False), default=None,
                        help="Output directory.")


@click.group()
def cli():
    """Rough-path averaging experiments."""


@cli.group()
def fbm():
    """Fractional Brownian motion utilities."""


@fbm.command("sample")
@click.option("--hurst", type=float, default=0.5, show_default=True)
@click.option("--dim", type=int, default=1, show_default=True)
@click.option("--dt", type=float, default=0.001, show_default=True)
@click.option("--steps", type=int, default=1000, show_default=True)
@click.option("--t0", type=float, default=0.0, show_default=True)
@_config_opt
@_seed_opt
@_out_opt
def fbm_sample(hurst, dim, dt, steps, t0, config_path, seed, out):
    """Sample one FBM path and write binary + CSV files."""
    out_dir = _out_dir(out, _load_config(config_path) if config_path else None)
    path = sample_fbm(hurst, dim, t0, dt, steps, seed)
    stem = f"fbm_h{hurst}_seed{seed}"
    bin_path = out_dir / (stem + ".bin")
    csv_path = out_dir / (stem + ".csv")
    path.save(bin_path, hurst=hurst, seed=seed)
    path.save_csv(csv_path)
    click.echo(f"wrote {bin_path} and {csv_path}")


@cli.command("lift")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Binary grid-path file to lift.")
@click.option("--p", "p_exp", type=float, default=2.4, show_default=True)
@_config_opt
@_seed_opt
@_out_opt
def lift_cmd(input_path, p_exp, config_path, seed, out):
    """Lift a path and emit Levy-area / variation diagnostics."""
    out_dir = _out_dir(out)
    path = GridPath.load(input_path)
    lift = lift_piecewise_linear(path)
    rng = np.random.default_rng(seed)
    n = path.n_steps
    lines = ["operation,interval,p,value,bound,pass"]
    worst = 0.0
    for _ in range(20):
        i, j, k = sorted(rng.choice(n + 1, size=3, replace=False))
        res = lift.area(i, k) - lift.area(i, j) - lift.area(j, k) - np.outer(
            path.values[j] - path.values[i], path.values[k] - path.values[j]
        )
        worst = max(worst, float(np.max(np.abs(res))))
    lines.append(
        f"chen_residual,[{path.t0}:{path.t_end}],{p_exp},{worst!r},1e-09,"
        f"{int(worst <= 1e-9)}"
    )
    quarters = np.linspace(path.t0, path.t_end, 5)
    report = check_partition_inequality(path, p_exp, quarters)
    lines.append(report.csv_row())
    target = out_dir / "lift_diagnostics.csv"
    target.write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {target}")
    if not report.passed or worst > 1e-9:
        raise CheckFailed("lift diagnostics failed")


@cli.command("integrate")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--p", "p_exp", type=float, default=2.4, show_default=True)
@_config_opt
@_seed_opt
@_out_opt
def integrate_cmd(input_path, p_exp, config_path, seed, out):
    """Rough-integrate sin over a lifted driver and emit the certificate."""
    out_dir = _out_dir(out)
    path = GridPath.load(input_path)
    lift = lift_piecewise_linear(path)
    d = path.dim
    eye = np.eye(d)
    coef = SmoothCoefficient(
        fn=lambda x: np.sin(x)[..., None] * eye,
        d1=lambda x: np.cos(x)[..., None, None] * eye[:, :, None] * eye[:, None, :],
        bound=1.0,
    )
    from .controlled import identity_controlled

    integrand = compose_smooth(coef, identity_controlled(lift), lift)
    params = RoughnessParams(p=p_exp)
    lines = ["s,t,defect,bound_term,ratio"]
    mid = path.times[path.n_steps // 2]
    for s, t in ((path.t0, path.t_end), (path.t0, mid), (mid, path.t_end)):
        lines.append(local_error_certificate(integrand, lift, params, s, t).csv_row())
    target = out_dir / "integral_certificate.csv"
    target.write_text("\n".join(lines) + "\n")
    from .controlled import rough_integral

    value = rough_integral(integrand, lift)
    click.echo(f"integral value {value}; wrote {target}")


@cli.command("solve-rde")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Binary grid-path file for the driver.")
@click.option("--y0", type=float, default=1.0, show_default=True)
@click.option("--p", "p_exp", type=float, default=2.4, show_default=True)
@_config_opt
@_seed_opt
@_out_opt
def solve_rde_cmd(input_path, y0, p_exp, config_path, seed, out):
    """Solve dy = y <x, dx> along the driver and write the solution path."""
    out_dir = _out_dir(out)
    driver_path = GridPath.load(input_path)
    lift = lift_piecewise_linear(driver_path)
    d = driver_path.dim
    coef = SmoothCoefficient(
        fn=lambda y: np.repeat(y[..., :, None], d, axis=-1),
        d1=lambda y: np.ones(y.shape[:-1] + (1, d, 1)),
        bound=50.0,
    )
    problem = RdeProblem(
        drift=lambda y: np.zeros_like(y),
        diffusion=coef,
        driver=lift,
        y0=np.array([y0]),
        params=RoughnessParams(p=p_exp),
    )
    sol = solve_rde(problem)
    target = out_dir / "rde_solution.csv"
    sol.path.save_csv(target)
    report = solution_norm_report(sol, problem)
    click.echo(
        f"wrote {target}; sup={report.sup_norm:.6g} "
        f"pvar+rem={report.pvar_plus_remainder:.6g} N={report.count_n}"
    )


@cli.group()
def fastslow():
    """Coupled fast-slow system runs."""


@fastslow.command("run")
@click.option("--eps", type=float, default=None,
              help="Override: use one eps (default: smallest in the ladder).")
@_config_opt
@_seed_opt
@_out_opt
def fastslow_run(eps, config_path, seed, out):
    """Solve one (seed, eps) cell and write the slow and fast paths."""
    config = _load_config(config_path)
    out_dir = _out_dir(out, config)
    eps = min(config.eps_ladder) if eps is None else eps
    system = config.make_system(eps)
    lift1, omega2 = seed_noise(config, seed)
    x_sol, y_path = solve_fastslow(
        system, lift1, omega2, config.t_end,
        fast_resolution=config.fast_resolution, params=config.rough_params,
    )
    xs = out_dir / f"slow_seed{seed}_eps{eps}.csv"
    ys = out_dir / f"fast_seed{seed}_eps{eps}.csv"
    x_sol.path.save_csv(xs)
    y_path.save_csv(ys)
    click.echo(f"wrote {xs} and {ys}")


@cli.group(name="avg-drift")
def avg_drift():
    """Averaged drift estimation."""


@avg_drift.command("probe")
@_config_opt
@_seed_opt
@_out_opt
def avg_drift_probe(config_path, seed, out):
    """Tabulate averaged-drift estimates with standard errors."""
    config = _load_config(config_path)
    out_dir = _out_dir(out, config)
    rows = probe_averaged_drift(config)
    target = out_dir / "drift_probes.csv"
    write_drift_probes_csv(rows, target)
    for r in rows:
        click.echo(f"x={r.x:+.4f}  fbar={r.fbar:+.6f}  stderr={r.stderr:.2e}")
    click.echo(f"wrote {target}")


@cli.group()
def study():
    """Multi-seed studies."""


@study.command("converge")
@click.option("--no-figures", is_flag=True, default=False,
              help="Skip figure rendering.")
@_config_opt
@_seed_opt
@_out_opt
def study_converge(no_figures, config_path, seed, out):
    """Run the eps-ladder convergence study; CSV + figures in the out dir."""
    config = _load_config(config_path)
    out_dir = _out_dir(out, config)
    result = run_convergence_study(config)
    write_study_csv(result, out_dir / "study.csv")
    write_summary_csv(result, out_dir / "summary.csv")
    write_drift_probes_csv(result.drift_probes, out_dir / "drift_probes.csv")
    if result.n_failures:
        write_failures(result, out_dir / "failures.csv")
    if not no_figures:
        from .plots import render_study_figures

        for fig in render_study_figures(result, out_dir):
            click.echo(f"wrote {fig}")
    for s in result.summary():
        click.echo(
            f"eps={s['eps']:<6g} median_sup={s['median_sup']:.6g} "
            f"median_pvar={s['median_pvar']:.6g} median_rem={s['median_rem']:.6g} "
            f"({s['n_ok']} ok)"
        )
    click.echo(f"wrote {out_dir / 'study.csv'} and {out_dir / 'summary.csv'}")
    if result.n_failures:
        raise NumericalError(
            f"{result.n_failures} study cell(s) failed; see failures.csv"
        )


@cli.command("verify")
@_config_opt
@_seed_opt
@_out_opt
def verify_cmd(config_path, seed, out):
    """Run the invariant battery; exit 0 iff every check passes."""
    from .verify import run_verification

    config = _load_config(config_path) if config_path else None
    results = run_verification(config)
    failed = [r for r in results if not r.passed]
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        click.echo(f"[{mark}] {r.name}: {r.detail}")
    if failed:
        raise CheckFailed(f"{len(failed)} verification check(s) failed")
    click.echo(f"all {len(results)} checks passed")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except (ConfigError, GridError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 3
    except CheckFailed as exc:
        click.echo(f"check failed: {exc}", err=True)
        return 4


if __name__ == "__main__":
    sys.exit(main())
