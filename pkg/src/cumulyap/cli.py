"""Command line interface: simulate, estimate, identifiability, study.

simulate draws steady-state samples to CSV; estimate recovers the scale-free
drift from such samples with plug-in inference; identifiability runs the
rank checks for a sparsity graph; study reproduces the benchmark Monte Carlo
experiment at a configurable scale and writes CSV/JSON (optionally SVG).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .coefficients import (
    generic_identifiability_check,
    known_noise_identifiability_check,
    polytree_rank_witness,
)
from .cumulants import empirical_cumulants, estimate_omega, population_omega
from .estimation import asymptotic_covariance, estimate_drift
from .graphs import DirectedGraph
from .sampling import (
    BetaJumps,
    LevySpec,
    population_state_cumulants,
    sample_steady_state,
    study_drift_matrix,
)

__all__ = ["StudyConfig", "StudyResult", "run_study", "main"]


# -- study ---------------------------------------------------------------


@dataclass
class StudyConfig:
    """Monte Carlo study settings; defaults are the desk-scale benchmark."""

    d: int = 3
    gamma: float = 10.0
    rho: float = 0.2
    lam: float = 0.5
    mu: float = 0.8
    nu: float = 1.0
    sample_sizes: tuple[int, ...] = (1000, 2000, 4000, 8000)
    n_replications: int = 100
    orders: tuple[int, ...] = (2, 3)
    seed: int = 1234


@dataclass
class StudyResult:
    """Per-sample-size error summaries plus the asymptotic reference."""

    config: StudyConfig
    rows: list[dict] = field(default_factory=list)
    total_asymptotic_variance: float = float("nan")

    @property
    def asymptotic_rmse(self) -> float:
        return float(np.sqrt(self.total_asymptotic_variance))

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": asdict(self.config),
                "total_asymptotic_variance": self.total_asymptotic_variance,
                "asymptotic_rmse": self.asymptotic_rmse,
                "rows": self.rows,
            },
            indent=2,
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.rows[0]))
            writer.writeheader()
            writer.writerows(self.rows)


def run_study(config: StudyConfig, log=None) -> StudyResult:
    """Run the drift-recovery Monte Carlo experiment.

    For each sample size, draws n_replications independent steady-state
    samples from the benchmark model, estimates the unit-norm drift from the
    chosen cumulant orders, and summarizes squared Frobenius errors against
    the true unit drift, alongside the delta-method asymptotic variance
    computed exactly from population cumulants.
    """
    log = log or (lambda msg: None)
    orders = sorted(config.orders)
    M = study_drift_matrix(config.d, config.gamma, config.rho)
    unit = M / np.linalg.norm(M)
    levy = LevySpec(np.full(config.d, config.lam), BetaJumps(config.mu, config.nu))

    population = population_state_cumulants(M, levy, range(1, 2 * max(orders) + 1))
    omega = population_omega(population, orders)
    target = {k: population[k] for k in orders}
    total = asymptotic_covariance(M, target, omega.matrix).total
    result = StudyResult(config=config, total_asymptotic_variance=total)
    log(f"asymptotic rmse {result.asymptotic_rmse:.3f}")

    reps = config.n_replications
    streams = np.random.SeedSequence(config.seed).spawn(len(config.sample_sizes) * reps)
    for i, n in enumerate(config.sample_sizes):
        t0 = time.time()
        estimates, sq_errors, gaps, stable = [], [], [], 0
        for rep in range(reps):
            seed = streams[i * reps + rep]
            samples = sample_steady_state(M, levy, n, seed=seed)
            est = estimate_drift(samples, orders)
            estimates.append(est.matrix)
            sq_errors.append(float(np.sum((est.matrix - unit) ** 2)))
            gaps.append(est.gap)
            stable += est.stable
        mse = float(np.mean(sq_errors))
        mean_matrix = np.mean(estimates, axis=0)
        bias_norm = float(np.linalg.norm(mean_matrix - unit))
        row = {
            "n": n,
            "replications": reps,
            "mse": mse,
            "bias_norm": bias_norm,
            "variance": mse - bias_norm**2,
            "scaled_rmse": float(np.sqrt(n * mse)),
            "scaled_bias": float(np.sqrt(n) * bias_norm),
            "rmse_ratio": float(np.sqrt(n * mse) / result.asymptotic_rmse),
            "stable_fraction": stable / reps,
            "mean_gap": float(np.mean(gaps)),
        }
        result.rows.append(row)
        log(
            f"n={n}: scaled rmse {row['scaled_rmse']:.3f} "
            f"(ratio {row['rmse_ratio']:.3f}) in {time.time() - t0:.1f}s"
        )
    return result


def _write_svg_plot(path, result: StudyResult) -> None:
    """Minimal self-contained SVG: scaled errors against sample size."""
    width, height, margin = 640, 420, 60
    ns = [row["n"] for row in result.rows]
    series = {
        "scaled rmse": [row["scaled_rmse"] for row in result.rows],
        "scaled bias": [row["scaled_bias"] for row in result.rows],
    }
    hline = result.asymptotic_rmse
    xs = np.log2(ns)
    x0, x1 = xs.min(), xs.max()
    ymax = max(max(max(v) for v in series.values()), hline) * 1.1

    def px(x):
        return margin + (x - x0) / (x1 - x0) * (width - 2 * margin)

    def py(y):
        return height - margin - y / ymax * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 16}" text-anchor="middle" '
        f'font-size="13">sample size</text>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">'
        f"drift recovery error, scaled by sqrt(n)</text>",
    ]
    for n, x in zip(ns, xs):
        parts.append(
            f'<text x="{px(x)}" y="{height - margin + 18}" text-anchor="middle" '
            f'font-size="11">{n}</text>'
        )
    for frac in (0.0, 0.5, 1.0):
        y = ymax * frac / 1.1
        parts.append(
            f'<text x="{margin - 8}" y="{py(y) + 4}" text-anchor="end" '
            f'font-size="11">{y:.1f}</text>'
        )
    y = py(hline)
    parts.append(
        f'<line x1="{margin}" y1="{y}" x2="{width - margin}" y2="{y}" '
        f'stroke="gray" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{width - margin}" y="{y - 6}" text-anchor="end" font-size="11" '
        f'fill="gray">asymptotic rmse</text>'
    )
    for (name, values), color in zip(series.items(), ("#1f77b4", "#d62728")):
        points = " ".join(f"{px(x):.1f},{py(v):.1f}" for x, v in zip(xs, values))
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        for x, v in zip(xs, values):
            parts.append(
                f'<circle cx="{px(x):.1f}" cy="{py(v):.1f}" r="3" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{px(xs[-1]) - 4}" y="{py(values[-1]) - 8}" text-anchor="end" '
            f'font-size="12" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


# -- shared option handling ----------------------------------------------


def _parse_orders(text: str) -> list[int]:
    orders = sorted({int(tok) for tok in text.split(",") if tok.strip()})
    if not orders or any(k < 2 for k in orders):
        raise ValueError("orders must be integers >= 2, e.g. '2,3'")
    return orders


def _load_graph(args) -> DirectedGraph:
    if args.graph:
        with open(args.graph) as fh:
            return DirectedGraph.from_json(fh.read())
    if args.d is None or not args.edges:
        raise ValueError("need --graph FILE or both --d and --edges")
    return DirectedGraph.from_edge_list(args.d, args.edges)


def _load_drift(args) -> np.ndarray:
    if args.drift:
        with open(args.drift) as fh:
            obj = json.load(fh)
        M = np.asarray(obj["m"] if isinstance(obj, dict) else obj, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("drift JSON must hold a square matrix")
        return M
    return study_drift_matrix(args.d, args.gamma, args.rho)


def _read_samples(path) -> np.ndarray:
    with open(path) as fh:
        first = fh.readline()
    skip = 1 if any(c.isalpha() for c in first) else 0
    samples = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return samples


def _write_json(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


# -- subcommands ----------------------------------------------------------


def _cmd_simulate(args) -> int:
    M = _load_drift(args)
    levy = LevySpec(np.full(M.shape[0], args.lam), BetaJumps(args.mu, args.nu))
    samples = sample_steady_state(M, levy, args.n, seed=args.seed)
    header = ",".join(f"x{i + 1}" for i in range(samples.shape[1]))
    np.savetxt(args.out, samples, delimiter=",", header=header, comments="")
    print(f"wrote {samples.shape[0]} draws of dimension {samples.shape[1]} to {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    samples = _read_samples(args.samples)
    orders = _parse_orders(args.orders)
    cumulants = empirical_cumulants(samples, orders)
    est = estimate_drift(cumulants=cumulants)
    omega = estimate_omega(samples, orders)
    total = asymptotic_covariance(est.matrix, cumulants, omega.matrix).total
    _write_json(
        args,
        {
            "d": int(samples.shape[1]),
            "n": int(samples.shape[0]),
            "orders": orders,
            "m_hat": est.matrix.tolist(),
            "sigma_min": est.sigma_min,
            "gap": est.gap,
            "stable": est.stable,
            "total_asymptotic_variance": total,
        },
    )
    return 0


def _cmd_identifiability(args) -> int:
    graph = _load_graph(args)
    if args.method == "generic":
        report = generic_identifiability_check(
            graph, args.r, n_trials=args.trials, seed=args.seed
        )
    elif args.method == "known-noise":
        report = known_noise_identifiability_check(
            graph, args.r, n_trials=args.trials, seed=args.seed
        )
    else:
        witness = polytree_rank_witness(graph, args.r)
        report = {
            "d": graph.d,
            "edges": sorted([a + 1, b + 1] for a, b in graph.edges),
            "r": args.r,
            "determinant": {
                str(deg): str(c) for deg, c in sorted(witness.determinant.items())
            },
            "lowest_degree": witness.lowest_degree,
            "lowest_coefficient": (
                None
                if witness.lowest_coefficient is None
                else str(witness.lowest_coefficient)
            ),
            "expected_lowest_degree": witness.expected_lowest_degree,
            "expected_lowest_magnitude": str(witness.expected_lowest_magnitude),
            "relabeling": [i + 1 for i in witness.relabeling],
            "generically_identifiable": witness.generically_identifiable,
            "verdict": (
                "maximal rank"
                if witness.generically_identifiable
                else "witness degenerate"
            ),
        }
    _write_json(args, report)
    return 0


def _cmd_study(args) -> int:
    config = StudyConfig(
        d=args.d,
        gamma=args.gamma,
        rho=args.rho,
        lam=args.lam,
        mu=args.mu,
        nu=args.nu,
        sample_sizes=tuple(int(tok) for tok in args.sizes.split(",")),
        n_replications=args.reps,
        orders=tuple(_parse_orders(args.orders)),
        seed=args.seed,
    )
    if args.quick:
        config.sample_sizes = tuple(config.sample_sizes[:2])
        config.n_replications = min(config.n_replications, 10)
    os.makedirs(args.out_dir, exist_ok=True)
    result = run_study(config, log=lambda msg: print(msg, file=sys.stderr))
    csv_path = os.path.join(args.out_dir, "study.csv")
    json_path = os.path.join(args.out_dir, "study.json")
    result.write_csv(csv_path)
    with open(json_path, "w") as fh:
        fh.write(result.to_json() + "\n")
    written = [csv_path, json_path]
    if args.plots:
        svg_path = os.path.join(args.out_dir, "study.svg")
        _write_svg_plot(svg_path, result)
        written.append(svg_path)
    print("wrote " + ", ".join(written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cumulyap",
        description="steady-state cumulant tools for Levy-driven linear SDE models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw steady-state samples to CSV")
    sim.add_argument("--drift", help="JSON file with a square drift matrix")
    sim.add_argument("--d", type=int, default=3, help="benchmark dimension")
    sim.add_argument("--gamma", type=float, default=10.0, help="rotation strength")
    sim.add_argument("--rho", type=float, default=0.2, help="coupling in [0,1)")
    sim.add_argument("--lam", type=float, default=0.5, help="jump rate per coordinate")
    sim.add_argument("--mu", type=float, default=0.8, help="jump size mean")
    sim.add_argument("--nu", type=float, default=1.0, help="jump size precision")
    sim.add_argument("-n", type=int, required=True, help="number of draws")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.set_defaults(func=_cmd_simulate)

    est = sub.add_parser("estimate", help="estimate the drift from samples")
    est.add_argument("--samples", required=True, help="CSV of steady-state draws")
    est.add_argument("--orders", default="2,3", help="cumulant orders, e.g. 2,3")
    est.add_argument("--out", help="output JSON path (default: stdout)")
    est.set_defaults(func=_cmd_estimate)

    ident = sub.add_parser("identifiability", help="rank checks for a graph")
    ident.add_argument("--graph", help="JSON file {d, edges} with 1-based edges")
    ident.add_argument("--d", type=int, help="dimension when using --edges")
    ident.add_argument(
        "--edges", nargs="+", help="edges as 1-based 'a->b' strings"
    )
    ident.add_argument("--r", type=int, default=3, help="higher cumulant order")
    ident.add_argument(
        "--method",
        choices=("generic", "known-noise", "witness"),
        default="generic",
    )
    ident.add_argument("--trials", type=int, default=100)
    ident.add_argument("--seed", type=int, default=None)
    ident.add_argument("--out", help="output JSON path (default: stdout)")
    ident.set_defaults(func=_cmd_identifiability)

    study = sub.add_parser("study", help="run the Monte Carlo benchmark")
    study.add_argument("--d", type=int, default=3)
    study.add_argument("--gamma", type=float, default=10.0)
    study.add_argument("--rho", type=float, default=0.2)
    study.add_argument("--lam", type=float, default=0.5)
    study.add_argument("--mu", type=float, default=0.8)
    study.add_argument("--nu", type=float, default=1.0)
    study.add_argument("--sizes", default="1000,2000,4000,8000")
    study.add_argument("--reps", type=int, default=100)
    study.add_argument("--orders", default="2,3")
    study.add_argument("--seed", type=int, default=1234)
    study.add_argument("--quick", action="store_true", help="small smoke run")
    study.add_argument("--plots", action="store_true", help="also write an SVG")
    study.add_argument("--out-dir", required=True)
    study.set_defaults(func=_cmd_study)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
