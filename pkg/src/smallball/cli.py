"""Command-line entry point.

Subcommands: spectrum, exact, asymptotic, perturb, durbin, validate.
Every subcommand is a thin dispatcher into the library; results go to a
JSON report (stdout by default) plus optional CSV tables.  Exit codes:
0 success, 2 argument errors, 3 numeric or consistency failures.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, asymptotics, durbin, kernels, perturbation, quadform
from .errors import SmallBallError
from .grids import Grid, gauss_legendre_grid
from .spectral import nystrom_spectrum

# wide enough to accept pi literals quoted to 9+ significant digits
PI_LITERAL_TOL = 1e-8


def _pi_aware(value: float) -> float:
    """Replace a near-pi literal by the exact constant."""
    if abs(value - math.pi) <= PI_LITERAL_TOL:
        return math.pi
    return value


def _report(task: str, inputs: dict, results: dict, diagnostics: dict) -> dict:
    return {
        "task": task,
        "inputs": inputs,
        "results": results,
        "diagnostics": diagnostics,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row) + "\n")


def _kernel_from_config(cfg: dict) -> kernels.KernelSpec:
    kind = cfg.get("type")
    if kind == "wiener":
        return kernels.wiener()
    if kind == "bridge":
        return kernels.bridge()
    if kind in ("ornstein_uhlenbeck", "ou"):
        return kernels.ornstein_uhlenbeck(float(cfg["alpha"]))
    if kind == "sampled":
        nodes = np.asarray(cfg["grid"], dtype=float)
        weights = np.asarray(
            cfg.get("weights", np.full(nodes.size, 1.0 / nodes.size)), dtype=float
        )
        grid = Grid(nodes=nodes, weights=weights)
        jump = cfg.get("diag_jump")
        return kernels.sampled(
            grid,
            np.asarray(cfg["matrix"], dtype=float),
            diag_jump=None if jump is None else np.asarray(jump, dtype=float),
            green_order=cfg.get("green_order"),
        )
    raise ValueError(f"unknown kernel type {kind!r}")


def _apply_config(args: argparse.Namespace) -> None:
    path = getattr(args, "config", None)
    if not path:
        return
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    for key, value in cfg.items():
        setattr(args, key.replace("-", "_"), value)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_spectrum(args) -> int:
    if args.kernel == "ou":
        spec = kernels.ornstein_uhlenbeck(args.alpha)
    elif args.kernel == "wiener":
        spec = kernels.wiener()
    else:
        spec = kernels.bridge()
    grid = gauss_legendre_grid(args.n)
    spectrum = nystrom_spectrum(spec, grid, args.k)
    mu = spectrum.eigenvalues
    if args.out:
        _write_csv(args.out, "k,mu_k", [(i + 1, float(v)) for i, v in enumerate(mu)])
    if args.eigvecs_out:
        header = "node," + ",".join(f"u_{i+1}" for i in range(mu.size))
        rows = [
            (float(grid.nodes[i]), *[float(v) for v in spectrum.eigvecs[i]])
            for i in range(grid.size)
        ]
        _write_csv(args.eigvecs_out, header, rows)
    trace = float(np.sum(grid.weights * np.diag(kernels.kernel_matrix(spec, grid))))
    report = _report(
        "spectrum",
        {"kernel": args.kernel, "alpha": args.alpha, "n": args.n, "k": args.k},
        {"eigenvalues": [float(v) for v in mu]},
        {"weighted_trace": trace, "eigenvalue_sum": float(mu.sum())},
    )
    _emit(report, args.report)
    return 0


def _cmd_exact(args) -> int:
    w = quadform.read_weights(args.weights)
    if args.method == "gilpelaez":
        est = quadform.cdf_gil_pelaez(w, args.r)
    elif args.method == "saddle":
        est = quadform.cdf_saddlepoint(w, args.r)
    else:
        est = quadform.cdf_monte_carlo(w, args.r, args.samples, args.seed)
    report = _report(
        "exact",
        {
            "weights": str(args.weights),
            "n_weights": int(w.head.size),
            "tail_sum_bound": w.tail_sum_bound,
            "r": args.r,
            "method": args.method,
            "samples": args.samples if args.method == "mc" else None,
            "seed": args.seed if args.method == "mc" else None,
        },
        {"value": est.value, "log_value": est.log_value},
        {"error_bound": est.error_bound},
    )
    _emit(report, args.report)
    return 0


def _cmd_asymptotic(args) -> int:
    if args.law == "naznik":
        theta = _pi_aware(args.theta)
        params = asymptotics.naznik_params(theta, args.delta, args.d)
        log_p = asymptotics.naznik_asymptotic(theta, args.delta, args.d, args.eps)
        results = {
            "log_probability": log_p,
            "gamma": params.gamma,
            "amplitude": params.amplitude,
            "exponent_coefficient": params.exponent_coefficient,
        }
        diag = {"eps": args.eps}
        inputs = {"law": "naznik", "theta": theta, "delta": args.delta, "d": args.d, "eps": args.eps}
    else:
        if not args.phi or not args.phi.startswith("power:"):
            raise ValueError("dll law needs --phi power:theta,delta,d")
        theta_s, delta_s, d_s = args.phi[len("power:") :].split(",")
        spec = asymptotics.PowerLawPhi(
            theta=_pi_aware(float(theta_s)), delta=float(delta_s), d=float(d_s)
        )
        r = args.r if args.r is not None else args.eps**2
        u = asymptotics.dll_root(spec, r)
        log_p = asymptotics.dll_asymptotic(spec, r)
        results = {"log_probability": log_p, "tilt": u, "prefactor": asymptotics.dll_prefactor()}
        diag = {"r": r}
        inputs = {"law": "dll", "phi": args.phi, "r": r}
    _emit(_report("asymptotic", inputs, results, diag), args.report)
    return 0


def _cmd_perturb(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    kernel = _kernel_from_config(cfg["kernel"])
    n = int(cfg.get("grid_size", 1000))
    grid = kernel.grid if kernel.variant == "sampled" else gauss_legendre_grid(n)
    phi_cols = []
    for descr in cfg["phi"]:
        if "poly" in descr:
            coeffs = list(map(float, descr["poly"]))
            phi_cols.append(np.polynomial.polynomial.polyval(grid.nodes, coeffs))
        elif "samples" in descr:
            phi_cols.append(np.asarray(descr["samples"], dtype=float))
        else:
            raise ValueError("phi descriptor needs 'poly' or 'samples'")
    phi = np.column_stack(phi_cols)
    a = np.asarray(cfg["A"], dtype=float)
    spec = perturbation.PerturbationSpec(phi=phi, a_matrix=a, grid=grid)
    gram = perturbation.build_gram(kernel, spec)
    cls = perturbation.classify(a, gram.q_matrix)
    results: dict = {
        "Q": gram.q_matrix.tolist(),
        "D": gram.d_matrix.tolist(),
        "classification": cls.label,
        "rank_defect": cls.rank_defect,
    }
    diagnostics: dict = {
        "singular_values": [float(v) for v in cls.singular_values],
        "classification_tol": cls.tol,
    }
    if cls.label == perturbation.PARTIALLY_CRITICAL:
        results["note"] = (
            "partially critical: no combined asymptotic factor is produced; "
            "decompose via the non-critical and critical transfer results"
        )
    if args.theorem1:
        results["theorem1_factor"] = perturbation.theorem1_factor(a, gram.q_matrix)
    if args.theorem3:
        if args.eps is None:
            raise ValueError("--theorem3 needs --eps")
        order = kernel.green_order
        if order is None:
            raise ValueError("theorem3 needs a kernel with declared green_order")
        pref = perturbation.critical_prefactor(gram.q_matrix, phi, grid)
        results["critical_prefactor"] = pref
        results["theorem3_factor"] = perturbation.theorem3_asymptotic(
            order, spec.m, pref, args.eps
        )
        diagnostics["eps"] = args.eps
    report = _report(
        "perturb",
        {"config": str(args.config), "grid_size": grid.size, "m": spec.m},
        results,
        diagnostics,
    )
    _emit(report, args.report)
    return 0


_FAMILY_SLUGS = {
    "normal-location": durbin.normal_location,
    "normal-location-scale": durbin.normal_location_scale,
    "exponential-rate": durbin.exponential_rate,
}


def _cmd_durbin(args) -> int:
    fam = _FAMILY_SLUGS[args.family]()
    model = durbin.durbin_model(fam)
    results: dict = {
        "fisher": model.fisher.tolist(),
        "classification": model.classification.label,
        "limit_trace": model.trace,
    }
    diagnostics: dict = {
        "q_vs_fisher_gap": float(np.abs(model.q_matrix - model.fisher).max()),
    }
    inputs: dict = {"family": args.family}
    if args.simulate:
        stats = durbin.simulate_omega2(fam, args.n, args.reps, args.seed)
        if args.out:
            _write_csv(args.out, "omega2", [(float(v),) for v in stats])
        qs = {f"q{int(100 * p)}": float(np.quantile(stats, p)) for p in (0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95)}
        mean = float(stats.mean())
        results.update(
            {
                "mean": mean,
                "std": float(stats.std(ddof=1)),
                "quantiles": qs,
                "mean_minus_limit_trace": mean - model.trace,
            }
        )
        inputs.update({"n": args.n, "reps": args.reps, "seed": args.seed})
    _emit(_report("durbin", inputs, results, diagnostics), args.report)
    return 0


def _cmd_validate(args) -> int:
    checks = _core_suite() if args.suite == "core" else None
    if checks is None:
        raise ValueError(f"unknown suite {args.suite!r}")
    ok = all(c["passed"] for c in checks)
    report = _report(
        "validate",
        {"suite": args.suite},
        {"passed": ok, "checks": checks},
        {"n_checks": len(checks), "n_failed": sum(not c["passed"] for c in checks)},
    )
    _emit(report, args.report)
    if not ok:
        raise SmallBallError("validation suite failed; see report")
    return 0


def _core_suite() -> list[dict]:
    """Determinant, criticality and consistency checks at desk scale."""
    checks = []

    def add(name, value, target, tol):
        err = abs(value - target)
        checks.append(
            {
                "check": name,
                "value": float(value),
                "target": float(target),
                "tolerance": float(tol),
                "passed": bool(err <= tol),
            }
        )

    grid = gauss_legendre_grid(500)
    spec0 = nystrom_spectrum(kernels.bridge(), grid, 300)
    add("bridge_mu1", spec0.eigenvalues[0], 1.0 / math.pi**2, 1e-6)

    phi = np.ones(grid.size)
    pspec = perturbation.PerturbationSpec(phi=phi, a_matrix=np.array([[6.0]]), grid=grid)
    gram = perturbation.build_gram(kernels.bridge(), pspec)
    add("bridge_gram_q", gram.q_matrix[0, 0], 1.0 / 12.0, 1e-8)
    add("theorem1_factor", perturbation.theorem1_factor(pspec.a_matrix, gram.q_matrix), 2.0, 1e-6)

    g_a = perturbation.perturbed_kernel(
        kernels.kernel_matrix(kernels.bridge(), grid), gram.psi, gram.d_matrix
    )
    spec_a = nystrom_spectrum(
        kernels.sampled(grid, g_a, diag_jump=np.ones(grid.size)), grid, 300
    )
    prod = perturbation.spectral_product_check(spec0, spec_a, 100)
    add("theorem1_product", prod.value, 0.25, 0.01)

    # critical configuration: A = Q^{-1} = 12
    crit = perturbation.PerturbationSpec(phi=phi, a_matrix=np.array([[12.0]]), grid=grid)
    gram_c = perturbation.build_gram(kernels.bridge(), crit)
    cls = perturbation.classify(crit.a_matrix, gram_c.q_matrix)
    checks.append(
        {
            "check": "critical_classification",
            "value": cls.label,
            "target": perturbation.CRITICAL,
            "tolerance": 0.0,
            "passed": cls.label == perturbation.CRITICAL,
        }
    )
    g_c = perturbation.perturbed_kernel(
        kernels.kernel_matrix(kernels.bridge(), grid), gram_c.psi, gram_c.d_matrix
    )
    resid = perturbation.annihilation_residual(kernels.bridge(), g_c, phi, grid)
    add("critical_annihilation", resid, 0.0, 1e-9)

    for fam_name, ctor in (
        ("normal_location", durbin.normal_location),
        ("normal_location_scale", durbin.normal_location_scale),
        ("exponential_rate", durbin.exponential_rate),
    ):
        model = durbin.durbin_model(ctor())
        add(f"durbin_q_vs_s_{fam_name}", float(np.abs(model.q_matrix - model.fisher).max()), 0.0, 1e-6)

    params = asymptotics.naznik_params(math.pi, -0.5, 2.0)
    add("naznik_wiener_amplitude", params.amplitude, 4.0 / math.sqrt(math.pi), 1e-12)
    add("naznik_wiener_coefficient", params.exponent_coefficient, 0.125, 1e-12)

    for order in (1, 2):
        for m in (1, 2):
            base = asymptotics.green_base_form(order, amplitude=1.0, power=0.0)
            closed = perturbation.theorem2_closed(base, m, 1.0)
            eps = 0.1
            lhs = math.exp(closed.log_evaluate(eps**2) - base.log_evaluate(eps**2))
            rhs = perturbation.theorem3_asymptotic(order, m, 1.0, eps)
            add(f"theorem2_vs_theorem3_l{order}_m{m}", lhs / rhs, 1.0, 1e-10)
    return checks


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smallball",
        description="Small-ball probabilities for Gaussian processes and their perturbations",
    )
    parser.add_argument("--version", action="version", version=f"smallball {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="Nystrom spectrum of a catalog kernel")
    p.add_argument("--kernel", choices=("bridge", "wiener", "ou"), required=True)
    p.add_argument("--alpha", type=float, default=1.0, help="OU rate")
    p.add_argument("--n", type=int, default=1000, help="Gauss-Legendre grid size")
    p.add_argument("--k", type=int, default=10, help="number of eigenvalues")
    p.add_argument("--out", help="CSV output path (k, mu_k)")
    p.add_argument("--eigvecs-out", dest="eigvecs_out", help="CSV of eigenfunction samples")
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.add_argument("--config", help="JSON config overriding flags")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("exact", help="CDF of a weighted chi-square form")
    p.add_argument("--weights", required=True, help="CSV weight file, one mu per line")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--method", choices=("gilpelaez", "saddle", "mc"), default="gilpelaez")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.add_argument("--config", help="JSON config overriding flags")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("asymptotic", help="closed-form small-ball asymptotics")
    p.add_argument("--law", choices=("naznik", "dll"), required=True)
    p.add_argument("--theta", type=float, default=math.pi)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--d", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--r", type=float, default=None, help="ball radius squared (dll)")
    p.add_argument("--phi", help="dll catalog member, e.g. power:3.14159265,0,2")
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.add_argument("--config", help="JSON config overriding flags")
    p.set_defaults(func=_cmd_asymptotic)

    p = sub.add_parser("perturb", help="perturbation classification and transfer factors")
    p.add_argument("--config", required=True, help="JSON problem description")
    p.add_argument("--classify", action="store_true", help="classification only (default)")
    p.add_argument("--theorem1", action="store_true", help="non-critical transfer factor")
    p.add_argument("--theorem3", action="store_true", help="critical Green-process factor")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("durbin", help="Durbin limiting processes and the omega^2 simulator")
    p.add_argument("--family", choices=tuple(_FAMILY_SLUGS), required=True)
    p.add_argument("--fisher", action="store_true", help="report the Fisher matrix (default)")
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV of simulated statistics")
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.add_argument("--config", help="JSON config overriding flags")
    p.set_defaults(func=_cmd_durbin)

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("--suite", default="core", choices=("core",))
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.set_defaults(func=_cmd_validate)
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
        return args.func(args)
    except SystemExit as exc:  # argparse usage errors and --version
        return int(exc.code or 0)
    except SmallBallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError, KeyError) as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
