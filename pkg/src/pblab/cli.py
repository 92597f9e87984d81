"""Command-line front end: configuration, orchestration, persistence.

Exit status: 0 success, 2 invalid configuration or usage, 3 numerical
failure (solver breakdown or a check exceeding its tolerance).  Every
command writes its tables plus a manifest.json recording the resolved
parameters, seed, versions, and artifact hashes; ``rerun MANIFEST``
repeats a recorded run exactly.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import artifacts
from .config import ConfigError, Resolver, load_config

_THREAD_LIMITER = None


def _apply_thread_cap(explicit: int | None = None) -> int | None:
    """Cap BLAS/OpenMP pools from PBLAB_THREADS (or an explicit count)."""
    global _THREAD_LIMITER
    n = explicit
    if n is None:
        raw = os.environ.get("PBLAB_THREADS")
        if not raw:
            return None
        try:
            n = int(raw)
        except ValueError as e:
            raise ConfigError(f"PBLAB_THREADS must be an integer: {raw!r}") from e
    if n < 1:
        raise ConfigError(f"thread cap must be positive, got {n}")
    try:
        from threadpoolctl import threadpool_limits
        _THREAD_LIMITER = threadpool_limits(limits=n)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)
    return n


# ---------------------------------------------------------------- commands

def _cmd_sample(res: Resolver, out: str):
    from .ensemble import EnsembleSpec, Gaussian, sample_gbeta
    M = res.get_int("M", 8)
    beta = res.get_float("beta", 2.0)
    a = res.get_float("a", 1.0)
    n = res.get_count("samples", 1000)
    seed = res.get_int("seed", 0)
    spec = EnsembleSpec(n_eigen=M, beta=beta, potential=Gaussian(a=a))
    batch = sample_gbeta(spec, n, seed)
    header = [f"x{i + 1}" for i in range(M)] + ["log_weight"]
    rows = [list(c) + [lw] for c, lw in zip(batch.configs, batch.log_weights)]
    artifacts.write_csv(os.path.join(out, "samples.csv"), header, rows)
    return ["samples.csv"], [], seed


def _cmd_virasoro_check(res: Resolver, out: str):
    from .ensemble import EnsembleSpec, Gaussian, sample_gbeta, virasoro_residual
    M = res.get_int("M", 8)
    beta = res.get_float("beta", 3.7)
    a = res.get_float("a", 1.0)
    orders = res.get_int_range("orders", "-1..4")
    n = res.get_count("samples", 100000)
    seed = res.get_int("seed", 0)
    n_sigma = res.get_float("tol", 3.0)
    spec = EnsembleSpec(n_eigen=M, beta=beta, potential=Gaussian(a=a))
    batch = sample_gbeta(spec, n, seed)
    rows, fails = [], []
    for order in orders:
        st = virasoro_residual(batch, order)
        sig = abs(st.mean) / st.stderr if st.stderr > 0 else 0.0
        rows.append([order, st.mean.real, st.mean.imag, st.stderr, sig])
        if not st.consistent_with_zero(n_sigma):
            fails.append(f"order {order}: |mean| = {sig:.2f} stderr > {n_sigma}")
    artifacts.write_csv(os.path.join(out, "virasoro.csv"),
                        ["order", "mean_re", "mean_im", "stderr", "sigmas"], rows)
    return ["virasoro.csv"], fails, seed


def _cmd_bpz_check(res: Resolver, out: str):
    from .ensemble import (EnsembleSpec, MultiPenner, PolynomialCouplings,
                           bpz_ode_residual, confluent_bpz_residual)
    operator = res.get_str("operator", "screening")
    if operator not in ("screening", "degenerate"):
        raise ConfigError(f"operator must be screening or degenerate, got {operator!r}")
    potential = res.get_str("potential", "penner")
    M = res.get_int("M", 2)
    beta = res.get_float("beta", 2.0)
    alpha = 1.0 if operator == "screening" else -beta / 2.0
    fd_step = res.get_float("fd-step", 1e-4)
    factor = res.get_float("tol", 10.0)
    if potential == "penner":
        masses = res.get_floats("masses", "-1.5,-2.0")
        positions = res.get_floats("positions", "0.0,1.0")
        c_pref = res.get_float("C", 1.0)
        z = res.get_float("z", 2.5)
        spec = EnsembleSpec(n_eigen=M, beta=beta,
                            potential=MultiPenner(masses=tuple(masses),
                                                  positions=tuple(positions), C=c_pref))
        r = bpz_ode_residual(spec, alpha, z, fd_step=fd_step)
    elif potential == "polynomial":
        coup = res.get_floats("couplings", "0,0,-0.5")
        z = res.get_float("z", 16.0)
        spec = EnsembleSpec(n_eigen=M, beta=beta,
                            potential=PolynomialCouplings(t=tuple(coup)))
        r = confluent_bpz_residual(spec, alpha, z, fd_step=fd_step)
    else:
        raise ConfigError(f"potential must be penner or polynomial, got {potential!r}")
    rows = [[operator, potential, z, r.residual, r.fd_error, r.quad_error, r.scale]]
    artifacts.write_csv(os.path.join(out, "bpz.csv"),
                        ["operator", "potential", "z", "residual",
                         "fd_error", "quad_error", "scale"], rows)
    fails = []
    if abs(r.residual) > factor * r.combined:
        fails.append(f"residual {r.residual:.3e} exceeds {factor} x combined error "
                     f"{r.combined:.3e}")
    return ["bpz.csv"], fails, None


def _cmd_qpii_solve(res: Resolver, out: str):
    from .qpii import default_grid, qpii_residual, solve_qpii
    kappa = res.get_float("kappa", 1.0)
    s_min = res.get_float("s-min", -5.0)
    s_max = res.get_float("s-max", 2.0)
    terminal = res.get_str("terminal", "sigmoid")
    field = solve_qpii(kappa, default_grid(kappa, s_min, s_max), terminal=terminal)
    resid = qpii_residual(field)
    g = field.grid
    rows = [[x, F] for x, F in zip(g.x, field.values[0])]
    artifacts.write_csv(os.path.join(out, "qpii_slice.csv"), ["x", "F"], rows)
    artifacts.write_json(os.path.join(out, "qpii_summary.json"), {
        "kappa": kappa, "terminal": terminal, "settled_residual": resid,
        "t_min": g.t_min, "t_max": g.t_max, "n_t": g.n_t,
        "x_min": g.x_min, "x_max": g.x_max, "n_x": g.n_x,
    })
    return ["qpii_slice.csv", "qpii_summary.json"], [], None


def _cmd_tw_table(res: Resolver, out: str):
    from .qpii import default_grid, extract_tw, solve_qpii
    beta = res.get_float("beta", 2.0)
    s_min = res.get_float("s-min", -5.0)
    s_max = res.get_float("s-max", 2.0)
    ns = res.get_int("ns", 141)
    terminal = res.get_str("terminal", "sigmoid")
    kappa = beta / 2.0
    field = solve_qpii(kappa, default_grid(kappa, s_min, s_max), terminal=terminal)
    table = extract_tw(field, np.linspace(s_min, s_max, ns))
    mean, sd = table.mean_sd()
    rows = [[s, cdf, int(fl)] for s, cdf, fl in
            zip(table.t_values, table.cdf_values, table.flags)]
    artifacts.write_csv(os.path.join(out, "tw_table.csv"), ["s", "cdf", "flagged"], rows)
    artifacts.write_json(os.path.join(out, "tw_summary.json"),
                         {"beta": beta, "mean": mean, "sd": sd})
    return ["tw_table.csv", "tw_summary.json"], [], None


def _cmd_tw_empirical(res: Resolver, out: str):
    from .qpii import empirical_soft_edge_cdf
    beta = res.get_float("beta", 2.0)
    n_eigen = res.get_int("N", 400)
    n = res.get_count("samples", 100000)
    seed = res.get_int("seed", 0)
    s_min = res.get_float("s-min", -5.0)
    s_max = res.get_float("s-max", 2.0)
    ns = res.get_int("ns", 141)
    table = empirical_soft_edge_cdf(beta, n_eigen, n, seed,
                                    np.linspace(s_min, s_max, ns))
    rows = [[s, c, e] for s, c, e in
            zip(table.t_values, table.cdf_values, table.stderr)]
    artifacts.write_csv(os.path.join(out, "tw_empirical.csv"),
                        ["s", "cdf", "stderr"], rows)
    return ["tw_empirical.csv"], [], seed


def _pole_setup(res: Resolver):
    from .poles import demo_state, integrate_poles
    kappa = res.get_int("kappa", 2)
    radius = res.get_float("radius", 0.4)
    center = complex(res.get_str("center", "1.2j"))
    qdot_scale = res.get_float("qdot-scale", 0.1)
    state0 = demo_state(kappa, radius=radius, center=center, qdot_scale=qdot_scale)
    return state0, integrate_poles


def _cmd_poles_run(res: Resolver, out: str):
    from .poles import first_integrals
    state0, integrate_poles = _pole_setup(res)
    t_final = res.get_float("t-final", 3.0)
    n_states = res.get_int("n-states", 31)
    tol = res.get_float("tol", 1e-8)
    traj = integrate_poles(state0, t_final, n_states=n_states)
    i0 = first_integrals(traj.states[0])
    header = ["t"]
    for k in range(state0.kappa):
        header += [f"Q{k + 1}_re", f"Q{k + 1}_im"]
    header += ["U_re", "U_im", "integral_drift"]
    rows, drift_max = [], 0.0
    for st in traj.states:
        drift = float(np.abs(first_integrals(st) - i0).max())
        drift_max = max(drift_max, drift)
        row = [st.t]
        for q in st.Q:
            row += [q.real, q.imag]
        row += [complex(st.U).real, complex(st.U).imag, drift]
        rows.append(row)
    artifacts.write_csv(os.path.join(out, "poles_traj.csv"), header, rows)
    artifacts.write_json(os.path.join(out, "poles_summary.json"), {
        "kappa": state0.kappa, "t_final": t_final, "n_states": n_states,
        "integral_drift_max": drift_max, "nfev": traj.nfev,
    })
    fails = []
    if drift_max > tol:
        fails.append(f"first-integral drift {drift_max:.3e} exceeds {tol}")
    return ["poles_traj.csv", "poles_summary.json"], fails, None


def _cmd_governing_check(res: Resolver, out: str):
    from .poles import governing_residual
    state0, integrate_poles = _pole_setup(res)
    t = res.get_float("t", 1.3)
    xs = np.array(res.get_floats("x", "0.31,1.7,2.5"))
    fd_step = res.get_float("fd-step", 1e-4)
    tol = res.get_float("tol", 1e-6)
    traj = integrate_poles(state0, t + 0.5)
    r1, r2 = governing_residual(traj, t, xs, fd_step=fd_step)
    rows = [[x.real, abs(a), abs(b)] for x, a, b in zip(xs.astype(complex), r1, r2)]
    artifacts.write_csv(os.path.join(out, "governing.csv"),
                        ["x", "residual_1", "residual_2"], rows)
    worst = max(np.abs(r1).max(), np.abs(r2).max())
    fails = [] if worst <= tol else [f"residual {worst:.3e} exceeds {tol}"]
    return ["governing.csv"], fails, None


def _cmd_hirota_check(res: Resolver, out: str):
    from .poles import hirota_residual
    state0, integrate_poles = _pole_setup(res)
    t = res.get_float("t", 1.3)
    xs = np.array(res.get_floats("x", "0.31,1.7,2.5"))
    tol = res.get_float("tol", 1e-6)
    traj = integrate_poles(state0, t + 0.5)
    r = hirota_residual(traj.state_at(t), xs)
    rows = [[x, abs(v)] for x, v in zip(xs, r)]
    artifacts.write_csv(os.path.join(out, "hirota.csv"), ["x", "residual"], rows)
    worst = float(np.abs(r).max())
    fails = [] if worst <= tol else [f"residual {worst:.3e} exceeds {tol}"]
    return ["hirota.csv"], fails, None


def _cmd_lax_check(res: Resolver, out: str):
    from .lax import lax_pair, zero_curvature_residual
    state0, integrate_poles = _pole_setup(res)
    t = res.get_float("t", 1.3)
    xs = res.get_floats("x", "0.31,1.7,2.5")
    fd_step = res.get_float("fd-step", 1e-3)
    tol = res.get_float("tol", 1e-6)
    traj = integrate_poles(state0, t + 0.5)
    state = traj.state_at(t)
    rows, worst = [], 0.0
    for x in xs:
        zc = zero_curvature_residual(traj, t, x, fd_step=fd_step).max_abs()
        L, B = lax_pair(state, x)
        tr_l = abs(L.trace - (x ** 2 - t))
        tr_b = abs(B.trace - (-x + (complex(state.U) + t ** 2 / 2) / state.kappa))
        rows.append([x, zc, tr_l, tr_b])
        worst = max(worst, zc)
    artifacts.write_csv(os.path.join(out, "lax.csv"),
                        ["x", "zero_curvature", "trace_err_L", "trace_err_B"], rows)
    fails = [] if worst <= tol else [f"zero-curvature residual {worst:.3e} exceeds {tol}"]
    return ["lax.csv"], fails, None


def _cmd_reconstruct(res: Resolver, out: str):
    from .lax import reconstruct, scalar_ode_residual, flow_residual
    state0, integrate_poles = _pole_setup(res)
    t = res.get_float("t", 1.3)
    x_start = res.get_float("x-start", -3.0)
    x_end = res.get_float("x-end", 3.0)
    n_points = res.get_int("n-points", 201)
    init = res.get_complexes("init", "1+0j;0.3+0j")
    if len(init) != 2:
        raise ConfigError("init must hold exactly two complex values")
    tol = res.get_float("tol", 1e-6)
    with_flow = res.get_bool("with-flow", False)
    flow_tol = res.get_float("flow-tol", 1e-4)
    traj = integrate_poles(state0, t + 0.5)
    state = traj.state_at(t)
    sol = reconstruct(state, x_start, x_end, init=tuple(init), n_points=n_points)
    xs_eval = sol.x_grid[5:-5:10]
    resid = float(np.abs(scalar_ode_residual(sol, xs_eval)).max())
    rows = [[x, f.real, f.imag, g.real, g.imag]
            for x, f, g in zip(sol.x_grid, sol.values[0], sol.values[1])]
    artifacts.write_csv(os.path.join(out, "reconstruct.csv"),
                        ["x", "F_re", "F_im", "G_re", "G_im"], rows)
    summary = {"t": t, "kappa": state.kappa, "scalar_residual": resid}
    fails = []
    if resid > tol:
        fails.append(f"scalar residual {resid:.3e} exceeds {tol}")
    if with_flow:
        fr = float(np.abs(flow_residual(traj, t, xs_eval[:5],
                                        x_start=x_start, init=tuple(init))).max())
        summary["flow_residual"] = fr
        if fr > flow_tol:
            fails.append(f"flow residual {fr:.3e} exceeds {flow_tol}")
    artifacts.write_json(os.path.join(out, "reconstruct_summary.json"), summary)
    return ["reconstruct.csv", "reconstruct_summary.json"], fails, None


def _cmd_odeim_spectrum(res: Resolver, out: str):
    from .odeim import SpectralProblem, eigenvalues, fd_oracle_eigs
    alpha = res.get_float("alpha", 2.0)
    l = res.get_float("l", 0.3)
    count = res.get_int("count", 10)
    tol = res.get_float("tol", 1e-5)
    prob = SpectralProblem(alpha=alpha, l=l)
    ev = eigenvalues(prob, count)
    oracle = fd_oracle_eigs(prob, count)
    fails = []
    if ev.size < count:
        fails.append(f"only {ev.size} of {count} levels bracketed")
    diff = np.abs(ev - oracle[: ev.size])
    rows = [[k, ev[k], oracle[k], diff[k]] for k in range(ev.size)]
    artifacts.write_csv(os.path.join(out, "spectrum.csv"),
                        ["level", "determinant_zero", "oracle", "difference"], rows)
    if ev.size and diff.max() > tol:
        fails.append(f"max |zero - oracle| = {diff.max():.3e} exceeds {tol}")
    return ["spectrum.csv"], fails, None


def _cmd_qwronskian_check(res: Resolver, out: str):
    from .odeim import SpectralProblem, quantum_wronskian_residual, spectral_D
    alpha = res.get_float("alpha", 2.0)
    l = res.get_float("l", 0.3)
    n_energies = res.get_int("n-energies", 10)
    seed = res.get_int("seed", 0)
    tol = res.get_float("tol", 1e-6)
    prob = SpectralProblem(alpha=alpha, l=l)
    rng = np.random.default_rng(seed)
    energies = rng.uniform(-2.0, 2.0, n_energies) + 1j * rng.uniform(-1.0, 1.0, n_energies)
    rows, worst = [], 0.0
    for e in energies:
        r = abs(quantum_wronskian_residual(prob, e))
        worst = max(worst, r)
        rows.append([e.real, e.imag, r])
    artifacts.write_csv(os.path.join(out, "qwronskian.csv"),
                        ["E_re", "E_im", "residual"], rows)
    prod = spectral_D(prob, 0.0) * spectral_D(prob.conjugate_l(), 0.0)
    artifacts.write_json(os.path.join(out, "qwronskian_summary.json"), {
        "alpha": alpha, "l": l, "max_residual": worst,
        "zero_energy_product_error": abs(prod - 1.0),
    })
    fails = []
    if worst > tol:
        fails.append(f"max residual {worst:.3e} exceeds {tol}")
    if abs(prod - 1.0) > tol:
        fails.append(f"zero-energy product error {abs(prod - 1.0):.3e} exceeds {tol}")
    return ["qwronskian.csv", "qwronskian_summary.json"], fails, seed


def _cmd_bethe_solve(res: Resolver, out: str):
    from .odeim import bethe_residual, closed_form_first_root, solve_bethe
    alpha = res.get_float("alpha", 2.0)
    l = res.get_float("l", 0.3)
    n_roots = res.get_int("L", 2)
    tol = res.get_float("tol", 1e-10)
    init_raw = res.get_str("init", "")
    if init_raw:
        z0 = np.array([complex(p.strip()) for p in init_raw.split(";") if p.strip()])
        if z0.size != n_roots:
            raise ConfigError(f"init holds {z0.size} values, L = {n_roots}")
    elif n_roots == 1:
        z0 = np.array([1.0 + 0.5j])
    else:
        ang = 2 * np.pi * np.arange(n_roots) / n_roots
        z0 = -1.0 + 0.8j * np.exp(1j * ang)
    roots = solve_bethe(alpha, l, z0, tol=tol)
    rows = [[k + 1, z.real, z.imag] for k, z in enumerate(roots.z)]
    artifacts.write_csv(os.path.join(out, "bethe.csv"), ["k", "z_re", "z_im"], rows)
    summary = {"alpha": alpha, "l": l, "L": n_roots, "residual": roots.residual}
    if n_roots == 1:
        summary["closed_form_gap"] = abs(roots.z[0] - closed_form_first_root(alpha, l))
    artifacts.write_json(os.path.join(out, "bethe_summary.json"), summary)
    fails = []
    if roots.residual > tol:
        fails.append(f"residual {roots.residual:.3e} exceeds {tol}")
    return ["bethe.csv", "bethe_summary.json"], fails, None


_COMMANDS = {
    "sample": _cmd_sample,
    "virasoro-check": _cmd_virasoro_check,
    "bpz-check": _cmd_bpz_check,
    "qpii-solve": _cmd_qpii_solve,
    "tw-table": _cmd_tw_table,
    "tw-empirical": _cmd_tw_empirical,
    "poles-run": _cmd_poles_run,
    "governing-check": _cmd_governing_check,
    "hirota-check": _cmd_hirota_check,
    "lax-check": _cmd_lax_check,
    "reconstruct": _cmd_reconstruct,
    "odeim-spectrum": _cmd_odeim_spectrum,
    "qwronskian-check": _cmd_qwronskian_check,
    "bethe-solve": _cmd_bethe_solve,
}

_FLAGS: dict[str, list[str]] = {
    "sample": ["M", "beta", "a", "samples"],
    "virasoro-check": ["M", "beta", "a", "orders", "samples"],
    "bpz-check": ["operator", "potential", "M", "beta", "masses", "positions",
                  "C", "couplings", "z", "fd-step"],
    "qpii-solve": ["kappa", "s-min", "s-max", "terminal"],
    "tw-table": ["beta", "s-min", "s-max", "ns", "terminal"],
    "tw-empirical": ["beta", "N", "samples", "s-min", "s-max", "ns"],
    "poles-run": ["kappa", "radius", "center", "qdot-scale", "t-final", "n-states"],
    "governing-check": ["kappa", "radius", "center", "qdot-scale", "t", "x", "fd-step"],
    "hirota-check": ["kappa", "radius", "center", "qdot-scale", "t", "x"],
    "lax-check": ["kappa", "radius", "center", "qdot-scale", "t", "x", "fd-step"],
    "reconstruct": ["kappa", "radius", "center", "qdot-scale", "t", "x-start",
                    "x-end", "n-points", "init", "with-flow", "flow-tol"],
    "odeim-spectrum": ["alpha", "l", "count"],
    "qwronskian-check": ["alpha", "l", "n-energies"],
    "bethe-solve": ["alpha", "l", "L", "init"],
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pblab",
                                description="Numerical laboratory CLI")
    sub = p.add_subparsers(dest="command")
    for name, flags in _FLAGS.items():
        sp = sub.add_parser(name)
        for flag in flags:
            sp.add_argument(f"--{flag}", default=None)
        sp.add_argument("--config", default=None)
        sp.add_argument("--seed", default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--tol", default=None)
    rp = sub.add_parser("rerun")
    rp.add_argument("manifest")
    rp.add_argument("--out", default=None)
    return p


def _run_command(command: str, ns: argparse.Namespace, argv: list[str]) -> int:
    flags = {k.replace("-", "_"): v for k, v in vars(ns).items()
             if k not in ("command", "config", "out") and v is not None}
    cp = load_config(ns.config)
    res = Resolver(cp, command, flags)

    out = ns.out
    if out is None and cp.has_option("run", "out"):
        out = cp.get("run", "out")
    if out is None:
        out = "pblab-out"
    os.makedirs(out, exist_ok=True)

    threads = _apply_thread_cap()
    t0 = time.perf_counter()
    names, fails, seed = _COMMANDS[command](res, out)
    wall = time.perf_counter() - t0
    # every artifact carries the hash of the config that produced it;
    # the hash is known only once the command has resolved all its inputs
    sha = artifacts.config_sha(res.resolved)
    for name in names:
        artifacts.embed_config_hash(os.path.join(out, name), sha)
    artifacts.write_manifest(out, command, argv, res.resolved, seed, wall,
                             names, threads)
    for name in names:
        print(os.path.join(out, name))
    if fails:
        for msg in fails:
            print(f"check failed: {msg}", file=sys.stderr)
        return 3
    return 0


def _rerun(manifest_path: str, out: str | None) -> int:
    import json
    if not os.path.exists(manifest_path):
        raise ConfigError(f"manifest not found: {manifest_path}")
    with open(manifest_path) as f:
        man = json.load(f)
    command = man.get("command")
    if command not in _COMMANDS:
        raise ConfigError(f"manifest names unknown command: {command!r}")
    argv = [command]
    for key, val in man.get("resolved_config", {}).items():
        if val is None:
            continue
        # the = form survives values that begin with a dash
        argv.append(f"--{key}={val}")
    if out is None:
        out = os.path.join(os.path.dirname(os.path.abspath(manifest_path)), "rerun")
    argv += [f"--out={out}"]
    threads = man.get("threads")
    if threads is not None:
        _apply_thread_cap(int(threads))
    return main(argv)


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    if not argv:
        parser.print_help()
        return 2
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if ns.command == "rerun":
        try:
            return _rerun(ns.manifest, ns.out)
        except ConfigError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
    try:
        return _run_command(ns.command, ns, argv)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
