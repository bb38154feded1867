"""Batch front end: JSON job configs in, CSV/JSON artifacts out.

Usage: qopt <command> --config job.json --out-dir out/ [--threads K] [--verbose]

Commands: pnd, wigner, qfunc, evolve, epsilon, cat, tomo-forward, tomo-invert,
verify.  Outputs are byte-stable across runs: floats are written with their
shortest round-trip decimal (Python repr), JSON keys are sorted, and nothing
depends on wall-clock time or randomized defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cats import CatState, cat_from_dict, cat_moments, cat_pnd, cat_q_eval, cat_wigner_eval
from .dynamics import (evolve_gaussian, hamiltonian_from_dict, integrate_symplectic_flow,
                       parametric_oscillator)
from .gaussian import (QREP_CONVENTION, GaussianState, make_coherent, make_squeezed_vacuum,
                       make_thermal_oscillator, photon_pnd_table, q_eval, state_from_dict,
                       wigner_eval)
from .parametric import profile_from_dict, solve_epsilon
from .tomography import (forward_marginal_numeric, gaussian_sinogram, inverse_radon,
                         sinogram_from_csv, wigner_grid_from_callable)
from .verification import run_verification

COMMANDS = ("pnd", "wigner", "qfunc", "evolve", "epsilon", "cat",
            "tomo-forward", "tomo-invert", "verify")


class ConfigError(ValueError):
    """Configuration problem, carrying the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class JobConfig:
    command: str
    options: dict


def _require(options: dict, field: str, path: str):
    if field not in options:
        raise ConfigError(f"{path}.{field}" if path else field, "missing required field")
    return options[field]


def _parse_grid(obj, path: str) -> np.ndarray:
    if isinstance(obj, dict):
        for key in ("min", "max", "num"):
            _require(obj, key, path)
        if int(obj["num"]) < 2:
            raise ConfigError(f"{path}.num", "grid needs at least two points")
        if not obj["min"] < obj["max"]:
            raise ConfigError(f"{path}.min", "grid bounds must satisfy min < max")
        return np.linspace(float(obj["min"]), float(obj["max"]), int(obj["num"]))
    grid = np.asarray(obj, dtype=float)
    if grid.ndim != 1 or grid.shape[0] == 0:
        raise ConfigError(path, "grid must be a nonempty list of numbers")
    if grid.shape[0] > 1 and np.any(np.diff(grid) <= 0):
        raise ConfigError(path, "grid values must be strictly increasing")
    return grid


def _parse_complex(obj, path: str) -> complex:
    if isinstance(obj, (int, float)):
        return complex(obj)
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return complex(float(obj[0]), float(obj[1]))
    raise ConfigError(path, "expected a number or an [re, im] pair")


def _parse_state(obj, path: str):
    """Gaussian-family or cat state from its JSON spec."""
    if not isinstance(obj, dict):
        raise ConfigError(path, "state must be an object")
    kind = obj.get("kind", "gaussian" if "disp" in obj else None)
    if kind is None:
        raise ConfigError(f"{path}.kind", "missing state kind")
    try:
        if kind == "gaussian":
            return state_from_dict({k: v for k, v in obj.items() if k != "kind"})
        if kind == "coherent":
            alpha = _require(obj, "alpha", path)
            if isinstance(alpha, list) and alpha and isinstance(alpha[0], (list, tuple)):
                amps = [_parse_complex(a, f"{path}.alpha[{i}]") for i, a in enumerate(alpha)]
            else:
                amps = [_parse_complex(alpha, f"{path}.alpha")]
            return make_coherent(amps)
        if kind == "thermal":
            return make_thermal_oscillator(float(_require(obj, "temperature", path)),
                                           float(obj.get("omega", 1.0)))
        if kind == "squeezed_vacuum":
            return make_squeezed_vacuum(float(_require(obj, "r", path)))
        if kind == "cat":
            _require(obj, "A", path)
            _require(obj, "parity", path)
            return cat_from_dict(obj)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(path, str(exc)) from exc
    raise ConfigError(f"{path}.kind", f"unknown state kind {kind!r}")


_REQUIRED = {
    "pnd": ("state",),
    "wigner": ("state", "grid"),
    "qfunc": ("state", "grid"),
    "evolve": ("state", "hamiltonian", "t_end"),
    "epsilon": ("profile", "t_end"),
    "cat": ("state",),
    "tomo-forward": ("state",),
    "tomo-invert": ("sinogram", "grid"),
    "verify": (),
}


def parse_config(text: str, command: str | None = None) -> JobConfig:
    """Validate a JSON job description; errors carry the offending field path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be an object")
    cmd = doc.get("command", command)
    if cmd is None:
        raise ConfigError("command", "missing command")
    if cmd not in COMMANDS:
        raise ConfigError("command", f"unknown command {cmd!r}; expected one of {COMMANDS}")
    if command is not None and cmd != command:
        raise ConfigError("command", f"config says {cmd!r} but {command!r} was invoked")
    options = {k: v for k, v in doc.items() if k != "command"}
    for field in _REQUIRED[cmd]:
        _require(options, field, "")
    # eagerly validate the pieces shared across commands
    if "state" in options and cmd in _REQUIRED and "state" in _REQUIRED[cmd]:
        _parse_state(options["state"], "state")
    if "grid" in options and cmd in ("wigner", "qfunc", "tomo-invert"):
        grid = options["grid"]
        if not isinstance(grid, dict):
            raise ConfigError("grid", "must be an object with 'q' and 'p'")
        _parse_grid(_require(grid, "q", "grid"), "grid.q")
        _parse_grid(_require(grid, "p", "grid"), "grid.p")
    return JobConfig(cmd, options)


def _fmt(value) -> str:
    return repr(float(value))


def _csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, (int, np.integer)) else str(int(v))
                              for v in row))
    return "\n".join(lines) + "\n"


def _chunked_eval(fn, q_grid, p_grid, threads: int) -> np.ndarray:
    """Evaluate fn on the (q, p) product grid, optionally splitting rows across threads."""
    qq, pp = np.meshgrid(q_grid, p_grid, indexing="ij")
    if threads <= 1:
        return fn(qq, pp)
    chunks = np.array_split(np.arange(q_grid.shape[0]), threads)
    out = np.empty_like(qq)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [(idx, pool.submit(fn, qq[idx], pp[idx])) for idx in chunks if idx.size]
        for idx, fut in futures:
            out[idx] = fut.result()
    return out


def _require_one_mode(state, path):
    if state.n_modes != 1:
        raise ConfigError(path, "phase-space grids are defined for one-mode states")
    return state


def _state_wigner_fn(state):
    if isinstance(state, CatState):
        return lambda q, p: cat_wigner_eval(state, q[..., np.newaxis], p[..., np.newaxis])
    return lambda q, p: wigner_eval(state, np.stack([p, q], axis=-1))


def _job_pnd(options, threads):
    state = _parse_state(options["state"], "state")
    if isinstance(state, CatState):
        max_total = int(options.get("max_total", 32))
        rows = []
        for idx in _total_degree_indices(state.n_modes, max_total):
            rows.append(list(idx) + [cat_pnd(state, idx)])
        cumulative = sum(r[-1] for r in rows)
        meta = {"cumulative_probability": cumulative, "max_total": max_total}
    else:
        table = photon_pnd_table(state,
                                 mass_tol=float(options.get("mass_tol", 1e-10)),
                                 degree_cap_per_mode=int(options.get("degree_cap", 64)))
        rows = [list(idx) + [p] for idx, p in sorted(table.probabilities.items())]
        meta = {"cumulative_probability": table.cumulative,
                "max_total_degree": table.max_total_degree,
                "cap_hit": table.cap_hit}
    n_modes = len(rows[0]) - 1
    header = [f"n{j + 1}" for j in range(n_modes)] + ["probability"]
    return {"pnd.csv": _csv(header, rows)}, meta


def _total_degree_indices(n_modes, max_total):
    def shells(remaining, depth):
        if depth == n_modes - 1:
            yield (remaining,)
            return
        for k in range(remaining + 1):
            for tail in shells(remaining - k, depth + 1):
                yield (k,) + tail

    for total in range(max_total + 1):
        yield from shells(total, 0)


def _job_wigner(options, threads):
    state = _require_one_mode(_parse_state(options["state"], "state"), "state")
    q_grid = _parse_grid(options["grid"]["q"], "grid.q")
    p_grid = _parse_grid(options["grid"]["p"], "grid.p")
    values = _chunked_eval(_state_wigner_fn(state), q_grid, p_grid, threads)
    rows = [(q_grid[i], p_grid[j], values[i, j])
            for i in range(q_grid.shape[0]) for j in range(p_grid.shape[0])]
    artifacts = {"wigner.csv": _csv(["q", "p", "value"], rows)}
    if options.get("plot", False):
        artifacts["wigner.gp"] = _plot_script("wigner.csv", q_grid.shape[0], p_grid.shape[0],
                                              "Wigner density")
    return artifacts, {"negative_fraction": float(np.mean(values < 0.0))}


def _job_qfunc(options, threads):
    state = _require_one_mode(_parse_state(options["state"], "state"), "state")
    q_grid = _parse_grid(options["grid"]["q"], "grid.q")
    p_grid = _parse_grid(options["grid"]["p"], "grid.p")

    if isinstance(state, CatState):
        fn = lambda q, p: cat_q_eval(state, ((q + 1j * p) / math.sqrt(2))[..., np.newaxis])
    else:
        fn = lambda q, p: q_eval(state, ((q + 1j * p) / math.sqrt(2))[..., np.newaxis])
    values = _chunked_eval(fn, q_grid, p_grid, threads)
    rows = [(q_grid[i], p_grid[j], values[i, j])
            for i in range(q_grid.shape[0]) for j in range(p_grid.shape[0])]
    artifacts = {"qfunc.csv": _csv(["q", "p", "value"], rows)}
    if options.get("plot", False):
        artifacts["qfunc.gp"] = _plot_script("qfunc.csv", q_grid.shape[0], p_grid.shape[0],
                                             "Husimi density")
    return artifacts, {"beta_convention": "beta = (q + i p) / sqrt(2)"}


def _job_evolve(options, threads):
    state = _parse_state(options["state"], "state")
    if isinstance(state, CatState):
        raise ConfigError("state.kind", "evolve requires a Gaussian-family state")
    ham_doc = options["hamiltonian"]
    if isinstance(ham_doc, dict) and ham_doc.get("preset") == "parametric":
        profile = profile_from_dict(_require(ham_doc, "omega_squared", "hamiltonian"))
        ham = parametric_oscillator(profile, mass=float(ham_doc.get("mass", 1.0)))
    else:
        try:
            ham = hamiltonian_from_dict(ham_doc)
        except ValueError as exc:
            raise ConfigError("hamiltonian", str(exc)) from exc
    if 2 * ham.n_modes != state.mean.shape[0]:
        raise ConfigError("hamiltonian", "mode count does not match the state")
    t_end = float(options["t_end"])
    num = int(options.get("num", 51))
    tol = float(options.get("tol", 1e-9))
    flow = integrate_symplectic_flow(ham, t_end, tol)
    ts = np.linspace(0.0, t_end, num)
    dim = 2 * ham.n_modes

    state_rows, flow_rows = [], []
    for t in ts:
        sample = flow.at(t)
        st = evolve_gaussian(state, sample)
        state_rows.append([t] + list(st.mean) + list(st.disp.ravel()))
        flow_rows.append([t] + list(sample.lam.ravel()) + list(sample.delta))
    mean_cols = [f"mean_{i}" for i in range(dim)]
    disp_cols = [f"disp_{i}{j}" for i in range(dim) for j in range(dim)]
    lam_cols = [f"lam_{i}{j}" for i in range(dim) for j in range(dim)]
    delta_cols = [f"delta_{i}" for i in range(dim)]
    artifacts = {
        "evolve.csv": _csv(["t"] + mean_cols + disp_cols, state_rows),
        "flow.csv": _csv(["t"] + lam_cols + delta_cols, flow_rows),
    }
    return artifacts, {"tol": tol, "symplectic_defect": flow.max_symplectic_defect()}


def _job_epsilon(options, threads):
    try:
        profile = profile_from_dict(options["profile"])
    except ValueError as exc:
        raise ConfigError("profile", str(exc)) from exc
    t_end = float(options["t_end"])
    num = int(options.get("num", 201))
    tol = float(options.get("tol", 1e-9))
    traj = solve_epsilon(profile, t_end, tol)
    rows = []
    for t in np.linspace(0.0, t_end, num):
        eps, epsdot = traj.at(t)
        rows.append([t, eps.real, eps.imag, epsdot.real, epsdot.imag])
    header = ["t", "re_eps", "im_eps", "re_epsdot", "im_epsdot"]
    return ({"epsilon.csv": _csv(header, rows)},
            {"tol": tol, "wronskian_defect": traj.wronskian_defect,
             "profile_kind": profile.kind})


def _job_cat(options, threads):
    state = _parse_state(options["state"], "state")
    if not isinstance(state, CatState):
        raise ConfigError("state.kind", "cat command requires a cat state")
    max_total = int(options.get("max_total", 32))
    pnd_rows = [list(idx) + [cat_pnd(state, idx)]
                for idx in _total_degree_indices(state.n_modes, max_total)]
    moments = cat_moments(state)
    moment_rows = [[j, moments.mean_photon[j], moments.number_covariance[j, j],
                    moments.mandel_q[j]] for j in range(state.n_modes)]
    header = [f"n{j + 1}" for j in range(state.n_modes)] + ["probability"]
    artifacts = {
        "cat_pnd.csv": _csv(header, pnd_rows),
        "cat_moments.csv": _csv(["mode", "mean_photon", "variance", "mandel_q"], moment_rows),
    }
    meta = {"cumulative_probability": sum(r[-1] for r in pnd_rows), "max_total": max_total}
    return artifacts, meta


def _job_tomo_forward(options, threads):
    state = _require_one_mode(_parse_state(options["state"], "state"), "state")
    n_angles = int(options.get("n_angles", 180))
    x_grid = _parse_grid(options.get("x", {"min": -12.0, "max": 12.0, "num": 257}), "x")
    thetas = np.arange(n_angles) * math.pi / n_angles
    method = options.get("method", "exact" if isinstance(state, GaussianState) else "numeric")
    if method == "exact":
        if not isinstance(state, GaussianState) or state.n_modes != 1:
            raise ConfigError("method", "exact marginals need a one-mode Gaussian state")
        sino = gaussian_sinogram(state, thetas, x_grid)
    elif method == "numeric":
        num = int(options.get("wigner_samples", 513))
        span = float(options.get("wigner_span", max(abs(x_grid[0]), abs(x_grid[-1]))))
        inner = np.linspace(-span, span, num)
        grid = wigner_grid_from_callable(_state_wigner_fn(state), inner, inner)
        sino = forward_marginal_numeric(grid, thetas, x_grid)
    else:
        raise ConfigError("method", f"unknown method {method!r}")
    rows = [(thetas[i], x_grid[j], sino.values[i, j])
            for i in range(sino.n_angles) for j in range(x_grid.shape[0])]
    meta = {"n_angles": n_angles, "method": method,
            "max_normalization_defect": float(sino.normalization_defects.max())}
    return {"sinogram.csv": _csv(["theta", "x", "value"], rows)}, meta


def _job_tomo_invert(options, threads):
    sino_path = Path(options["sinogram"])
    if not sino_path.exists():
        raise ConfigError("sinogram", f"file {sino_path} does not exist")
    sino = sinogram_from_csv(sino_path)
    q_grid = _parse_grid(options["grid"]["q"], "grid.q")
    p_grid = _parse_grid(options["grid"]["p"], "grid.p")
    reg_s = float(options.get("reg_s", 1e-2))
    grid = inverse_radon(sino, q_grid, p_grid, reg_s=reg_s)
    rows = [(q_grid[i], p_grid[j], grid.values[i, j])
            for i in range(q_grid.shape[0]) for j in range(p_grid.shape[0])]
    meta = {"reg_s": reg_s, "n_angles": sino.n_angles, "reconstructed_mass": grid.mass()}
    return {"wigner_reconstructed.csv": _csv(["q", "p", "value"], rows)}, meta


def _job_verify(options, threads):
    results = run_verification()
    all_passed = all(r["passed"] for r in results)
    doc = {"passed": all_passed, "checks": results, "version": __version__}
    return {"verify.json": json.dumps(doc, indent=2, sort_keys=True) + "\n"}, {
        "passed": all_passed, "n_checks": len(results)}


def _plot_script(csv_name: str, n_q: int, n_p: int, title: str) -> str:
    return "\n".join([
        'set datafile separator ","',
        "set view map",
        f"set dgrid3d {n_q},{n_p}",
        "set pm3d interpolate 2,2",
        f'set title "{title}"',
        f'splot "{csv_name}" every ::1 using 1:2:3 with pm3d notitle',
        "pause -1",
    ]) + "\n"


_JOBS = {
    "pnd": _job_pnd,
    "wigner": _job_wigner,
    "qfunc": _job_qfunc,
    "evolve": _job_evolve,
    "epsilon": _job_epsilon,
    "cat": _job_cat,
    "tomo-forward": _job_tomo_forward,
    "tomo-invert": _job_tomo_invert,
    "verify": _job_verify,
}


def execute_job(cfg: JobConfig, threads: int = 1) -> dict[str, str]:
    """Run a validated job; returns {filename: text content} artifacts."""
    artifacts, meta = _JOBS[cfg.command](cfg.options, max(1, threads))
    sidecar = {
        "command": cfg.command,
        "config": cfg.options,
        "version": __version__,
        "qrep_convention": QREP_CONVENTION,
        "numeric_format": "shortest round-trip decimal (repr)",
    }
    sidecar.update(meta)
    artifacts[f"{cfg.command}.meta.json"] = json.dumps(
        sidecar, indent=2, sort_keys=True, default=str) + "\n"
    return artifacts


def write_output(artifacts: dict[str, str], out_dir) -> list[Path]:
    """Write artifacts under out_dir; byte-stable for identical inputs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(artifacts):
        path = out_dir / name
        path.write_text(artifacts[name], encoding="utf-8")
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qopt",
        description="Phase-space functions, photon statistics, and evolution "
                    "of Gaussian, squeezed, and cat states of light.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON job description (required except for verify)")
    parser.add_argument("--out-dir", default="out", help="output directory (default: out)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for grid evaluations")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        if args.config is None:
            if args.command != "verify":
                raise ConfigError("--config", "a config file is required for this command")
            text = "{}"
        else:
            path = Path(args.config)
            if not path.exists():
                raise ConfigError("--config", f"file {path} does not exist")
            text = path.read_text(encoding="utf-8")
        cfg = parse_config(text, args.command)
        artifacts = execute_job(cfg, threads=args.threads)
        written = write_output(artifacts, args.out_dir)
    except ConfigError as exc:
        json.dump({"error": {"kind": "config", "field": exc.field, "message": str(exc)}},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit nonzero
        json.dump({"error": {"kind": "execution", "command": args.command,
                             "type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 1

    if args.verbose:
        for path in written:
            print(path)
    if args.command == "verify":
        doc = json.loads(artifacts["verify.json"])
        for check in doc["checks"]:
            status = "pass" if check["passed"] else "FAIL"
            print(f"[{status}] {check['name']}: {check['measured']:.3e} "
                  f"(tolerance {check['tolerance']:.1e})")
        if not doc["passed"]:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
