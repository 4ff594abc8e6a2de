"""Command-line frontend.

Every run writes its data artifacts (CSV/JSON) plus a manifest holding the
command, full parameter set, seed and tool version; `tribell replay
manifest.json` re-executes the run and reproduces the artifacts byte for
byte. CSV files carry a comment line with the manifest hash. Angles are
degrees on this boundary and radians inside the library.

Exit codes: 0 success, 2 domain error, 3 convergence error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bellcore, closedform, expsim, optimizer, qstate, tomo
from .errors import ConvergenceError, DomainError

DEFAULT_EXPOSURE = 1e6
DEFAULT_RESAMPLES = 200

# Nominal (theta_deg, purity) pairs of the reproduction target table.
TABLE2_ROWS = [
    (45.0, 0.967), (40.0, 0.966), (36.0, 0.955), (30.0, 0.965), (25.0, 0.971),
    (21.0, 0.961), (17.0, 0.971), (10.0, 0.981), (5.0, 0.984), (0.0, 0.994),
]


def _fmt(x: float) -> str:
    return f"{float(x):.6g}"


def _parse_grid(spec: str) -> list[float]:
    try:
        start, stop, step = (float(tok) for tok in spec.split(":"))
    except ValueError as exc:
        raise DomainError(f"grid spec {spec!r} is not start:stop:step") from exc
    if step <= 0 or stop < start:
        raise DomainError(f"bad grid spec {spec!r}")
    n = int(round((stop - start) / step))
    return [start + i * step for i in range(n + 1) if start + i * step <= stop + 1e-9]


def _parse_rows(spec: str) -> list[tuple[float, float]]:
    rows = []
    for tok in spec.split(","):
        try:
            theta, val = tok.split(":")
            rows.append((float(theta), float(val)))
        except ValueError as exc:
            raise DomainError(f"row {tok!r} is not theta:value") from exc
    return rows


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    text = p.read_bytes()
    if p.suffix == ".json":
        return json.loads(text)
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text.decode("utf-8"))


def _optimizer_config(params: dict) -> optimizer.OptimizerConfig:
    doc = dict(_load_config(params.get("config")).get("optimizer", {}))
    doc.setdefault("seed", params.get("seed", 0))
    return optimizer.config_from_mapping(doc)


def _state_from_spec(spec: str, p: float) -> tuple[qstate.DensityMatrix3Q, str]:
    kind, _, rest = spec.partition(":")
    if kind == "gghz":
        psi = qstate.make_gghz(np.deg2rad(float(rest)))
    elif kind == "ms":
        psi = qstate.make_ms(np.deg2rad(float(rest)))
    elif kind == "phi":
        t, x, w = (np.deg2rad(float(v)) for v in rest.split(","))
        psi = qstate.make_phi(t, x, w)
    elif kind == "file":
        doc = json.loads(Path(rest).read_text(encoding="utf-8"))
        if "entries" in doc:
            return qstate.density_from_json(json.dumps(doc)), spec
        psi = qstate.pure_from_json(json.dumps(doc))
    elif kind == "mixed":
        return qstate.DensityMatrix3Q(np.eye(8) / 8.0), spec
    else:
        raise DomainError(f"unknown state spec {spec!r} (gghz:DEG, ms:DEG, phi:T,X,W, file:PATH, mixed)")
    return qstate.depolarize(psi, p), spec


def _manifest_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def _write_csv(path: Path, header: list[str], rows: list[list[str]], mhash: str) -> None:
    lines = [f"# manifest: {mhash}", ",".join(header)]
    lines += [",".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class _Run:
    """Collects outputs for one command and writes the manifest at the end."""

    def __init__(self, command: str, params: dict, manifest_path: str | None = None):
        self.command = command
        self.params = params
        self.outputs: list[str] = []
        self.manifest_path = manifest_path
        self.t0 = time.monotonic()
        self.hash = _manifest_hash(
            {"command": command, "parameters": params, "version": __version__}
        )

    def csv(self, path: str, header: list[str], rows: list[list[str]]) -> None:
        _write_csv(Path(path), header, rows, self.hash)
        self.outputs.append(path)

    def text(self, path: str, content: str) -> None:
        Path(path).write_text(content, encoding="utf-8")
        self.outputs.append(path)

    def finish(self, manifest_path: str | None = None) -> str:
        # duration is informational only and excluded from the hash, so a
        # replayed run reproduces every data artifact byte for byte
        doc = {
            "command": self.command,
            "parameters": self.params,
            "version": __version__,
            "hash": self.hash,
            "outputs": self.outputs,
            "duration_s": round(time.monotonic() - self.t0, 3),
        }
        path = manifest_path or self.manifest_path
        if path is None:
            path = (str(Path(self.outputs[0]).with_suffix("")) + ".manifest.json"
                    if self.outputs else "manifest.json")
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        return path


def cmd_curves(params: dict) -> _Run:
    grid = _parse_grid(params["grid"])
    names = params["inequalities"]
    run = _Run("curves", params)
    columns = {
        "I10": lambda t: closedform.i10_max_exact(t)[0] if t > 0 else 1.0,
        "I96": closedform.i96_max_gghz,
        "I99": closedform.i96_max_gghz,  # identical maximum on the gGHZ family
        "I185": closedform.i185_max_gghz,
    }
    rows = []
    for deg in grid:
        t = np.deg2rad(deg)
        rows.append([_fmt(deg)] + [_fmt(columns[n](t)) for n in names])
    run.csv(params["out"], ["theta_deg"] + [f"{n}_max" for n in names], rows)
    return run


def cmd_pmin(params: dict) -> _Run:
    grid = _parse_grid(params["grid"])
    purity = params.get("purity")
    run = _Run("pmin", params)
    header = ["theta_deg", "p_min", "active_inequality"]
    ptilde = None
    if purity is not None:
        ptilde = float(np.sqrt((8.0 * purity - 1.0) / 7.0))
        header.append("p_min_corrected")
    rows = []
    for deg in grid:
        p, active = closedform.p_min_gghz(np.deg2rad(deg))
        row = [_fmt(deg), _fmt(p), active]
        if ptilde is not None:
            row.append(_fmt(p / ptilde))
        rows.append(row)
    run.csv(params["out"], header, rows)
    return run


_SETTINGS_FOR = {
    "I10": lambda t: closedform.i10_optimal_settings(max(t, 1e-4)),
    "I96": closedform.i96_optimal_settings,
    "I99": closedform.i99_optimal_settings,
    "I185": closedform.i185_optimal_settings_gghz,
}


def _theory_max(name: str, t: float) -> float:
    if name == "I10":
        return closedform.i10_max_exact(t)[0] if t > 0 else 1.0
    if name in ("I96", "I99"):
        return closedform.i96_max_gghz(t)
    return closedform.i185_max_gghz(t)


def cmd_table2(params: dict) -> _Run:
    rows_in = params["rows"]
    exposure, seed = params["exposure"], params["seed"]
    resamples, exact = params["resamples"], params["exact"]
    run = _Run("table2", params)
    names = ("I10", "I96", "I99", "I185")
    header = ["theta_deg", "purity", "p_tilde"]
    header += [f"{n}_theory" for n in names]
    for n in names:
        header += [f"{n}_meas", f"{n}_err"]
    out_rows = []
    for row_idx, (deg, purity) in enumerate(rows_in):
        if purity < 1.0 / 8.0:
            raise DomainError(f"purity {purity} below 1/8")
        t = np.deg2rad(deg)
        ptilde = float(np.sqrt((8.0 * purity - 1.0) / 7.0))
        rho = qstate.depolarize(qstate.make_gghz(t), ptilde)
        row = [_fmt(deg), _fmt(purity), _fmt(ptilde)]
        row += [_fmt(ptilde * _theory_max(n, t)) for n in names]
        for col_idx, name in enumerate(names):
            ineq = bellcore.builtin(name)
            settings = _SETTINGS_FOR[name](t)
            if exact:
                value, exp_run = expsim.measure_inequality_exact(rho, ineq, settings, exposure)
            else:
                sub = int(np.random.SeedSequence(seed, spawn_key=(row_idx, col_idx)).generate_state(1)[0])
                value, exp_run = expsim.measure_inequality(rho, ineq, settings, exposure, sub)
            _, err = expsim.monte_carlo_errors(exp_run, ineq, resamples, seed)
            row += [_fmt(value), _fmt(err)]
        out_rows.append(row)
    run.csv(params["out"], header, out_rows)
    return run


def _tomo_rows(rows_in, exposure, seed, exact, tomo_cfg=None):
    """Shared tomography pipeline: (csv rows, reconstructions, raw datasets)."""
    tomo_cfg = tomo_cfg or {}
    # noisier exposures need more fixed-point iterations than the library
    # default to reach the step tolerance; overridable via [tomo] config
    max_iterations = int(tomo_cfg.get("max_iterations", 30000))
    tolerance = float(tomo_cfg.get("tolerance", 1e-8))
    tset = tomo.pauli_set()
    out_rows, results, datasets = [], [], []
    for row_idx, (deg, p) in enumerate(rows_in):
        rho = qstate.depolarize(qstate.make_gghz(np.deg2rad(deg)), p)
        if exact:
            data = tomo.exact_counts(rho, tset, exposure)
        else:
            sub = int(np.random.SeedSequence(seed, spawn_key=(row_idx,)).generate_state(1)[0])
            data = tomo.simulate_tomography(rho, tset, exposure, sub)
        result = tomo.reconstruct_ml(data, max_iterations=max_iterations, tolerance=tolerance)
        if not result.converged:
            raise ConvergenceError(f"tomography reconstruction did not converge for theta={deg}")
        rep = tomo.state_report(result)
        out_rows.append([
            _fmt(deg), _fmt(np.rad2deg(rep.theta_opt)), _fmt(rep.fidelity), _fmt(rep.purity),
            _fmt(rep.fidelity_max), _fmt(rep.tri_negativity),
        ])
        results.append(result)
        datasets.append(data)
    return out_rows, results, datasets


_TOMO_HEADER = ["theta_deg", "theta_opt_deg", "F", "P", "F_max", "N_tri"]


def _reconstruction_maxima_errors(data, base_reports, cfg, resamples, seed, tomo_cfg):
    """Error bars on the reconstructed-state maxima by Poisson resampling.

    Each resample redraws every tomography count, re-reconstructs, and
    either re-runs the full maximization (cfg.reoptimize_per_sample) or
    re-evaluates at the base run's optimal settings.
    """
    max_iterations = int(tomo_cfg.get("max_iterations", 30000))
    values = {name: [] for name in bellcore.BUILTIN_NAMES}
    for r in range(resamples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7001, r)))
        resampled = [
            expsim.CountsRecord(counts=rng.poisson(rec.counts).astype(float),
                                setting=rec.setting, exposure=rec.exposure)
            for rec in data
        ]
        result = tomo.reconstruct_ml(resampled, max_iterations=max_iterations)
        for name in bellcore.BUILTIN_NAMES:
            if cfg.reoptimize_per_sample:
                rep = optimizer.maximize(result.rho, bellcore.builtin(name), cfg)
                values[name].append(rep.value)
            else:
                values[name].append(
                    bellcore.evaluate(result.rho, bellcore.builtin(name),
                                      base_reports[name].settings)
                )
    return {
        name: (float(np.mean(v)), float(np.std(v, ddof=1)))
        for name, v in values.items()
    }


def cmd_tomo(params: dict) -> _Run:
    run = _Run("tomo", params)
    tomo_cfg = _load_config(params.get("config")).get("tomo", {})
    rows, results, _ = _tomo_rows(params["rows"], params["exposure"], params["seed"],
                                  params["exact"], tomo_cfg)
    run.csv(params["out"], _TOMO_HEADER, rows)
    if params.get("save_states"):
        stem = Path(params["out"]).with_suffix("")
        for (deg, _), result in zip(params["rows"], results):
            run.text(f"{stem}_state_{deg:g}.json", qstate.density_to_json(result.rho) + "\n")
    return run


def cmd_experiment(params: dict) -> _Run:
    theta_deg, p = params["theta"], params["p"]
    exposure, seed, exact = params["exposure"], params["seed"], params["exact"]
    resamples = params["resamples"]
    outdir = Path(params["out_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    run = _Run("experiment", params, manifest_path=str(outdir / "manifest.json"))
    stage = "prepare"
    try:
        t = np.deg2rad(theta_deg)
        rho_true = qstate.depolarize(qstate.make_gghz(t), p)

        stage = "tomography"
        tomo_cfg = _load_config(params.get("config")).get("tomo", {})
        table_rows, results, datasets = _tomo_rows([(theta_deg, p)], exposure, seed, exact,
                                                   tomo_cfg)
        rho_rec = results[0].rho
        run.csv(str(outdir / "state_report.csv"), _TOMO_HEADER, table_rows)
        run.text(str(outdir / "tomography_data.json"), expsim.records_to_json(datasets[0]) + "\n")
        run.text(str(outdir / "reconstructed_state.json"), qstate.density_to_json(rho_rec) + "\n")

        stage = "optimize"
        cfg = _optimizer_config(params)
        reports = optimizer.maximize_on_reconstruction(rho_rec, cfg)
        doc = {name: json.loads(optimizer.report_to_json(rep)) for name, rep in reports.items()}
        recon_resamples = params.get("recon_resamples", 0)
        if recon_resamples:
            errs = _reconstruction_maxima_errors(
                datasets[0], reports, cfg, recon_resamples, seed, tomo_cfg
            )
            for name, (mean, sd) in errs.items():
                doc[name]["mc_mean"] = mean
                doc[name]["mc_stddev"] = sd
        run.text(str(outdir / "reconstruction_maxima.json"), json.dumps(doc, indent=2) + "\n")

        stage = "measure"
        rows = []
        for col_idx, name in enumerate(("I10", "I96", "I99", "I185")):
            ineq = bellcore.builtin(name)
            settings = _SETTINGS_FOR[name](t)
            if exact:
                value, exp_run = expsim.measure_inequality_exact(rho_true, ineq, settings, exposure)
            else:
                sub = int(np.random.SeedSequence(seed, spawn_key=(101, col_idx)).generate_state(1)[0])
                value, exp_run = expsim.measure_inequality(rho_true, ineq, settings, exposure, sub)
            _, err = expsim.monte_carlo_errors(exp_run, ineq, resamples, seed)
            rows.append([name, _fmt(value), _fmt(err)])
            run.text(str(outdir / f"run_{name}.json"), expsim.run_to_json(exp_run) + "\n")
        run.csv(str(outdir / "direct_measurements.csv"), ["inequality", "value", "stderr"], rows)
    except Exception as exc:
        raise type(exc)(f"[stage: {stage}] {exc}") from exc
    return run


def cmd_optimize(params: dict) -> _Run:
    run = _Run("optimize", params)
    rho, _ = _state_from_spec(params["state"], params["p"])
    name = params["ineq"]
    ineq = bellcore.builtin(name) if name in bellcore.BUILTIN_NAMES else bellcore.load_inequality(name)
    report = optimizer.maximize(rho, ineq, _optimizer_config(params))
    run.text(params["out"], optimizer.report_to_json(report) + "\n")
    print(f"{ineq.name}: {report.value:.9f}")
    return run


def cmd_lhv_check(params: dict) -> _Run:
    run = _Run("lhv-check", params)
    rows = []
    for name in bellcore.BUILTIN_NAMES:
        bound = bellcore.lhv_bound(bellcore.builtin(name))
        rows.append([name, f"{bound:.12f}"])
        print(f"{name}: LHV bound {bound:.12f}")
    for path in params["paths"]:
        ineq = bellcore.load_inequality(path)  # raises DomainError if bound != 1
        bound = bellcore.lhv_bound(ineq)
        rows.append([ineq.name, f"{bound:.12f}"])
        print(f"{ineq.name} ({path}): LHV bound {bound:.12f}")
    if params.get("out"):
        run.csv(params["out"], ["inequality", "lhv_bound"], rows)
    return run


_COMMANDS = {
    "curves": cmd_curves,
    "pmin": cmd_pmin,
    "table2": cmd_table2,
    "tomo": cmd_tomo,
    "experiment": cmd_experiment,
    "optimize": cmd_optimize,
    "lhv-check": cmd_lhv_check,
}


def run_command(command: str, params: dict, manifest_path: str | None = None) -> str:
    run = _COMMANDS[command](params)
    return run.finish(manifest_path)


def cmd_replay(manifest_file: str) -> str:
    doc = json.loads(Path(manifest_file).read_text(encoding="utf-8"))
    if doc.get("version") != __version__:
        print(f"warning: manifest version {doc.get('version')} != {__version__}", file=sys.stderr)
    return run_command(doc["command"], doc["parameters"], manifest_file)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tribell", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"tribell {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, exposure=False):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="TOML/JSON file with [optimizer] and [tomo] tables")
        p.add_argument("--exact", action="store_true",
                       help="replace Poisson sampling with exact expected counts")
        if exposure:
            p.add_argument("--exposure", type=float, default=DEFAULT_EXPOSURE)
            p.add_argument("--resamples", type=int, default=DEFAULT_RESAMPLES,
                           help="Monte Carlo resamples for error bars")

    p = sub.add_parser("curves", help="closed-form maxima vs theta (CSV)")
    p.add_argument("--grid", default="0:45:0.5", help="theta grid start:stop:step, degrees")
    p.add_argument("--inequalities", default="I10,I96,I99,I185")
    p.add_argument("--out", default="curves.csv")
    common(p)

    p = sub.add_parser("pmin", help="noise threshold vs theta (CSV)")
    p.add_argument("--grid", default="0:45:0.5")
    p.add_argument("--purity", type=float, default=None,
                   help="add the purity-corrected threshold column")
    p.add_argument("--out", default="pmin.csv")
    common(p)

    p = sub.add_parser("table2", help="theory vs synthetic measurement per (theta, purity) row")
    p.add_argument("--rows", default=",".join(f"{t}:{pu}" for t, pu in TABLE2_ROWS),
                   help="comma list of theta_deg:purity pairs")
    p.add_argument("--out", default="table2.csv")
    common(p, exposure=True)

    p = sub.add_parser("tomo", help="synthetic tomography -> state characterization CSV")
    p.add_argument("--rows", default="45:0.98097", help="comma list of theta_deg:p pairs")
    p.add_argument("--out", default="tomo.csv")
    p.add_argument("--save-states", action="store_true",
                   help="also write each reconstructed density matrix as JSON")
    common(p, exposure=True)

    p = sub.add_parser("experiment", help="end-to-end synthetic run into a directory")
    p.add_argument("--theta", type=float, required=True, help="gGHZ angle, degrees")
    p.add_argument("--p", type=float, required=True, help="state weight in the noise mixture")
    p.add_argument("--out-dir", default="experiment_out")
    p.add_argument("--recon-resamples", type=int, default=0,
                   help="Monte Carlo resamples for reconstruction-maxima error bars "
                        "(0 = point values only; re-optimizes per sample unless the "
                        "optimizer config says otherwise)")
    common(p, exposure=True)

    p = sub.add_parser("optimize", help="maximize one inequality over settings")
    p.add_argument("--state", default="gghz:45",
                   help="gghz:DEG | ms:DEG | phi:T,X,W | file:PATH | mixed")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--ineq", default="I185", help="builtin name or JSON path")
    p.add_argument("--out", default="report.json")
    common(p)

    p = sub.add_parser("lhv-check", help="revalidate inequality tables by enumeration")
    p.add_argument("paths", nargs="*", help="extra inequality JSON files")
    p.add_argument("--out", default=None)
    common(p)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    return ap


def _params_from_args(args: argparse.Namespace) -> dict:
    params = {k: v for k, v in vars(args).items() if k != "command"}
    if "rows" in params:
        params["rows"] = _parse_rows(params["rows"])
    if "inequalities" in params:
        names = params["inequalities"].split(",")
        for n in names:
            if n not in bellcore.BUILTIN_NAMES:
                raise DomainError(f"unknown inequality {n!r}")
        params["inequalities"] = names
    return params


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            cmd_replay(args.manifest)
        else:
            manifest = run_command(args.command, _params_from_args(args))
            print(f"manifest: {manifest}", file=sys.stderr)
        return 0
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
