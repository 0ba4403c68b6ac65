"""Command-line runner: ``nonherm {params,sample,kernel,verify}``.

Every command reads an optional JSON config (``--config``); command-line
flags override the matching config keys. Outputs go to ``--out`` and carry
the config hash, seed and package version.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io, kernels, params, stats, verify
from .ensembles import TAGS, ChainConfig, SamplerWarning, sample_spectra

EXIT_CONFIG = 2
EXIT_SAMPLER = 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    ensemble: str = "elliptic"
    tau: float = 0.0
    gamma: float = 0.0
    k_p: float = 1.0
    n: int = 2
    t: float = 0.0
    fixed_trace: bool = False
    draws: int = 1
    chains: int = 1
    step_size: float = 0.05
    burn_in: int = 1000
    thin: int = 1
    target_accept: float = 0.3
    method: str = "radial"
    backend: str = "lapack"
    format: str = "bin"
    seed: int = 0
    threads: int = 1
    out: str = "out"
    # kernel tabulation
    regime: str = "finite_n_sum"
    alpha: float | None = None
    x_global: float = 0.0
    c: float | None = None
    grid: dict = field(default_factory=lambda: {"re": [-1.0, 1.0, 5], "im": [-1.0, 1.0, 5]})
    pairs: object = "diagonal"
    # histograms written next to sampled spectra
    hist: dict | None = None
    marginal: list | None = None
    suites: list = field(default_factory=list)

    def model(self):
        return params.ModelParams(self.tau, self.gamma, self.k_p, self.n, self.t)

    def chain(self):
        return ChainConfig(self.step_size, self.burn_in, self.thin, self.target_accept, self.method)

    def hashable(self):
        d = dataclasses.asdict(self)
        for k in ("out", "threads", "seed"):
            d.pop(k)
        return d


def _edges(spec, name):
    if not (isinstance(spec, list) and len(spec) == 3 and int(spec[2]) >= 1):
        raise ConfigError(f"{name} must be [lo, hi, count]")
    return np.linspace(float(spec[0]), float(spec[1]), int(spec[2]) + 1)


def load_config(path=None, overrides=None):
    """Read and validate a config; unknown keys are an error."""
    raw = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        cfg = ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.ensemble not in TAGS:
        raise ConfigError(f"ensemble must be one of {', '.join(TAGS)}")
    if cfg.regime not in kernels.REGIMES:
        raise ConfigError(f"regime must be one of {', '.join(kernels.REGIMES)}")
    if cfg.backend not in ("lapack", "native"):
        raise ConfigError("backend must be 'lapack' or 'native'")
    if cfg.format not in ("bin", "csv"):
        raise ConfigError("format must be 'bin' or 'csv'")
    for name in ("draws", "chains", "threads"):
        if int(getattr(cfg, name)) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if not 0 <= int(cfg.seed) < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.draws < cfg.chains:
        raise ConfigError("draws must be >= chains")
    if not isinstance(cfg.grid, dict) or set(cfg.grid) != {"re", "im"}:
        raise ConfigError("grid must have exactly the keys 're' and 'im'")
    if not (cfg.pairs in ("diagonal", "all") or (isinstance(cfg.pairs, list) and len(cfg.pairs) == 2)):
        raise ConfigError("pairs must be 'diagonal', 'all' or an anchor [re, im]")
    if cfg.hist is not None and (not isinstance(cfg.hist, dict) or set(cfg.hist) != {"x", "y"}):
        raise ConfigError("hist must have exactly the keys 'x' and 'y'")
    try:
        cfg.model()
        cfg.chain()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _meta(cfg):
    return io.provenance(cfg.hashable(), cfg.seed)


def _out_dir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_params(cfg):
    p = cfg.model()
    d = params.derive(p, fixed_trace=cfg.fixed_trace)
    ax, ay = d.ellipse.semi_axes
    report = {
        "K": d.k if not cfg.fixed_trace else None,
        "gamma_K": d.gamma_k,
        "K_bar": params.kbar(p.gamma, p.k_p),
        "K_FT": params.k_ft(p.tau, p.k_p),
        "C": d.c_weak,
        "C_strong": d.ellipse.scale_c,
        "a_t": [d.a_t.real, d.a_t.imag],
        "b": d.b,
        "c_a_sq": [d.c_at_sq.real, d.c_at_sq.imag] if math.isfinite(abs(d.c_at_sq)) else None,
        "ellipse_semi_axes": [ax, ay],
        "mean_trace_jj_over_n": p.k_p + d.k if not cfg.fixed_trace else p.k_p,
    }
    if cfg.alpha is not None:
        ws = params.weak_scaling(cfg.x_global, cfg.alpha, d.c_weak)
        report["weak"] = {"X": ws.x, "alpha": ws.alpha, "nu": ws.nu, "alpha_tilde": ws.alpha_tilde,
                          "tau_N": ws.tau_n(p.n), "local_scale": ws.local_scale(p.n)}
    report.update(_meta(cfg))
    return report


def cmd_sample(cfg):
    p = cfg.model()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SamplerWarning)
        run = sample_spectra(cfg.ensemble, p, cfg.seed, cfg.draws, chain=cfg.chain(), chains=cfg.chains,
                             threads=cfg.threads, backend=cfg.backend)
    diag_failures = [str(w.message) for w in caught if issubclass(w.category, SamplerWarning)]
    out = _out_dir(cfg)
    meta = _meta(cfg)
    if cfg.format == "bin":
        io.write_spectra_bin(out / "spectra.bin", run.eigenvalues, {**meta, "ensemble": cfg.ensemble})
    else:
        io.write_spectra_csv(out / "spectra.csv", run.eigenvalues, {**meta, "ensemble": cfg.ensemble})
    target = p.n * p.k_p if cfg.ensemble in ("ft_ginibre", "ft_elliptic") else None
    info = {
        **meta,
        "ensemble": cfg.ensemble,
        "params": dataclasses.asdict(p),
        "draws": cfg.draws,
        "chains": cfg.chains,
        "eigenvalue_count": int(run.eigenvalues.size),
        "trace_jj": {"mean": float(run.trace_jj.mean()), "std": float(run.trace_jj.std()),
                     "min": float(run.trace_jj.min()), "max": float(run.trace_jj.max())},
        "accept_rates": run.accept_rates,
        "diagnostic_failures": diag_failures,
    }
    if target is not None:
        info["trace_jj"]["target"] = target
        info["trace_jj"]["max_abs_dev"] = float(np.max(np.abs(run.trace_jj - target)))
    if cfg.hist is not None:
        h = stats.esd_hist(run.eigenvalues, _edges(cfg.hist["x"], "hist.x"), _edges(cfg.hist["y"], "hist.y"))
        rows = ((xl, xh, yl, yh, h.counts[i, j], h.density[i, j], h.se[i, j])
                for i, (xl, xh) in enumerate(zip(h.x_edges[:-1], h.x_edges[1:]))
                for j, (yl, yh) in enumerate(zip(h.y_edges[:-1], h.y_edges[1:])))
        io.write_csv(out / "esd_hist.csv", meta,
                      ["x_lo", "x_hi", "y_lo", "y_hi", "count", "density", "se"], rows)
        info["hist_points_outside"] = h.n_out
    if cfg.marginal is not None:
        m = stats.marginal_x(run.eigenvalues, _edges(cfg.marginal, "marginal"))
        io.write_marginal_csv(out / "marginal_x.csv", m, meta)
    io.write_json(out / "sample_meta.json", info)
    return info, diag_failures


def kernel_points(cfg):
    re = np.linspace(*cfg.grid["re"][:2], int(cfg.grid["re"][2]))
    im = np.linspace(*cfg.grid["im"][:2], int(cfg.grid["im"][2]))
    pts = (re[:, None] + 1j * im[None, :]).ravel()
    if cfg.pairs == "diagonal":
        return pts, pts
    if cfg.pairs == "all":
        return np.repeat(pts, len(pts)), np.tile(pts, len(pts))
    return pts, np.full(len(pts), complex(*cfg.pairs))


def cmd_kernel(cfg):
    z1, z2 = kernel_points(cfg)
    ctx = None
    alpha, c = cfg.alpha, cfg.c
    if cfg.regime in ("finite_n_sum", "contour_oracle"):
        d = params.derive(cfg.model(), fixed_trace=cfg.fixed_trace)
        ctx = kernels.KernelContext.from_derived(d, cfg.regime)
        if cfg.regime == "contour_oracle" and cfg.n > kernels.CONTOUR_MAX_N:
            raise ConfigError(f"contour_oracle supports n <= {kernels.CONTOUR_MAX_N}")
    elif cfg.regime in ("weak_limit", "weak_prop"):
        if not alpha or alpha <= 0:
            raise ConfigError(f"regime {cfg.regime} needs alpha > 0")
        if cfg.regime == "weak_prop" and c is None:
            c = params.c_weak(cfg.gamma, cfg.k_p)
    prof = kernels.tabulate(z1, z2, cfg.regime, ctx, alpha=alpha, x_global=cfg.x_global, c=c or 1.0)
    out = _out_dir(cfg)
    meta = {**_meta(cfg), "regime": cfg.regime}
    io.write_kernel_csv(out / f"kernel_{cfg.regime}.csv", prof, meta)
    return prof, meta


def cmd_verify(cfg, progress=None):
    ids = verify.resolve_suites(cfg.suites)
    report = verify.run(ids, seed=cfg.seed, progress=progress)
    out = _out_dir(cfg)
    payload = {**_meta(cfg), "suites": cfg.suites, **report.as_dict()}
    io.write_json(out / "verify.json", payload)
    return report


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    parser = argparse.ArgumentParser(prog="nonherm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("params", "print derived constants as JSON"),
                       ("sample", "sample spectra and write records"),
                       ("kernel", "tabulate a kernel regime on a grid"),
                       ("verify", "run acceptance suites")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, help="worker threads (default $RMT_THREADS or 1)")
        if name == "verify":
            sp.add_argument("--suite", help="comma-separated suite names: " + ", ".join(verify.SUITES))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    env_threads = os.environ.get("RMT_THREADS")
    overrides = {"seed": args.seed, "out": args.out, "threads": args.threads}
    if args.threads is None and env_threads:
        try:
            overrides["threads"] = int(env_threads)
        except ValueError:
            print(f"error: RMT_THREADS={env_threads!r} is not an integer", file=sys.stderr)
            return EXIT_CONFIG
    if getattr(args, "suite", None) is not None:
        overrides["suites"] = [s for s in args.suite.split(",") if s.strip()]
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "params":
            print(json.dumps(cmd_params(cfg), indent=2, sort_keys=True))
            return 0
        if args.command == "sample":
            info, failures = cmd_sample(cfg)
            print(json.dumps({k: info[k] for k in ("ensemble", "eigenvalue_count", "trace_jj", "accept_rates")},
                             sort_keys=True))
            for msg in failures:
                print(f"sampler diagnostic: {msg}", file=sys.stderr)
            return EXIT_SAMPLER if failures else 0
        if args.command == "kernel":
            prof, _ = cmd_kernel(cfg)
            print(f"wrote {len(prof.values)} kernel values to {cfg.out}")
            return 0
        report = cmd_verify(cfg, progress=lambda r: print(r.line(), flush=True))
        print(f"{len(report.results) - report.failures}/{len(report.results)} criteria passed")
        return min(report.failures, 125)
    except (ConfigError, params.ParamError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
