"""Command-line front end: ``deltachain {lyap,zariski,ids,thouless,selftest}``.

Output directory: --out, else $DELTACHAIN_OUT, else ./out. Every CSV starts
with ``# key value`` metadata lines (version, config_sha256, seed, command)
followed by a header row; a JSON mirror holds the same rows. Nothing in the
files depends on the worker count or wall clock, so reruns are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 numerical breakdown,
4 precondition violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, config, ids, kernels, lyapunov, sampling, thouless, zariski
from .errors import ConfigError, DeltaChainError, NumericalBreakdown, PreconditionError
from .transfer import ModelConfig

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PRECONDITION = 0, 2, 3, 4
ENV_OUT = "DELTACHAIN_OUT"

LYAP_COLUMNS = "E, gamma_1..gamma_2N, stderr_1..stderr_2N, n, seed, block_size, scheme"
IDS_COLUMNS = ("E", "count", "value", "L", "seed")
ZARISKI_COLUMNS = ("E", "det88", "det1313", "closure_dim", "verdict", "reason")
CRITICAL_COLUMNS = ("kind", "E")
THOULESS_COLUMNS = ("E", "s", "s_stderr", "integral", "residual", "budget")
SELFTEST_COLUMNS = ("check", "status", "value")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else str(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Writer:
    def __init__(self, out_dir: str, fmt: str, meta: dict):
        self.out_dir = out_dir
        self.fmt = fmt
        self.meta = meta
        self.written: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def table(self, name: str, columns, rows, extra: dict | None = None):
        if self.fmt in ("csv", "both"):
            buf = io.StringIO()
            for k, v in self.meta.items():
                buf.write(f"# {k} {v}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_fmt(x) for x in r])
            self._put(f"{name}.csv", buf.getvalue())
        if self.fmt in ("json", "both"):
            doc = {"meta": self.meta, "columns": list(columns),
                   "rows": [dict(zip(columns, r)) for r in rows]}
            if extra:
                doc.update(extra)
            self.document(name, doc)

    def document(self, name: str, doc: dict):
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
        self._put(f"{name}.json", text)

    def _put(self, fname: str, text: str):
        path = os.path.join(self.out_dir, fname)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append(path)


def _sha_array(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.asarray(a, dtype=float)).tobytes())
    return h.hexdigest()


def run_lyap(cfg: config.RunConfig, w: Writer, workers: int) -> None:
    o = config.lyap_options(cfg)
    spectra = lyapunov.scan_spectrum(cfg.model, cfg.distribution, o["grid"], cfg.seed,
                                     steps=o["steps"], block_size=o["block_size"],
                                     scheme=o["scheme"], batches=o["batches"], workers=workers)
    n2 = 2 * cfg.model.n
    cols = (["E"] + [f"gamma_{i + 1}" for i in range(n2)] + [f"stderr_{i + 1}" for i in range(n2)]
            + ["n", "seed", "block_size", "scheme"])
    rows = [[s.energy, *s.exponents, *s.stderr, s.steps, s.seed, s.block_size, s.scheme]
            for s in spectra]
    w.table("lyap", cols, rows)


def _certify(args):
    e, model, spec = args
    try:
        return zariski.certify_zariski_dense(e, model, spec)
    except PreconditionError as exc:
        return zariski.Certificate(e, None, None, None, "UNDECIDED", reason=str(exc))


def _pool_map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_zariski(cfg: config.RunConfig, w: Writer, workers: int) -> None:
    o = config.zariski_options(cfg)
    lo, hi = o["interval"]
    model = cfg.model
    cuts = [float(c) for c in model.boundary_energies() if lo <= c <= hi]
    notes = [f"interval split at channel threshold E={c!r}" for c in cuts]
    grid = config.parse_grid(f"{lo}:{hi}:{o['grid_step']}") if hi >= lo else np.zeros(0)
    guard = 1e-6
    keep = [e for e in grid if all(abs(e - c) > guard for c in cuts)]
    skipped = [e for e in grid if e not in keep]
    notes += [f"grid energy E={e!r} skipped (threshold)" for e in skipped]
    certs = _pool_map(_certify, [(float(e), model, cfg.distribution) for e in keep], workers)
    critical = []
    if hi > lo:
        for kind in (zariski.DetKind.DET88, zariski.DetKind.DET1313):
            cs = zariski.scan_critical_set((lo, hi), o["grid_step"], kind, model.potential)
            critical += [(kind.value, z) for z in cs.zeros]
    rows = [[c.energy, c.det88, c.det1313, c.closure_dim, c.verdict, c.reason] for c in certs]
    w.table("zariski", ZARISKI_COLUMNS, rows,
            {"certificates": [c.to_dict() for c in certs], "notes": notes})
    w.table("zariski_critical", CRITICAL_COLUMNS, critical)


def _ids_chunk(args):
    domain, model, grid, method, mesh = args
    if method == "shoot":
        return ids.phase_counts(domain, model, grid)[0]
    return np.array([ids.inertia_count(domain, model, e, mesh) for e in grid], dtype=int)


def _ids_counts(domain, model, grid, method, mesh, workers):
    chunks = [c for c in np.array_split(np.asarray(grid), max(1, workers)) if c.size]
    parts = _pool_map(_ids_chunk, [(domain, model, c, method, mesh) for c in chunks], workers)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=int)


def run_ids(cfg: config.RunConfig, w: Writer, workers: int) -> None:
    o = config.ids_options(cfg)
    model = cfg.model
    if cfg.distribution is not None:
        domain = ids.make_domain(cfg.distribution, cfg.seed, o["L"])
    else:
        domain = ids.free_domain(model.n, o["L"])
    counts = _ids_counts(domain, model, o["grid"], o["method"], o["mesh_points"], workers)
    rows = [[e, c, c / (2.0 * o["L"]), o["L"], cfg.seed] for e, c in zip(o["grid"], counts)]
    w.table("ids", IDS_COLUMNS, rows, {"method": o["method"]})


def synthetic_measure() -> thouless.DOSMeasure:
    """Fixed smooth test measure used by the synthetic Thouless check."""
    edges = np.linspace(-2.0, 8.0, 401)
    mid = 0.5 * (edges[1:] + edges[:-1])
    dens = np.sqrt(np.clip(mid + 2.0, 0, None)) * np.exp(-0.1 * mid)
    return thouless.DOSMeasure(edges, dens * np.diff(edges))


def run_thouless(cfg: config.RunConfig, w: Writer, workers: int) -> None:
    o = config.thouless_options(cfg)
    grid = o["grid"]
    if o["synthetic"]:
        meas = synthetic_measure()
        integ = np.array([thouless.log_kernel_integral(meas, e) for e in grid])
        sums = -o["alpha0"] + integ
        fit = thouless.fit_thouless(grid, meas, sums=sums)
        budget = np.zeros(grid.size)
        err = np.zeros(grid.size)
        inputs = {"measure": _sha_array(meas.edges, meas.masses)}
    else:
        model, spec = cfg.model, cfg.distribution
        try:
            domain = ids.make_domain(spec, cfg.seed, o["L"], key=(1 << 20,))
            counts = _ids_counts(domain, model, o["ids_grid"], "shoot", 0, workers)
        except DeltaChainError as exc:
            raise type(exc)(f"thouless: ids stage failed: {exc}") from exc
        curve = ids.IDSCurve(o["ids_grid"], counts, counts / (2.0 * o["L"]), o["L"], cfg.seed)
        levels = thouless.asymptotic_levels(model.v0, model.c, sampling.mean(spec))
        meas = thouless.measure_from_curve(curve, levels)
        try:
            spectra = lyapunov.scan_spectrum(model, spec, grid, cfg.seed, steps=o["steps"],
                                             block_size=o["block_size"], workers=workers)
        except DeltaChainError as exc:
            raise type(exc)(f"thouless: lyapunov stage failed: {exc}") from exc
        try:
            fit = thouless.fit_thouless(spectra, meas)
            err = np.array([s.positive_sum_stderr() for s in spectra])
            budget = thouless.error_budget(fit, err, meas, o["L"], model.n)
        except DeltaChainError as exc:
            raise type(exc)(f"thouless: fit stage failed: {exc}") from exc
        inputs = {"ids_curve": _sha_array(curve.grid, curve.counts),
                  "spectra": _sha_array(*[np.r_[s.energy, s.exponents, s.stderr] for s in spectra])}
    rows = [[e, s, se, i, r, b] for e, s, se, i, r, b in
            zip(fit.grid_used, fit.sums, err, fit.integrals, fit.residuals, budget)]
    w.table("thouless", THOULESS_COLUMNS, rows)
    w.document("thouless_fit", {"meta": w.meta, "alphaHat": fit.alpha_hat,
                                "residuals": fit.residuals, "gridUsed": fit.grid_used,
                                "budget": budget, "synthetic": o["synthetic"],
                                "withinBudget": bool(np.all(np.abs(fit.residuals) <= budget))
                                if not o["synthetic"] else True,
                                "inputs": inputs})


def selftest_checks() -> list[tuple[str, bool, float]]:
    out = []
    d13 = zariski.det1313(1.6, "lifted")
    out.append(("det1313_lifted_E1.6", d13 < 0 and abs(abs(d13) - 3507) <= 0.05 * 3507, d13))
    rel = max(abs(zariski.det88(e, "lifted") / zariski.det88_closed_form(e, "lifted") - 1)
              for e in (2.0, 3.0, 4.5))
    out.append(("det88_identity", rel < 1e-7, rel))
    dim = zariski.lie_closure_dim(zariski.generator_family(1.6, "lifted"))
    out.append(("closure_dim_21", dim == 21, float(dim)))
    free = ModelConfig((0.0,))
    dom = ids.free_domain(1, 10)
    es = np.array([0.3, 1.7, 4.2])
    got = ids.phase_counts(dom, free, es)[0]
    ok = all(int(g) == ids.free_count(10, e) for g, e in zip(got, es))
    out.append(("free_ids_counts", ok, float(got.sum())))
    spec = sampling.bernoulli(1, 0.0, 1.0, 0.5)
    cfg1 = ModelConfig((1.0,))
    vals = [lyapunov.estimate_spectrum(cfg1, 1.0, spec, 1, steps=20000, backend=b).exponents[0]
            for b in kernels.available()]
    out.append(("backends_agree", max(vals) - min(vals) < 1e-9, max(vals) - min(vals)))
    return out


def run_selftest(cfg: config.RunConfig | None, w: Writer, workers: int) -> None:
    checks = selftest_checks()
    w.table("selftest", SELFTEST_COLUMNS, [[n, "PASS" if ok else "FAIL", v] for n, ok, v in checks])
    if not all(ok for _, ok, _ in checks):
        raise NumericalBreakdown("selftest: " + ", ".join(n for n, ok, _ in checks if not ok))


COMMANDS = {"lyap": run_lyap, "zariski": run_zariski, "ids": run_ids,
            "thouless": run_thouless, "selftest": run_selftest}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deltachain", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"deltachain {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "selftest")
        s.add_argument("--out")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--format", choices=("csv", "json", "both"), default="both")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or os.environ.get(ENV_OUT) or "out"
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = config.load(args.config, args.command, args.seed) if args.config else None
        meta = {"version": __version__,
                "config_sha256": cfg.sha256 if cfg else "",
                "seed": cfg.seed if cfg else "",
                "command": args.command}
        w = Writer(out, args.format, meta)
        COMMANDS[args.command](cfg, w, args.workers)
    except ConfigError as exc:
        print(f"deltachain: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBreakdown as exc:
        print(f"deltachain: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DeltaChainError as exc:
        print(f"deltachain: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", EXIT_PRECONDITION)
    for path in w.written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
