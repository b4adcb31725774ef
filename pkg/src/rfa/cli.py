"""Command-line interface: ``rfa {gen,embed,spectrum,eval,ntos,bench}``.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numeric error.
Every command writes one JSON run manifest next to its main output.
"""

from __future__ import annotations

import argparse
import csv
import gc
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .engine import ACTIVATIONS, NORMALIZATIONS, PRESETS, RfaConfig, rfa_embed
from .errors import DomainError, NumericError, ParseError
from .evaluation import MULTICLASS, MULTILABEL, ntos, run_protocol
from .generators import gen_barbell, gen_erdos_renyi, gen_role_ring, gen_sbm
from .graph import largest_connected_component, load_edge_list, write_edge_list
from .io import (align_labels, read_embedding_bin, read_embedding_csv, read_labels,
                 read_results_table, write_embedding_bin, write_embedding_csv, write_labels)
from .spectral import FilterConfig, dense_spectrum, gershgorin_interval, spectrum_spread

logger = logging.getLogger("rfa")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_ACT = {"low": "tanh", "high": "exp"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Collects configuration, input digests and phase timings for one run."""

    def __init__(self, command: str, path):
        self.path = Path(path)
        self.phase = "setup"
        self.data = {
            "command": command,
            "version": __version__,
            "python": platform.python_version(),
            "config": {},
            "inputs": {},
            "seed": None,
            "timings_sec": {},
        }

    def add_input(self, path):
        self.data["inputs"][str(path)] = sha256(path)

    def time(self, phase: str):
        manifest = self

        class _Timer:
            def __enter__(self):
                manifest.phase = phase
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                manifest.data["timings_sec"][phase] = time.perf_counter() - self.start

        return _Timer()

    def write(self):
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")


def _new_manifest(args, command, default) -> Manifest:
    path = Path(args.manifest) if getattr(args, "manifest", None) else Path(default)
    args.run_manifest = Manifest(command, path)
    return args.run_manifest


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    out = Path(args.out)
    man = _new_manifest(args, "gen", str(out) + ".manifest.json")
    params = {"kind": args.kind}
    labels = None
    with man.time("generate"):
        if args.kind == "er":
            _require(args, "n", "avg_deg")
            params.update(n=args.n, avg_degree=args.avg_deg, seed=args.seed)
            g = gen_erdos_renyi(args.n, args.avg_deg, args.seed)
        elif args.kind == "barbell":
            _require(args, "n", "c")
            params.update(n=args.n, c=args.c)
            g = gen_barbell(args.n, args.c)
        elif args.kind == "sbm":
            _require(args, "blocks", "pin", "pout")
            blocks = [int(b) for b in args.blocks.split(",")]
            params.update(blocks=blocks, p_in=args.pin, p_out=args.pout, seed=args.seed)
            g, labels = gen_sbm(blocks, args.pin, args.pout, args.seed)
        else:
            _require(args, "stars", "leaves")
            params.update(num_stars=args.stars, leaves_per_star=args.leaves)
            g, labels = gen_role_ring(args.stars, args.leaves)
    with man.time("write"):
        write_edge_list(g, out)
        if labels is not None:
            label_path = Path(args.labels_out or str(out) + ".labels")
            write_labels(label_path, np.arange(g.n), labels)
            params["labels_out"] = str(label_path)
    man.data["config"] = params
    man.data["seed"] = params.get("seed")
    man.write()
    print(f"n={g.n} m={g.m}")
    return EXIT_OK


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"gen {args.kind} requires {', '.join(missing)}")


# ---------------------------------------------------------------- embed


def resolve_embed_config(args) -> RfaConfig:
    """Materialize the embedding configuration.

    Layers, later ones winning: built-in defaults, the ``--config`` manifest,
    explicit flags, ``--preset``.
    """
    st = {"dim": 64, "iters": 10, "filter": "low", "tau": 20.0, "activation": None,
          "normalization": "zscore_col", "seed": 0}
    if args.config:
        saved = json.loads(Path(args.config).read_text(encoding="utf-8"))["config"]["rfa"]
        st.update(dim=saved["dim"], iters=saved["iters"], tau=saved["filter"]["tau"],
                  filter="low" if saved["filter"]["alpha"] > 0 else "high",
                  activation=saved["activation"], normalization=saved["normalization"],
                  seed=saved["seed"])
    for key, flag in [("dim", "dim"), ("iters", "iters"), ("filter", "filter"), ("tau", "tau"),
                      ("activation", "act"), ("normalization", "norm"), ("seed", "seed")]:
        value = getattr(args, flag)
        if value is not None:
            st[key] = value
    if args.preset:
        dim, tau, iters, act, norm, filt = PRESETS[args.preset]
        st.update(dim=dim, tau=tau, iters=iters, activation=act, normalization=norm,
                  filter=filt)
    return RfaConfig(dim=st["dim"], iters=st["iters"],
                     filter=FilterConfig.preset(st["filter"], float(st["tau"])),
                     activation=st["activation"] or DEFAULT_ACT[st["filter"]],
                     normalization=st["normalization"], seed=st["seed"])


def cmd_embed(args) -> int:
    out = Path(args.out)
    fmt = args.format or ("bin" if out.suffix == ".bin" else "csv")
    man = _new_manifest(args, "embed", str(out) + ".manifest.json")
    threads = _kernels.set_threads(args.threads)
    cfg = resolve_embed_config(args)

    with man.time("load"):
        man.add_input(args.input)
        g = load_edge_list(args.input, base=args.base)
    with man.time("lcc"):
        g_cc, cmap = largest_connected_component(g)
    if cmap.num_components > 1:
        logger.warning("graph has %d components; embedding the largest (%d of %d nodes)",
                       cmap.num_components, g_cc.n, g.n)
    man.phase = "embed"
    emb = rfa_embed(g_cc, cfg, check_connected=False)
    man.data["timings_sec"]["embed"] = emb.elapsed
    with man.time("write"):
        if fmt == "csv":
            write_embedding_csv(out, g_cc.node_ids(), emb.data)
        else:
            write_embedding_bin(out, emb.data)
            np.savetxt(str(out) + ".ids", g_cc.node_ids(), fmt="%d")

    man.data["config"] = {"rfa": cfg.to_dict(), "input": str(args.input), "base": args.base,
                          "format": fmt, "preset": args.preset, "threads": threads,
                          "nodes": g_cc.n, "edges": g_cc.m,
                          "dropped_nodes": int(g.n - g_cc.n)}
    man.data["seed"] = cfg.seed
    man.write()
    print(f"embedded n={g_cc.n} d={cfg.dim} K={cfg.iters} "
          f"filter={cfg.filter.kind} inference_time_sec={emb.elapsed:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------- spectrum


def cmd_spectrum(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    man = _new_manifest(args, "spectrum", out / "manifest.json")
    with man.time("load"):
        man.add_input(args.input)
        g = load_edge_list(args.input, base=args.base)
    if g.n > args.cap:
        raise DomainError(f"dense spectrum limited to n <= {args.cap} (graph has n = {g.n}); "
                          "run the diagnostics on a subsample")
    rows = []
    with man.time("eigendecomposition"):
        for tau in args.tau:
            spec = dense_spectrum(g, tau, cap=args.cap)
            tag = f"{tau:g}"
            with open(out / f"eigenvalues_tau{tag}.csv", "w", encoding="utf-8") as fh:
                fh.write("index,eigenvalue\n")
                for r, lam in enumerate(spec.eigenvalues):
                    fh.write(f"{r},{lam:.17g}\n")
            if args.eigenvectors:
                np.savetxt(out / f"eigenvectors_tau{tag}.csv", spec.eigenvectors,
                           delimiter=",", fmt="%.17g")
            lo, hi = gershgorin_interval(g, tau)
            rows.append((tau, spectrum_spread(spec), hi - 1.0))
    with open(out / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write("tau,spread,gershgorin_radius\n")
        for tau, spread, radius in rows:
            fh.write(f"{tau:g},{spread:.17g},{radius:.17g}\n")
    man.data["config"] = {"input": str(args.input), "tau": list(args.tau), "cap": args.cap,
                          "eigenvectors": bool(args.eigenvectors)}
    man.write()
    for tau, spread, radius in rows:
        print(f"tau={tau:g} spread={spread:.6f} gershgorin_radius={radius:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------- eval


def load_embeddings(path):
    """Return ``(ids, z)``; binary files take ids from the ``.ids`` sidecar if present."""
    path = Path(path)
    if path.suffix == ".bin":
        z = read_embedding_bin(path)
        sidecar = Path(str(path) + ".ids")
        ids = (np.loadtxt(sidecar, dtype=np.int64, ndmin=1) if sidecar.exists()
               else np.arange(z.shape[0]))
        return ids, z
    return read_embedding_csv(path)


def cmd_eval(args) -> int:
    out = Path(args.out)
    man = _new_manifest(args, "eval", str(out) + ".manifest.json")
    with man.time("load"):
        man.add_input(args.embeddings)
        man.add_input(args.labels)
        ids, z = load_embeddings(args.embeddings)
        label_map = read_labels(args.labels)
    if args.allow_missing:
        known = set(ids.tolist())
        dropped = [k for k in label_map if k not in known]
        if dropped:
            logger.warning("ignoring labels of %d nodes absent from the embedding", len(dropped))
        label_map = {k: v for k, v in label_map.items() if k in known}
    kind = None if args.kind == "auto" else args.kind
    labels = align_labels(ids, label_map, kind)

    inference_time = args.inference_time
    emb_manifest = Path(str(args.embeddings) + ".manifest.json")
    if inference_time is None and emb_manifest.exists():
        inference_time = json.loads(emb_manifest.read_text())["timings_sec"].get("embed", 0.0)
    with man.time("protocol"):
        report = run_protocol(z, labels, trials=args.trials, train_ratio=args.ratio,
                              seed=args.seed, inference_time=inference_time or 0.0,
                              n_jobs=args.jobs)
    out.write_text(report.to_json(indent=2) + "\n", encoding="utf-8")
    man.data["config"] = {"kind": labels.kind, "trials": args.trials, "ratio": args.ratio,
                          "jobs": args.jobs, "num_classes": labels.num_classes}
    man.data["seed"] = args.seed
    man.write()
    print(f"micro_f1={report.micro_f1.mean:.4f}±{report.micro_f1.std:.4f} "
          f"macro_f1={report.macro_f1.mean:.4f}±{report.macro_f1.std:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------- ntos


def cmd_ntos(args) -> int:
    out = Path(args.out)
    man = _new_manifest(args, "ntos", str(out) + ".manifest.json")
    with man.time("load"):
        man.add_input(args.table)
        methods, times, metrics = read_results_table(args.table)
    scores = ntos(times, metrics)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("method,ntos\n")
        for name, s in zip(methods, scores):
            fh.write(f"{name},{s:.17g}\n")
            print(f"{name}: {s:.4f}")
    man.write()
    return EXIT_OK


# ---------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    out = Path(args.out)
    man = _new_manifest(args, "bench", str(out) + ".manifest.json")
    threads = _kernels.set_threads(args.threads)
    filt = FilterConfig.preset(args.filter, args.tau)
    cfg = RfaConfig(dim=args.dim, iters=args.iters, filter=filt,
                    activation=args.act or DEFAULT_ACT[filt.kind],
                    normalization=args.norm, seed=args.seed)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "m", "gen_sec", "embed_sec", "status"])
        for n in args.n_list:
            try:
                t0 = time.perf_counter()
                g = gen_erdos_renyi(n, args.avg_deg, args.seed)
                gen_sec = time.perf_counter() - t0
                times = []
                for _ in range(args.repeat):
                    times.append(rfa_embed(g, cfg, check_connected=False).elapsed)
                    gc.collect()
                row = [n, g.m, f"{gen_sec:.6f}", f"{float(np.mean(times)):.6f}", "ok"]
                del g
            except MemoryError:
                row = [n, "", "", "", "error: out of memory"]
            except (DomainError, NumericError) as exc:
                row = [n, "", "", "", f"error: {exc}"]
            gc.collect()
            writer.writerow(row)
            fh.flush()
            print(",".join(map(str, row)))
    man.data["config"] = {"n_list": list(args.n_list), "avg_degree": args.avg_deg,
                          "rfa": cfg.to_dict(), "repeat": args.repeat, "threads": threads}
    man.data["seed"] = args.seed
    man.write()
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rfa", description="Training-free spectral node embeddings.")
    p.add_argument("--version", action="version", version=f"rfa {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic graph")
    g.add_argument("kind", choices=["er", "barbell", "sbm", "role-ring"])
    g.add_argument("--n", type=int, help="node count (er) or clique size (barbell)")
    g.add_argument("--c", type=int, help="barbell path length")
    g.add_argument("--avg-deg", type=float)
    g.add_argument("--blocks", help="comma-separated SBM block sizes")
    g.add_argument("--pin", type=float)
    g.add_argument("--pout", type=float)
    g.add_argument("--stars", type=int)
    g.add_argument("--leaves", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--labels-out")
    g.add_argument("--manifest")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("embed", help="embed the nodes of an edge-list graph")
    e.add_argument("input")
    e.add_argument("--filter", choices=["low", "high"])
    e.add_argument("--dim", type=int)
    e.add_argument("--tau", type=float)
    e.add_argument("--iters", type=int)
    e.add_argument("--act", choices=ACTIVATIONS)
    e.add_argument("--norm", choices=NORMALIZATIONS + ("l2", "zscore"))
    e.add_argument("--seed", type=int)
    e.add_argument("--preset", choices=sorted(PRESETS))
    e.add_argument("--config", help="re-use the configuration stored in a run manifest")
    e.add_argument("--base", type=int, default=0, choices=[0, 1], help="id of the first node")
    e.add_argument("--out", required=True)
    e.add_argument("--format", choices=["csv", "bin"])
    e.add_argument("--threads", type=int, help=f"worker threads (default ${_kernels.THREADS_ENV} "
                                                "or the CPU count)")
    e.add_argument("--manifest")
    e.set_defaults(func=cmd_embed)

    s = sub.add_parser("spectrum", help="dense spectral diagnostics for small graphs")
    s.add_argument("input")
    s.add_argument("--tau", type=float, nargs="+", default=[0.0, 1.0, 5.0, 10.0, 50.0, 100.0])
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--eigenvectors", action="store_true")
    s.add_argument("--cap", type=int, default=2000)
    s.add_argument("--base", type=int, default=0, choices=[0, 1])
    s.add_argument("--manifest")
    s.set_defaults(func=cmd_spectrum)

    v = sub.add_parser("eval", help="node-classification evaluation of embeddings")
    v.add_argument("--embeddings", required=True)
    v.add_argument("--labels", required=True)
    v.add_argument("--kind", choices=["auto", MULTICLASS, MULTILABEL], default="auto")
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--ratio", type=float, default=0.2)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--inference-time", type=float)
    v.add_argument("--allow-missing", action="store_true",
                   help="ignore labels of nodes that are not in the embedding")
    v.add_argument("--out", required=True)
    v.add_argument("--manifest")
    v.set_defaults(func=cmd_eval)

    t = sub.add_parser("ntos", help="trade-off scores from a method,time_sec,metric table")
    t.add_argument("table")
    t.add_argument("--out", required=True)
    t.add_argument("--manifest")
    t.set_defaults(func=cmd_ntos)

    b = sub.add_parser("bench", help="scalability benchmark on Erdos-Renyi graphs")
    b.add_argument("--n-list", type=int, nargs="+", default=[10**4, 10**5, 10**6])
    b.add_argument("--avg-deg", type=float, default=10.0)
    b.add_argument("--dim", type=int, default=64)
    b.add_argument("--iters", type=int, default=10)
    b.add_argument("--tau", type=float, default=20.0)
    b.add_argument("--filter", choices=["low", "high"], default="low")
    b.add_argument("--act", choices=ACTIVATIONS)
    b.add_argument("--norm", choices=NORMALIZATIONS, default="zscore_col")
    b.add_argument("--repeat", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--threads", type=int)
    b.add_argument("--out", required=True)
    b.add_argument("--manifest")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rfa {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, DomainError, OSError) as exc:
        return _report(args, "data error", exc, EXIT_DATA)
    except NumericError as exc:
        return _report(args, "numeric error", exc, EXIT_NUMERIC)


def _report(args, what: str, exc: Exception, code: int) -> int:
    man = getattr(args, "run_manifest", None)
    phase = man.phase if man is not None else "setup"
    print(f"rfa {args.command}: {what} in phase '{phase}': {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
