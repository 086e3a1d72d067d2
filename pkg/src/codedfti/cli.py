"""Command-line experiment harness.

Subcommands::

    levels            build a level scheme and write it as JSON
    coherence         coherence matrix (and optional budget) for a basis pair
    profile           dictionary sparsity profile per level (CSV + JSON)
    sample            generate an illumination pattern (JSON + mask CSV)
    phase-transition  success-rate curves over measurement ratios (CSV)
    reconstruct       end-to-end acquisition + per-pixel recovery

Every command is a deterministic function of its configuration and master
seed: per-trial generators are derived through ``np.random.SeedSequence`` so
re-runs produce byte-identical artifacts. Tabular outputs are RFC 4180 CSV.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 solver budget
exhausted on at least one pixel.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import coherence as coh
from . import dictionary as dct
from . import levels as lvl
from . import recon, sampling, transforms
from .solver import BpdnProblem, solve_bpdn

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SOLVER = 4

SUCCESS_REL_SQ = 1e-4  # relative squared error defining a successful recovery
DEFAULT_RATIOS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
DEFAULT_RHOS = (0.93, 0.96, 0.99)
APPROACHES = ("mls-dft", "mls-dhw", "initial-vds")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Shared knobs of the experiment commands (flags and/or JSON file)."""

    N_xi: int = 256
    q: int | None = None  # defaults to min(6, log2(N_xi/2))
    rho: float = 0.99
    rhos: tuple = DEFAULT_RHOS
    ratios: tuple = DEFAULT_RATIOS
    ratio: float = 0.1
    trials: int = 100
    seed: int = 0
    eps_nyq: float = 0.0
    approaches: tuple = APPROACHES
    dictionary: str = "synth:16"
    n_x: int = 8
    n_y: int = 8
    c: float = 1.0
    max_iter: int = 4000
    workers: int = 1
    outdir: str = ""

    def __post_init__(self):
        if not self.outdir:
            self.outdir = os.environ.get("CODEDFTI_OUTDIR", ".")

    def validate(self):
        if not transforms.is_pow2(self.N_xi):
            raise ConfigError(f"N_xi must be a power of two, got {self.N_xi}")
        if self.q is None:
            self.q = min(6, int(np.log2(self.N_xi // 2)))
        if self.q < 0 or (self.N_xi // 2) % (2**self.q) != 0:
            raise ConfigError(f"2^q must divide N_xi/2 (q={self.q}, N_xi={self.N_xi})")
        for r in list(self.ratios) + [self.ratio]:
            if not 0 < r <= 1:
                raise ConfigError(f"measurement ratio {r} outside (0, 1]")
        for r in self.rhos:
            if not 0 <= r <= 1:
                raise ConfigError(f"rho {r} outside [0, 1]")
        if not 0 <= self.rho <= 1:
            raise ConfigError(f"rho {self.rho} outside [0, 1]")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.eps_nyq < 0:
            raise ConfigError("eps_nyq must be nonnegative")
        for a in self.approaches:
            if a not in APPROACHES:
                raise ConfigError(f"unknown approach {a!r}")
        if self.n_x < 1 or self.n_y < 1:
            raise ConfigError("spatial shape must be positive")
        if self.max_iter < 1 or self.trials < 1 or self.workers < 1:
            raise ConfigError("max_iter, trials, workers must be >= 1")
        if not self.dictionary.startswith("synth:") and not Path(self.dictionary).exists():
            raise ConfigError(f"dictionary file not found: {self.dictionary}")
        return self


def load_dictionary_spec(spec, n_samples, seed):
    """``synth:<N_f>`` generates spectra; anything else is a CSV path."""
    if spec.startswith("synth:"):
        try:
            n_f = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad synthetic dictionary spec {spec!r}") from None
        return dct.synth_dictionary(n_f, n_samples, seed=seed)
    return dct.load_dictionary(spec, n_samples)


# ---------------------------------------------------------------------------
# budget allocation at a target measurement ratio

def alloc_fill(W, budget):
    """Fill levels in order (low frequencies first) until the budget is spent."""
    m = np.zeros(W.r, dtype=int)
    left = int(budget)
    for t, size in enumerate(W.sizes):
        take = min(int(size), left)
        m[t] = take
        left -= take
        if left == 0:
            break
    return m

def alloc_proportional(W, values, budget):
    """Distribute ``budget`` proportionally to ``values`` with capacity clamps.

    Deterministic: floor pass, then one-by-one top-ups by largest fractional
    deficit (ties to the lower level); leftover beyond the positive-value
    capacity spills into the remaining levels low-to-high.
    """
    sizes = W.sizes.astype(int)
    budget = min(int(budget), int(sizes.sum()))
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise ValueError("allocation values must be nonnegative")
    m = np.zeros(W.r, dtype=int)
    if budget == 0:
        return m
    if v.sum() == 0:
        return alloc_fill(W, budget)
    ideal = budget * v / v.sum()
    m = np.minimum(np.floor(ideal).astype(int), sizes)
    left = budget - int(m.sum())
    while left > 0:
        deficit = np.where(m < sizes, ideal - m, -np.inf)
        t = int(np.argmax(deficit))
        if deficit[t] == -np.inf:
            break
        m[t] += 1
        left -= 1
    return m


def haar_interaction_weights(k):
    """Per-level interaction weights ``sum_l 2^(-|t-l|/2) k_l`` (log factors drop)."""
    k = np.asarray(k, dtype=float)
    r = len(k)
    t = np.arange(r)
    return np.array([np.sum(2.0 ** (-np.abs(ti - t) / 2.0) * k) for ti in range(r)])


def approach_setup(approach, cfg, dictionary):
    """Scheme, sparsity basis, and budget allocator for one approach."""
    n = cfg.N_xi
    if approach == "mls-dft":
        W = lvl.build_dft_levels(n, cfg.q)
        profile = dct.estimate_profile(dictionary, "dft", W, cfg.rho)

        def allocate(budget):
            return alloc_fill(W, budget)

        return W, "dft", allocate, profile
    if approach == "mls-dhw":
        W = lvl.build_dhw_sampling_levels(n)
        T = lvl.build_dhw_sparsity_levels(n)
        profile = dct.estimate_profile(dictionary, "dhw", T, cfg.rho)
        values = haar_interaction_weights(profile.k)

        def allocate(budget):
            return alloc_proportional(W, values, budget)

        return W, "dhw", allocate, profile
    if approach == "initial-vds":
        return None, "dhw", None, None
    raise ConfigError(f"unknown approach {approach!r}")


def make_pattern(approach, cfg, allocate, W, ratio, seed):
    budget = int(ratio * cfg.N_xi + 1e-9)  # floor(ratio * N), fp-guarded
    if approach == "initial-vds":
        return sampling.sample_vds(cfg.N_xi, max(budget, 1), seed)
    m = allocate(budget)
    return sampling.sample_mls(W, m, seed)


def _trial_seeds(master, *key):
    """Two integer seeds (pattern, data) derived from the master seed and a key."""
    ss = np.random.SeedSequence([int(master), *[int(x) for x in key]])
    children = ss.spawn(2)
    return (
        int(children[0].generate_state(1, np.uint32)[0]),
        int(children[1].generate_state(1, np.uint32)[0]),
    )


# ---------------------------------------------------------------------------
# commands

def _outpath(cfg, name):
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)  # RFC 4180: CRLF line endings
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def cmd_levels(cfg, kind):
    if kind == "dhw-sparsity":
        scheme = lvl.build_dhw_sparsity_levels(cfg.N_xi)
    elif kind == "dhw-sampling":
        scheme = lvl.build_dhw_sampling_levels(cfg.N_xi)
    elif kind == "dft":
        scheme = lvl.build_dft_levels(cfg.N_xi, cfg.q)
    else:
        raise ConfigError(f"unknown level kind {kind!r}")
    path = _outpath(cfg, f"levels_{kind}_N{cfg.N_xi}.json")
    _write_json(path, scheme.to_dict())
    print(path)
    return EXIT_OK


def cmd_coherence(cfg, psi, k_csv=None):
    if psi == "dft":
        W = T = lvl.build_dft_levels(cfg.N_xi, cfg.q)
    elif psi == "dhw":
        W = lvl.build_dhw_sampling_levels(cfg.N_xi)
        T = lvl.build_dhw_sparsity_levels(cfg.N_xi)
    else:
        raise ConfigError(f"unknown sparsity basis {psi!r}")
    cm = coh.local_coherence("dft", psi, W, T)
    doc = cm.to_dict()
    if k_csv:
        k = np.array([int(v) for v in k_csv.split(",")], dtype=int)
        if psi == "dft":
            budget = coh.budget_dft(k, W)
        else:
            budget = coh.budget_dhw(k, cfg.N_xi, eps=np.exp(-1.0), C=cfg.c)
        doc.update(budget.to_dict())
    path = _outpath(cfg, f"coherence_dft_{psi}_N{cfg.N_xi}.json")
    _write_json(path, doc)
    print(path)
    return EXIT_OK


def cmd_profile(cfg):
    dictionary = load_dictionary_spec(cfg.dictionary, cfg.N_xi, seed=cfg.seed)
    schemes = {
        "dhw": lvl.build_dhw_sparsity_levels(cfg.N_xi),
        "dft": lvl.build_dft_levels(cfg.N_xi, cfg.q),
    }
    docs = []
    rows = []
    for psi in ("dhw", "dft"):
        T = schemes[psi]
        for rho in cfg.rhos:
            p = dct.estimate_profile(dictionary, psi, T, rho)
            docs.append(p.to_dict())
            ratios = p.ratios()
            for level in range(T.r):
                rows.append(
                    [
                        psi,
                        level + 1,
                        int(T.sizes[level]),
                        repr(float(rho)),
                        int(p.k[level]),
                        repr(float(ratios[level])),
                    ]
                )
    csv_path = _outpath(cfg, "profile.csv")
    _write_csv(csv_path, ["psi", "level", "size", "rho", "k", "ratio"], rows)
    _write_json(_outpath(cfg, "profile.json"), docs)
    print(csv_path)
    return EXIT_OK


def cmd_sample(cfg, approach_or_kind, m_csv=None):
    name = approach_or_kind
    if name == "nyquist":
        pattern = sampling.sample_nyquist(cfg.N_xi)
    elif m_csv is not None:
        if name == "mls-dft":
            W = lvl.build_dft_levels(cfg.N_xi, cfg.q)
        elif name == "mls-dhw":
            W = lvl.build_dhw_sampling_levels(cfg.N_xi)
        else:
            raise ConfigError("explicit per-level counts require an mls approach")
        m = np.array([int(v) for v in m_csv.split(",")], dtype=int)
        pattern = sampling.sample_mls(W, m, seed=cfg.seed)
    else:
        dictionary = load_dictionary_spec(cfg.dictionary, cfg.N_xi, seed=cfg.seed)
        W, _, allocate, _ = approach_setup(name, cfg, dictionary)
        pattern = make_pattern(name, cfg, allocate, W, cfg.ratio, cfg.seed)
    _write_json(_outpath(cfg, f"pattern_{name}.json"), pattern.to_dict())
    mask_path = _outpath(cfg, f"mask_{name}.csv")
    _write_csv(mask_path, [f"i{j}" for j in range(cfg.N_xi)], [pattern.mask_row().tolist()])
    print(mask_path)
    return EXIT_OK


def _phase_point(cfg, dictionary, a_idx, approach, ratio):
    """Success count for one (approach, ratio) grid point."""
    W, psi, allocate, _ = approach_setup(approach, cfg, dictionary)
    ratio_key = int(round(ratio * 1_000_000))
    successes = 0
    flagged = 0
    for trial in range(cfg.trials):
        seed_pat, seed_g = _trial_seeds(cfg.seed, a_idx, ratio_key, trial)
        pattern = make_pattern(approach, cfg, allocate, W, ratio, seed_pat)
        g = np.random.default_rng(seed_g).uniform(0.0, 1.0, dictionary.n_fluorochromes)
        x = dictionary.H @ g
        y = transforms.dft_forward(x)[pattern.omega]
        result = solve_bpdn(
            BpdnProblem(y=y, pattern=pattern, psi=psi, tau=0.0), max_iter=cfg.max_iter
        )
        rel_sq = float(np.sum((result.u - x) ** 2) / max(np.sum(x**2), 1e-300))
        if result.status == "infeasible-tolerance":
            flagged += 1
        if rel_sq <= SUCCESS_REL_SQ:
            successes += 1
    return [
        approach,
        repr(float(ratio)),
        cfg.trials,
        successes,
        repr(successes / cfg.trials),
        flagged,
    ]


def run_phase_transition(cfg):
    """Success-rate table; returns rows of the output CSV.

    Grid points are independent and internally seeded, so the parallel
    fan-out changes nothing but wall time; rows come back in grid order.
    """
    dictionary = load_dictionary_spec(cfg.dictionary, cfg.N_xi, seed=cfg.seed)
    points = [
        (cfg, dictionary, a_idx, approach, ratio)
        for a_idx, approach in enumerate(cfg.approaches)
        for ratio in cfg.ratios
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_phase_point_star, points))
    return [_phase_point(*p) for p in points]


def _phase_point_star(args):
    return _phase_point(*args)


def cmd_phase_transition(cfg):
    rows = run_phase_transition(cfg)
    path = _outpath(cfg, "phase_transition.csv")
    _write_csv(
        path,
        ["approach", "ratio", "trials", "successes", "success_rate", "solver_flagged"],
        rows,
    )
    print(path)
    return EXIT_OK


def cmd_reconstruct(cfg, approach, input_path=None, bands=(0,)):
    n_p = cfg.n_x * cfg.n_y
    dictionary = load_dictionary_spec(cfg.dictionary, cfg.N_xi, seed=cfg.seed)
    seed_pat, seed_data = _trial_seeds(cfg.seed, 9000)
    if input_path is not None:
        volume = recon.HSVolume.load(input_path)
        if volume.n_bands != cfg.N_xi:
            raise ConfigError(
                f"volume has {volume.n_bands} bands, config says {cfg.N_xi}"
            )
    else:
        G = np.random.default_rng(seed_data).uniform(0.0, 1.0, (dictionary.n_fluorochromes, n_p))
        volume = recon.HSVolume(X=dictionary.H @ G, spatial_shape=(cfg.n_x, cfg.n_y))

    W, psi, allocate, profile = approach_setup(approach, cfg, dictionary)
    pattern = make_pattern(approach, cfg, allocate, W, cfg.ratio, seed_pat)
    noise = recon.NoiseModel(
        kind="gaussian-bounded" if cfg.eps_nyq > 0 else "none",
        eps_nyq=cfg.eps_nyq,
        seed=seed_data + 1,
    )
    meas = recon.acquire(volume, pattern, noise)
    recon_approach = "initial-vds" if approach == "initial-vds" else "mls-this-work"
    K = None if profile is None else int(np.sum(profile.k))
    x_hat, report = recon.reconstruct(
        meas,
        psi=psi,
        approach=recon_approach,
        c=cfg.c,
        K=K,
        solver_opts={"max_iter": cfg.max_iter},
        x_true=volume,
    )

    x_hat.save(_outpath(cfg, "xhat.bin"))
    _write_csv(
        _outpath(cfg, "mask.csv"),
        [f"i{j}" for j in range(cfg.N_xi)],
        [pattern.mask_row().tolist()],
    )
    for band in bands:
        if not 0 <= band < cfg.N_xi:
            raise ConfigError(f"band {band} outside [0, {cfg.N_xi})")
        bm = x_hat.band_map(band) if x_hat.spatial_shape else x_hat.X[band][None, :]
        _write_csv(
            _outpath(cfg, f"band_{band:04d}.csv"),
            [f"x{j}" for j in range(bm.shape[1])],
            [[repr(float(v)) for v in row] for row in bm],
        )
    _write_json(_outpath(cfg, "report.json"), report.to_dict())
    print(_outpath(cfg, "report.json"))
    return EXIT_SOLVER if report.failed_pixels else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(sp):
    sp.add_argument("--config", help="JSON file with ExperimentConfig fields")
    sp.add_argument("--N", type=int, dest="N_xi", help="spectral dimension (power of two)")
    sp.add_argument("--q", type=int, help="log2 of the number of symmetric Fourier bands")
    sp.add_argument("--rho", type=float, help="energy fraction for sparsity profiling")
    sp.add_argument("--seed", type=int, help="master seed")
    sp.add_argument("--outdir", help="output directory (default $CODEDFTI_OUTDIR or .)")
    sp.add_argument("--dict", dest="dictionary", help="'synth:<N_f>' or a CSV path")
    sp.add_argument("--max-iter", type=int, dest="max_iter", help="solver iteration cap")
    sp.add_argument("--c", type=float, help="bound constant")


def build_parser():
    ap = argparse.ArgumentParser(prog="codedfti", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("levels", help="build a level scheme")
    _add_common(sp)
    sp.add_argument("--kind", required=True, choices=["dhw-sparsity", "dhw-sampling", "dft"])

    sp = sub.add_parser("coherence", help="coherence matrix for a basis pair")
    _add_common(sp)
    sp.add_argument("--psi", required=True, choices=["dft", "dhw"])
    sp.add_argument("--k", dest="k_csv", help="per-level sparsity counts (CSV) to also emit a budget")

    sp = sub.add_parser("profile", help="dictionary sparsity profile")
    _add_common(sp)
    sp.add_argument("--rhos", help="comma-separated energy fractions")

    sp = sub.add_parser("sample", help="generate an illumination pattern")
    _add_common(sp)
    sp.add_argument("--approach", required=True, choices=list(APPROACHES) + ["nyquist"])
    sp.add_argument("--ratio", type=float, help="measurement ratio")
    sp.add_argument("--m", dest="m_csv", help="explicit per-level counts (CSV) for mls")

    sp = sub.add_parser("phase-transition", help="success-rate curves")
    _add_common(sp)
    sp.add_argument("--ratios", help="comma-separated measurement ratios")
    sp.add_argument("--trials", type=int, help="trials per grid point")
    sp.add_argument("--approaches", help="comma-separated approach list")
    sp.add_argument("--workers", type=int, help="parallel workers")

    sp = sub.add_parser("reconstruct", help="end-to-end acquisition and recovery")
    _add_common(sp)
    sp.add_argument("--approach", required=True, choices=list(APPROACHES))
    sp.add_argument("--ratio", type=float, help="measurement ratio")
    sp.add_argument("--input", help="input volume (flat f64 + JSON sidecar)")
    sp.add_argument("--nx", type=int, dest="n_x", help="pixels along x (synthetic volume)")
    sp.add_argument("--ny", type=int, dest="n_y", help="pixels along y (synthetic volume)")
    sp.add_argument("--eps-nyq", type=float, dest="eps_nyq", help="Nyquist noise budget")
    sp.add_argument("--bands", help="comma-separated band indices to export as CSV maps")
    return ap


def config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config file: {exc}") from None
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name in known:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    for key in ("ratios", "rhos", "approaches"):
        if isinstance(values.get(key), str):
            parts = [p for p in values[key].split(",") if p]
            values[key] = tuple(p if key == "approaches" else float(p) for p in parts)
        elif key in values:
            values[key] = tuple(values[key])
    return ExperimentConfig(**values).validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "levels":
            return cmd_levels(cfg, args.kind)
        if args.command == "coherence":
            return cmd_coherence(cfg, args.psi, args.k_csv)
        if args.command == "profile":
            return cmd_profile(cfg)
        if args.command == "sample":
            return cmd_sample(cfg, args.approach, args.m_csv)
        if args.command == "phase-transition":
            return cmd_phase_transition(cfg)
        if args.command == "reconstruct":
            bands = (0,)
            if args.bands:
                bands = tuple(int(b) for b in args.bands.split(","))
            return cmd_reconstruct(cfg, args.approach, args.input, bands)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
