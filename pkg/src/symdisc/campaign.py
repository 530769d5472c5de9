"""Experiment campaigns: set enumeration, per-set runs, statistics, output.

A campaign is a list of entries, each fixing ``(D, N)``, a coefficient
parametrization, the optics, the noise model and the run mode. Per-set
seeds are derived from the master seed and the global set index only, so
results do not depend on execution order or parallelism.
"""

import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_seed
from ._validation import ConfigError, DomainError
from .me_measure import ProbabilityTable, outcome_table
from .optics import (NoiseModel, OpticalGeometry, capture_pattern, detector_positions,
                     estimate_probabilities, state_transmissions)
from .qudit_core import (CascadeParams, SymmetricSetSpec, cascade_coeffs,
                         hyperspherical_coeffs, make_symmetric_set, random_coeffs)
from .tomography import (fidelity, intensities_to_probabilities, mle_refine,
                         mub_intensities, mub_linear_inversion, phase_retrieval)

MODES = ("ideal", "optical-point", "optical-pixel")
TOMOGRAPHY = (None, "truth", "retrieval")

# (D, N) of the large-dimension rows; N = D except for four showcase sizes
LARGE_D_N = {D: D for D in range(10, 22)}
LARGE_D_N.update({11: 15, 13: 13, 17: 23, 21: 21})


@dataclass
class CampaignEntry:
    D: int
    N: int
    parametrization: dict
    optics: OpticalGeometry = field(default_factory=OpticalGeometry)
    noise: NoiseModel = field(default_factory=NoiseModel)
    mode: str = "ideal"
    tomography: str = None

    def __post_init__(self):
        if not 2 <= self.D <= self.N:
            raise ConfigError(f"entry needs 2 <= D <= N, got D={self.D}, N={self.N}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.tomography not in TOMOGRAPHY:
            raise ConfigError(f"tomography must be one of {TOMOGRAPHY}")
        if not isinstance(self.parametrization, dict) or "kind" not in self.parametrization:
            raise ConfigError("parametrization must be a mapping with a 'kind'")

    def to_dict(self):
        return {"D": self.D, "N": self.N, "parametrization": self.parametrization,
                "optics": self.optics.to_dict(), "noise": self.noise.to_dict(),
                "mode": self.mode, "tomography": self.tomography}

    @classmethod
    def from_dict(cls, data, defaults=None):
        data = {**(defaults or {}), **data}
        try:
            return cls(
                D=int(data["D"]),
                N=int(data["N"]),
                parametrization=data["parametrization"],
                optics=OpticalGeometry.from_dict(data.get("optics") or {}),
                noise=NoiseModel.from_dict(data.get("noise") or {}),
                mode=data.get("mode", "ideal"),
                tomography=data.get("tomography"),
            )
        except (KeyError, TypeError, DomainError) as exc:
            raise ConfigError(f"bad campaign entry {data!r}: {exc}") from exc


@dataclass
class CampaignConfig:
    entries: list
    master_seed: int = 0
    output_dir: str = "campaign_out"

    def to_dict(self):
        return {"master_seed": self.master_seed, "output_dir": self.output_dir,
                "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, data):
        if "entries" not in data:
            raise ConfigError("campaign config needs an 'entries' list")
        defaults = {k: data[k] for k in ("optics", "noise", "mode", "tomography") if k in data}
        entries = [CampaignEntry.from_dict(e, defaults) for e in data["entries"]]
        return cls(entries, int(data.get("master_seed", 0)), data.get("output_dir", "campaign_out"))

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc


def reference_campaign_config(mode="ideal", noise=None, optics=None, master_seed=0,
                              output_dir="campaign_out"):
    """The full set list of the reference experiment (1851 sets).

    D = 2, 3 use 15 points per hyperspherical angle; D = 4..9 use all
    ``j0`` with 20 values of ``alpha``; D = 10..21 use three random sets.
    """
    noise = noise or NoiseModel()
    optics = optics or OpticalGeometry()
    rows = [(2, (2, 3, 7), {"kind": "hyperspherical", "points": 15}),
            (3, (3, 5), {"kind": "hyperspherical", "points": 15})]
    rows += [(D, (D, N), {"kind": "cascade", "alpha_points": 20})
             for D, N in [(4, 6), (5, 7), (6, 7), (7, 11), (8, 12), (9, 13)]]
    entries = [CampaignEntry(D, N, dict(param), optics, noise, mode)
               for D, Ns, param in rows for N in Ns]
    entries += [CampaignEntry(D, N, {"kind": "random", "count": 3, "seed": D}, optics, noise, mode)
                for D, N in LARGE_D_N.items()]
    return CampaignConfig(entries, master_seed, output_dir)


@dataclass(frozen=True)
class SetTask:
    index: int
    entry_index: int
    spec: SymmetricSetSpec
    label: dict


def _grid(param, key, points_key, default_points, lo, hi):
    if key in param:
        values = np.asarray(param[key], dtype=float)
    else:
        n = int(param.get(points_key, default_points))
        values = np.linspace(lo, hi, n) if n > 0 else np.array([])
    if values.size == 0:
        raise ConfigError(f"empty '{key}' grid")
    return values


def _entry_sets(entry):
    param = entry.parametrization
    kind = param["kind"]
    D, N = entry.D, entry.N
    try:
        if kind == "hyperspherical":
            grid = _grid(param, "angles", "points", 37, 0.0, np.pi)
            for angles in itertools.product(grid, repeat=D - 1):
                yield hyperspherical_coeffs(angles), {"kind": kind, "angles": list(angles)}
        elif kind == "cascade":
            j0s = param.get("j0", list(range(1, D)))
            if len(j0s) == 0:
                raise ConfigError("empty 'j0' grid")
            alphas = _grid(param, "alpha", "alpha_points", 21, 0.0, 1.0)
            for j0 in j0s:
                for alpha in alphas:
                    c = cascade_coeffs(D, CascadeParams(int(j0), float(alpha)))
                    yield c, {"kind": kind, "j0": int(j0), "alpha": float(alpha)}
        elif kind == "random":
            count = int(param.get("count", 1))
            if count < 1:
                raise ConfigError("random parametrization needs count >= 1")
            seed = int(param.get("seed", 0))
            for i in range(count):
                yield random_coeffs(D, derive_seed(seed, i)), {"kind": kind, "seed": seed, "draw": i}
        elif kind == "explicit":
            coeffs = param.get("coefficients") or []
            if len(coeffs) == 0:
                raise ConfigError("explicit parametrization needs coefficients")
            for i, c in enumerate(coeffs):
                c = np.asarray(c, dtype=float)
                yield c / np.linalg.norm(c), {"kind": kind, "draw": i}
        else:
            raise ConfigError(f"unknown parametrization kind {kind!r}")
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def enumerate_sets(config):
    """Deterministically list every set of the campaign, in config order."""
    tasks = []
    for e_idx, entry in enumerate(config.entries):
        for c, label in _entry_sets(entry):
            try:
                spec = SymmetricSetSpec(entry.D, entry.N, c)
            except DomainError as exc:
                raise ConfigError(f"entry {e_idx}: {exc}") from exc
            tasks.append(SetTask(len(tasks), e_idx, spec, label))
    return tasks


def rmsd(residuals):
    residuals = np.asarray(residuals, dtype=float)
    return float(np.sqrt(np.sum(residuals**2) / residuals.shape[0] ** 2))


@dataclass(eq=False)
class DiscriminationReport:
    spec: SymmetricSetSpec
    mode: str
    theory: np.ndarray
    experiment: np.ndarray
    p_corr_theory: float
    p_corr_expt: float
    residuals: np.ndarray
    rmsd: float
    seed: int = 0
    label: dict = field(default_factory=dict)
    fidelities: list = None
    degenerate: list = field(default_factory=list)
    index: int = 0

    @property
    def mean_fidelity(self):
        return None if not self.fidelities else float(np.mean(self.fidelities))

    @property
    def name(self):
        return f"D{self.spec.D:02d}_N{self.spec.N:02d}_{self.label.get('kind', 'set')}_{self.index:05d}"

    def to_dict(self):
        return {
            "index": self.index,
            "D": self.spec.D,
            "N": self.spec.N,
            "coefficients": [format(v, ".17g") for v in self.spec.c],
            "label": self.label,
            "mode": self.mode,
            "seed": self.seed,
            "p_corr_theory": self.p_corr_theory,
            "p_corr_expt": self.p_corr_expt,
            "rmsd": self.rmsd,
            "theory": self.theory.tolist(),
            "experiment": self.experiment.tolist(),
            "residuals": self.residuals.tolist(),
            "fidelities": self.fidelities,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, data):
        spec = SymmetricSetSpec(int(data["D"]), int(data["N"]),
                                np.array([float(v) for v in data["coefficients"]]))
        return cls(spec, data["mode"], np.array(data["theory"]), np.array(data["experiment"]),
                   data["p_corr_theory"], data["p_corr_expt"], np.array(data["residuals"]),
                   data["rmsd"], data.get("seed", 0), data.get("label", {}),
                   data.get("fidelities"), data.get("degenerate", []), data.get("index", 0))


def _prepared_fidelity(prepared, target, pattern, g, tomography, seed):
    if tomography == "truth":
        return fidelity(prepared, target)
    if target.shape[0] == 2:
        I = mub_intensities(prepared, g)
        p = intensities_to_probabilities(I)
        rho = mle_refine(p, mub_linear_inversion(p)).rho
        return fidelity(rho, target)
    image = np.abs(prepared) ** 2
    est = phase_retrieval(image, pattern, g, seed=seed).estimate
    return fidelity(est, target)


def run_set(spec, mode="ideal", optics=None, noise=None, seed=0, tomography=None,
            compensate=True, label=None, index=0):
    """Discriminate one symmetric set and compare with theory.

    ``ideal`` copies the theoretical table. The optical modes prepare each
    state, capture its focal pattern (point samples or pixels), and estimate
    the table from the detector readings; the success probability is the
    mean of the estimated diagonal.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    theory = outcome_table(spec)
    fidelities = None
    degenerate = []
    if mode == "ideal":
        expt = ProbabilityTable(theory.entries.copy())
    else:
        optics = optics or OpticalGeometry()
        noise = noise or NoiseModel()
        readout = "point" if mode == "optical-point" else "pixel"
        include = detector_positions(spec.N, optics) if readout == "point" else None
        states = make_symmetric_set(spec)
        patterns, fidelities = [], []
        for j in range(spec.N):
            state_seed = derive_seed(seed, j)
            pattern = capture_pattern(state_transmissions(spec, j), optics,
                                      noise.with_seed(state_seed), readout=readout,
                                      include=include)
            patterns.append(pattern)
            if tomography:
                fidelities.append(_prepared_fidelity(pattern.prepared, states[j], pattern,
                                                     optics, tomography, state_seed))
        expt = estimate_probabilities(patterns, spec.N, optics, compensate=compensate)
        degenerate = list(expt.degenerate)
        if not tomography:
            fidelities = None
    residuals = theory.entries - expt.entries
    return DiscriminationReport(
        spec=spec,
        mode=mode,
        theory=theory.entries,
        experiment=expt.entries,
        p_corr_theory=float(np.sum(spec.c) ** 2 / spec.N),
        p_corr_expt=expt.p_correct(),
        residuals=residuals,
        rmsd=rmsd(residuals),
        seed=int(seed),
        label=dict(label or {}),
        fidelities=fidelities,
        degenerate=degenerate,
        index=index,
    )


def _run_task(args):
    task, entry, seed = args
    return run_set(task.spec, entry.mode, entry.optics, entry.noise, seed,
                   tomography=entry.tomography, label=task.label, index=task.index)


def run_campaign(config, workers=None):
    """Run every set; reports come back in enumeration order."""
    tasks = enumerate_sets(config)
    jobs = [(t, config.entries[t.entry_index], derive_seed(config.master_seed, t.index))
            for t in tasks]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_task, jobs, chunksize=16))
    return [_run_task(job) for job in jobs]


def _param_columns(label):
    kind = label.get("kind")
    if kind == "hyperspherical":
        return list(label["angles"])
    if kind == "cascade":
        return [label["j0"], label["alpha"]]
    return [label.get("draw", 0)]


def aggregate(reports, bin_width=0.0025):
    """Campaign statistics.

    Returns a dict with the RMSD histogram (bin width ``bin_width``, first
    edge at 0), RMSD summary statistics, per-``(D, N, kind)`` success
    probability series (parameters, theory, experiment) and the per-set
    ``(mean fidelity, -RMSD)`` pairs when fidelities are present.
    """
    rmsds = np.array([r.rmsd for r in reports], dtype=float)
    nbins = int(np.floor(rmsds.max() / bin_width)) + 1 if rmsds.size else 1
    edges = bin_width * np.arange(nbins + 1)
    counts = np.zeros(nbins, dtype=int)
    for v in rmsds:
        counts[min(int(np.floor(v / bin_width)), nbins - 1)] += 1

    series = {}
    for r in reports:
        key = f"D{r.spec.D:02d}_N{r.spec.N:02d}_{r.label.get('kind', 'set')}"
        series.setdefault(key, []).append(_param_columns(r.label) + [r.p_corr_theory, r.p_corr_expt])

    pairs = [[r.index, r.mean_fidelity, -r.rmsd] for r in reports if r.fidelities]
    stats = {}
    if rmsds.size:
        stats = {"min": float(rmsds.min()), "max": float(rmsds.max()),
                 "median": float(np.median(rmsds)), "mean": float(rmsds.mean()),
                 "fraction_below_2pct": float(np.mean(rmsds < 0.02))}
    return {
        "n_sets": len(reports),
        "n_states": int(sum(r.spec.N for r in reports)),
        "histogram": {"bin_width": bin_width, "edges": edges.tolist(), "counts": counts.tolist()},
        "rmsd": stats,
        "series": series,
        "fidelity_rmsd": pairs,
        "degenerate_sets": [r.index for r in reports if r.degenerate],
    }


def _write(path, text):
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc


def _dat(rows):
    return "".join(" ".join(format(v, ".17g") for v in row) + "\n" for row in rows)


def emit_reports(summary, reports, output_dir):
    """Write per-set JSON, CSV tables, the summary and plain-text plot data.

    Layout: ``sets/<name>.json``, ``tables/<name>_{theory,expt}.csv``,
    ``summary.json`` and ``plots/*.dat`` (whitespace-separated columns).
    Returns the list of written paths.
    """
    written = []
    for sub in ("sets", "tables", "plots"):
        try:
            os.makedirs(os.path.join(output_dir, sub), exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create {os.path.join(output_dir, sub)}: {exc}") from exc

    for r in reports:
        path = os.path.join(output_dir, "sets", r.name + ".json")
        _write(path, json.dumps(r.to_dict(), indent=1, sort_keys=True) + "\n")
        written.append(path)
        for tag, table in (("theory", r.theory), ("expt", r.experiment)):
            path = os.path.join(output_dir, "tables", f"{r.name}_{tag}.csv")
            _write(path, ProbabilityTable(table).to_csv())
            written.append(path)

    for key, rows in summary["series"].items():
        path = os.path.join(output_dir, "plots", f"pcorr_{key}.dat")
        _write(path, _dat(rows))
        written.append(path)
    hist = summary["histogram"]
    path = os.path.join(output_dir, "plots", "rmsd_histogram.dat")
    _write(path, _dat(zip(hist["edges"][:-1], hist["counts"])))
    written.append(path)
    if summary["fidelity_rmsd"]:
        path = os.path.join(output_dir, "plots", "fidelity_rmsd.dat")
        _write(path, _dat(summary["fidelity_rmsd"]))
        written.append(path)

    path = os.path.join(output_dir, "summary.json")
    _write(path, json.dumps(summary, indent=1, sort_keys=True) + "\n")
    written.append(path)
    return written


def load_reports(directory):
    sets_dir = os.path.join(directory, "sets")
    if not os.path.isdir(sets_dir):
        raise ConfigError(f"no 'sets' directory under {directory}")
    reports = []
    for name in sorted(os.listdir(sets_dir)):
        if name.endswith(".json"):
            with open(os.path.join(sets_dir, name)) as fh:
                reports.append(DiscriminationReport.from_dict(json.load(fh)))
    return sorted(reports, key=lambda r: r.index)
