"""Experiment orchestration: spec files, trials, reports, sweeps.

A spec is a flat ``key = value`` text file with section headers. Every
protocol knob (N, R, E, q, sigma, L, U, beta, T, tau_min, tau_max) is
settable by exactly that name. One experiment runs ``trials`` independent
trials; within a trial every requested mode consumes bitwise-identical
client partitions and initial weights, so mode differences are purely
algorithmic. All seeds derive hierarchically from the master seed.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import (
    Dataset,
    PartitionSpec,
    SplitSpec,
    load_dataset,
    make_blobs,
    partition_clients,
    split_holdout,
    split_labeled,
)
from .errors import ParameterError, SpecError
from .federation import (
    MODES,
    FederationConfig,
    FederationHistory,
    run_federation,
)
from .nn import ArchSpec, ModelParams, init_params, load_params
from .pretrain import ContrastiveConfig, contrastive_pretrain, init_encoder
from .rngutil import derive_seed
from .selftrain import SelfTrainConfig

OUTPUT_DIR_ENV = "FEDSTAR_OUTPUT_DIR"

SWEEPABLE = ("q", "E", "N", "sigma", "L", "U", "tau_max", "class_sigma_c")
_INT_SWEEP = ("E", "N")


@dataclass(frozen=True)
class BlobSpec:
    # spread 1.2 puts a converged pooled-data model near 0.90 test accuracy,
    # leaving headroom to observe semi-supervised gains
    n: int = 5000
    num_classes: int = 10
    dim: int = 16
    spread: float = 1.2
    test_fraction: float = 0.2


@dataclass(frozen=True)
class ExperimentSpec:
    blob: BlobSpec = BlobSpec()
    data_file: str | None = None
    hidden: tuple[int, ...] = (64, 32)
    split: SplitSpec = SplitSpec(L=0.05, U=1.0)
    sigma: float = 0.25
    class_mu: int | None = None
    class_sigma_c: float = 0.0
    n_clients: int = 10
    rounds: int = 60
    participation: float = 0.8
    init_file: str | None = None
    selftrain: SelfTrainConfig = SelfTrainConfig()
    pretrain_cfg: ContrastiveConfig = ContrastiveConfig()
    pretrain_enabled: bool = False
    corpus_n: int | None = None
    trials: int = 3
    seed: int = 0
    output_dir: str = "runs/experiment"
    modes: tuple[str, ...] = MODES

    @property
    def pretrain(self) -> ContrastiveConfig | None:
        return self.pretrain_cfg if self.pretrain_enabled else None

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.n_clients < 1:
            raise ParameterError("N must be >= 1")
        if self.rounds < 0:
            raise ParameterError("R must be >= 0")
        if not 0.0 < self.participation <= 1.0:
            raise ParameterError("q must be in (0, 1]")
        if not self.modes:
            raise ParameterError("at least one mode is required")
        for m in self.modes:
            if m not in MODES:
                raise ParameterError(f"unknown mode {m!r}")
        if self.pretrain_enabled and self.init_file:
            raise ParameterError(
                "init_file and pretraining are mutually exclusive"
            )


@dataclass(frozen=True)
class ModeResult:
    """Accuracy of one mode at one labeled fraction, across trials."""

    mode: str
    labeled_fraction: float
    accuracies: tuple[float, ...]
    history_files: tuple[str, ...]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))

    @property
    def var_accuracy(self) -> float:
        if len(self.accuracies) < 2:
            return 0.0
        return float(np.var(self.accuracies, ddof=1))


@dataclass(frozen=True)
class ComparisonReport:
    results: tuple[ModeResult, ...]
    trials: int
    seed: int
    dataset_hashes: tuple[str, ...]

    def result(self, mode: str) -> ModeResult:
        for r in self.results:
            if r.mode == mode:
                return r
        raise ParameterError(f"no result for mode {mode!r}")


# --------------------------------------------------------------------------
# spec file parsing

def _as_int(raw: str) -> int:
    return int(raw)


def _as_float(raw: str) -> float:
    return float(raw)


def _as_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _as_str(raw: str) -> str:
    return raw.strip()


def _as_int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in raw.split(",") if p.strip())


def _as_str_tuple(raw: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


_SCHEMA = {
    "data": {
        "n": _as_int,
        "C": _as_int,
        "d": _as_int,
        "spread": _as_float,
        "test_fraction": _as_float,
        "file": _as_str,
    },
    "model": {
        "hidden": _as_int_tuple,
    },
    "split": {
        "L": _as_float,
        "U": _as_float,
    },
    "partition": {
        "sigma": _as_float,
        "class_mu": _as_int,
        "class_sigma_c": _as_float,
    },
    "federation": {
        "N": _as_int,
        "R": _as_int,
        "q": _as_float,
        "init_file": _as_str,
    },
    "selftrain": {
        "E": _as_int,
        "beta": _as_float,
        "T": _as_float,
        "tau_min": _as_float,
        "tau_max": _as_float,
        "batch_size": _as_int,
        "threshold_on_scaled": _as_bool,
        "weight_decay": _as_float,
    },
    "pretrain": {
        "enabled": _as_bool,
        "pretrain_batch_size": _as_int,
        "pretrain_epochs": _as_int,
        "embedding_dim": _as_int,
        "augment_noise": _as_float,
        "corpus_n": _as_int,
    },
    "experiment": {
        "trials": _as_int,
        "seed": _as_int,
        "output_dir": _as_str,
        "modes": _as_str_tuple,
    },
}

_KEY_SECTION = {
    key: section for section, keys in _SCHEMA.items() for key in keys
}


def _parse_spec_text(text: str, path) -> dict[str, tuple[object, int]]:
    """Flat key -> (typed value, line number); keys are globally unique."""
    values: dict[str, tuple[object, int]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise SpecError(f"unknown section [{section}]", path, lineno)
            continue
        if "=" not in line:
            raise SpecError(f"expected 'key = value', got {line!r}", path, lineno)
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.split("#", 1)[0].strip()
        if key not in _KEY_SECTION:
            raise SpecError(f"unknown key {key!r}", path, lineno)
        if section is not None and key not in _SCHEMA[section]:
            raise SpecError(
                f"key {key!r} belongs in [{_KEY_SECTION[key]}], not [{section}]",
                path,
                lineno,
            )
        if key in values:
            raise SpecError(f"duplicate key {key!r}", path, lineno)
        caster = _SCHEMA[_KEY_SECTION[key]][key]
        try:
            values[key] = (caster(raw_value), lineno)
        except ValueError as exc:
            raise SpecError(f"bad value for {key!r}: {exc}", path, lineno) from None
    return values


def load_spec(path) -> ExperimentSpec:
    """Parse and validate an experiment spec file.

    Unknown keys, malformed values, and out-of-range parameters raise
    SpecError with the offending line number. Referenced files are
    resolved relative to the spec file and must exist. The environment
    variable FEDSTAR_OUTPUT_DIR, when set, overrides output_dir.
    """
    path = Path(path)
    if not path.is_file():
        raise SpecError("spec file not found", path)
    values = _parse_spec_text(path.read_text(encoding="utf-8"), path)

    def get(key, default):
        return values[key][0] if key in values else default

    def line_of(key):
        return values[key][1] if key in values else None

    def check(key, ok: bool, message: str):
        if not ok:
            raise SpecError(message, path, line_of(key))

    base = ExperimentSpec()
    blob = BlobSpec(
        n=get("n", base.blob.n),
        num_classes=get("C", base.blob.num_classes),
        dim=get("d", base.blob.dim),
        spread=get("spread", base.blob.spread),
        test_fraction=get("test_fraction", base.blob.test_fraction),
    )
    check("n", blob.n >= blob.num_classes, "n must be >= C")
    check("C", blob.num_classes >= 2, "C must be >= 2")
    check("d", blob.dim >= 2, "d must be >= 2")
    check("spread", blob.spread >= 0, "spread must be >= 0")
    check(
        "test_fraction",
        0.0 < blob.test_fraction < 1.0,
        "test_fraction must be in (0, 1)",
    )

    data_file = get("file", None)
    if data_file is not None:
        data_file = str((path.parent / data_file).resolve())
        check("file", Path(data_file).is_file(), f"dataset file not found: {data_file}")
        for key in ("n", "C", "d", "spread"):
            check(key, key not in values, f"{key!r} conflicts with 'file'")

    init_file = get("init_file", None)
    if init_file is not None:
        init_file = str((path.parent / init_file).resolve())
        check(
            "init_file",
            Path(init_file).is_file(),
            f"init file not found: {init_file}",
        )

    check("L", 0.0 < get("L", base.split.L) <= 1.0, "L must be in (0, 1]")
    check("U", 0.0 < get("U", base.split.U) <= 1.0, "U must be in (0, 1]")
    check("q", 0.0 < get("q", base.participation) <= 1.0, "q must be in (0, 1]")
    check("N", get("N", base.n_clients) >= 1, "N must be >= 1")
    check("R", get("R", base.rounds) >= 0, "R must be >= 0")
    check("E", get("E", 1) >= 1, "E must be >= 1")
    check("trials", get("trials", base.trials) >= 1, "trials must be >= 1")
    check("sigma", 0.0 <= get("sigma", base.sigma) <= 0.5, "sigma must be in [0, 0.5]")
    check(
        "class_sigma_c",
        0.0 <= get("class_sigma_c", 0.0) <= 0.5,
        "class_sigma_c must be in [0, 0.5]",
    )
    if "class_mu" in values:
        check(
            "class_mu",
            1 <= values["class_mu"][0] <= blob.num_classes,
            "class_mu must be in [1, C]",
        )
    elif "class_sigma_c" in values:
        raise SpecError(
            "class_sigma_c requires class_mu", path, line_of("class_sigma_c")
        )

    tau_min = get("tau_min", 0.5)
    tau_max = get("tau_max", 0.9)
    check("tau_min", 0.0 < tau_min < 1.0, "tau_min must be in (0, 1)")
    check("tau_max", tau_min < tau_max <= 1.0, "tau_max must be in (tau_min, 1]")
    check("beta", get("beta", 0.5) >= 0.0, "beta must be >= 0")
    check("T", get("T", 4.0) > 0.0, "T must be > 0")
    check("batch_size", get("batch_size", 32) >= 1, "batch_size must be >= 1")
    check("weight_decay", get("weight_decay", 0.0) >= 0.0, "weight_decay must be >= 0")

    modes = get("modes", base.modes)
    for m in modes:
        check("modes", m in MODES, f"unknown mode {m!r}; choose from {MODES}")
    check("modes", len(modes) >= 1, "modes must not be empty")

    pre_enabled = get("enabled", False)
    if pre_enabled and init_file:
        raise SpecError(
            "init_file and pretraining are mutually exclusive",
            path,
            line_of("enabled"),
        )
    check(
        "pretrain_epochs",
        get("pretrain_epochs", 50) >= 1,
        "pretrain_epochs must be >= 1",
    )
    try:
        pre_cfg = ContrastiveConfig(
            batch_size=get("pretrain_batch_size", 64),
            epochs=get("pretrain_epochs", 50),
            embedding_dim=get("embedding_dim", 32),
            augment_noise=get("augment_noise", 1.5),
            seed=0,
        )
    except ParameterError as exc:
        raise SpecError(str(exc), path) from None

    try:
        selftrain = SelfTrainConfig(
            beta=get("beta", 0.5),
            temperature=get("T", 4.0),
            tau_min=tau_min,
            tau_max=tau_max,
            batch_size=get("batch_size", 32),
            local_epochs=get("E", 1),
            threshold_on_scaled=get("threshold_on_scaled", True),
            weight_decay=get("weight_decay", 0.0),
        )
        spec = ExperimentSpec(
            blob=blob,
            data_file=data_file,
            hidden=get("hidden", base.hidden),
            split=SplitSpec(L=get("L", base.split.L), U=get("U", base.split.U)),
            sigma=get("sigma", base.sigma),
            class_mu=get("class_mu", None),
            class_sigma_c=get("class_sigma_c", 0.0),
            n_clients=get("N", base.n_clients),
            rounds=get("R", base.rounds),
            participation=get("q", base.participation),
            init_file=init_file,
            selftrain=selftrain,
            pretrain_cfg=pre_cfg,
            pretrain_enabled=pre_enabled,
            corpus_n=get("corpus_n", None),
            trials=get("trials", base.trials),
            seed=get("seed", base.seed),
            output_dir=os.environ.get(
                OUTPUT_DIR_ENV, get("output_dir", base.output_dir)
            ),
            modes=modes,
        )
    except ParameterError as exc:
        raise SpecError(str(exc), path) from None
    return spec


def save_spec(spec: ExperimentSpec, path):
    """Write a spec back out; load_spec(save_spec(s)) round-trips."""
    lines = ["[data]"]
    if spec.data_file:
        lines.append(f"file = {spec.data_file}")
        lines.append(f"test_fraction = {spec.blob.test_fraction!r}")
    else:
        lines += [
            f"n = {spec.blob.n}",
            f"C = {spec.blob.num_classes}",
            f"d = {spec.blob.dim}",
            f"spread = {spec.blob.spread!r}",
            f"test_fraction = {spec.blob.test_fraction!r}",
        ]
    lines += [
        "",
        "[model]",
        "hidden = " + ",".join(str(h) for h in spec.hidden),
        "",
        "[split]",
        f"L = {spec.split.L!r}",
        f"U = {spec.split.U!r}",
        "",
        "[partition]",
        f"sigma = {spec.sigma!r}",
    ]
    if spec.class_mu is not None:
        lines += [
            f"class_mu = {spec.class_mu}",
            f"class_sigma_c = {spec.class_sigma_c!r}",
        ]
    lines += [
        "",
        "[federation]",
        f"N = {spec.n_clients}",
        f"R = {spec.rounds}",
        f"q = {spec.participation!r}",
    ]
    if spec.init_file:
        lines.append(f"init_file = {spec.init_file}")
    st = spec.selftrain
    lines += [
        "",
        "[selftrain]",
        f"E = {st.local_epochs}",
        f"beta = {st.beta!r}",
        f"T = {st.temperature!r}",
        f"tau_min = {st.tau_min!r}",
        f"tau_max = {st.tau_max!r}",
        f"batch_size = {st.batch_size}",
        f"threshold_on_scaled = {str(st.threshold_on_scaled).lower()}",
        f"weight_decay = {st.weight_decay!r}",
        "",
        "[pretrain]",
        f"enabled = {str(spec.pretrain_enabled).lower()}",
        f"pretrain_batch_size = {spec.pretrain_cfg.batch_size}",
        f"pretrain_epochs = {spec.pretrain_cfg.epochs}",
        f"embedding_dim = {spec.pretrain_cfg.embedding_dim}",
        f"augment_noise = {spec.pretrain_cfg.augment_noise!r}",
    ]
    if spec.corpus_n is not None:
        lines.append(f"corpus_n = {spec.corpus_n}")
    lines += [
        "",
        "[experiment]",
        f"trials = {spec.trials}",
        f"seed = {spec.seed}",
        f"output_dir = {spec.output_dir}",
        "modes = " + ",".join(spec.modes),
        "",
    ]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def default_spec() -> ExperimentSpec:
    return ExperimentSpec()


# --------------------------------------------------------------------------
# running experiments

def dataset_hash(dataset: Dataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.features).tobytes())
    h.update(np.ascontiguousarray(dataset.labels).tobytes())
    h.update(str(dataset.num_classes).encode())
    return h.hexdigest()


def _trial_inputs(spec: ExperimentSpec, trial: int):
    """Dataset, split, partition, and init for one trial; identical for
    every mode within the trial."""
    trial_seed = derive_seed(spec.seed, "trial", trial)
    if spec.data_file:
        full = load_dataset(spec.data_file)
    else:
        b = spec.blob
        full = make_blobs(
            b.n, b.num_classes, b.dim, b.spread, derive_seed(trial_seed, "data")
        )
    train, test = split_holdout(
        full, spec.blob.test_fraction, derive_seed(trial_seed, "holdout")
    )
    labeled, unlabeled = split_labeled(
        train, spec.split, derive_seed(trial_seed, "labeled-split")
    )
    part = PartitionSpec(
        n_clients=spec.n_clients,
        sigma=spec.sigma,
        class_mu=spec.class_mu,
        class_sigma_c=spec.class_sigma_c,
        seed=derive_seed(trial_seed, "partition"),
    )
    clients = partition_clients(labeled, unlabeled, part)
    arch = ArchSpec(full.dim, spec.hidden, full.num_classes)
    init = _initial_params(spec, arch, trial_seed, train)
    return full, test, clients, init, trial_seed


def _initial_params(
    spec: ExperimentSpec, arch: ArchSpec, trial_seed: int, train: Dataset
) -> ModelParams:
    if spec.init_file:
        params = load_params(spec.init_file)
        if params.arch != arch:
            raise ParameterError(
                f"init file arch {params.arch} does not match experiment arch {arch}"
            )
        return params
    if spec.pretrain is not None:
        cfg = replace(spec.pretrain, seed=derive_seed(trial_seed, "pretrain"))
        corpus_n = spec.corpus_n if spec.corpus_n is not None else spec.blob.n
        corpus = make_blobs(
            corpus_n,
            train.num_classes,
            train.dim,
            spec.blob.spread,
            derive_seed(trial_seed, "pretrain-corpus"),
        )
        encoder = init_encoder(arch, cfg)
        return contrastive_pretrain(corpus.features, cfg, encoder)
    return init_params(arch, derive_seed(trial_seed, "init"))


def run_experiment(
    spec: ExperimentSpec, quiet: bool = True
) -> ComparisonReport:
    """Run all trials and modes; write per-round CSVs, the summary report,
    and comparison figures under spec.output_dir."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    histories: dict[str, list[FederationHistory]] = {m: [] for m in spec.modes}
    hashes = []
    rel_files: dict[str, list[str]] = {m: [] for m in spec.modes}
    for trial in range(spec.trials):
        full, test, clients, init, trial_seed = _trial_inputs(spec, trial)
        hashes.append(dataset_hash(full))
        fed_seed = derive_seed(trial_seed, "federation")
        for mode in spec.modes:
            cfg = FederationConfig(
                num_clients=spec.n_clients,
                rounds=spec.rounds,
                participation=spec.participation,
                selftrain=spec.selftrain,
                mode=mode,
                seed=fed_seed,
            )
            hist = run_federation(cfg, clients, test, init)
            rel = f"trial{trial}/{mode}.csv"
            target = out / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            emit_csv(hist, target)
            histories[mode].append(hist)
            rel_files[mode].append(rel)
            if not quiet:
                final = hist.final_accuracy if hist.records else float("nan")
                print(f"  trial {trial} {mode}: accuracy {final:.4f}")
    results = tuple(
        ModeResult(
            mode=mode,
            labeled_fraction=spec.split.L,
            accuracies=tuple(
                h.final_accuracy if h.records else 0.0 for h in histories[mode]
            ),
            history_files=tuple(rel_files[mode]),
        )
        for mode in spec.modes
    )
    report = ComparisonReport(
        results=results,
        trials=spec.trials,
        seed=spec.seed,
        dataset_hashes=tuple(hashes),
    )
    emit_csv(report, out / "report.csv")
    if spec.rounds > 0:
        from .plots import plot_round_curves

        plot_round_curves(histories, out / "plots" / "rounds.png")
    return report


def sweep(
    spec: ExperimentSpec, parameter: str, values, quiet: bool = True
) -> list[ComparisonReport]:
    """Re-run the experiment once per value of one parameter.

    Seeds are shared across sweep points, so the generated datasets are
    identical and only the swept parameter differs. Each point writes into
    its own subdirectory; a sweep summary CSV and figure land at the top.
    """
    if parameter not in SWEEPABLE:
        raise ParameterError(
            f"cannot sweep {parameter!r}; choose from {SWEEPABLE}"
        )
    if parameter == "class_sigma_c" and spec.class_mu is None:
        raise ParameterError("sweeping class_sigma_c requires class_mu")
    base_out = Path(spec.output_dir)
    reports = []
    for value in values:
        point = _apply_parameter(spec, parameter, value)
        point = replace(
            point, output_dir=str(base_out / f"{parameter}={_fmt_value(value)}")
        )
        if not quiet:
            print(f"sweep {parameter} = {_fmt_value(value)}")
        reports.append(run_experiment(point, quiet=quiet))
    base_out.mkdir(parents=True, exist_ok=True)
    _emit_sweep_csv(reports, parameter, values, base_out / f"sweep_{parameter}.csv")
    from .plots import plot_sweep

    plot_sweep(
        reports, parameter, values, base_out / "plots" / f"sweep_{parameter}.png"
    )
    return reports


def _fmt_value(value) -> str:
    if isinstance(value, int):
        return str(value)
    return f"{value:g}"


def _apply_parameter(
    spec: ExperimentSpec, parameter: str, value
) -> ExperimentSpec:
    if parameter == "q":
        return replace(spec, participation=float(value))
    if parameter == "E":
        return replace(spec, selftrain=replace(spec.selftrain, local_epochs=int(value)))
    if parameter == "N":
        return replace(spec, n_clients=int(value))
    if parameter == "sigma":
        return replace(spec, sigma=float(value))
    if parameter == "L":
        return replace(spec, split=SplitSpec(L=float(value), U=spec.split.U))
    if parameter == "U":
        return replace(spec, split=SplitSpec(L=spec.split.L, U=float(value)))
    if parameter == "tau_max":
        return replace(spec, selftrain=replace(spec.selftrain, tau_max=float(value)))
    if parameter == "class_sigma_c":
        return replace(spec, class_sigma_c=float(value))
    raise ParameterError(f"unknown parameter {parameter!r}")


def parse_sweep_values(parameter: str, raw: str) -> list:
    """Parse a comma-separated value list for the given sweep parameter."""
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ParameterError("empty sweep value list")
    caster = int if parameter in _INT_SWEEP else float
    try:
        return [caster(p) for p in parts]
    except ValueError as exc:
        raise ParameterError(f"bad sweep value: {exc}") from None


# --------------------------------------------------------------------------
# CSV emission

def _fmt_float(x: float) -> str:
    return f"{x:.6f}"


def emit_csv(obj, path):
    """Write a FederationHistory or ComparisonReport as UTF-8 CSV with a
    fixed column order and floats at 6 decimal places. Re-emitting the
    same object produces byte-identical files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, FederationHistory):
        lines = ["round,tau,accuracy,loss,acceptance_rate,participants"]
        for rec in obj.records:
            participants = ";".join(str(i) for i in rec.participating)
            lines.append(
                f"{rec.round},{_fmt_float(rec.tau)},"
                f"{_fmt_float(rec.global_test_accuracy)},"
                f"{_fmt_float(rec.mean_train_loss)},"
                f"{_fmt_float(rec.pseudo_acceptance_rate)},{participants}"
            )
    elif isinstance(obj, ComparisonReport):
        lines = [
            "mode,L,trials,mean_accuracy,std_accuracy,var_accuracy,"
            "trial_accuracies,history_files"
        ]
        for res in obj.results:
            accs = ";".join(_fmt_float(a) for a in res.accuracies)
            files = ";".join(res.history_files)
            lines.append(
                f"{res.mode},{_fmt_float(res.labeled_fraction)},{obj.trials},"
                f"{_fmt_float(res.mean_accuracy)},{_fmt_float(res.std_accuracy)},"
                f"{_fmt_float(res.var_accuracy)},{accs},{files}"
            )
    else:
        raise ParameterError(f"cannot emit {type(obj).__name__} as CSV")
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def _emit_sweep_csv(reports, parameter, values, path):
    lines = [f"{parameter},mode,L,mean_accuracy,std_accuracy,var_accuracy"]
    for value, report in zip(values, reports):
        for res in report.results:
            lines.append(
                f"{_fmt_value(value)},{res.mode},{_fmt_float(res.labeled_fraction)},"
                f"{_fmt_float(res.mean_accuracy)},{_fmt_float(res.std_accuracy)},"
                f"{_fmt_float(res.var_accuracy)}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
