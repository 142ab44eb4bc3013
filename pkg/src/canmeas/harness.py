"""Experiment configuration, invariant suite, sweeps and reports.

A config is a JSON document validated against :data:`CONFIG_SCHEMA`.  Keys
starting with an underscore are free-form comments (units, notes) and are
carried through a parse/serialize round trip unchanged.
"""
import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from canmeas import __version__
from canmeas.errors import CanmeasError, ConfigError
from canmeas.kernels import MeanKernel, conditional_expectation, parse_kernel, pinching
from canmeas.lattice import (
    ApparatusPreparation,
    Lattice,
    dirac_family,
    make_lattice,
    momentum_observable,
    position_observable,
)
from canmeas.linalg import (
    DensityState,
    HermitianObservable,
    function_of_observable,
    operator_norm,
    random_density_matrix,
    random_hermitian,
    random_state_vector,
    random_unitary,
    spectral_decompose,
)
from canmeas import oracles
from canmeas.process import (
    MeasurementProcess,
    PointerBins,
    apparatus_contraction,
    coupling_unitary,
    evolve_pure,
    heisenberg,
    heisenberg_pointer_check,
    joint_readout_residual,
    make_bins,
    momentum_twirl,
    pointer_moment_errors,
    pointer_readout_residual,
    srinivas_gap,
)

CSV_COLUMNS = ("s", "srinivas_gap", "pointer_mean_err", "pointer_var_err", "thm52_residual", "thm54_residual")

_COMMENT = {"^_": {}}
_NUMBER_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "patternProperties": _COMMENT,
    "required": ["system", "apparatus", "kernel", "bins"],
    "properties": {
        "system": {
            "type": "object",
            "additionalProperties": False,
            "patternProperties": _COMMENT,
            "required": ["dim", "eigenvalue_multipliers", "Y", "rho"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "eigenvalue_multipliers": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                "basis_seed": {"type": "integer"},
                "Y": {
                    "type": "object",
                    "additionalProperties": False,
                    "patternProperties": _COMMENT,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["matrix", "random", "x_function"]},
                        "real": _NUMBER_MATRIX,
                        "imag": _NUMBER_MATRIX,
                        "seed": {"type": "integer"},
                        "values": _NUMBER_LIST,
                    },
                },
                "rho": {
                    "type": "object",
                    "additionalProperties": False,
                    "patternProperties": _COMMENT,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["pure", "diagonal", "random"]},
                        "real": _NUMBER_LIST,
                        "imag": _NUMBER_LIST,
                        "values": _NUMBER_LIST,
                        "seed": {"type": "integer"},
                        "rank": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "apparatus": {
            "type": "object",
            "additionalProperties": False,
            "patternProperties": _COMMENT,
            "required": ["n_points", "length", "momentum_shape", "s_list"],
            "properties": {
                "n_points": {"type": "integer"},
                "length": {"type": "number"},
                "momentum_shape": {"enum": ["gaussian", "uniform_window", "two_sided_exp"]},
                "s_list": _NUMBER_LIST,
                "envelope": {"type": ["number", "boolean"]},
            },
        },
        "kernel": {"type": "string"},
        "kernels": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        "bins": {
            "type": "object",
            "additionalProperties": False,
            "patternProperties": _COMMENT,
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "edges": _NUMBER_LIST,
            },
            "oneOf": [{"required": ["count"]}, {"required": ["edges"]}],
        },
        "event_bins": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "patternProperties": _COMMENT,
            "properties": {
                "report": {"type": "string"},
                "csv": {"type": "string"},
                "comparison": {"type": "string"},
            },
        },
    },
}


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``raw`` is the canonical JSON form."""

    raw: dict[str, Any]

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{path}: {exc.message}") from None
        return cls(json.loads(json.dumps(data)))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        return cls.from_json(text)

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)

    def __getitem__(self, key):
        return self.raw[key]


def bundled_config(name: str = "default") -> ExperimentConfig:
    text = resources.files("canmeas").joinpath("configs", f"{name}.json").read_text()
    return ExperimentConfig.from_json(text)


@dataclass
class Experiment:
    """Everything a command needs, built (and guard-checked) from a config."""

    config: ExperimentConfig
    seed: int
    lattice: Lattice
    preparations: list[ApparatusPreparation]
    processes: list[MeasurementProcess]
    x: HermitianObservable
    y: HermitianObservable
    rho: DensityState
    bins: PointerBins
    event: list[int]
    kernel: MeanKernel

    @property
    def s_list(self) -> list[float]:
        return [p.position_width for p in self.preparations]


def _operator(spec: dict, dim: int, seed: int, basis: np.ndarray) -> np.ndarray:
    kind = spec["kind"]
    if kind == "matrix":
        if "real" not in spec:
            raise ConfigError("Y matrix needs 'real'")
        m = np.asarray(spec["real"], dtype=complex)
        if "imag" in spec:
            m = m + 1j * np.asarray(spec["imag"], dtype=float)
    elif kind == "random":
        m = random_hermitian(dim, np.random.default_rng(spec.get("seed", seed)), norm=1.0)
    else:
        values = np.asarray(spec.get("values", []), dtype=float)
        if len(values) != dim:
            raise ConfigError("x_function needs one value per eigenvalue multiplier")
        m = (basis * values[None, :]) @ basis.conj().T
    if m.shape != (dim, dim):
        raise ConfigError(f"Y has shape {m.shape}, expected {(dim, dim)}")
    return m


def _state(spec: dict, dim: int, seed: int) -> DensityState:
    kind = spec["kind"]
    if kind == "pure":
        v = np.asarray(spec.get("real", []), dtype=complex)
        if "imag" in spec:
            v = v + 1j * np.asarray(spec["imag"], dtype=float)
        if v.shape != (dim,) or not np.linalg.norm(v) > 0:
            raise ConfigError("rho pure vector has the wrong length or is zero")
        return DensityState.from_vector(v)
    if kind == "diagonal":
        w = np.asarray(spec.get("values", []), dtype=float)
        if w.shape != (dim,) or np.any(w < 0) or not w.sum() > 0:
            raise ConfigError("rho diagonal needs dim nonnegative weights")
        return DensityState.from_diagonal(w)
    rng = np.random.default_rng(spec.get("seed", seed))
    return DensityState(random_density_matrix(dim, rng, spec.get("rank")))


def build_experiment(config: ExperimentConfig, seed: int = 0) -> Experiment:
    """Construct lattice, preparations, processes and bins, running every guard.

    Raises a :class:`~canmeas.errors.CanmeasError` subclass on any violation
    (``SupportViolation``, ``BinMisaligned``, ``NotCommensurate``, ...).
    """
    sysc, appc = config["system"], config["apparatus"]
    dim = sysc["dim"]
    ms = sysc["eigenvalue_multipliers"]
    if len(ms) != dim:
        raise ConfigError(f"{len(ms)} eigenvalue multipliers for dim {dim}")
    if not appc["s_list"]:
        raise ConfigError("s_list is empty")
    lat = make_lattice(appc["n_points"], appc["length"])
    preps = dirac_family(lat, appc["momentum_shape"], appc["s_list"], appc.get("envelope", True))
    basis = np.eye(dim, dtype=complex)
    if "basis_seed" in sysc:
        basis = random_unitary(dim, np.random.default_rng(sysc["basis_seed"]))
    procs = [MeasurementProcess.from_multipliers(ms, lat, p, basis) for p in preps]
    x = procs[0].observable
    y_matrix = _operator(sysc["Y"], dim, seed, basis)
    try:
        y = spectral_decompose(y_matrix)
    except CanmeasError as exc:
        raise ConfigError(f"Y: {exc}") from None
    rho = _state(sysc["rho"], dim, seed)
    binc = config["bins"]
    try:
        bins = make_bins(lat, count=binc.get("count"), edges=binc.get("edges"))
    except ValueError as exc:
        if isinstance(exc, CanmeasError):
            raise
        raise ConfigError(f"bins: {exc}") from None
    bins.check_alignment(x.eigenvalues)
    if "event_bins" in config.raw:
        event = list(config["event_bins"])
        if max(event) >= bins.count:
            raise ConfigError(f"event bin {max(event)} out of range")
    else:
        event = [int(bins.locate([x.eigenvalues[-1]])[0])]
    try:
        kernel = parse_kernel(config["kernel"])
        for spec in config.raw.get("kernels", []):
            parse_kernel(spec)
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from None
    return Experiment(config, seed, lat, preps, procs, x, y, rho, bins, event, kernel)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    contract: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "tolerance": float(self.tolerance),
            "contract": self.contract,
        }


def _at_most(name: str, value: float, tol: float, contract: str) -> CheckResult:
    return CheckResult(name, bool(value <= tol), float(value), tol, contract)


def _decreasing(values, floor: float = 1e-12) -> bool:
    """Strictly decreasing, except that two values both below ``floor`` count as converged."""
    return all(b < a or (a <= floor and b <= floor) for a, b in zip(values, values[1:]))


def _worst_increase(values) -> float:
    return max([0.0] + [b - a for a, b in zip(values, values[1:])])


def periodic_cos(lat: Lattice) -> Callable:
    return lambda q: np.cos(2 * np.pi * np.asarray(q) / lat.length)


def bump(q):
    q = np.asarray(q, dtype=float)
    inside = np.abs(q) < 1
    return np.where(inside, np.exp(1 - 1 / np.where(inside, 1 - q * q, 1.0)), 0.0)


def squash(q):
    return np.arctan(np.asarray(q, dtype=float))


@dataclass
class SweepRow:
    """One CSV row.  ``thm52_residual`` is the pointer-readout residual and
    ``thm54_residual`` the joint-readout residual, both with ``f = cos``."""

    s: float
    srinivas_gap: float
    pointer_mean_err: float
    pointer_var_err: float
    thm52_residual: float
    thm54_residual: float

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in CSV_COLUMNS}


def sweep_row(exp: Experiment, proc: MeasurementProcess) -> SweepRow:
    mean_err, var_err = pointer_moment_errors(proc, exp.rho)
    return SweepRow(
        s=proc.preparation.position_width,
        srinivas_gap=srinivas_gap(proc, exp.rho, exp.y, exp.bins, exp.event, exp.kernel),
        pointer_mean_err=mean_err,
        pointer_var_err=var_err,
        thm52_residual=pointer_readout_residual(proc, np.cos),
        thm54_residual=joint_readout_residual(proc, exp.y.matrix, np.cos, exp.kernel),
    )


def run_sweep(exp: Experiment, threads: int = 1) -> list[SweepRow]:
    """One row per preparation, ordered by decreasing s regardless of scheduling."""
    order = sorted(range(len(exp.processes)), key=lambda i: -exp.s_list[i])
    procs = [exp.processes[i] for i in order]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda p: sweep_row(exp, p), procs))
    return [sweep_row(exp, p) for p in procs]


def _channel_checks(kernel: MeanKernel, rng: np.random.Generator, n: int = 10) -> list[CheckResult]:
    unital = bimod = duality = 0.0
    min_eig = np.inf
    for _ in range(n):
        d = int(rng.integers(2, 6))
        xs = rng.choice(np.arange(-6, 7), size=d) * 0.5
        basis = random_unitary(d, rng)
        x = spectral_decompose((basis * xs) @ basis.conj().T)
        a = random_hermitian(d, rng, 1.0) + 1j * random_hermitian(d, rng, 1.0)
        e = lambda m: conditional_expectation(x, m, kernel)
        unital = max(unital, np.max(np.abs(e(np.eye(d)) - np.eye(d))))
        fx = function_of_observable(lambda v: 1 + v - 0.3 * v**2, x)
        gx = function_of_observable(lambda v: 0.5 - v**3, x)
        bimod = max(bimod, np.max(np.abs(e(fx @ a @ gx) - fx @ e(a) @ gx)))
        rho = random_density_matrix(d, rng)
        duality = max(duality, abs(np.trace(e(a) @ rho) - np.trace(a @ e(rho))))
        psd = random_density_matrix(d, rng, rank=1)
        min_eig = min(min_eig, np.linalg.eigvalsh(e(psd))[0])
    out = [
        _at_most("kernel_unital", unital, 1e-12, "E[1] = 1"),
        _at_most("kernel_bimodule", bimod, 1e-11, "E[f(X) A g(X)] = f(X) E[A] g(X)"),
        _at_most("kernel_trace_duality", duality, 1e-11, "Tr[E[A] rho] = Tr[A E[rho]]"),
    ]
    out.append(_at_most("kernel_psd_preserving", max(0.0, -min_eig), 1e-10, "E maps PSD to PSD"))
    return out


def invariant_suite(exp: Experiment, rows: list[SweepRow]) -> list[CheckResult]:
    """Every invariant the config can exercise, at the stated tolerances."""
    rng = np.random.default_rng(exp.seed)
    lat = exp.lattice
    x, y, rho = exp.x, exp.y, exp.rho
    checks: list[CheckResult] = []

    recon = max(
        np.max(np.abs(function_of_observable(lambda v: v, o) - o.matrix)) for o in (x, y)
    )
    checks.append(_at_most("spectral_reconstruction", recon, 1e-10, "m = sum x_i P_i"))

    p_obs = momentum_observable(lat)
    q_obs = position_observable(lat)
    fp = function_of_observable(np.cos, p_obs)
    parseval = d2 = 0.0
    for prep in exp.preparations:
        wf = prep.wavefunction
        parseval = max(parseval, abs(np.sum(wf.position_density) * lat.dq - np.sum(prep.momentum_weights)))
        phi = wf.unit_vector
        d2 = max(d2, abs(np.vdot(phi, fp @ phi) - prep.momentum_expectation(np.cos)))
    checks.append(_at_most("parseval", parseval, 1e-12, "position norm = momentum norm"))
    checks.append(_at_most("momentum_functional_is_weighted_mean", d2, 1e-12, "<f(P)> = sum f(p) w(p) dp"))

    by_s = sorted(exp.preparations, key=lambda p: -p.position_width)
    if len(by_s) >= 2:
        for name, f in (("cos", np.cos), ("squash", squash), ("bump", bump)):
            errs = [abs(p.position_expectation(f) - f(0.0)) for p in by_s]
            mono = all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
            checks.append(CheckResult(
                f"position_concentration_{name}", mono and errs[-1] <= 0.02, errs[-1], 0.02,
                "|<f(Q)>_s - f(0)| nonincreasing as s shrinks and <= 0.02 at smallest s",
            ))

    pinch_q = pinching(q_obs, function_of_observable(np.cos, p_obs))
    grid_mean_err = np.max(np.abs(pinch_q - np.mean(np.cos(lat.momenta)) * np.eye(lat.n_points)))
    checks.append(_at_most("lattice_pinching_of_momentum_function", grid_mean_err, 1e-10,
                           "pinch_Q(f(P)) = mean_k f(p_k) 1"))

    checks.extend(_channel_checks(exp.kernel, rng))

    unitarity = evolve_vs_u = heis = twirl_err = mean_err = var_err = 0.0
    per = periodic_cos(lat)
    for proc in exp.processes:
        psi = random_state_vector(proc.sys_dim, rng)
        evolved = evolve_pure(proc, psi)
        unitarity = max(unitarity, abs(np.linalg.norm(evolved) - 1))
        if proc.sys_dim * proc.app_dim <= 512:
            u = coupling_unitary(proc)
            evolve_vs_u = max(evolve_vs_u, np.max(np.abs(u @ np.kron(psi, proc.apparatus_vector) - evolved)))
            heis = max(heis, heisenberg_pointer_check(proc, per))
        t = heisenberg(proc, np.kron(y.matrix, np.eye(proc.app_dim)))
        twirl_err = max(twirl_err, np.max(np.abs(apparatus_contraction(proc, t) - momentum_twirl(proc, y.matrix))))
    for row in rows:
        mean_err = max(mean_err, row.pointer_mean_err)
        var_err = max(var_err, row.pointer_var_err)
    checks += [
        _at_most("evolution_norm", unitarity, 1e-12, "||U(psi x alpha)|| = 1"),
        _at_most("evolution_matches_unitary", evolve_vs_u, 1e-11, "conditional shift = explicit U"),
        _at_most("heisenberg_pointer_cyclic", heis, 1e-10, "U*(1 x f(Q))U = f_cyc(X x 1 + 1 x Q)"),
        _at_most("contraction_equals_momentum_twirl", twirl_err, 1e-10,
                 "E_alpha[U*(Y x 1)U] = sum_k w_k e^{ip_k X} Y e^{-ip_k X}"),
        _at_most("pointer_mean", mean_err, 1e-10, "pointer mean = <X>_rho + <Q>_alpha"),
        _at_most("pointer_variance", var_err, 1e-8, "pointer variance = Var_rho(X) + Var_alpha(Q)"),
    ]

    if len(rows) >= 2:
        r52 = [r.thm52_residual for r in rows]
        r54 = [r.thm54_residual for r in rows]
        gaps = [r.srinivas_gap for r in rows]
        bound = 0.05 * operator_norm(y.matrix)
        checks += [
            CheckResult("pointer_readout_converges", _decreasing(r52), _worst_increase(r52), 0.0,
                        "||E_alpha[U*(1 x f(Q))U] - f(X)|| decreasing in s"),
            CheckResult("joint_readout_converges", _decreasing(r54) and r54[-1] <= bound, r54[-1], bound,
                        "||E_alpha[U*(Y x f(Q))U] - f(X)E[Y]|| decreasing, <= 0.05||Y|| at smallest s"),
            CheckResult("srinivas_gap_decreasing", _decreasing(gaps), _worst_increase(gaps), 0.0,
                        "successive-measurement Y-mean approaches Tr[X(B)E[Y]rho] as s -> 0"),
        ]

    proc = exp.processes[0]
    if proc.sys_dim * proc.app_dim <= oracles.MAX_ORACLE_DIM:
        err = oracles.dense_unitary_oracle(proc)
        checks.append(_at_most("dense_unitary_oracle", err, 1e-8, "exp(-i X x P) = conditional shift"))
    return checks


@dataclass
class RunReport:
    command: str
    rows: list[SweepRow] = field(default_factory=list)
    invariants: list[CheckResult] = field(default_factory=list)
    oracle_reports: list[oracles.OracleReport] = field(default_factory=list)
    flags: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    @property
    def failures(self) -> list[str]:
        out = [f"{c.name}: {c.contract}" for c in self.invariants if not c.passed]
        out += [f"{r.name}: oracle error {r.max_abs_error:.3e} > {r.tolerance:g}"
                for r in self.oracle_reports if not r.passed]
        return out

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "tool_version": __version__,
            "seed": self.seed,
            "passed": self.passed,
            "failures": self.failures,
            "rows": [r.to_dict() for r in self.rows],
            "invariants": [c.to_dict() for c in self.invariants],
            "oracle_reports": [r.to_dict() for r in self.oracle_reports],
            "flags": self.flags,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _output_path(out_dir, config: ExperimentConfig, key: str, default: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / config.raw.get("outputs", {}).get(key, default)


def cmd_check(config: ExperimentConfig, out_dir=None, seed: int = 0, threads: int = 1) -> tuple[int, RunReport]:
    """Run the sweep, the invariant suite and the oracle reports.

    Returns exit code 0 when everything passes and 1 otherwise; config and
    guard errors propagate as exceptions (the CLI maps them to exit code 2).
    """
    exp = build_experiment(config, seed)
    rows = run_sweep(exp, threads)
    report = RunReport("check", rows=rows, config=config.raw, seed=seed)
    report.invariants = invariant_suite(exp, rows)
    report.oracle_reports = [
        oracles.lueders_identity_report(seed=seed),
        *oracles.ugrid_report(seed=seed),
        oracles.dense_unitary_report(seed=seed),
    ]
    if out_dir is not None:
        _output_path(out_dir, config, "report", "report.json").write_text(report.to_json())
    return (0 if report.passed else 1), report


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([repr(float(getattr(row, c))) for c in CSV_COLUMNS])
    return buf.getvalue()


def cmd_sweep(config: ExperimentConfig, out_dir=None, seed: int = 0, threads: int = 1) -> tuple[int, RunReport, str]:
    s_list = config["apparatus"]["s_list"]
    if len(s_list) < 3 or any(b >= a for a, b in zip(s_list, s_list[1:])):
        raise ConfigError("sweep needs at least three strictly decreasing s values")
    exp = build_experiment(config, seed)
    rows = run_sweep(exp, threads)
    gaps = [r.srinivas_gap for r in rows]
    report = RunReport("sweep", rows=rows, config=config.raw, seed=seed)
    report.flags = {
        "srinivas_gap_decreasing": _decreasing(gaps),
        "srinivas_gap_strictly_decreasing": all(b < a for a, b in zip(gaps, gaps[1:])),
    }
    text = rows_to_csv(rows)
    if out_dir is not None:
        _output_path(out_dir, config, "csv", "sweep.csv").write_text(text)
        _output_path(out_dir, config, "report", "sweep_report.json").write_text(report.to_json())
    return 0, report, text


def mean_dependence(exp: Experiment, k1: MeanKernel, k2: MeanKernel) -> dict[str, Any]:
    """Compare two means on the same observable, state and bins.

    Bin probabilities are the pointer-bin marginals of the successive joint
    law predicted by each kernel, ``sum_j Tr[X(B) E[Y_j] rho]``; they can only
    depend on the kernel through ``E[1]``, so they must agree.
    """
    x, y, rho = exp.x, exp.y, exp.rho
    e1 = conditional_expectation(x, y.matrix, k1)
    e2 = conditional_expectation(x, y.matrix, k2)
    y_norm = operator_norm(y.matrix)
    in_bin = exp.bins.locate(x.eigenvalues)
    probs, means = [], []
    for kernel, ey in ((k1, e1), (k2, e2)):
        pk, mk = [], []
        for b in range(exp.bins.count):
            xb = x.spectral_projection(in_bin == b)
            p = sum(np.trace(xb @ conditional_expectation(x, q, kernel) @ rho.matrix).real for q in y.projectors)
            pk.append(float(p))
            mk.append(float(np.trace(xb @ ey @ rho.matrix).real / p) if p > 1e-12 else None)
        probs.append(pk)
        means.append(mk)
    diff = operator_norm(e1 - e2)
    return {
        "kernels": [k1.spec, k2.spec],
        "operator_difference": diff,
        "relative_operator_difference": diff / y_norm if y_norm else 0.0,
        "y_norm": y_norm,
        "max_bin_probability_difference": float(np.max(np.abs(np.subtract(*probs)))),
        "bin_probabilities": probs,
        "conditional_y_means": means,
        "bin_edges": list(exp.bins.edges),
        "x_eigenvalues": x.eigenvalues.tolist(),
    }


def cmd_mean_dependence(config: ExperimentConfig, out_dir=None, seed: int = 0, threads: int = 1) -> tuple[int, dict]:
    if "kernels" not in config.raw:
        raise ConfigError("mean-dependence needs a 'kernels' pair")
    exp = build_experiment(config, seed)
    k1, k2 = (parse_kernel(s) for s in config["kernels"])
    result = mean_dependence(exp, k1, k2)
    result.update({"command": "mean-dependence", "tool_version": __version__, "seed": seed, "config": config.raw})
    if out_dir is not None:
        path = _output_path(out_dir, config, "comparison", "mean_dependence.json")
        path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return 0, result

