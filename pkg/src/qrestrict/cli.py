"""Command-line scenario runner.

Each scenario writes a JSON report ``{scenario, config, results, checks,
generated_at}`` and optionally a CSV sidecar with bulk data. Exit status is
0 when every check passes, 1 when some check fails, 2 on configuration
errors and 3 on I/O errors.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy import stats

from .chain import (
    PointerSystem,
    SpinState,
    measurement_state,
    mixed_measurement_ensemble,
    pointer_observable,
    pointer_projectors,
    premeasure,
)
from .decohere import suppression_study
from .errors import ConfigError
from .itobs import discrimination_test, make_interference_observable, outcome_distribution
from .nogo import (
    boolean_difference_possible,
    eigen_observable_feasibility,
    measurement_constraints,
    orthogonal_projector,
    projector_completeness_check,
)
from .qcore import is_eigenstate
from .restrict import (
    analytic_moments,
    collapse_log,
    ensemble_moments,
    gemenge_sample_many,
    information_pattern,
    partial_trace_restriction,
    restriction_gemenge,
)
from .rng import CounterRNG

log = logging.getLogger("qrestrict")

SCENARIOS = ("nogo", "moments", "collapse", "interference", "decoherence")
FORMATS = ("structured", "csv", "both")
EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

# amplitudes whose squared norm is off by less than this are rescaled
AUTO_NORMALIZE = 1e-4

_R = 2 ** -0.5

DEFAULTS = {
    "a1": f"{_R!r},0",
    "a2": f"{_R!r},0",
    "q": "1,-1",
    "env-qubits": "4",
    "overlap": "haar:0",
    "events": "100000",
    "trials": "1000",
    "moments": "4",
    "alpha": "0.05",
    "seed": "0",
    "format": "structured",
}


@dataclass
class ScenarioConfig:
    scenario: str
    a1: tuple
    a2: tuple
    q: tuple
    env_qubits: int
    overlap_model: str
    overlap: float
    events: int
    trials: int
    moments: int
    alpha: float
    seed: int
    out: str | None
    format: str

    @property
    def spin(self) -> SpinState:
        return SpinState(complex(*self.a1), complex(*self.a2))

    def resolved(self) -> dict:
        d = asdict(self)
        d["a1"] = list(self.a1)
        d["a2"] = list(self.a2)
        d["q"] = list(self.q)
        return d


def _pair(text: str, key: str) -> tuple:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected two comma-separated numbers, got {text!r}") from None
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected two comma-separated numbers, got {text!r}")
    return tuple(parts)


def build_config(raw: dict) -> ScenarioConfig:
    """Validate string settings into a :class:`ScenarioConfig`."""
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    a1, a2 = _pair(raw["a1"], "a1"), _pair(raw["a2"], "a2")
    n2 = a1[0] ** 2 + a1[1] ** 2 + a2[0] ** 2 + a2[1] ** 2
    if n2 == 0 or abs(n2 - 1.0) >= AUTO_NORMALIZE:
        raise ConfigError(f"amplitudes have squared norm {n2!r}; expected 1")
    if n2 != 1.0:
        s = n2 ** -0.5
        a1 = (a1[0] * s, a1[1] * s)
        a2 = (a2[0] * s, a2[1] * s)
        if abs(n2 - 1.0) > 1e-12:
            log.warning("amplitudes rescaled to unit norm (squared norm was %r)", n2)
    q = _pair(raw["q"], "q")
    if q[0] == q[1]:
        raise ConfigError("pointer eigenvalues must differ")
    model, _, value = raw["overlap"].partition(":")
    if model not in ("fixed", "haar"):
        raise ConfigError(f"overlap model must be 'fixed' or 'haar', got {model!r}")
    try:
        overlap = float(value) if value else 0.0
        env_qubits = int(raw["env-qubits"])
        events = int(raw["events"])
        trials = int(raw["trials"])
        moments = int(raw["moments"])
        alpha = float(raw["alpha"])
        seed = int(raw["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if model == "fixed" and not -1.0 <= overlap <= 1.0:
        raise ConfigError("fixed overlap must lie in [-1, 1]")
    if env_qubits < 0:
        raise ConfigError("env-qubits must be >= 0")
    if events < 1 or trials < 1 or moments < 1:
        raise ConfigError("events, trials and moments must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie strictly between 0 and 1")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    fmt = raw.get("format", "structured")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    return ScenarioConfig(scenario, a1, a2, q, env_qubits, model, overlap, events, trials,
                          moments, alpha, seed, raw.get("out"), fmt)


def read_config_file(path: str) -> dict:
    """``key = value`` lines with the same keys as the long flags."""
    parser = configparser.ConfigParser()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from None
    return {k.replace("_", "-"): v.strip() for k, v in parser["config"].items()}


class Checks:
    def __init__(self):
        self.items = []

    def add(self, name, passed, measured, expected, tolerance=None):
        self.items.append({
            "name": name,
            "passed": bool(passed),
            "measured": _plain(measured),
            "expected": _plain(expected),
            "tolerance": tolerance,
        })

    def close(self, name, measured, expected, tol):
        m, e = np.asarray(measured, dtype=float), np.asarray(expected, dtype=float)
        self.add(name, bool(np.all(np.abs(m - e) <= tol)), measured, expected, tol)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.items)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        # strict JSON has no inf/nan literals
        return float(x) if np.isfinite(x) else repr(float(x))
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def run_nogo(cfg: ScenarioConfig, checks: Checks):
    s = cfg.spin
    entangled = abs(s.a1 * s.a2) > 1e-9
    surviving = 0 if abs(s.a1) >= abs(s.a2) else 1
    classes = (0, 1, 2) if entangled else (0, 1, surviving)
    reports = {}
    for stage in ("D", "O"):
        psi = premeasure(s, PointerSystem(stage, *cfg.q))
        rep = eigen_observable_feasibility(measurement_constraints(psi, stage, classes))
        reports[stage] = rep
        checks.add(f"{stage}_verdict", rep.feasible != entangled, rep.verdict,
                   "infeasible" if entangled else "feasible")
        checks.add(f"{stage}_solution_dimension", rep.dimension == (1 if entangled else 2),
                   rep.dimension, 1 if entangled else 2)

    obs_o = PointerSystem("O", *cfg.q)
    projs = pointer_projectors(obs_o)
    candidate = orthogonal_projector(projs)
    pc = projector_completeness_check(projs, candidate)
    checks.add("projector_forced_zero", pc.forced_zero and pc.norm < 1e-12, pc.norm, 0.0, 1e-12)

    psi_ms = measurement_state(s, obs_o)
    xi = [obs_o.basis(i).density() for i in range(2)]
    bd_pointer = boolean_difference_possible(xi)
    bd_restricted = boolean_difference_possible(xi + [partial_trace_restriction(psi_ms)])
    checks.add("bd_pointer_states", bd_pointer.possible, bd_pointer.possible, True)
    checks.add("bd_restricted_state", not bd_restricted.possible, bd_restricted.possible, False)

    results = {
        "detector": reports["D"].to_dict(),
        "observer": reports["O"].to_dict(),
        "projector_check": {
            "candidate_norm": pc.norm,
            "orthogonal_to_all": pc.orthogonal_to_all,
            "forced_zero": pc.forced_zero,
        },
        "boolean_difference": {
            "pointer_states": bd_pointer.possible,
            "with_restricted_state": bd_restricted.possible,
            "max_overlap": bd_restricted.overlap,
            "max_overlap_pair": list(bd_restricted.pair or ()),
        },
        "verdict": reports["D"].verdict,
        "solution_dimension": reports["D"].dimension,
    }
    rows = [["stage", "basis_index", "row", "col", "re", "im"]]
    for stage, rep in reports.items():
        for k, b in enumerate(rep.basis):
            for (i, j), z in np.ndenumerate(b):
                rows.append([stage, k, i, j, repr(float(z.real)), repr(float(z.imag))])
    return results, rows


def run_moments(cfg: ScenarioConfig, checks: Checks):
    s = cfg.spin
    obs = PointerSystem("O", *cfg.q)
    q_o = pointer_observable(obs)
    psi = measurement_state(s, obs)
    mix = mixed_measurement_ensemble(s, obs)
    L = cfg.moments
    check_l = max(L, 8)
    pure_an = analytic_moments(psi, q_o, check_l)
    gem = np.array([sum(p * q**l for p, q in zip(s.probabilities, cfg.q)) for l in range(1, check_l + 1)])
    checks.close("analytic_vs_gemenge", pure_an, gem, 1e-12)
    rng = CounterRNG(cfg.seed)
    ep = ensemble_moments(psi, q_o, L, cfg.events, rng)
    em = ensemble_moments(mix, q_o, L, cfg.events, rng)
    checks.add("empirical_pure_4sigma", ep.within(4.0), ep.deviations(), "<= 4", 4.0)
    checks.add("empirical_gemenge_4sigma", em.within(4.0), em.deviations(), "<= 4", 4.0)
    results = {
        "analytic": pure_an[:L],
        "gemenge": gem[:L],
        "empirical_pure": ep.empirical_moments,
        "empirical_gemenge": em.empirical_moments,
        "sigma": ep.sigma,
        "frequencies_pure": ep.frequencies,
        "frequencies_gemenge": em.frequencies,
    }
    rows = [["l", "analytic", "gemenge", "empirical_pure", "empirical_gemenge", "sigma"]]
    for l in range(L):
        rows.append([l + 1] + [repr(float(x[l])) for x in
                               (pure_an, gem, ep.empirical_moments, em.empirical_moments, ep.sigma)])
    return results, rows


def run_collapse(cfg: ScenarioConfig, checks: Checks):
    s = cfg.spin
    obs = PointerSystem("O", *cfg.q)
    q_o = pointer_observable(obs)
    psi = measurement_state(s, obs)
    rng = CounterRNG(cfg.seed)
    n = cfg.events
    branches = collapse_log(psi, rng, n)
    counts = np.bincount(branches, minlength=2)
    freqs = counts / n
    probs = np.array(s.probabilities)
    sigma = np.sqrt(probs * (1 - probs) / n)
    dev = np.abs(freqs - probs)
    checks.add("frequencies_4sigma", bool(np.all(dev <= 4 * sigma + 1e-15)), freqs, probs, "4 sigma")

    wo = restriction_gemenge(psi)
    traced = partial_trace_restriction(psi)
    diff = float(np.abs(traced.matrix - wo.density().matrix).max())
    checks.add("partial_trace_equals_gemenge_density", diff <= 1e-12, diff, 0.0, 1e-12)

    gcounts = np.bincount(gemenge_sample_many(wo, rng, n), minlength=2)
    table = np.array([counts, gcounts])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] > 1:
        pval = float(stats.chi2_contingency(table)[1])
    else:
        pval = 1.0
    checks.add("chi_square_vs_gemenge", pval > 1e-3, pval, "> 0.001")

    ips = [information_pattern(x, [q_o]) for x in wo.states]
    ip_traced = information_pattern(traced, [q_o])
    superposed = abs(s.a1 * s.a2) > 1e-9
    checks.add("pointer_states_definite", all(q_o.label in ip.entries for ip in ips),
               [ip.as_dict() for ip in ips], "definite")
    checks.add("restricted_state_uncertain", (q_o.label in ip_traced.uncertain) == superposed,
               ip_traced.as_dict(), "uncertain" if superposed else "definite")
    results = {
        "events": n,
        "frequencies": freqs,
        "probabilities": probs,
        "partial_trace_restriction": np.real(np.diag(traced.matrix)),
        "chi_square_p": pval,
        "information_patterns": [ip.as_dict() for ip in ips],
        "partial_trace_information_pattern": ip_traced.as_dict(),
    }
    rows = [["event", "branch", q_o.label]]
    for k, b in enumerate(branches, start=1):
        rows.append([k, int(b) + 1, repr(float(cfg.q[b]))])
    return results, rows


def run_interference(cfg: ScenarioConfig, checks: Checks):
    s = cfg.spin
    obs = PointerSystem("O", *cfg.q)
    psi = measurement_state(s, obs)
    mix = mixed_measurement_ensemble(s, obs)
    b = make_interference_observable(psi.layout)
    dp = outcome_distribution(psi, b)
    dm = outcome_distribution(mix, b)
    expected_mean = 2 * (s.a1 * np.conj(s.a2)).real
    checks.close("pure_mean_B", dp.mean(), expected_mean, 1e-12)
    checks.close("mixture_mean_B", dm.mean(), 0.0, 1e-12)
    symmetric = abs(abs(s.a1) - _R) < 1e-9 and abs(s.a1 - s.a2) < 1e-9
    if symmetric:
        g = is_eigenstate(psi, b)
        checks.add("pure_is_B_eigenstate", g is not None and abs(g - 1) < 1e-9, g, 1.0)
    rng = CounterRNG(cfg.seed)
    em = ensemble_moments(mix, b, 1, cfg.events, rng)
    freqs = em.frequencies
    dev = []
    for v, p in dm.items():
        f = freqs.get(v, 0.0)
        sig = np.sqrt(p * (1 - p) / cfg.events)
        dev.append(abs(f - p) / sig if sig > 0 else (0.0 if f == p else np.inf))
    checks.add("mixture_frequencies_4sigma", all(d <= 4 for d in dev), dev, "<= 4", 4.0)
    res = discrimination_test(psi, mix, b, cfg.alpha, cfg.events, rng.substream(7))
    if symmetric:
        law = 2.0 ** -cfg.events
        t2 = res.type2_error
        ok = t2 is not None and abs(t2 - law) <= 1e-12 * law
        checks.add("type2_error_law", ok, t2, law, "1e-12 relative")
    results = {
        "pure_distribution": dict(zip(dp.values, dp.probabilities)),
        "mixture_distribution": dict(zip(dm.values, dm.probabilities)),
        "mixture_frequencies": freqs,
        "discrimination": res.as_dict(),
    }
    rows = [["event", "outcome", "cumulative_llr"]]
    for k, (o, llr) in enumerate(zip(res.outcomes, res.trajectory), start=1):
        rows.append([k, repr(float(res.outcome_values[o])), repr(float(llr))])
    return results, rows


def run_decoherence(cfg: ScenarioConfig, checks: Checks):
    s = cfg.spin
    reps = suppression_study(s, range(cfg.env_qubits + 1), cfg.overlap_model, cfg.overlap,
                             cfg.trials, CounterRNG(cfg.seed))
    worst = max(r.max_law_error for r in reps)
    checks.add("product_law", worst <= 1e-10, worst, 0.0, 1e-10)
    medians = [r.median for r in reps]
    if cfg.overlap_model == "fixed":
        mono = all(b <= a + 1e-12 for a, b in zip(medians, medians[1:]))
        checks.add("monotone_suppression", mono, medians, "non-increasing")
    elif cfg.env_qubits >= 4 and reps[0].bare > 0:
        m4 = reps[4].median_suppression
        checks.add("haar_NE4_median_suppression", m4 <= 0.25, m4, "<= 0.25")
    results = {"reports": [r.summary() for r in reps], "bare": reps[0].bare}
    rows = [["N_E", "trial", "offdiag", "prediction"]]
    for r in reps:
        for t, (o, p) in enumerate(zip(r.offdiag, r.prediction)):
            rows.append([r.n_env, t, repr(float(o)), repr(float(p))])
    return results, rows


RUNNERS = {
    "nogo": run_nogo,
    "moments": run_moments,
    "collapse": run_collapse,
    "interference": run_interference,
    "decoherence": run_decoherence,
}


def run_scenario(cfg: ScenarioConfig) -> tuple:
    """Execute one scenario; returns ``(report, csv_rows)``."""
    checks = Checks()
    results, rows = RUNNERS[cfg.scenario](cfg, checks)
    report = {
        "scenario": cfg.scenario,
        "config": cfg.resolved(),
        "results": _plain(results),
        "checks": checks.items,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return report, rows


def payload(report: dict) -> str:
    """Canonical JSON of everything except the timestamp."""
    body = {k: v for k, v in report.items() if k != "generated_at"}
    return json.dumps(body, sort_keys=True)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _outputs(cfg: ScenarioConfig) -> tuple:
    if cfg.out is None:
        return None, None
    out = Path(cfg.out)
    stem = out.with_suffix("") if out.suffix in (".json", ".csv") else out
    return stem.with_suffix(".json"), stem.with_suffix(".csv")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrestrict", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--scenario", help=f"one of: {', '.join(SCENARIOS)}")
    p.add_argument("--a1", help="amplitude a1 as re,im")
    p.add_argument("--a2", help="amplitude a2 as re,im")
    p.add_argument("--q", help="pointer eigenvalues q1,q2")
    p.add_argument("--env-qubits", help="largest environment size N_E")
    p.add_argument("--overlap", help="fixed:<value> or haar")
    p.add_argument("--events", help="simulated events N")
    p.add_argument("--trials", help="environment draws per N_E (decoherence)")
    p.add_argument("--moments", help="highest moment order L")
    p.add_argument("--alpha", help="discrimination confidence level")
    p.add_argument("--seed", help="unsigned 64-bit seed")
    p.add_argument("--out", help="output path stem (.json / .csv added)")
    p.add_argument("--format", help="structured, csv or both")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    raw = dict(DEFAULTS)
    try:
        if args.config:
            raw.update(read_config_file(args.config))
        for key, val in vars(args).items():
            if key in ("config", "verbose") or val is None:
                continue
            raw[key.replace("_", "-")] = val
        cfg = build_config(raw)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    report, rows = run_scenario(cfg)
    text = json.dumps(report, indent=2)
    json_path, csv_path = _outputs(cfg)
    try:
        if cfg.format in ("structured", "both"):
            if json_path is None:
                sys.stdout.write(text + "\n")
            else:
                json_path.write_text(text + "\n")
        if cfg.format in ("csv", "both"):
            if csv_path is None:
                sys.stdout.write(_csv_text(rows))
            else:
                csv_path.write_text(_csv_text(rows))
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO

    for c in report["checks"]:
        if not c["passed"]:
            log.warning("check failed: %s (measured %s, expected %s)", c["name"], c["measured"], c["expected"])
    return EXIT_OK if all(c["passed"] for c in report["checks"]) else EXIT_CHECKS


if __name__ == "__main__":
    sys.exit(main())
