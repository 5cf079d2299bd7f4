"""Parameter sweeps, figure data, simulation reports, and the self-test."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import psar
from .channel import (
    KrausChannel,
    NoiseKind,
    NoiseModel,
    apply_choi,
    apply_kraus,
    kraus_to_choi,
    noisy_phase_gate,
)
from .comb import link_product
from .psar import RetrievalOperator
from .realizations import vmc_run, vq_run
from .tensor_core import LabeledOperator, min_eigenvalue, partial_trace

DEFAULT_N_LIST = (1, 3, 7, 15)
DEFAULT_Q_STEP = 0.1
DEFAULT_PHI_STEP = np.pi / 5
CROSSCHECK_MAX_N = psar.N_MAX_FULL_LINK
CROSSCHECK_PHI = 0.7


class NumericalCheckFailed(RuntimeError):
    pass


def parse_grid(spec: str) -> list[float]:
    """``start:step:end`` inclusive of ``end`` (to within a hundredth of a step)."""
    try:
        start, step, end = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like start:step:end, got {spec!r}") from None
    if step <= 0 or end < start:
        raise ValueError(f"grid {spec!r} needs step > 0 and end >= start")
    count = int(np.floor((end - start) / step + 0.01)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def default_q_grid() -> list[float]:
    return parse_grid(f"0:{DEFAULT_Q_STEP}:1")


def default_phi_grid() -> list[float]:
    return [k * DEFAULT_PHI_STEP for k in range(11)]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def to_csv(header: list[str], rows: Iterable[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


# -- figures --------------------------------------------------------------------

def figure_success(n_list=DEFAULT_N_LIST, q_grid=None, crosscheck_tol: float = 1e-9):
    """Success probability vs ``q``: one depolarizing and one dephasing column per ``n``.

    Depolarizing values come from the closed form and are cross-checked
    against full retrieval for ``n <= 4``.
    """
    q_grid = default_q_grid() if q_grid is None else list(q_grid)
    header = ["q"]
    for n in n_list:
        header += [f"p_depolarizing_n{n}", f"p_dephasing_n{n}"]
    rows = []
    for q in q_grid:
        row = [q]
        for n in n_list:
            p_dep, _ = psar.theorem1_closed_form(n, q)
            p_deph, _ = psar.theorem2_closed_form(n, q)
            if n <= CROSSCHECK_MAX_N:
                got = psar.run_psar(n, NoiseModel.depolarizing(q), CROSSCHECK_PHI).p_success
                if abs(got - p_dep) > crosscheck_tol:
                    raise NumericalCheckFailed(f"n={n}, q={q}: retrieval gives {got}, closed form {p_dep}")
            row += [p_dep, p_deph]
        rows.append(row)
    return header, rows


def figure_noise_map(q_grid=None):
    q_grid = default_q_grid() if q_grid is None else list(q_grid)
    header = ["q", "qprime_depolarizing", "qprime_dephasing"]
    rows = [[q, psar.theorem1_closed_form(1, q)[1], psar.theorem2_closed_form(1, q)[1]] for q in q_grid]
    return header, rows


# -- simulate -------------------------------------------------------------------

def _channel_fields(dec) -> dict:
    return {
        "unitary_weight": dec.unitary_weight,
        "dephasing_weight": dec.dephasing_weight,
        "phase": dec.phase,
        "residual": dec.residual_norm,
    }


def simulate(scheme: str, noise: NoiseModel, phi: float, n: Optional[int] = None, k: Optional[int] = None) -> dict:
    """Run one scheme and return a JSON-ready report (see README for the schema)."""
    report = {
        "scheme": scheme,
        "noise": noise.kind.value,
        "q": noise.q,
        "phi": phi,
        "n": n,
        "k": k,
        "success_probability": None,
        "unitary_weight": None,
        "dephasing_weight": None,
        "phase": None,
        "residual": None,
        "closed_form": None,
        "outcomes": [],
    }
    if scheme == "psar":
        if n is None or k is not None:
            raise ValueError("psar takes --n and not --k")
        choi = psar.retrieve(psar.retrieval_operator(n), psar.store(n, noise, phi))
        dec = psar.decompose_retrieved(choi, strict=False)
        p_cf, qp_cf = psar.closed_form(noise, n)
        report.update(success_probability=dec.p_success, **_channel_fields(dec))
        report["closed_form"] = {"p_success": p_cf, "q_prime": qp_cf}
    elif scheme == "vmc":
        if k is None or n is not None:
            raise ValueError("vmc takes --k and not --n")
        rounds = vmc_run(noise, phi, k)
        report["success_probability"] = rounds[-1].cumulative_success_probability
        for r in rounds:
            report["outcomes"].append({
                "label": f"round{r.round_index}:success",
                "probability": r.success_probability,
                "conditional_probability": r.conditional_success_probability,
                "uses": r.uses_this_round,
                **_channel_fields(r.success_channel),
            })
            report["outcomes"].append({
                "label": f"round{r.round_index}:failure",
                "probability": r.failure_choi.trace().real / 2,
                "conditional_probability": 1.0 - r.conditional_success_probability,
                "uses": r.uses_this_round,
                **_channel_fields(r.failure_channel),
            })
    elif scheme == "vq":
        if n is None or k is not None:
            raise ValueError("vq takes --n and not --k")
        outcomes = vq_run(noise, phi, n)
        success = outcomes[0]
        report.update(success_probability=success.probability, **_channel_fields(success.channel))
        for o in outcomes:
            report["outcomes"].append({"label": o.projector_label, "probability": o.probability, **_channel_fields(o.channel)})
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return _plain(report)


def _plain(obj):
    if isinstance(obj, dict):
        return {key: _plain(v) for key, v in obj.items()}
    if isinstance(obj, list):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


SIMULATE_CSV_HEADER = ["record", "label", "probability", "unitary_weight", "dephasing_weight", "phase", "residual"]


def simulate_csv(report: dict) -> str:
    rows = [["summary", report["scheme"], report["success_probability"], report["unitary_weight"],
             report["dephasing_weight"], report["phase"], report["residual"]]]
    for o in report["outcomes"]:
        rows.append(["outcome", o["label"], o["probability"], o["unitary_weight"],
                     o["dephasing_weight"], o["phase"], o["residual"]])
    return to_csv(SIMULATE_CSV_HEADER, rows)


def simulate_json(report: dict) -> str:
    def encode(x):
        return float(f"{x:.12g}") if isinstance(x, float) else x

    def walk(obj):
        if isinstance(obj, dict):
            return {key: walk(v) for key, v in obj.items()}
        if isinstance(obj, list):
            return [walk(v) for v in obj]
        return encode(obj)

    return json.dumps(walk(report), indent=2) + "\n"


# -- self-test ------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_deviation)) and self.max_deviation <= self.tolerance


@dataclass
class SelfTestConfig:
    n_max: int = 5
    q_grid: Optional[list] = None
    phi_grid: Optional[list] = None
    random_trials: int = 50
    seed: int = 20240607


def _random_channel(rng, dim: int = 2, rank: int = 3) -> KrausChannel:
    g = rng.normal(size=(rank * dim, dim)) + 1j * rng.normal(size=(rank * dim, dim))
    q, _ = np.linalg.qr(g)  # isometry -> Kraus ops
    return KrausChannel.from_ops([q[i * dim:(i + 1) * dim] for i in range(rank)])


def _random_state(rng, dim: int) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def _retrieval_sweep_deviation(kind, cfg, factory) -> float:
    worst = 0.0
    for n in range(1, cfg.n_max + 1):
        rs = factory(n)
        for q in cfg.q_grid:
            noise = NoiseModel(kind, q)
            p_cf, qp_cf = psar.closed_form(noise, n)
            for phi in cfg.phi_grid:
                dec = psar.decompose_retrieved(psar.retrieve(rs, psar.store(n, noise, phi)), strict=False)
                dev = max(abs(dec.p_success - p_cf), abs(dec.q_prime - qp_cf), dec.residual_norm)
                if q > 0:
                    dphase = abs(np.angle(np.exp(1j * (dec.phase - phi))))
                    dev = max(dev, dphase)
                worst = max(worst, dev)
    return worst


def run_selftest(
    config: Optional[SelfTestConfig] = None,
    retrieval_factory: Optional[Callable[[int], RetrievalOperator]] = None,
) -> list[CheckResult]:
    """Run the invariant sweep; ``retrieval_factory`` lets tests inject a corrupted R_s."""
    cfg = config or SelfTestConfig()
    cfg.q_grid = cfg.q_grid if cfg.q_grid is not None else default_q_grid()
    cfg.phi_grid = cfg.phi_grid if cfg.phi_grid is not None else default_phi_grid()
    factory = retrieval_factory or psar.retrieval_operator
    rng = np.random.default_rng(cfg.seed)
    results = []

    results.append(CheckResult("theorem1 (depolarizing) agreement",
                               _retrieval_sweep_deviation(NoiseKind.DEPOLARIZING, cfg, factory), 1e-9))
    results.append(CheckResult("theorem2 (dephasing) agreement",
                               _retrieval_sweep_deviation(NoiseKind.DEPHASING, cfg, factory), 1e-9))

    worst = 0.0
    for n in range(1, min(cfg.n_max, CROSSCHECK_MAX_N) + 1):
        for q in cfg.q_grid:
            choi = psar.retrieve(factory(n), psar.store(n, NoiseModel.depolarizing(q), CROSSCHECK_PHI))
            u, d = psar.binomial_expansion_check(n, q)
            worst = max(worst, abs(abs(choi.matrix[0, 3]) - u), abs(choi.matrix[0, 0].real - abs(choi.matrix[0, 3]) - d))
    results.append(CheckResult("binomial pattern vs retrieval", worst, 1e-10))

    worst = 0.0
    for n in range(1, min(cfg.n_max, 3) + 1):
        for noise in (NoiseModel.depolarizing(0.37), NoiseModel.dephasing(0.37)):
            mem = psar.store(n, noise, CROSSCHECK_PHI)
            worst = max(worst, mem.rho.max_abs_diff(psar.store_by_link_product(n, noise, CROSSCHECK_PHI).rho))
            rs = factory(n)
            worst = max(worst, psar.retrieve(rs, mem).max_abs_diff(link_product(rs.operator, mem.rho)))
    results.append(CheckResult("storage/retrieval vs explicit link product", worst, 1e-12))

    worst = 0.0
    for _ in range(cfg.random_trials):
        a, b = _random_channel(rng), _random_channel(rng)
        ca = kraus_to_choi(a, "x", "y")
        cb = kraus_to_choi(b, "y", "z")
        expected = kraus_to_choi(a.then(b), "x", "z")
        worst = max(worst, link_product(ca, cb).max_abs_diff(expected))
        rho = LabeledOperator.square(_random_state(rng, 4), [("s", 2), ("t", 2)])
        worst = max(worst, apply_kraus(a, rho, "s").max_abs_diff(apply_choi(kraus_to_choi(a), rho, "s")))
    results.append(CheckResult("comb oracles (composition, apply_kraus = apply_choi)", worst, 1e-12))

    worst = 0.0
    for kind in NoiseKind:
        for q in cfg.q_grid:
            for phi in cfg.phi_grid:
                choi = kraus_to_choi(noisy_phase_gate(NoiseModel(kind, q), phi))
                worst = max(worst, -min_eigenvalue(choi), partial_trace(choi, ["out"]).max_abs_diff(
                    LabeledOperator.identity([("in", 2)])))
    results.append(CheckResult("noise Choi positivity and trace preservation", max(worst, 0.0), 1e-9))

    worst = 0.0
    for q in cfg.q_grid:
        for r in vmc_run(NoiseModel.depolarizing(q), CROSSCHECK_PHI, 3):
            nn = 2**r.round_index - 1
            worst = max(worst, abs(r.success_probability - 2.0**-r.round_index),
                        abs(r.cumulative_success_probability - (1 - 2.0**-r.round_index)))
            if q > 0:
                worst = max(worst, abs(r.success_channel.unitary_weight - q**nn))
    results.append(CheckResult("VMC round probabilities and channels", worst, 1e-9))

    worst = 0.0
    for q in cfg.q_grid:
        for n in range(1, 7):
            worst = max(worst, abs(vq_run(NoiseModel.dephasing(q), CROSSCHECK_PHI, n)[0].probability - n / (n + 1)))
        worst = max(worst, abs(vq_run(NoiseModel.depolarizing(q), CROSSCHECK_PHI, 2)[0].probability - (3 + q) / 6))
    for n in (1, 2, 3):
        for kind in NoiseKind:
            ch = vq_run(NoiseModel(kind, 1.0), CROSSCHECK_PHI, n)[0].channel
            worst = max(worst, abs(ch.unitary_weight - 1.0), abs(ch.phase - CROSSCHECK_PHI))
    results.append(CheckResult("virtual-qudit success probabilities", worst, 1e-9))
    return results


def format_selftest(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'max deviation':>14}  {'tolerance':>9}  result"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.max_deviation:>14.3e}  {r.tolerance:>9.0e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"
