"""Monte-Carlo campaigns over the four scenarios and the built-in checks."""

from __future__ import annotations

import enum
import json
import logging
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import logical as lg
from . import statevector as sv
from .adversary import AttackGoal, InterceptResend, PermutationAttacker
from .logical import BellCode, LogicalSymbol, NoiseModel
from .protocol import Adversary, ConfigError, Permutation, ProtocolConfig, RunOutcome, Status, run_protocol
from .symbolic import DibitString, entanglement_swap, unitary_action
from .transcript import write_transcripts

log = logging.getLogger(__name__)


class Scenario(str, enum.Enum):
    HONEST = "honest"
    EVE = "eve"
    PERM_ATTACK_ORIGINAL = "perm-attack-original"
    PERM_ATTACK_IMPROVED = "perm-attack-improved"


ATTACKS = (Scenario.PERM_ATTACK_ORIGINAL, Scenario.PERM_ATTACK_IMPROVED)


@dataclass(frozen=True)
class Campaign:
    scenario: Scenario
    trials: int
    config: ProtocolConfig
    goal: AttackGoal | None = None
    output_path: str | None = None
    ka: DibitString | None = None
    kb: DibitString | None = None
    forced_m: DibitString | None = None
    eve_transmissions: tuple[int, ...] = (1, 2)
    write_transcripts: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.goal is not None and self.scenario not in ATTACKS:
            raise ConfigError("an attack goal only makes sense for attack scenarios")
        if self.scenario is Scenario.PERM_ATTACK_ORIGINAL and self.goal is None:
            raise ConfigError("the original-protocol attack needs a goal")
        improved = self.scenario is Scenario.PERM_ATTACK_IMPROVED
        if improved != self.config.improved and self.scenario in ATTACKS:
            raise ConfigError(f"scenario {self.scenario.value} needs improved={improved}")
        for name in ("ka", "kb", "forced_m"):
            value = getattr(self, name)
            if value is not None and len(value) != self.config.n:
                raise ConfigError(f"{name} must have {self.config.n} dibits")
        if self.goal is not None and self.goal.n != self.config.n:
            raise ConfigError(f"goal is for n={self.goal.n}, config has n={self.config.n}")
        if self.forced_m is not None and self.config.backend != "symbolic":
            raise ConfigError("forcing M needs the symbolic backend")


@dataclass
class SummaryReport:
    scenario: str
    trials: int
    agreements: int
    aborts_by_stage: dict[str, int]
    attack_successes: int
    keys_matching: int
    mean_decoy_error_rate: float
    key_uniformity_chi2: float | None
    key_uniformity_pvalue: float | None
    wall_clock: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.agreements + sum(self.aborts_by_stage.values()) != self.trials:
            raise ValueError("agreements and aborts must add up to trials")

    def to_record(self) -> dict:
        # wall-clock time stays out of the file so reruns are byte-identical
        rec = asdict(self)
        rec.pop("wall_clock")
        return rec

    def table(self) -> str:
        rows = [
            ("scenario", self.scenario),
            ("trials", self.trials),
            ("agreements", self.agreements),
            *((f"aborts ({k})", v) for k, v in self.aborts_by_stage.items()),
            ("keys matching", self.keys_matching),
            ("attack successes", self.attack_successes),
            ("mean decoy error rate", f"{self.mean_decoy_error_rate:.4f}"),
            ("key uniformity chi2", "n/a" if self.key_uniformity_chi2 is None else f"{self.key_uniformity_chi2:.3f}"),
            ("key uniformity p", "n/a" if self.key_uniformity_pvalue is None else f"{self.key_uniformity_pvalue:.4f}"),
            ("wall clock [s]", f"{self.wall_clock:.2f}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def trial_keys(seed: int, trial: int, n: int) -> tuple[DibitString, DibitString]:
    """Private inputs for one trial, drawn from a stream separate from the run's."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, 1)))
    return DibitString.random(n, rng), DibitString.random(n, rng)


def _adversary(campaign: Campaign) -> Adversary | None:
    if campaign.scenario is Scenario.EVE:
        return InterceptResend(campaign.eve_transmissions)
    if campaign.scenario is Scenario.PERM_ATTACK_ORIGINAL:
        return PermutationAttacker(goal=campaign.goal)
    if campaign.scenario is Scenario.PERM_ATTACK_IMPROVED:
        if campaign.goal is not None:
            return PermutationAttacker(goal=campaign.goal)
        n = campaign.config.n
        if n < 2:
            raise ConfigError("the improved-protocol attack needs n >= 2 to displace a slot")
        swap = list(range(n))
        swap[0], swap[1] = 1, 0
        return PermutationAttacker(shuffle=Permutation(tuple(swap)))
    return None


def run_trial(campaign: Campaign, trial: int) -> RunOutcome:
    ka, kb = trial_keys(campaign.config.seed, trial, campaign.config.n)
    ka = campaign.ka if campaign.ka is not None else ka
    kb = campaign.kb if campaign.kb is not None else kb
    script = list(campaign.forced_m) if campaign.forced_m is not None else None
    return run_protocol(campaign.config, ka, kb, _adversary(campaign), run_index=trial, script=script)


def _run_chunk(args) -> list[RunOutcome]:
    campaign, trials = args
    return [run_trial(campaign, t) for t in trials]


def attack_succeeded(outcome: RunOutcome) -> bool:
    attack = outcome.attack
    return (not outcome.aborted and attack is not None and attack.feasible
            and outcome.bob_final_key == attack.predicted_bob_key)


def summarize(campaign: Campaign, outcomes: list[RunOutcome], wall_clock: float = 0.0) -> SummaryReport:
    aborts = Counter()
    error_rates = []
    second_half = Counter()
    for o in outcomes:
        if o.aborted:
            aborts[o.status.value] += 1
        for e in o.transcript.find("decoy-check"):
            if e.payload["count"]:
                error_rates.append(e.payload["error_rate"])
        if not o.aborted:
            key = o.bob_final_key[len(o.bob_final_key) // 2:]
            second_half.update(key[i:i + 2] for i in range(0, len(key), 2))
    chi2 = pvalue = None
    if second_half:
        counts = [second_half.get(format(d, "02b"), 0) for d in range(4)]
        res = stats.chisquare(counts)
        chi2, pvalue = float(res.statistic), float(res.pvalue)
    return SummaryReport(
        scenario=campaign.scenario.value,
        trials=len(outcomes),
        agreements=sum(not o.aborted for o in outcomes),
        aborts_by_stage={s.value: aborts.get(s.value, 0) for s in Status if s is not Status.AGREED},
        attack_successes=sum(attack_succeeded(o) for o in outcomes),
        keys_matching=sum(o.keys_match for o in outcomes),
        mean_decoy_error_rate=float(np.mean(error_rates)) if error_rates else 0.0,
        key_uniformity_chi2=chi2,
        key_uniformity_pvalue=pvalue,
        wall_clock=wall_clock,
    )


def run_campaign(campaign: Campaign, return_outcomes: bool = False):
    """Run every trial, fold the results in trial order and write outputs.

    Returns the SummaryReport, or ``(report, outcomes)`` when asked.
    """
    out_dir = None
    if campaign.output_path is not None:
        out_dir = Path(campaign.output_path)
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-test"
        probe.write_text("")
        probe.unlink()

    start = time.perf_counter()
    trials = list(range(campaign.trials))
    if campaign.workers > 1:
        chunks = [trials[i::campaign.workers] for i in range(campaign.workers)]
        with ProcessPoolExecutor(campaign.workers) as pool:
            parts = list(pool.map(_run_chunk, [(campaign, c) for c in chunks]))
        by_trial = {t: o for chunk, part in zip(chunks, parts) for t, o in zip(chunk, part)}
        outcomes = [by_trial[t] for t in trials]
    else:
        outcomes = [run_trial(campaign, t) for t in trials]
    report = summarize(campaign, outcomes, time.perf_counter() - start)
    log.info("campaign %s finished: %d/%d agreed", campaign.scenario.value, report.agreements, report.trials)

    if out_dir is not None:
        (out_dir / "summary.json").write_text(json.dumps(report.to_record(), indent=2, sort_keys=True) + "\n")
        if campaign.write_transcripts:
            write_transcripts(out_dir / "transcripts.jsonl", ((i, o.transcript) for i, o in enumerate(outcomes)))
    return (report, outcomes) if return_outcomes else report


EXAMPLE_KA = "0011"
EXAMPLE_KB = "0110"
EXAMPLE_M = "1110"
EXAMPLE_HONEST_KEY = "01011011"
EXAMPLE_FAKE_KEY = "11110001"
EXAMPLE_FAKE_KA = "1001"


def verify_worked_example(verbose: bool = False) -> bool:
    """Run the two-pair worked example with M pinned to 1110 and check the
    honest key, the fake K'_A and the fake final key bit for bit."""
    ka, kb, m = DibitString.parse(EXAMPLE_KA), DibitString.parse(EXAMPLE_KB), DibitString.parse(EXAMPLE_M)
    config = ProtocolConfig(n=2)
    honest = run_protocol(config, ka, kb, script=list(m))
    attacker = PermutationAttacker(goal=AttackGoal(target_final_key=EXAMPLE_FAKE_KEY))
    attacked = run_protocol(config, ka, kb, attacker, script=list(m))
    bob_ka = attacked.transcript.find("derived", "step7")[0].payload["ka"].replace(" ", "")
    checks = {
        "M": honest.transcript.find("measurement", "step3")[0].payload["m"].replace(" ", "") == EXAMPLE_M,
        "honest key": honest.alice_final_key == honest.bob_final_key == EXAMPLE_HONEST_KEY,
        "attack feasible": attacker.result().feasible,
        "fake K_A": bob_ka == EXAMPLE_FAKE_KA,
        "fake key": attacked.bob_final_key == EXAMPLE_FAKE_KEY,
        "no abort": not attacked.aborted,
    }
    if verbose:
        for name, ok in checks.items():
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all(checks.values())


def table1_sweep(tol: float = 1e-10) -> bool:
    """Every logical unitary on every logical Bell state lands on code b xor u."""
    for model in NoiseModel:
        for b in BellCode:
            for u in BellCode:
                out = lg.apply_logical_unitary(u, lg.make_logical_bell(b, model), 0, model)
                expected = lg.make_logical_bell(unitary_action(u, b), model)
                if not sv.equal_up_to_phase(out, expected, tol):
                    return False
    return True


def swap_oracle(samples: int, rng: np.random.Generator) -> bool:
    """Crosswise Bell measurement of two logical pairs obeys the XOR law, and the
    symbolic sampler never violates it."""
    for is1 in BellCode:
        for is2 in BellCode:
            joint = sv.tensor(lg.make_logical_bell(is1, NoiseModel.DEPHASING),
                              lg.make_logical_bell(is2, NoiseModel.DEPHASING))
            for _ in range(samples):
                mr1, post = lg.measure_logical_bell(joint, NoiseModel.DEPHASING, rng, particles=(0, 2))
                mr2, _ = lg.measure_logical_bell(post, NoiseModel.DEPHASING, rng, particles=(1, 3))
                if mr1 ^ mr2 != is1 ^ is2:
                    return False
                s1, s2 = entanglement_swap(is1, is2, rng)
                if s1 ^ s2 != is1 ^ is2:
                    return False
    return True


def dfs_invariance(draws: int, rng: np.random.Generator, tol: float = 1e-10) -> bool:
    for model in NoiseModel:
        states = [lg.encode_logical(s, model) for s in LogicalSymbol]
        states += [lg.make_logical_bell(c, model) for c in BellCode]
        for _ in range(draws):
            param = lg.sample_noise_parameter(rng)
            for s in states:
                if not sv.equal_up_to_phase(lg.apply_collective_noise(s, model, param), s, tol):
                    return False
    return True


def selftest(seed: int = 0, verbose: bool = False) -> bool:
    rng = np.random.default_rng(seed)
    checks = {
        "Bell-state transformation table": table1_sweep(),
        "entanglement swapping XOR law": swap_oracle(200, rng),
        "DFS invariance under collective noise": dfs_invariance(100, rng),
    }
    if verbose:
        for name, ok in checks.items():
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all(checks.values())
