"""Self-adaptive evolutionary trainer for qubit-network genomes.

Each generation every candidate is perturbed by one of three
difference-vector strategies (rand-one, current-to-best, best-one) picked by
roulette wheel over self-adapting probabilities, recombined with its parent
through a variable-width neuron-bundle crossover, and kept only if a child
matches or beats it (elitist adoption, so the population best never gets
worse). Success/failure counters per strategy re-derive the selection
probabilities at the end of every generation.

Determinism: every random draw for candidate i in generation g comes from a
stream seeded by (seed, g, i), so results are bit-identical no matter how
many evaluation threads run.
"""

from __future__ import annotations

import base64
import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import network
from .dataset import WindowedDataset
from .errors import (
    CheckpointFormatError,
    MonotonicityViolationError,
    PopulationTooSmallError,
)
from .metrics import rmse
from .network import HALF_PI, Architecture, NetworkGenome, layout


class Strategy(enum.Enum):
    """Difference-vector perturbation strategies (classic DE lineage)."""

    RAND_ONE = "rand-one"
    CURRENT_TO_BEST = "current-to-best"
    BEST_ONE = "best-one"


STRATEGIES = (Strategy.RAND_ONE, Strategy.CURRENT_TO_BEST, Strategy.BEST_ONE)


class TrainingMode(str, enum.Enum):
    FULL = "full"            # structure and parameters both evolve
    FIXED_ARCH = "fixed-arch"  # one shared architecture, parameters evolve
    FIXED_ALL = "fixed-all"    # random initialization only, no operators


@dataclass
class StrategyState:
    """Selection probabilities plus per-strategy success/failure counters."""

    probs: tuple[float, float, float] = (0.33, 0.33, 0.34)
    successes: list[int] = field(default_factory=lambda: [0, 0, 0])
    failures: list[int] = field(default_factory=lambda: [0, 0, 0])

    @property
    def t1(self) -> float:
        return self.probs[0]

    @property
    def t2(self) -> float:
        return self.probs[1]

    @property
    def t3(self) -> float:
        return self.probs[2]


@dataclass
class Population:
    candidates: list[NetworkGenome]
    fitness: np.ndarray
    best_index: int
    generation: int

    @property
    def best(self) -> NetworkGenome:
        return self.candidates[self.best_index]

    @property
    def best_fitness(self) -> float:
        return float(self.fitness[self.best_index])


@dataclass(frozen=True)
class TrainingConfig:
    population_size: int = 80
    generations: int = 50
    window_size: int = 10
    hidden_range: tuple[int, int] = (5, 10)
    depth_range: tuple[int, int] = (1, 4)
    rate_mean: float = 0.5
    rate_std: float = 0.3
    initial_probabilities: tuple[float, float, float] = (0.33, 0.33, 0.34)
    seed: int = 0
    mode: TrainingMode = TrainingMode.FULL
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", TrainingMode(self.mode))
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4 (modulation needs donors)")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        for lo, hi in (self.hidden_range, self.depth_range):
            if lo < 1 or hi < lo:
                raise ValueError("ranges must satisfy 1 <= lo <= hi")
        if not 0.0 < self.rate_mean < 1.0 or self.rate_std <= 0.0:
            raise ValueError("rate_mean must be in (0,1) and rate_std > 0")
        p = self.initial_probabilities
        if len(p) != 3 or any(not 0.0 <= v <= 1.0 for v in p) or abs(sum(p) - 1.0) > 1e-9:
            raise ValueError("initial probabilities must be a 3-simplex")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class TrainingReport:
    mode: str
    seed: int
    population_size: int
    generations: int
    best_fitness: float
    fitness_trajectory: list[float]
    probability_trajectory: list[tuple[float, float, float]]
    final_probabilities: tuple[float, float, float]
    success_totals: dict[str, int]
    degenerate_args: int
    final_architectures: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "population_size": self.population_size,
            "generations": self.generations,
            "best_fitness": self.best_fitness,
            "fitness_trajectory": self.fitness_trajectory,
            "probability_trajectory": [list(p) for p in self.probability_trajectory],
            "final_probabilities": list(self.final_probabilities),
            "success_totals": self.success_totals,
            "degenerate_args": self.degenerate_args,
            "final_architectures": self.final_architectures,
        }


@dataclass(frozen=True)
class ConvergenceDiagnostics:
    total_descent: float
    stagnated: bool
    longest_plateau: int


class DatasetFitness:
    """Training-set RMSE of a genome's predictions; the trainer's objective.

    Input states are genome-independent, so they are encoded once and shared
    across all candidate evaluations.
    """

    def __init__(self, data: WindowedDataset):
        self._states = network.input_states(data.inputs)
        self._targets = np.asarray(data.targets, dtype=float)

    def __call__(self, genome: NetworkGenome) -> tuple[float, int]:
        diag = network.ForwardDiagnostics()
        preds = network.forward_states(genome, self._states, diag)
        return rmse(self._targets, preds), diag.degenerate_args


def _stream(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, generation, index)))


def _eval(fitness_fn, genome) -> tuple[float, int]:
    result = fitness_fn(genome)
    if isinstance(result, tuple):
        return float(result[0]), int(result[1])
    return float(result), 0


def sample_modulation_rate(
    rng: np.random.Generator, mean: float = 0.5, std: float = 0.3
) -> float:
    """Normal(mean, std) redrawn until strictly inside (0, 1)."""
    while True:
        rate = rng.normal(mean, std)
        if 0.0 < rate < 1.0:
            return float(rate)


def select_strategy(mss: float, state: StrategyState) -> Strategy:
    """Roulette wheel over the three strategy probabilities."""
    if 0.0 < mss <= state.t1:
        return Strategy.RAND_ONE
    if state.t1 < mss <= state.t1 + state.t2:
        return Strategy.CURRENT_TO_BEST
    return Strategy.BEST_ONE


def update_probabilities(state: StrategyState) -> StrategyState:
    """Re-derive selection probabilities from the generation's counters.

    Success counts are Laplace-smoothed (+1) so the shared denominator stays
    positive and no strategy is ever starved; counters reset afterwards.
    """
    eps = [s + 1 for s in state.successes]
    tau = list(state.failures)
    st = (
        2.0 * (eps[1] * eps[2] + eps[0] * eps[2] + eps[0] * eps[1])
        + tau[0] * (eps[1] + eps[2])
        + tau[1] * (eps[0] + eps[2])
        + tau[2] * (eps[0] + eps[1])
    )
    t1 = eps[0] * (eps[1] + tau[1] + eps[2] + tau[2]) / st
    t2 = eps[1] * (eps[0] + tau[0] + eps[2] + tau[2]) / st
    t3 = max(0.0, 1.0 - t1 - t2)
    return StrategyState(probs=(t1, t2, t3))


def _block_table(genome: NetworkGenome) -> dict[tuple[int, str], slice]:
    return {(t, kind): sl for t, kind, sl in layout(genome.architecture).blocks()}


def _combine_blockwise(
    base: NetworkGenome,
    terms: list[tuple[float, NetworkGenome, NetworkGenome]],
) -> np.ndarray:
    """base + sum(coeff * (a - b)) aligned block by block.

    Donor architectures may differ from the base; each block contributes only
    on the overlapping prefix shared by every participant, and positions any
    donor lacks keep the base entry.
    """
    tables = {id(g): _block_table(g) for _, a, b in terms for g in (a, b)}
    out = base.phases.copy()
    for t, kind, sl in layout(base.architecture).blocks():
        max_len = sl.stop - sl.start
        for _, a, b in terms:
            for g in (a, b):
                other = tables[id(g)].get((t, kind))
                max_len = 0 if other is None else min(max_len, other.stop - other.start)
        if max_len == 0:
            continue
        value = base.phases[sl.start : sl.start + max_len].copy()
        for coeff, a, b in terms:
            sa = tables[id(a)][(t, kind)]
            sb = tables[id(b)][(t, kind)]
            value += coeff * (
                a.phases[sa.start : sa.start + max_len]
                - b.phases[sb.start : sb.start + max_len]
            )
        out[sl.start : sl.start + max_len] = value
    return out


def modulate(
    strategy: Strategy,
    index: int,
    population: Population,
    best: NetworkGenome,
    rate: float,
    rng: np.random.Generator,
) -> NetworkGenome:
    """Produce the perturbed genome for one candidate.

    Three mutually distinct donors (all != index) are drawn; the perturbed
    genome inherits the base vector's architecture (the donor for rand-one,
    the candidate for current-to-best, the best-so-far for best-one).
    """
    n = len(population.candidates)
    if n < 4:
        raise PopulationTooSmallError(f"population of {n} cannot supply 3 distinct donors")
    picks = rng.choice(n - 1, size=3, replace=False)
    picks[picks >= index] += 1
    r1, r2, r3 = (population.candidates[int(j)] for j in picks)
    current = population.candidates[index]

    if strategy is Strategy.RAND_ONE:
        base, terms = r1, [(rate, r2, r3)]
    elif strategy is Strategy.CURRENT_TO_BEST:
        base, terms = current, [(rate, best, current), (rate, r1, r2)]
    else:
        base, terms = best, [(rate, r1, r2)]
    return NetworkGenome(base.architecture, _combine_blockwise(base, terms))


def _fit_vector(vec: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    """Truncate or random-pad a transferred phase vector to a new length."""
    if vec.shape[0] >= length:
        return vec[:length]
    pad = rng.uniform(-HALF_PI, HALF_PI, length - vec.shape[0])
    return np.concatenate([vec, pad])


def _splice(
    primary: NetworkGenome,
    donor: NetworkGenome,
    level: int,
    keep: int,
    donor_cut: int,
    rng: np.random.Generator,
) -> NetworkGenome:
    """Child keeping `primary`'s depth, with hidden layer `level` rebuilt from
    primary bundles [1..keep] followed by donor bundles [donor_cut+1..]."""
    p_arch, d_arch = primary.architecture, donor.architecture
    new_width = keep + (d_arch.hidden_widths[level - 1] - donor_cut)
    hidden = list(p_arch.hidden_widths)
    hidden[level - 1] = new_width
    child_arch = Architecture(p_arch.input_width, tuple(hidden), p_arch.output_width)

    lay_c = layout(child_arch)
    lay_p = layout(p_arch)
    lay_d = layout(d_arch)
    phases = np.empty(lay_c.total_length)

    t_in, t_out = level - 1, level
    for t, seg in enumerate(lay_c.transitions):
        if t in (t_in, t_out):
            continue
        p_seg = lay_p.transitions[t]
        phases[seg.weight_slice] = primary.phases[p_seg.weight_slice]
        if seg.has_bias:
            phases[seg.bias_slice] = primary.phases[p_seg.bias_slice]
        phases[seg.rev_slice] = primary.phases[p_seg.rev_slice]

    # Incoming transition: columns are the level's neurons.
    seg, p_seg, d_seg = (lay.transitions[t_in] for lay in (lay_c, lay_p, lay_d))
    w = np.empty((seg.w_in, seg.w_out))
    wp = primary.phases[p_seg.weight_slice].reshape(p_seg.w_in, p_seg.w_out)
    wd = donor.phases[d_seg.weight_slice].reshape(d_seg.w_in, d_seg.w_out)
    w[:, :keep] = wp[:, :keep]
    for j in range(donor_cut, d_seg.w_out):
        w[:, keep + j - donor_cut] = _fit_vector(wd[:, j], seg.w_in, rng)
    phases[seg.weight_slice] = w.ravel()
    phases[seg.bias_slice] = np.concatenate(
        [primary.phases[p_seg.bias_slice][:keep], donor.phases[d_seg.bias_slice][donor_cut:]]
    )
    phases[seg.rev_slice] = np.concatenate(
        [primary.phases[p_seg.rev_slice][:keep], donor.phases[d_seg.rev_slice][donor_cut:]]
    )

    # Outgoing transition: rows are the level's neurons; the destination
    # layer's own bias/reversal blocks stay with the primary parent.
    seg, p_seg, d_seg = (lay.transitions[t_out] for lay in (lay_c, lay_p, lay_d))
    w = np.empty((seg.w_in, seg.w_out))
    wp = primary.phases[p_seg.weight_slice].reshape(p_seg.w_in, p_seg.w_out)
    wd = donor.phases[d_seg.weight_slice].reshape(d_seg.w_in, d_seg.w_out)
    w[:keep, :] = wp[:keep, :]
    for j in range(donor_cut, d_seg.w_in):
        w[keep + j - donor_cut, :] = _fit_vector(wd[j, :], seg.w_out, rng)
    phases[seg.weight_slice] = w.ravel()
    if seg.has_bias:
        phases[seg.bias_slice] = primary.phases[p_seg.bias_slice]
    phases[seg.rev_slice] = primary.phases[p_seg.rev_slice]

    return NetworkGenome(child_arch, phases)


def recombine(
    parent1: NetworkGenome,
    parent2: NetworkGenome,
    rng: np.random.Generator,
    *,
    level: int | None = None,
    cut_fraction: float | None = None,
) -> tuple[NetworkGenome, NetworkGenome]:
    """Swap whole-neuron bundles at one hidden level shared by both parents.

    One relative cut position is mapped onto both parents' widths
    (c = floor(u*p) + 1), so recombining a genome with itself returns
    bit-equal copies while different widths still exchange variable-size
    tails. Transferred weight columns/rows are truncated or random-padded to
    the child's adjacent-layer widths; each child keeps its primary parent's
    depth. `level`/`cut_fraction` override the draws for testing.
    """
    shared_depth = min(parent1.architecture.depth, parent2.architecture.depth)
    if level is None:
        level = int(rng.integers(1, shared_depth + 1))
    elif not 1 <= level <= shared_depth:
        raise ValueError(f"level must be in [1, {shared_depth}]")
    u = rng.random() if cut_fraction is None else cut_fraction
    if not 0.0 <= u < 1.0:
        raise ValueError("cut_fraction must be in [0, 1)")
    p1 = parent1.architecture.hidden_widths[level - 1]
    p2 = parent2.architecture.hidden_widths[level - 1]
    c1 = int(u * p1) + 1
    c2 = int(u * p2) + 1
    child1 = _splice(parent1, parent2, level, c1, c2, rng)
    child2 = _splice(parent2, parent1, level, c2, c1, rng)
    return child1, child2


def select_survivor(
    current: tuple[NetworkGenome, float],
    children: list[tuple[NetworkGenome, float]],
) -> tuple[NetworkGenome, float, bool]:
    """Elitist adoption: the best child replaces the parent only if its
    fitness is less than or equal; ties among children go to the first."""
    for _, fit in (current, *children):
        if not math.isfinite(fit):
            raise ValueError(f"non-finite fitness {fit}")
    best_child, best_fit = children[0]
    for genome, fit in children[1:]:
        if fit < best_fit:
            best_child, best_fit = genome, fit
    if best_fit <= current[1]:
        return best_child, best_fit, True
    return current[0], current[1], False


def _sample_architecture(config: TrainingConfig, rng: np.random.Generator) -> Architecture:
    depth = int(rng.integers(config.depth_range[0], config.depth_range[1] + 1))
    widths = rng.integers(
        config.hidden_range[0], config.hidden_range[1] + 1, size=depth
    )
    return Architecture(config.window_size, tuple(int(w) for w in widths))


def _shared_architecture(config: TrainingConfig) -> Architecture:
    rng = _stream(config.seed, 0, config.population_size)
    return _sample_architecture(config, rng)


class _Evaluator:
    """Runs candidate evaluations, optionally on a thread pool.

    Results are collected in submission order, so thread count never affects
    the outcome.
    """

    def __init__(self, threads: int):
        self._pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None

    def map(self, fn, items):
        if self._pool is None:
            return [fn(item) for item in items]
        return list(self._pool.map(fn, items))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()


def init_population(
    config: TrainingConfig, fitness_fn, evaluator: _Evaluator | None = None
) -> tuple[Population, int]:
    """Generation-0 population: sampled architectures (one shared architecture
    in the fixed modes), random genomes, fitness evaluated."""
    shared = None
    if config.mode is not TrainingMode.FULL:
        shared = _shared_architecture(config)

    def build(i: int) -> NetworkGenome:
        rng = _stream(config.seed, 0, i)
        arch = shared if shared is not None else _sample_architecture(config, rng)
        return network.random_genome(arch, rng)

    candidates = [build(i) for i in range(config.population_size)]
    owns = evaluator is None
    evaluator = evaluator or _Evaluator(config.threads)
    try:
        results = evaluator.map(lambda g: _eval(fitness_fn, g), candidates)
    finally:
        if owns:
            evaluator.close()
    fitness = np.array([fit for fit, _ in results])
    degenerate = sum(deg for _, deg in results)
    return (
        Population(
            candidates=candidates,
            fitness=fitness,
            best_index=int(np.argmin(fitness)),
            generation=0,
        ),
        degenerate,
    )


def _step_candidate(
    config: TrainingConfig,
    generation: int,
    index: int,
    population: Population,
    best: NetworkGenome,
    state: StrategyState,
    fitness_fn,
):
    rng = _stream(config.seed, generation, index)
    mss = float(rng.random())
    strategy = select_strategy(mss, state)
    rate = sample_modulation_rate(rng, config.rate_mean, config.rate_std)
    delta = modulate(strategy, index, population, best, rate, rng)
    child1, child2 = recombine(population.candidates[index], delta, rng)
    f1, d1 = _eval(fitness_fn, child1)
    f2, d2 = _eval(fitness_fn, child2)
    genome, fit, succeeded = select_survivor(
        (population.candidates[index], float(population.fitness[index])),
        [(child1, f1), (child2, f2)],
    )
    return genome, fit, strategy, succeeded, d1 + d2


@dataclass
class Checkpoint:
    seed: int
    mode: str
    next_generation: int
    state: StrategyState
    population: Population
    fitness_trajectory: list[float]
    probability_trajectory: list[tuple[float, float, float]]
    success_totals: dict[str, int]
    degenerate_args: int


_CHECKPOINT_SCHEMA = "qevo.checkpoint/1"


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    payload = {
        "schema": _CHECKPOINT_SCHEMA,
        "seed": checkpoint.seed,
        "mode": checkpoint.mode,
        "next_generation": checkpoint.next_generation,
        "probabilities": list(checkpoint.state.probs),
        "successes": list(checkpoint.state.successes),
        "failures": list(checkpoint.state.failures),
        "fitness_trajectory": checkpoint.fitness_trajectory,
        "probability_trajectory": [list(p) for p in checkpoint.probability_trajectory],
        "success_totals": checkpoint.success_totals,
        "degenerate_args": checkpoint.degenerate_args,
        "population": [
            {
                "genome": base64.b64encode(network.genome_to_bytes(g)).decode("ascii"),
                "fitness": float(f),
            }
            for g, f in zip(checkpoint.population.candidates, checkpoint.population.fitness)
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"cannot read checkpoint {path}: {exc}")
    if payload.get("schema") != _CHECKPOINT_SCHEMA:
        raise CheckpointFormatError(f"unexpected checkpoint schema {payload.get('schema')!r}")
    candidates = []
    fitness = []
    for entry in payload["population"]:
        candidates.append(network.genome_from_bytes(base64.b64decode(entry["genome"])))
        fitness.append(entry["fitness"])
    fitness = np.array(fitness)
    population = Population(
        candidates=candidates,
        fitness=fitness,
        best_index=int(np.argmin(fitness)),
        generation=payload["next_generation"] - 1,
    )
    return Checkpoint(
        seed=payload["seed"],
        mode=payload["mode"],
        next_generation=payload["next_generation"],
        state=StrategyState(
            probs=tuple(payload["probabilities"]),
            successes=list(payload["successes"]),
            failures=list(payload["failures"]),
        ),
        population=population,
        fitness_trajectory=list(payload["fitness_trajectory"]),
        probability_trajectory=[tuple(p) for p in payload["probability_trajectory"]],
        success_totals=dict(payload["success_totals"]),
        degenerate_args=int(payload["degenerate_args"]),
    )


def train(
    config: TrainingConfig,
    train_data: WindowedDataset | None = None,
    fitness_fn=None,
    *,
    checkpoint_dir: str | Path | None = None,
    resume: Checkpoint | None = None,
) -> tuple[NetworkGenome, TrainingReport]:
    """Run the full training loop and return the best genome plus a report.

    `fitness_fn(genome)` must return a fitness or a (fitness, diagnostics
    count) pair; when omitted it defaults to training-set RMSE over
    `train_data`. `checkpoint_dir` writes one resumable checkpoint per
    generation; `resume` continues a run and reproduces the uninterrupted
    result exactly.
    """
    if fitness_fn is None:
        if train_data is None:
            raise ValueError("provide train_data or an explicit fitness_fn")
        fitness_fn = DatasetFitness(train_data)

    evaluator = _Evaluator(config.threads)
    try:
        if resume is not None:
            if resume.seed != config.seed or resume.mode != config.mode.value:
                raise CheckpointFormatError(
                    "checkpoint seed/mode do not match the training config"
                )
            population = resume.population
            state = resume.state
            trajectory = list(resume.fitness_trajectory)
            prob_trajectory = list(resume.probability_trajectory)
            success_totals = dict(resume.success_totals)
            degenerate = resume.degenerate_args
            start_gen = resume.next_generation
        else:
            population, degenerate = init_population(config, fitness_fn, evaluator)
            state = StrategyState(probs=tuple(config.initial_probabilities))
            trajectory = [population.best_fitness]
            prob_trajectory = []
            success_totals = {s.value: 0 for s in STRATEGIES}
            start_gen = 1

        for gen in range(start_gen, config.generations + 1):
            if config.mode is TrainingMode.FIXED_ALL:
                trajectory.append(population.best_fitness)
                population.generation = gen
            else:
                results = evaluator.map(
                    lambda i: _step_candidate(
                        config, gen, i, population, population.best, state, fitness_fn
                    ),
                    range(config.population_size),
                )
                candidates = []
                fitness = np.empty(config.population_size)
                for i, (genome, fit, strategy, succeeded, deg) in enumerate(results):
                    candidates.append(genome)
                    fitness[i] = fit
                    degenerate += deg
                    k = STRATEGIES.index(strategy)
                    if succeeded:
                        state.successes[k] += 1
                        success_totals[strategy.value] += 1
                    else:
                        state.failures[k] += 1
                population = Population(
                    candidates=candidates,
                    fitness=fitness,
                    best_index=int(np.argmin(fitness)),
                    generation=gen,
                )
                state = update_probabilities(state)
                prob_trajectory.append(state.probs)
                trajectory.append(population.best_fitness)

            if checkpoint_dir is not None:
                save_checkpoint(
                    Checkpoint(
                        seed=config.seed,
                        mode=config.mode.value,
                        next_generation=gen + 1,
                        state=state,
                        population=population,
                        fitness_trajectory=trajectory,
                        probability_trajectory=prob_trajectory,
                        success_totals=success_totals,
                        degenerate_args=degenerate,
                    ),
                    Path(checkpoint_dir) / f"checkpoint_gen{gen:04d}.json",
                )
    finally:
        evaluator.close()

    report = TrainingReport(
        mode=config.mode.value,
        seed=config.seed,
        population_size=config.population_size,
        generations=config.generations,
        best_fitness=population.best_fitness,
        fitness_trajectory=trajectory,
        probability_trajectory=prob_trajectory,
        final_probabilities=state.probs,
        success_totals=success_totals,
        degenerate_args=degenerate,
        final_architectures=[list(g.architecture.hidden_widths) for g in population.candidates],
    )
    return population.best, report


def convergence_monitor(
    report: TrainingReport | list[float], patience: int = 10
) -> ConvergenceDiagnostics:
    """Check the best-fitness trajectory never increases and summarize descent.

    Raises MonotonicityViolationError on any increase (that would mean the
    elitist adoption rule was broken). Stagnation is flagged when `patience`
    consecutive generations brought no strict improvement.
    """
    trajectory = report.fitness_trajectory if isinstance(report, TrainingReport) else report
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    longest_plateau = plateau = 0
    for prev, cur in zip(trajectory, trajectory[1:]):
        if cur > prev:
            raise MonotonicityViolationError(f"best fitness rose from {prev} to {cur}")
        plateau = plateau + 1 if cur == prev else 0
        longest_plateau = max(longest_plateau, plateau)
    return ConvergenceDiagnostics(
        total_descent=float(trajectory[0] - trajectory[-1]),
        stagnated=longest_plateau >= patience,
        longest_plateau=longest_plateau,
    )
