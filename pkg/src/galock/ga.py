"""Generic genetic algorithm over binary or real chromosomes.

The engine evolves a fixed-size population with roulette-wheel parent
selection, halfway single-point crossover (binary encoding only), per-gene
mutation, single-copy elitism, and a survival stage that activates once the
best fitness stagnates: pairwise tournaments discard members dominated in
both fitness and age, and one fresh random individual of age zero enters
each generation thereafter.

Fitness is a sum of squared residuals over one or more criteria, each
comparing a candidate's simulated observables against oracle data. Lower is
better; zero means every residual vanished. All randomness flows through a
single seeded generator, so a run is a pure function of its inputs.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from galock.errors import EncodingMismatch, InvalidParams, SimulationFailure

BINARY = "binary"
REAL = "real"

HALT_TARGET = "target"
HALT_MAX_GENERATIONS = "max_generations"
HALT_MAX_TIME = "max_time"


@dataclass
class Chromosome:
    """Candidate solution: gene vector, generations survived, cached fitness."""

    genes: np.ndarray
    age: int = 0
    fitness: float | None = None

    def __post_init__(self):
        self.genes = np.asarray(self.genes)
        if self.genes.ndim != 1 or self.genes.size < 1:
            raise InvalidParams("genes must be a non-empty vector")
        if self.age < 0:
            raise InvalidParams("age must be >= 0")

    @property
    def encoding(self) -> str:
        return BINARY if self.genes.dtype == np.uint8 else REAL

    def clone(self) -> "Chromosome":
        return Chromosome(self.genes.copy(), self.age, self.fitness)


@dataclass(frozen=True)
class GAConfig:
    length: int
    population: int = 40
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    stagnation_window: int = 8
    max_generations: int = 2000
    max_seconds: float = 600.0
    target_fitness: float = 0.0
    seed: int = 1729
    real_bounds: tuple | None = None  # (lo_array, hi_array) for real genes
    real_mutation_scale: float = 0.05
    real_mutation_rate_factor: float = 5.0
    # optional multi-resolution mutation: each mutation event draws its
    # half-width uniformly from this ladder instead of the single scale
    real_mutation_ladder: tuple | None = None
    # probability of an additional reciprocal pair move (one gene scaled by a
    # factor, another divided by it), which traverses product-preserving
    # fitness valleys that axis-aligned moves cross slowly
    real_pair_mutation_rate: float = 0.0

    def __post_init__(self):
        if self.population < 2:
            raise InvalidParams("population must be >= 2")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise InvalidParams("rates must lie in [0, 1]")
        if self.target_fitness < 0.0:
            raise InvalidParams("target fitness must be >= 0")
        if self.length < 1:
            raise InvalidParams("chromosome length must be >= 1")


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float
    mean: float
    std: float
    best_genes: tuple
    elapsed_s: float


@dataclass
class GAResult:
    best: Chromosome
    trace: list
    halt_reason: str
    generations: int
    wall_time_s: float


class FitnessFunction:
    """Sum of squared residuals over criteria applied to decoded genes.

    ``decode`` maps a (B, L) gene batch to whatever the criteria consume
    (typically per-slot widths); each criterion returns a (B, n_j) residual
    block. The total is computed criterion by criterion, so a two-criterion
    fitness equals the sum of the two single-criterion fitnesses exactly.
    """

    def __init__(self, decode, criteria):
        self.decode = decode
        self.criteria = tuple(criteria)
        if not self.criteria:
            raise InvalidParams("at least one fitness criterion required")

    def evaluate_batch(self, genes: np.ndarray) -> np.ndarray:
        batch = np.atleast_2d(genes)
        try:
            decoded = self.decode(batch)
            total = np.zeros(batch.shape[0])
            for criterion in self.criteria:
                r = np.atleast_2d(criterion.residuals_batch(decoded))
                total = total + np.sum(r * r, axis=1)
            return total
        except SimulationFailure:
            return self._evaluate_rows(batch)
        except (FloatingPointError, ValueError):
            return self._evaluate_rows(batch)

    def _evaluate_rows(self, batch: np.ndarray) -> np.ndarray:
        # salvage path: failed rows score +inf instead of aborting the run
        out = np.empty(batch.shape[0])
        for i in range(batch.shape[0]):
            try:
                decoded = self.decode(batch[i : i + 1])
                total = 0.0
                for criterion in self.criteria:
                    r = np.atleast_2d(criterion.residuals_batch(decoded))
                    total += float(np.sum(r * r))
                out[i] = total
            except Exception:
                out[i] = math.inf
        return out


def evaluate_fitness(ff: FitnessFunction, chromosome: Chromosome) -> float:
    """Fitness of a single chromosome; zero iff every residual is zero."""
    return float(ff.evaluate_batch(chromosome.genes[None, :])[0])


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def selection_scores(fitnesses: np.ndarray) -> np.ndarray:
    """Roulette slot sizes for minimized fitness: s = 1/(1 + F)."""
    f = np.asarray(fitnesses, dtype=float)
    with np.errstate(invalid="ignore"):
        s = 1.0 / (1.0 + f)
    s = np.where(np.isnan(s) | (f == math.inf), 0.0, s)
    return s


def roulette_select(population: list, count: int, rng) -> list:
    """Sample `count` members with replacement, probability proportional to
    1/(1+F); uniform fallback when every score ties (or all are zero)."""
    if count < 1:
        raise InvalidParams("selection count must be >= 1")
    fitnesses = np.array([c.fitness for c in population], dtype=float)
    if np.any(np.isnan(fitnesses)):
        raise InvalidParams("selection requires evaluated fitnesses")
    scores = selection_scores(fitnesses)
    total = scores.sum()
    if total <= 0.0 or np.all(scores == scores[0]):
        probs = np.full(len(population), 1.0 / len(population))
    else:
        probs = scores / total
    idx = rng.choice(len(population), size=count, replace=True, p=probs)
    return [population[i] for i in idx]


def crossover_single_point(a: Chromosome, b: Chromosome, rng, crossover_rate: float = 1.0):
    """Halfway single-point crossover for binary chromosomes.

    Bits right of the midpoint swap between the parents; offspring inherit
    the age of the older parent. Applied with probability ``crossover_rate``,
    otherwise the parents are cloned.
    """
    if a.encoding != BINARY or b.encoding != BINARY:
        raise EncodingMismatch("crossover is defined for binary chromosomes only")
    if a.genes.size != b.genes.size:
        raise EncodingMismatch("parents must have equal length")
    age = max(a.age, b.age)
    if rng.random() >= crossover_rate:
        c1, c2 = a.clone(), b.clone()
        c1.age = c2.age = age
        c1.fitness = c2.fitness = None
        return c1, c2
    cut = a.genes.size // 2
    g1 = np.concatenate([a.genes[:cut], b.genes[cut:]])
    g2 = np.concatenate([b.genes[:cut], a.genes[cut:]])
    return Chromosome(g1, age), Chromosome(g2, age)


def mutate(
    c: Chromosome,
    mutation_rate: float,
    rng,
    *,
    bounds: tuple | None = None,
    scale: float = 0.05,
    rate_factor: float = 5.0,
    scale_ladder: tuple | None = None,
    pair_rate: float = 0.0,
) -> Chromosome:
    """Per-gene mutation.

    Binary genes flip independently with probability ``mutation_rate``. Real
    genes are perturbed multiplicatively by a factor uniform in
    [1 - d, 1 + d] with probability ``rate_factor * mutation_rate`` per gene,
    then clamped to bounds; ``d`` is either the fixed scale or, when a ladder
    is configured, drawn per mutation event from the ladder so the search can
    refine across resolutions. With probability ``pair_rate`` one extra
    reciprocal move scales a random gene by a factor and divides another by
    the same factor.
    """
    if c.encoding == BINARY:
        flips = rng.random(c.genes.size) < mutation_rate
        genes = np.where(flips, 1 - c.genes, c.genes).astype(np.uint8)
        return Chromosome(genes, c.age)
    p = min(1.0, rate_factor * mutation_rate)
    hits = rng.random(c.genes.size) < p
    if scale_ladder:
        deltas = np.array([scale_ladder[i] for i in rng.integers(0, len(scale_ladder), c.genes.size)])
    else:
        deltas = np.full(c.genes.size, scale)
    factors = 1.0 + deltas * (2.0 * rng.random(c.genes.size) - 1.0)
    genes = np.where(hits, c.genes * factors, c.genes)
    if pair_rate > 0.0 and c.genes.size >= 2 and rng.random() < pair_rate:
        i, j = rng.choice(c.genes.size, size=2, replace=False)
        d = scale_ladder[rng.integers(0, len(scale_ladder))] if scale_ladder else scale
        f = 1.0 + d * (2.0 * rng.random() - 1.0)
        genes = genes.copy()
        genes[i] *= f
        genes[j] /= f
    if bounds is not None:
        genes = np.clip(genes, bounds[0], bounds[1])
    return Chromosome(genes, c.age)


def _dominates(a: Chromosome, b: Chromosome) -> bool:
    return a.fitness < b.fitness and a.age < b.age


def age_fitness_pareto_survival(members: list, n: int, rng, max_draws: int = 64) -> list:
    """Cull to ``n`` members by pairwise dominance tournaments.

    Two members are drawn uniformly; one strictly better in both fitness and
    age removes the other. If no dominated pair turns up within a bounded
    number of draws, the worse-fitness member of a sampled pair goes (ties
    broken by age, then draw order), so the cull always terminates.
    """
    pool = list(members)
    if len(pool) < n:
        raise InvalidParams("cannot cull below current size")
    while len(pool) > n:
        removed = False
        for _ in range(max_draws):
            i, j = rng.choice(len(pool), size=2, replace=False)
            a, b = pool[i], pool[j]
            if _dominates(a, b):
                pool.pop(j)
                removed = True
                break
            if _dominates(b, a):
                pool.pop(i)
                removed = True
                break
        if not removed:
            i, j = rng.choice(len(pool), size=2, replace=False)
            a, b = pool[i], pool[j]
            if a.fitness != b.fitness:
                pool.pop(j if b.fitness > a.fitness else i)
            elif a.age != b.age:
                pool.pop(j if b.age > a.age else i)
            else:
                pool.pop(j)
    return pool


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------


def _random_chromosome(config: GAConfig, encoding: str, rng) -> Chromosome:
    if encoding == BINARY:
        return Chromosome(rng.integers(0, 2, config.length).astype(np.uint8), 0)
    lo, hi = config.real_bounds
    genes = lo + (hi - lo) * rng.random(config.length)
    return Chromosome(genes.astype(float), 0)


def _evaluate_all(ff: FitnessFunction, members: list) -> None:
    todo = [m for m in members if m.fitness is None]
    if not todo:
        return
    genes = np.stack([m.genes for m in todo])
    values = ff.evaluate_batch(genes)
    for m, v in zip(todo, values):
        m.fitness = float(v)


def _population_stats(members: list) -> tuple:
    finite = [m.fitness for m in members if m.fitness is not None and math.isfinite(m.fitness)]
    if not finite:
        return math.inf, math.inf
    return float(np.mean(finite)), float(np.std(finite))


def run_ga(config: GAConfig, encoding: str, ff: FitnessFunction, observer=None) -> GAResult:
    """Evolve until the target fitness, generation cap, or time cap is hit.

    Deterministic for a fixed config and fitness function (wall-time halting
    aside). ``observer(generation, population)`` is called at each generation
    boundary when provided.
    """
    if encoding not in (BINARY, REAL):
        raise EncodingMismatch(f"unknown encoding {encoding!r}")
    if encoding == REAL:
        if config.real_bounds is None:
            raise InvalidParams("real encoding requires bounds")
        lo, hi = (np.asarray(b, dtype=float) for b in config.real_bounds)
        if lo.shape != (config.length,) or hi.shape != (config.length,) or np.any(lo > hi):
            raise InvalidParams("bounds must be per-gene arrays with lo <= hi")
        config = replace(config, real_bounds=(lo, hi))

    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()

    population = [_random_chromosome(config, encoding, rng) for _ in range(config.population)]
    _evaluate_all(ff, population)
    best = min(population, key=lambda m: m.fitness).clone()

    trace: list = []
    stall = 0
    survival_active = False
    halt_reason = HALT_MAX_GENERATIONS
    generation = 0

    while True:
        elapsed = time.perf_counter() - t0
        mean, std = _population_stats(population)
        trace.append(
            GenerationStats(generation, best.fitness, mean, std, tuple(best.genes.tolist()), elapsed)
        )
        if observer is not None:
            observer(generation, population)
        if best.fitness <= config.target_fitness:
            halt_reason = HALT_TARGET
            break
        if generation >= config.max_generations:
            halt_reason = HALT_MAX_GENERATIONS
            break
        if elapsed >= config.max_seconds:
            halt_reason = HALT_MAX_TIME
            break

        offspring: list = []
        n_offspring = config.population - 1  # one slot reserved for the elite copy
        if encoding == BINARY:
            while len(offspring) < n_offspring:
                pa, pb = roulette_select(population, 2, rng)
                c1, c2 = crossover_single_point(pa, pb, rng, config.crossover_rate)
                offspring.append(mutate(c1, config.mutation_rate, rng))
                if len(offspring) < n_offspring:
                    offspring.append(mutate(c2, config.mutation_rate, rng))
        else:
            while len(offspring) < n_offspring:
                (parent,) = roulette_select(population, 1, rng)
                offspring.append(
                    mutate(
                        parent.clone(),
                        config.mutation_rate,
                        rng,
                        bounds=config.real_bounds,
                        scale=config.real_mutation_scale,
                        rate_factor=config.real_mutation_rate_factor,
                        scale_ladder=config.real_mutation_ladder,
                        pair_rate=config.real_pair_mutation_rate,
                    )
                )
        _evaluate_all(ff, offspring)

        improved = any(m.fitness < best.fitness for m in offspring)
        for m in offspring:
            if m.fitness < best.fitness:
                best = m.clone()

        if survival_active:
            fresh = _random_chromosome(config, encoding, rng)
            _evaluate_all(ff, [fresh])
            if fresh.fitness < best.fitness:
                best = fresh.clone()
                improved = True
            survivors = age_fitness_pareto_survival(
                population + offspring, config.population - 2, rng
            )
            next_population = [best.clone()] + survivors + [fresh]
        else:
            next_population = [best.clone()] + offspring

        stall = 0 if improved else stall + 1
        if not survival_active and stall >= config.stagnation_window:
            survival_active = True

        for m in next_population:
            m.age += 1
        if survival_active:
            next_population[-1].age = 0  # the fresh individual enters at age 0

        assert len(next_population) == config.population
        population = next_population
        generation += 1

    wall = time.perf_counter() - t0
    return GAResult(best=best, trace=trace, halt_reason=halt_reason, generations=generation, wall_time_s=wall)


def trace_to_csv(trace: list, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "best", "mean", "std", "elapsed_s"])
        for s in trace:
            w.writerow([s.generation, f"{s.best:.12g}", f"{s.mean:.12g}", f"{s.std:.12g}", f"{s.elapsed_s:.6f}"])
