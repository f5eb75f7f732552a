"""Lion Algorithm: a population minimizer over flat real genomes.

The population holds ``2n`` lions split into a pride (``nrm`` resident
males plus females) and ``n`` nomads. Every epoch runs

1. mating: each female mates once with a random non-empty subset of the
   resident males, producing two cubs by linear combination,
2. mutation of both cubs (per-gene uniform resampling),
3. defense: cubs fight the weakest resident male, then every nomad
   challenges a randomly chosen male; group sizes are restored and half of
   the nomads are replaced by fresh random lions,
4. territorial takeover: the pride is ranked, the best ``nrm`` become
   resident males and the best lion ever seen is re-inserted in place of
   the weakest pride member.

Fitness is minimized. All fights use strict improvement, so the incumbent
wins ties.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, NumericalError

RESIDENT_MALE = "resident_male"
FEMALE = "female"
NOMAD = "nomad"
CUB = "cub"
ROLES = (RESIDENT_MALE, FEMALE, NOMAD, CUB)

FitnessFn = Callable[[np.ndarray], float]
ProgressSink = Callable[[tuple[int, float, int]], None]


@dataclass
class Lion:
    genome: np.ndarray
    fitness: float
    role: str

    def clone(self, role: str | None = None) -> "Lion":
        return Lion(self.genome.copy(), self.fitness, role or self.role)


@dataclass(frozen=True)
class LaConfig:
    n: int = 10
    nrm: int = 2
    mutation_rate: float = 0.2
    epochs: int = 100
    bounds: tuple[float, float] = (-1.0, 1.0)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))
        if self.n < 2:
            raise ConfigError(f"pride size n must be >= 2, got {self.n}")
        if not 1 <= self.nrm < self.n:
            raise ConfigError(f"need 1 <= nrm < n, got nrm={self.nrm}, n={self.n}")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError(f"mutation_rate must lie in [0, 1], got {self.mutation_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.bounds[0] < self.bounds[1]:
            raise ConfigError(f"bounds must satisfy low < high, got {self.bounds}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def fresh_nomads(self) -> int:
        """Nomads replaced by new random lions each epoch."""
        return self.n - self.n // 2

    @property
    def evaluations_per_epoch(self) -> int:
        return 2 * (self.n - self.nrm) + self.fresh_nomads

    def total_evaluations(self) -> int:
        return 2 * self.n + self.epochs * self.evaluations_per_epoch


@dataclass
class Population:
    config: LaConfig
    pride: list[Lion]
    nomads: list[Lion]
    best_ever: Lion
    epoch: int = 0
    evaluations: int = 0
    cubs: list[Lion] = field(default_factory=list)

    def males(self) -> list[Lion]:
        return [l for l in self.pride if l.role == RESIDENT_MALE]

    def females(self) -> list[Lion]:
        return [l for l in self.pride if l.role == FEMALE]

    def all_lions(self) -> list[Lion]:
        return self.pride + self.nomads


@dataclass(frozen=True)
class MatingSelection:
    alpha: float
    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=bool)
        object.__setattr__(self, "s", s)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not s.any():
            raise ValueError("at least one male must be selected")


@dataclass
class LaResult:
    best_genome: np.ndarray
    best_fitness: float
    trace: list[float]
    evaluations: int
    population: Population


def evaluate_genomes(fitness_fn: FitnessFn, genomes: Sequence[np.ndarray], workers: int = 1) -> list[float]:
    """Evaluate in parallel when ``workers > 1``; results keep input order."""
    if workers > 1 and len(genomes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(fitness_fn, genomes))
    else:
        values = [fitness_fn(g) for g in genomes]
    out = []
    for g, v in zip(genomes, values):
        v = float(v)
        if not np.isfinite(v):
            raise NumericalError(f"non-finite fitness {v} for genome {np.array2string(g, threshold=8)}")
        out.append(v)
    return out


def _rank(lions: list[Lion]) -> list[Lion]:
    return sorted(lions, key=lambda l: l.fitness)


def _assign_pride_roles(pride: list[Lion], nrm: int) -> list[Lion]:
    ranked = _rank(pride)
    for k, lion in enumerate(ranked):
        lion.role = RESIDENT_MALE if k < nrm else FEMALE
    return ranked


def _best(lions: list[Lion]) -> Lion:
    return min(lions, key=lambda l: l.fitness)


def random_lions(config: LaConfig, dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    low, high = config.bounds
    return rng.uniform(low, high, size=(count, dim))


def init_population(config: LaConfig, dim: int, fitness_fn: FitnessFn,
                    rng: Optional[np.random.Generator] = None) -> Population:
    """Draw ``2n`` lions; the first ``n`` form the pride, the rest are nomads."""
    if dim < 1:
        raise ConfigError(f"dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(config.seed) if rng is None else rng
    genomes = random_lions(config, dim, 2 * config.n, rng)
    fits = evaluate_genomes(fitness_fn, list(genomes), config.workers)
    lions = [Lion(g, f, FEMALE) for g, f in zip(genomes, fits)]
    pride = _assign_pride_roles(lions[:config.n], config.nrm)
    nomads = lions[config.n:]
    for l in nomads:
        l.role = NOMAD
    return Population(config, pride, nomads, _best(lions).clone(), 0, 2 * config.n)


def select_mates(nrm: int, rng: np.random.Generator) -> MatingSelection:
    """Uniform alpha; each male joins with probability 0.5, redrawn until non-empty."""
    alpha = float(rng.uniform(0.0, 1.0))
    while True:
        s = rng.random(nrm) < 0.5
        if s.any():
            return MatingSelection(alpha, s)


def mate(female, males, sel: MatingSelection):
    """Two offspring from a female and the selected males.

    With ``m`` the mean of the selected males::

        offspring1 = alpha * female + (1 - alpha) * m
        offspring2 = (1 - alpha) * female + alpha * m
    """
    female = np.asarray(female, dtype=float)
    males = np.atleast_2d(np.asarray(males, dtype=float))
    if males.shape[0] != sel.s.shape[0]:
        raise ValueError(f"{males.shape[0]} males but selection of length {sel.s.shape[0]}")
    if males.shape[1] != female.shape[0]:
        raise ValueError("male and female genomes differ in length")
    if not sel.s.any():
        raise ValueError("no male selected")
    m = males[sel.s].sum(axis=0) / sel.s.sum()
    a = sel.alpha
    return a * female + (1.0 - a) * m, (1.0 - a) * female + a * m


def mutate(genome, rate: float, bounds: tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    """Replace each gene with probability ``rate`` by a uniform draw in ``bounds``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {rate}")
    genome = np.asarray(genome, dtype=float)
    # Both draws are always made so the stream advances identically for any rate.
    mask = rng.random(genome.shape[0]) < rate
    fresh = rng.uniform(bounds[0], bounds[1], size=genome.shape[0])
    return np.where(mask, fresh, genome)


def breed(population: Population, rng: np.random.Generator) -> list[np.ndarray]:
    """Mated and mutated cub genomes for this epoch (not yet evaluated)."""
    cfg = population.config
    males = np.array([l.genome for l in population.males()])
    cubs = []
    for female in population.females():
        sel = select_mates(cfg.nrm, rng)
        for child in mate(female.genome, males, sel):
            cubs.append(mutate(child, cfg.mutation_rate, cfg.bounds, rng))
    return cubs


def defense_step(population: Population, fitness_fn: FitnessFn, rng: np.random.Generator) -> Population:
    cfg = population.config
    pride = list(population.pride)
    nomads = list(population.nomads)

    # Matured cubs fight the weakest resident male; losers stay as females.
    for cub in population.cubs:
        male_idx = [k for k, l in enumerate(pride) if l.role == RESIDENT_MALE]
        worst = max(male_idx, key=lambda k: pride[k].fitness)
        if cub.fitness < pride[worst].fitness:
            displaced = pride[worst]
            displaced.role = NOMAD
            nomads.append(displaced)
            cub.role = RESIDENT_MALE
            pride[worst] = cub
        else:
            cub.role = FEMALE
            pride.append(cub)

    # Each nomad attacks one uniformly chosen resident male.
    male_idx = [k for k, l in enumerate(pride) if l.role == RESIDENT_MALE]
    picks = rng.integers(0, len(male_idx), size=len(nomads))
    for j, pick in enumerate(picks):
        k = male_idx[pick]
        if nomads[j].fitness < pride[k].fitness:
            pride[k], nomads[j] = nomads[j], pride[k]
            pride[k].role = RESIDENT_MALE
            nomads[j].role = NOMAD

    # Restore n/n: worst pride surplus joins the nomads, worst nomads are
    # dropped and replaced by freshly generated ones.
    ranked = _rank(pride)
    pride = ranked[:cfg.n]
    for l in ranked[cfg.n:]:
        l.role = NOMAD
        nomads.append(l)
    keep = cfg.n - cfg.fresh_nomads
    nomads = _rank(nomads)[:keep]
    fresh = random_lions(cfg, population.best_ever.genome.shape[0], cfg.fresh_nomads, rng)
    fits = evaluate_genomes(fitness_fn, list(fresh), cfg.workers)
    nomads.extend(Lion(g, f, NOMAD) for g, f in zip(fresh, fits))

    return replace(population, pride=pride, nomads=nomads, cubs=[],
                   evaluations=population.evaluations + len(fresh))


def territorial_takeover(population: Population) -> Population:
    cfg = population.config
    best = population.best_ever
    candidate = _best(population.all_lions())
    if candidate.fitness < best.fitness:
        best = candidate.clone()
    pride = _assign_pride_roles(population.pride, cfg.nrm)
    # Elitism: the best lion ever seen always lives in the pride.
    if best.fitness < pride[-1].fitness and not any(
            np.array_equal(l.genome, best.genome) for l in pride):
        pride[-1] = best.clone(FEMALE)
        pride = _assign_pride_roles(pride, cfg.nrm)
    return replace(population, pride=pride, best_ever=best)


def run_epoch(population: Population, fitness_fn: FitnessFn, rng: np.random.Generator) -> Population:
    cfg = population.config
    cub_genomes = breed(population, rng)
    fits = evaluate_genomes(fitness_fn, cub_genomes, cfg.workers)
    cubs = [Lion(g, f, CUB) for g, f in zip(cub_genomes, fits)]
    population = replace(population, cubs=cubs, evaluations=population.evaluations + len(cubs))
    population = defense_step(population, fitness_fn, rng)
    population = territorial_takeover(population)
    return replace(population, epoch=population.epoch + 1)


def optimize(fitness_fn: FitnessFn, dim: int, config: LaConfig,
             progress_sink: Optional[ProgressSink] = None) -> LaResult:
    """Minimize ``fitness_fn`` over ``dim``-dimensional genomes for ``config.epochs`` epochs."""
    rng = np.random.default_rng(config.seed)
    population = init_population(config, dim, fitness_fn, rng)
    trace: list[float] = []
    for _ in range(config.epochs):
        population = run_epoch(population, fitness_fn, rng)
        trace.append(population.best_ever.fitness)
        if progress_sink is not None:
            progress_sink((population.epoch, population.best_ever.fitness, population.evaluations))
    best = population.best_ever
    return LaResult(best.genome.copy(), best.fitness, trace, population.evaluations, population)
