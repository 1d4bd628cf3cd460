//! Genetic search over the patterned-beam parameters, maximizing the
//! Q_0 x epsilon_zp product from the photonics fitness kernel.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::DeviceSpec;
use crate::error::{Error, Result};
use crate::photonics::{optomech_figure, FigureOptions};
use crate::seeding::indexed_rng;

/// Number of real-valued genes: lattice constant, the four fill fractions,
/// defect perturbation, and the (rounded) transition cell count.
pub const N_GENES: usize = 7;

pub const GENE_NAMES: [&str; N_GENES] = [
    "lattice_constant",
    "fill_mirror_low",
    "fill_mirror_high",
    "fill_defect_low",
    "fill_defect_high",
    "defect_perturbation",
    "transition_cell_count",
];

/// Search hyperparameters. The defaults were tuned on the shipped nominal
/// design's search landscape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GAConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Gaussian mutation std per gene, relative to the gene's bound span.
    pub mutation_sigma: f64,
    pub elitism_count: usize,
    /// Fraction of each generation replaced by fresh uniform samples.
    pub immigrant_fraction: f64,
    /// Per-gene (min, max), in the order of [`GENE_NAMES`].
    pub bounds: [(f64, f64); N_GENES],
    pub rng_seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population: 32,
            generations: 40,
            tournament_size: 4,
            crossover_rate: 0.9,
            mutation_sigma: 0.12,
            elitism_count: 2,
            immigrant_fraction: 0.25,
            bounds: [
                (250e-9, 420e-9),
                (0.1, 1.0),
                (0.1, 1.0),
                (0.1, 1.0),
                (0.1, 1.0),
                (0.05, 1.0),
                (0.0, 6.0),
            ],
            rng_seed: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::validation("population", "must be >= 4"));
        }
        if self.elitism_count >= self.population {
            return Err(Error::validation("elitism_count", "must be < population"));
        }
        if self.tournament_size < 1 || self.tournament_size > self.population {
            return Err(Error::validation(
                "tournament_size",
                "must be in [1, population]",
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::validation("crossover_rate", "must be in [0, 1]"));
        }
        if !(self.mutation_sigma >= 0.0) {
            return Err(Error::validation("mutation_sigma", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.immigrant_fraction) {
            return Err(Error::validation(
                "immigrant_fraction",
                "must be in [0, 1)",
            ));
        }
        if self.generations == 0 {
            return Err(Error::validation("generations", "must be >= 1"));
        }
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::validation(
                    "bounds",
                    format!("gene {} needs min < max", GENE_NAMES[i]),
                ));
            }
        }
        Ok(())
    }
}

pub type Genome = [f64; N_GENES];

/// Fitness summary of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub best: f64,
    pub median: f64,
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub best_spec: DeviceSpec,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
}

fn clamp_genome(mut g: Genome, bounds: &[(f64, f64); N_GENES]) -> Genome {
    for (x, (lo, hi)) in g.iter_mut().zip(bounds) {
        *x = x.clamp(*lo, *hi);
    }
    g
}

pub fn encode(spec: &DeviceSpec) -> Genome {
    [
        spec.lattice_constant,
        spec.fill_mirror[0],
        spec.fill_mirror[1],
        spec.fill_defect[0],
        spec.fill_defect[1],
        spec.defect_perturbation,
        spec.transition_cell_count as f64,
    ]
}

/// Realize a genome as a device. The integer gene is rounded here. The NV
/// site is an implanted defect at a fixed location in the lab frame, so it
/// keeps its absolute position; genomes that shrink the beam below it pin
/// the site just inside the far clamp (where the strain is tiny, so such
/// designs score poorly on their own).
pub fn decode(base: &DeviceSpec, genome: &Genome) -> DeviceSpec {
    let mut spec = base.clone();
    spec.lattice_constant = genome[0];
    spec.fill_mirror = [genome[1], genome[2]];
    spec.fill_defect = [genome[3], genome[4]];
    spec.defect_perturbation = genome[5].clamp(0.0, 1.0);
    spec.transition_cell_count = genome[6].round().max(0.0) as u32;
    spec.nv_position = base.nv_position.min(0.999 * spec.beam_length());
    spec
}

/// Element-wise fitness: the Q_0 x epsilon_zp product, 0 when infeasible.
/// Evaluations run on the rayon pool; output order matches input order.
pub fn evaluate_population(specs: &[DeviceSpec], opts: FigureOptions) -> Vec<f64> {
    specs
        .par_iter()
        .map(|s| match optomech_figure(s, opts) {
            Ok(fig) => fig.product,
            Err(_) => 0.0,
        })
        .collect()
}

/// `a` strictly better than `b`: higher fitness, ties broken by the lower
/// lattice constant for deterministic ordering.
fn better(fa: f64, ga: &Genome, fb: f64, gb: &Genome) -> bool {
    fa > fb || (fa == fb && ga[0] < gb[0])
}

fn rank_indices(fitness: &[f64], genomes: &[Genome]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| {
        if better(fitness[a], &genomes[a], fitness[b], &genomes[b]) {
            std::cmp::Ordering::Less
        } else if better(fitness[b], &genomes[b], fitness[a], &genomes[a]) {
            std::cmp::Ordering::Greater
        } else {
            a.cmp(&b)
        }
    });
    idx
}

fn random_genome<R: Rng>(bounds: &[(f64, f64); N_GENES], rng: &mut R) -> Genome {
    let mut g = [0.0; N_GENES];
    for (x, (lo, hi)) in g.iter_mut().zip(bounds) {
        *x = lo + (hi - lo) * rng.gen::<f64>();
    }
    g
}

/// Run the genetic search from `base` with the figure-kernel resolution in
/// `opts`. Deterministic for a fixed config (including its seed),
/// independent of the rayon thread count.
pub fn run_ga(base: &DeviceSpec, cfg: &GAConfig, opts: FigureOptions) -> Result<OptimizationResult> {
    cfg.validate()?;
    base.validate()?;
    let bounds = &cfg.bounds;

    // Initial population: the base genome plus uniform samples; resample
    // wholesale if every individual lands infeasible.
    let mut genomes = Vec::with_capacity(cfg.population);
    let mut fitness = Vec::new();
    let mut evaluations = 0usize;
    let mut feasible = false;
    for attempt in 0..10 {
        genomes.clear();
        if attempt == 0 {
            genomes.push(clamp_genome(encode(base), bounds));
        }
        while genomes.len() < cfg.population {
            let i = (attempt * cfg.population + genomes.len()) as u64;
            let mut rng = indexed_rng(cfg.rng_seed, "ga/init", i);
            genomes.push(random_genome(bounds, &mut rng));
        }
        let specs: Vec<DeviceSpec> = genomes.iter().map(|g| decode(base, g)).collect();
        fitness = evaluate_population(&specs, opts);
        evaluations += specs.len();
        if fitness.iter().any(|&f| f > 0.0) {
            feasible = true;
            break;
        }
    }
    if !feasible {
        return Err(Error::Numerical(
            "no feasible individual after 10 initialization attempts".into(),
        ));
    }

    let mut history = Vec::with_capacity(cfg.generations);
    let mut best_genome = genomes[rank_indices(&fitness, &genomes)[0]];
    let mut best_fitness = fitness[rank_indices(&fitness, &genomes)[0]];

    for gen in 0..cfg.generations {
        let order = rank_indices(&fitness, &genomes);
        if better(fitness[order[0]], &genomes[order[0]], best_fitness, &best_genome) {
            best_fitness = fitness[order[0]];
            best_genome = genomes[order[0]];
        }
        let mut sorted: Vec<f64> = fitness.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        history.push(GenerationStats {
            best: best_fitness.max(sorted[sorted.len() - 1]),
            median: sorted[sorted.len() / 2],
            worst: sorted[0],
        });
        if gen + 1 == cfg.generations {
            break;
        }

        let mut rng = indexed_rng(cfg.rng_seed, "ga/gen", gen as u64);
        let mut next: Vec<Genome> = order
            .iter()
            .take(cfg.elitism_count)
            .map(|&i| genomes[i])
            .collect();
        let tournament = |rng: &mut rand_chacha::ChaCha12Rng| -> usize {
            let mut winner = rng.gen_range(0..cfg.population);
            for _ in 1..cfg.tournament_size {
                let c = rng.gen_range(0..cfg.population);
                if better(fitness[c], &genomes[c], fitness[winner], &genomes[winner]) {
                    winner = c;
                }
            }
            winner
        };
        let progress = gen as f64 / cfg.generations.max(1) as f64;
        while next.len() < cfg.population {
            // A slice of each generation does fine local search anchored on
            // the best genome found so far; the rest recombine tournament
            // winners with annealed Gaussian mutation. The slice widens as
            // the run progresses: explore first, then climb the best basin.
            let local = rng.gen::<f64>() < 0.2 + 0.4 * progress;
            let mut child = if local {
                best_genome
            } else {
                genomes[tournament(&mut rng)]
            };
            if !local && rng.gen::<f64>() < cfg.crossover_rate {
                let pb = genomes[tournament(&mut rng)];
                for (c, b) in child.iter_mut().zip(pb.iter()) {
                    if rng.gen::<bool>() {
                        *c = *b;
                    }
                }
            }
            if local {
                // Anchored children take single-gene steps (finer late) so
                // the best basin gets climbed, not just held by elitism.
                let sigma = if progress < 1.0 / 3.0 {
                    cfg.mutation_sigma / 6.0
                } else if progress < 2.0 / 3.0 {
                    cfg.mutation_sigma / 24.0
                } else {
                    cfg.mutation_sigma / 96.0
                };
                let k = rng.gen_range(0..N_GENES);
                if cfg.mutation_sigma > 0.0 && rng.gen::<f64>() < 0.25 {
                    // Occasional one-gene uniform hop: moves to a neighboring
                    // basin along a single coordinate without losing the rest
                    // of the incumbent.
                    child[k] = bounds[k].0 + (bounds[k].1 - bounds[k].0) * rng.gen::<f64>();
                } else {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    child[k] += g * sigma * (bounds[k].1 - bounds[k].0);
                }
            } else {
                let sigma = cfg.mutation_sigma * ((1.0 - progress) * (1.0 - progress)).max(0.03);
                for (k, x) in child.iter_mut().enumerate() {
                    if rng.gen::<f64>() < 0.5 {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        *x += g * sigma * (bounds[k].1 - bounds[k].0);
                    }
                }
            }
            next.push(clamp_genome(child, bounds));
        }
        // Random immigrants: refresh the tail of each generation with
        // uniform samples so the sparse feasible region keeps being probed
        // even after the population has converged. The quota anneals to zero
        // so the final generations are pure refinement.
        let immigrants =
            (cfg.population as f64 * cfg.immigrant_fraction * (1.0 - progress)) as usize;
        for slot in next.len() - immigrants..next.len() {
            next[slot] = random_genome(bounds, &mut rng);
        }
        genomes = next;
        let specs: Vec<DeviceSpec> = genomes.iter().map(|g| decode(base, g)).collect();
        fitness = evaluate_population(&specs, opts);
        evaluations += specs.len();
    }

    let best_spec = decode(base, &best_genome);
    Ok(OptimizationResult {
        best_spec,
        best_fitness,
        history,
        evaluations,
    })
}

/// Uniform random search with the same bounds and budget; the baseline the
/// genetic search must beat.
pub fn random_search(
    base: &DeviceSpec,
    cfg: &GAConfig,
    samples: usize,
    opts: FigureOptions,
) -> Result<f64> {
    cfg.validate()?;
    let genomes: Vec<Genome> = (0..samples)
        .map(|i| {
            let mut rng = indexed_rng(cfg.rng_seed, "random_search", i as u64);
            random_genome(&cfg.bounds, &mut rng)
        })
        .collect();
    let specs: Vec<DeviceSpec> = genomes.iter().map(|g| decode(base, g)).collect();
    Ok(evaluate_population(&specs, opts)
        .into_iter()
        .fold(0.0, f64::max))
}
