//! Multi-island evolutionary optimizer over fault-tree genomes.
//!
//! Each island holds an elite archive of candidates ordered by a strict
//! fitness order. Every iteration samples a parent (rank-proportionally) and
//! a handful of distinct inspiration candidates, hands them to the mutation
//! operator, evaluates the child (parse → self-check → exhaustive
//! equivalence to the seed → readability → size) and inserts it when it
//! beats the island's worst. Islands exchange their best candidates in ring
//! order every `migration_interval` iterations.
//!
//! Equivalence to the seed is a hard constraint, not a fitness term: a
//! candidate that changes any diagnosis on any satisfiable leaf-truth region
//! never enters an archive. Runs are fully deterministic under a fixed seed
//! because every island draws from its own derived rng stream.

mod mutators;

pub use mutators::{
    dedupe_subtrees, gate_flatten, rename_normalize, reorder_canonical, strip_degenerate,
    DefaultMutator, Mutator, MutatorError, DEFAULT_REWRITES,
};

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::readability_score;
use crate::pasta::{emit_pasta, evaluate, parse_pasta, self_check, FaultTree};
use crate::regions::{enumerate_regions, measured_params, union_atoms, RegionOptions};
use crate::rng::DetRng;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvolveError {
    #[error("seed genome invalid: {reason}")]
    SeedInvalid { reason: String },
    #[error("bad configuration: {message}")]
    BadConfig { message: String },
    #[error("checkpoint unreadable: {message}")]
    BadCheckpoint { message: String },
}

/// Evaluated qualities of a genome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub valid: bool,
    pub equivalent: bool,
    pub readability: f64,
    pub size: usize,
}

/// A genome with its evaluation and provenance inside the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub genome: String,
    pub fitness: Fitness,
    pub island: usize,
    pub generation: usize,
    /// Stable content hash of the genome text.
    pub id: String,
}

fn genome_id(genome: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in genome.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Strict total order, best first: valid-and-equivalent candidates beat the
/// rest, then higher readability, then smaller size, then smaller id.
pub fn fitness_order(a: &Candidate, b: &Candidate) -> Ordering {
    let a_ok = a.fitness.valid && a.fitness.equivalent;
    let b_ok = b.fitness.valid && b.fitness.equivalent;
    b_ok.cmp(&a_ok)
        .then_with(|| {
            b.fitness
                .readability
                .partial_cmp(&a.fitness.readability)
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.fitness.size.cmp(&b.fitness.size))
        .then_with(|| a.id.cmp(&b.id))
}

/// Run configuration. The mutation operator is passed separately to
/// [`evolve`] so configurations stay serializable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub islands: usize,
    pub population_per_island: usize,
    pub iterations: usize,
    pub inspiration_count: usize,
    pub migration_interval: usize,
    pub migration_size: usize,
    pub seed: u64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            islands: 4,
            population_per_island: 16,
            iterations: 200,
            inspiration_count: 2,
            migration_interval: 10,
            migration_size: 2,
            seed: 42,
        }
    }
}

impl EvolveConfig {
    fn validate(&self) -> Result<(), EvolveError> {
        let fail = |message: &str| Err(EvolveError::BadConfig { message: message.into() });
        if self.islands < 1 {
            return fail("islands must be at least 1");
        }
        if self.population_per_island < 1 {
            return fail("population_per_island must be at least 1");
        }
        if self.migration_size > self.population_per_island {
            return fail("migration_size must not exceed population_per_island");
        }
        if self.inspiration_count >= self.population_per_island {
            return fail("inspiration_count must be below population_per_island");
        }
        if self.migration_interval < 1 {
            return fail("migration_interval must be at least 1");
        }
        Ok(())
    }
}

/// Per-island elite populations: sorted best-first, bounded, duplicate-free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliteArchive {
    capacity: usize,
    islands: Vec<Vec<Candidate>>,
}

impl EliteArchive {
    fn new(islands: usize, capacity: usize) -> Self {
        EliteArchive { capacity, islands: vec![Vec::new(); islands] }
    }

    pub fn island(&self, i: usize) -> &[Candidate] {
        &self.islands[i]
    }

    pub fn islands(&self) -> usize {
        self.islands.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Insert if the candidate is valid, equivalent, novel to the island and
    /// either the island has room or it beats the current worst. Returns
    /// whether the candidate was archived.
    pub fn insert(&mut self, island: usize, candidate: Candidate) -> bool {
        if !(candidate.fitness.valid && candidate.fitness.equivalent) {
            return false;
        }
        let pop = &mut self.islands[island];
        if pop.iter().any(|c| c.id == candidate.id) {
            return false;
        }
        if pop.len() >= self.capacity {
            let worst = pop.last().expect("nonempty at capacity");
            if fitness_order(&candidate, worst) != Ordering::Less {
                return false;
            }
            pop.pop();
        }
        let at = pop
            .binary_search_by(|c| fitness_order(c, &candidate))
            .unwrap_or_else(|i| i);
        pop.insert(at, candidate);
        true
    }

    /// Global best candidate across all islands.
    pub fn best(&self) -> Option<&Candidate> {
        self.islands
            .iter()
            .filter_map(|pop| pop.first())
            .min_by(|a, b| fitness_order(a, b))
    }

    #[cfg(test)]
    fn assert_invariants(&self) {
        for pop in &self.islands {
            assert!(pop.len() <= self.capacity);
            let ids: BTreeSet<&str> = pop.iter().map(|c| c.id.as_str()).collect();
            assert_eq!(ids.len(), pop.len(), "duplicate genome ids in island");
            for pair in pop.windows(2) {
                assert_ne!(fitness_order(&pair[0], &pair[1]), Ordering::Greater, "unsorted");
            }
            for c in pop {
                assert!(c.fitness.valid && c.fitness.equivalent);
            }
        }
    }
}

/// Exhaustive equivalence of two trees over the union of their threshold
/// atoms, capped at desk scale. Trees over the cap, or with differing
/// measured schemas, are conservatively not equivalent.
pub fn exhaustively_equivalent(seed: &FaultTree, candidate: &FaultTree, atom_cap: usize) -> bool {
    let seed_measured: BTreeSet<String> = measured_params(seed).into_iter().collect();
    let cand_measured: BTreeSet<String> = measured_params(candidate).into_iter().collect();
    if seed_measured != cand_measured {
        return false;
    }
    let atoms = union_atoms(seed, candidate);
    if atoms.len() > atom_cap {
        return false;
    }
    let measured = measured_params(seed);
    let regions = enumerate_regions(&atoms, &measured, &RegionOptions::default(), usize::MAX);
    regions.iter().all(|input| match (evaluate(seed, input), evaluate(candidate, input)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    })
}

struct Evaluator {
    seed_tree: FaultTree,
    atom_cap: usize,
}

impl Evaluator {
    fn evaluate(&self, genome: &str) -> Fitness {
        let Ok(tree) = parse_pasta(genome) else {
            return Fitness { valid: false, equivalent: false, readability: 0.0, size: 0 };
        };
        let valid = self_check(&tree).passed();
        let equivalent = valid && exhaustively_equivalent(&self.seed_tree, &tree, self.atom_cap);
        Fitness {
            valid,
            equivalent,
            readability: readability_score(&tree),
            size: tree.node_count(),
        }
    }
}

/// Result of an evolution run.
#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub best: Candidate,
    pub archive: EliteArchive,
    /// Global best fitness after each iteration.
    pub history: Vec<Fitness>,
    /// Mutator failures tolerated along the way.
    pub discarded: usize,
}

/// Resumable run state. Checkpoints serialize everything here, including
/// the rng streams.
pub struct EvolveEngine {
    cfg: EvolveConfig,
    seed_genome: String,
    evaluator: Evaluator,
    archive: EliteArchive,
    rngs: Vec<DetRng>,
    iteration: usize,
    history: Vec<Fitness>,
    discarded: usize,
}

/// Cap on union atoms for the exhaustive equivalence check.
const EQUIVALENCE_ATOM_CAP: usize = 12;

impl EvolveEngine {
    pub fn new(seed_genome: &str, cfg: &EvolveConfig) -> Result<EvolveEngine, EvolveError> {
        cfg.validate()?;
        let seed_tree = parse_pasta(seed_genome)
            .map_err(|e| EvolveError::SeedInvalid { reason: e.to_string() })?;
        let report = self_check(&seed_tree);
        if !report.passed() {
            return Err(EvolveError::SeedInvalid { reason: report.render().trim().to_string() });
        }
        // Work on the canonical form so genome ids are insensitive to
        // incidental formatting of the input file.
        let canonical = emit_pasta(&seed_tree);
        let evaluator = Evaluator { seed_tree, atom_cap: EQUIVALENCE_ATOM_CAP };

        let mut engine = EvolveEngine {
            archive: EliteArchive::new(cfg.islands, cfg.population_per_island),
            rngs: (0..cfg.islands).map(|i| DetRng::derive(cfg.seed, i as u64)).collect(),
            cfg: cfg.clone(),
            seed_genome: canonical,
            evaluator,
            iteration: 0,
            history: Vec::new(),
            discarded: 0,
        };
        let seed_fitness = engine.evaluator.evaluate(&engine.seed_genome);
        for island in 0..engine.cfg.islands {
            let candidate = Candidate {
                genome: engine.seed_genome.clone(),
                fitness: seed_fitness.clone(),
                island,
                generation: 0,
                id: genome_id(&engine.seed_genome),
            };
            engine.archive.insert(island, candidate);
        }
        Ok(engine)
    }

    /// Populate islands with mutated variants of the seed.
    fn warm_up(&mut self, mutator: &dyn Mutator) {
        for island in 0..self.cfg.islands {
            for _ in 1..self.cfg.population_per_island {
                let rng = &mut self.rngs[island];
                match mutator.mutate(&self.seed_genome, &[], rng) {
                    Ok(genome) => {
                        let fitness = self.evaluator.evaluate(&genome);
                        let id = genome_id(&genome);
                        self.archive.insert(
                            island,
                            Candidate { genome, fitness, island, generation: 0, id },
                        );
                    }
                    Err(_) => self.discarded += 1,
                }
            }
        }
    }

    fn sample_rank_weighted(pop_len: usize, exclude: &[usize], rng: &mut DetRng) -> usize {
        let eligible: Vec<usize> = (0..pop_len).filter(|i| !exclude.contains(i)).collect();
        let total: u64 = eligible.iter().map(|i| (pop_len - i) as u64).sum();
        let mut draw = rng.next_u64() % total;
        for &i in &eligible {
            let weight = (pop_len - i) as u64;
            if draw < weight {
                return i;
            }
            draw -= weight;
        }
        *eligible.last().expect("nonempty")
    }

    fn step(&mut self, mutator: &dyn Mutator) {
        self.iteration += 1;
        for island in 0..self.cfg.islands {
            let pop_len = self.archive.island(island).len();
            if pop_len == 0 {
                continue;
            }
            let rng = &mut self.rngs[island];
            let parent_idx = Self::sample_rank_weighted(pop_len, &[], rng);
            let mut chosen = vec![parent_idx];
            let inspiration_count = self.cfg.inspiration_count.min(pop_len - 1);
            for _ in 0..inspiration_count {
                let idx = Self::sample_rank_weighted(pop_len, &chosen, rng);
                chosen.push(idx);
            }
            let pop = self.archive.island(island);
            let parent = pop[parent_idx].genome.clone();
            let inspirations: Vec<String> =
                chosen[1..].iter().map(|&i| pop[i].genome.clone()).collect();
            let inspiration_refs: Vec<&str> =
                inspirations.iter().map(String::as_str).collect();

            let rng = &mut self.rngs[island];
            match mutator.mutate(&parent, &inspiration_refs, rng) {
                Ok(genome) => {
                    let fitness = self.evaluator.evaluate(&genome);
                    let id = genome_id(&genome);
                    self.archive.insert(
                        island,
                        Candidate { genome, fitness, island, generation: self.iteration, id },
                    );
                }
                Err(_) => self.discarded += 1,
            }
        }

        if self.iteration.is_multiple_of(self.cfg.migration_interval) {
            self.migrate();
        }
        if let Some(best) = self.archive.best() {
            self.history.push(best.fitness.clone());
        }
    }

    /// Ring migration: every island sends clones of its best
    /// `migration_size` candidates to the next island.
    fn migrate(&mut self) {
        let n = self.cfg.islands;
        if n < 2 || self.cfg.migration_size == 0 {
            return;
        }
        let outgoing: Vec<Vec<Candidate>> = (0..n)
            .map(|i| {
                self.archive.island(i).iter().take(self.cfg.migration_size).cloned().collect()
            })
            .collect();
        for (i, batch) in outgoing.into_iter().enumerate() {
            let target = (i + 1) % n;
            for mut candidate in batch {
                candidate.island = target;
                self.archive.insert(target, candidate);
            }
        }
    }

    pub fn run(&mut self, mutator: &dyn Mutator) {
        if self.iteration == 0 {
            self.warm_up(mutator);
        }
        while self.iteration < self.cfg.iterations {
            self.step(mutator);
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn result(&self) -> EvolveResult {
        EvolveResult {
            best: self.archive.best().expect("seed always archived").clone(),
            archive: self.archive.clone(),
            history: self.history.clone(),
            discarded: self.discarded,
        }
    }

    /// Serialize the full state (archives and rng streams included) in the
    /// export document conventions.
    pub fn checkpoint(&self) -> String {
        let doc = CheckpointDoc {
            config: self.cfg.clone(),
            seed_genome: self.seed_genome.clone(),
            iteration: self.iteration,
            discarded: self.discarded,
            history: self.history.clone(),
            rng_states: self.rngs.iter().map(DetRng::state).collect(),
            archive: self.archive.clone(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
        text.push('\n');
        text
    }

    /// Rebuild an engine from a checkpoint document.
    pub fn restore(text: &str) -> Result<EvolveEngine, EvolveError> {
        let doc: CheckpointDoc = serde_json::from_str(text)
            .map_err(|e| EvolveError::BadCheckpoint { message: e.to_string() })?;
        doc.config.validate()?;
        let seed_tree = parse_pasta(&doc.seed_genome)
            .map_err(|e| EvolveError::SeedInvalid { reason: e.to_string() })?;
        Ok(EvolveEngine {
            evaluator: Evaluator { seed_tree, atom_cap: EQUIVALENCE_ATOM_CAP },
            cfg: doc.config,
            seed_genome: doc.seed_genome,
            archive: doc.archive,
            rngs: doc.rng_states.into_iter().map(DetRng::from_state).collect(),
            iteration: doc.iteration,
            history: doc.history,
            discarded: doc.discarded,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    config: EvolveConfig,
    seed_genome: String,
    iteration: usize,
    discarded: usize,
    history: Vec<Fitness>,
    rng_states: Vec<[u64; 4]>,
    archive: EliteArchive,
}

/// Evolve `seed_genome` under `cfg` with the given mutation operator.
pub fn evolve(
    seed_genome: &str,
    cfg: &EvolveConfig,
    mutator: &dyn Mutator,
) -> Result<EvolveResult, EvolveError> {
    let mut engine = EvolveEngine::new(seed_genome, cfg)?;
    engine.run(mutator);
    Ok(engine.result())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate(id: &str, valid: bool, equivalent: bool, readability: f64, size: usize) -> Candidate {
        Candidate {
            genome: id.to_string(),
            fitness: Fitness { valid, equivalent, readability, size },
            island: 0,
            generation: 0,
            id: id.to_string(),
        }
    }

    #[test]
    fn fitness_order_prefers_valid_then_readable_then_small_then_id() {
        let valid = candidate("a", true, true, 0.5, 10);
        let invalid = candidate("b", false, false, 0.9, 2);
        assert_eq!(fitness_order(&valid, &invalid), Ordering::Less);

        let more_readable = candidate("c", true, true, 0.8, 10);
        let less_readable = candidate("d", true, true, 0.6, 2);
        assert_eq!(fitness_order(&more_readable, &less_readable), Ordering::Less);

        let small = candidate("e", true, true, 0.8, 9);
        let large = candidate("f", true, true, 0.8, 11);
        assert_eq!(fitness_order(&small, &large), Ordering::Less);

        let tie_a = candidate("g", true, true, 0.8, 9);
        let tie_b = candidate("h", true, true, 0.8, 9);
        assert_eq!(fitness_order(&tie_a, &tie_b), Ordering::Less);
    }

    #[test]
    fn archive_rejects_non_equivalent_and_duplicates_and_respects_capacity() {
        let mut archive = EliteArchive::new(1, 2);
        assert!(!archive.insert(0, candidate("x", true, false, 0.9, 5)));
        assert!(archive.insert(0, candidate("a", true, true, 0.5, 5)));
        assert!(!archive.insert(0, candidate("a", true, true, 0.5, 5)));
        assert!(archive.insert(0, candidate("b", true, true, 0.7, 5)));
        // Full: a worse candidate bounces, a better one evicts the worst.
        assert!(!archive.insert(0, candidate("c", true, true, 0.4, 5)));
        assert!(archive.insert(0, candidate("d", true, true, 0.9, 5)));
        assert_eq!(archive.island(0).len(), 2);
        assert_eq!(archive.island(0)[0].id, "d");
        archive.assert_invariants();
    }

    const SEED: &str = "tree d\nparam x unit \"\"\nparam y unit \"\"\nbasic a : x < 1\nbasic b : y < 1\ngate inner = and(a, b)\ngate wrap = and(inner)\ntop f = wrap\n";

    fn small_cfg() -> EvolveConfig {
        EvolveConfig {
            islands: 2,
            population_per_island: 4,
            iterations: 20,
            inspiration_count: 1,
            migration_interval: 5,
            migration_size: 1,
            seed: 42,
        }
    }

    #[test]
    fn zero_iterations_returns_evaluated_seed_with_empty_history() {
        let cfg = EvolveConfig { iterations: 0, ..small_cfg() };
        let result = evolve(SEED, &cfg, &DefaultMutator).unwrap();
        assert!(result.history.is_empty());
        assert!(result.best.fitness.valid && result.best.fitness.equivalent);
        assert_eq!(result.best.generation, 0);
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let a = evolve(SEED, &small_cfg(), &DefaultMutator).unwrap();
        let b = evolve(SEED, &small_cfg(), &DefaultMutator).unwrap();
        assert_eq!(a.best.id, b.best.id);
        assert_eq!(a.history, b.history);
        assert_eq!(a.archive, b.archive);
    }

    #[test]
    fn best_fitness_is_non_decreasing() {
        let result = evolve(SEED, &small_cfg(), &DefaultMutator).unwrap();
        let mut prev: Option<&Fitness> = None;
        for f in &result.history {
            if let Some(p) = prev {
                // Lower-or-equal in candidate order means at least as good.
                let a = candidate("a", p.valid, p.equivalent, p.readability, p.size);
                let b = candidate("a", f.valid, f.equivalent, f.readability, f.size);
                assert_ne!(fitness_order(&b, &a), Ordering::Greater);
            }
            prev = Some(f);
        }
    }

    #[test]
    fn degenerate_seed_evolves_to_strictly_better_readability() {
        let result = evolve(SEED, &small_cfg(), &DefaultMutator).unwrap();
        let seed_tree = parse_pasta(SEED).unwrap();
        let best_tree = parse_pasta(&result.best.genome).unwrap();
        assert!(result.best.fitness.readability > readability_score(&seed_tree));
        let one_child_gates = best_tree
            .nodes()
            .filter(|(_, n)| matches!(n, crate::pasta::Node::Gate { children, .. } if children.len() == 1))
            .count();
        assert_eq!(one_child_gates, 0);
    }

    #[test]
    fn every_archived_candidate_is_equivalent_to_the_seed() {
        let result = evolve(SEED, &small_cfg(), &DefaultMutator).unwrap();
        let seed_tree = parse_pasta(SEED).unwrap();
        for island in 0..result.archive.islands() {
            for c in result.archive.island(island) {
                let t = parse_pasta(&c.genome).unwrap();
                assert!(exhaustively_equivalent(&seed_tree, &t, 12));
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_resumes_identically() {
        let cfg = small_cfg();
        let mut full = EvolveEngine::new(SEED, &cfg).unwrap();
        full.run(&DefaultMutator);
        let full_result = full.result();

        let half_cfg = EvolveConfig { iterations: 10, ..cfg.clone() };
        let mut half = EvolveEngine::new(SEED, &half_cfg).unwrap();
        half.run(&DefaultMutator);
        let saved = half.checkpoint();

        let mut resumed = EvolveEngine::restore(&saved).unwrap();
        resumed.cfg.iterations = cfg.iterations;
        resumed.run(&DefaultMutator);
        let resumed_result = resumed.result();
        assert_eq!(resumed_result.best.id, full_result.best.id);
        assert_eq!(resumed_result.history, full_result.history);
        assert_eq!(resumed_result.archive, full_result.archive);
    }

    #[test]
    fn invalid_seed_rejected() {
        assert!(matches!(
            evolve("garbage", &small_cfg(), &DefaultMutator),
            Err(EvolveError::SeedInvalid { .. })
        ));
        // Parses but fails the self-check (orphan node).
        let dirty = "tree d\nparam x unit \"\"\nbasic a : x < 1\nbasic orphan : x > 2\ntop f = a\n";
        assert!(matches!(
            evolve(dirty, &small_cfg(), &DefaultMutator),
            Err(EvolveError::SeedInvalid { .. })
        ));
    }

    #[test]
    fn hostile_mutator_failures_are_tolerated_and_counted() {
        struct Hostile;
        impl Mutator for Hostile {
            fn mutate(
                &self,
                _p: &str,
                _i: &[&str],
                _rng: &mut DetRng,
            ) -> Result<String, MutatorError> {
                Err(MutatorError::Failed("always".into()))
            }
        }
        let cfg = EvolveConfig { iterations: 5, ..small_cfg() };
        let result = evolve(SEED, &cfg, &Hostile).unwrap();
        // Seed survives as best; every mutation call was discarded.
        assert_eq!(result.best.generation, 0);
        assert!(result.discarded > 0);
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = EvolveConfig { inspiration_count: 16, population_per_island: 16, ..small_cfg() };
        assert!(matches!(
            evolve(SEED, &cfg, &DefaultMutator),
            Err(EvolveError::BadConfig { .. })
        ));
    }
}
