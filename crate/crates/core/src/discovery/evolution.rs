use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::equation::CandidateEquation;
use super::library::TermLibrary;
use super::sindy::ScaledDesign;
use super::terms::TermSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvoConfig {
    pub pop_size: usize,
    pub epochs: usize,
    /// Largest number of terms in an equation, target included.
    pub max_terms: usize,
    pub seed: u64,
    /// Terms allowed on the left-hand side; empty means every single
    /// derivative in the library.
    pub targets: Vec<TermSpec>,
    pub exclude_target_factors: bool,
    pub crossover_rate: f64,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            pop_size: 7,
            epochs: 50,
            max_terms: 8,
            seed: 0,
            targets: Vec::new(),
            exclude_target_factors: true,
            crossover_rate: 0.5,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::param("pop_size", "must be at least 2"));
        }
        if self.max_terms < 2 {
            return Err(Error::param("max_terms", "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::param("crossover_rate", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// `(target column, sorted support columns)`.
type Genome = (usize, Vec<usize>);

#[derive(Debug, Clone, Copy)]
struct Score {
    loss: f64,
    complexity: usize,
}

impl Score {
    fn dominates(&self, other: &Score) -> bool {
        self.loss <= other.loss
            && self.complexity <= other.complexity
            && (self.loss < other.loss || self.complexity < other.complexity)
    }
}

struct Search<'a> {
    library: &'a TermLibrary,
    design: ScaledDesign,
    targets: Vec<usize>,
    /// Admissible regressors per target column.
    pool: BTreeMap<usize, Vec<usize>>,
    max_support: usize,
    archive: BTreeMap<Genome, Score>,
}

impl Search<'_> {
    fn score(&mut self, g: &Genome) -> Result<Score> {
        if let Some(s) = self.archive.get(g) {
            return Ok(*s);
        }
        let (xi, loss) = self.design.fit(g.0, &g.1, self.library.rows())?;
        // exact zeros are dropped from the equation, so they do not count
        let s = Score {
            loss,
            complexity: xi.iter().filter(|c| **c != 0.0).count(),
        };
        self.archive.insert(g.clone(), s);
        Ok(s)
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Genome {
        let t = *self.targets.choose(rng).expect("targets");
        let pool = &self.pool[&t];
        let k = rng.random_range(1..=self.max_support.min(3).min(pool.len()));
        let mut s: Vec<usize> = pool.choose_multiple(rng, k).copied().collect();
        s.sort_unstable();
        (t, s)
    }

    fn mutate(&self, g: &mut Genome, rng: &mut ChaCha8Rng) {
        let pool = &self.pool[&g.0];
        let outside: Vec<usize> = pool.iter().copied().filter(|j| !g.1.contains(j)).collect();
        let mut ops = Vec::new();
        if g.1.len() < self.max_support && !outside.is_empty() {
            ops.push(0);
        }
        if g.1.len() > 1 {
            ops.push(1);
        }
        if !outside.is_empty() {
            ops.push(2);
        }
        match ops.choose(rng) {
            Some(0) => g.1.push(*outside.choose(rng).expect("outside")),
            Some(1) => {
                let i = rng.random_range(0..g.1.len());
                g.1.remove(i);
            }
            Some(_) => {
                let i = rng.random_range(0..g.1.len());
                g.1[i] = *outside.choose(rng).expect("outside");
            }
            None => {}
        }
        g.1.sort_unstable();
    }

    fn crossover(&self, a: &Genome, b: &Genome, rng: &mut ChaCha8Rng) -> Genome {
        let i = rng.random_range(0..=a.1.len());
        let j = rng.random_range(0..=b.1.len());
        let pool = &self.pool[&a.0];
        let mut s: Vec<usize> = a.1[..i].iter().chain(&b.1[j..]).copied().filter(|c| pool.contains(c)).collect();
        s.sort_unstable();
        s.dedup();
        s.truncate(self.max_support);
        if s.is_empty() {
            s.push(*pool.choose(rng).expect("pool"));
        }
        (a.0, s)
    }
}

/// Nondominated-sorting rank of every score (0 is the front).
fn pareto_ranks(scores: &[Score]) -> Vec<usize> {
    let n = scores.len();
    let mut rank = vec![usize::MAX; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut level = 0;
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| scores[j].dominates(&scores[i])))
            .collect();
        for &i in &front {
            rank[i] = level;
        }
        remaining.retain(|i| rank[*i] == usize::MAX);
        level += 1;
    }
    rank
}

fn crowding(scores: &[Score], members: &[usize]) -> Vec<f64> {
    let mut dist = vec![0.0; members.len()];
    if members.len() <= 2 {
        return vec![f64::INFINITY; members.len()];
    }
    let objectives: [fn(&Score) -> f64; 2] = [|s| s.loss, |s| s.complexity as f64];
    for obj in objectives {
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by(|&a, &b| obj(&scores[members[a]]).total_cmp(&obj(&scores[members[b]])));
        let lo = obj(&scores[members[order[0]]]);
        let hi = obj(&scores[members[*order.last().unwrap()]]);
        dist[order[0]] = f64::INFINITY;
        dist[*order.last().unwrap()] = f64::INFINITY;
        if hi > lo {
            for w in 1..order.len() - 1 {
                let next = obj(&scores[members[order[w + 1]]]);
                let prev = obj(&scores[members[order[w - 1]]]);
                dist[order[w]] += (next - prev) / (hi - lo);
            }
        }
    }
    dist
}

/// Multi-objective search over `(target, support)` pairs, minimizing the
/// relative residual and the number of support terms. Returns the
/// nondominated set of every equation evaluated during the run, ordered by
/// complexity.
pub fn evolutionary_discover(library: &TermLibrary, config: &EvoConfig) -> Result<Vec<CandidateEquation>> {
    config.validate()?;
    let design = ScaledDesign::new(library);
    let targets: Vec<usize> = if config.targets.is_empty() {
        library
            .derivative_terms()
            .iter()
            .filter_map(|t| library.position(t))
            .collect()
    } else {
        config
            .targets
            .iter()
            .map(|t| library.position(t).ok_or_else(|| Error::TermNotInUniverse(library.label(t))))
            .collect::<Result<_>>()?
    };
    let mut pool = BTreeMap::new();
    for &t in &targets {
        let tt = &library.terms()[t];
        let p: Vec<usize> = (0..library.len())
            .filter(|&j| j != t && !design.is_zero(j))
            .filter(|&j| !(config.exclude_target_factors && library.terms()[j].shares_factor(tt)))
            .collect();
        if !p.is_empty() && !design.is_zero(t) {
            pool.insert(t, p);
        }
    }
    let targets: Vec<usize> = targets.into_iter().filter(|t| pool.contains_key(t)).collect();
    if targets.is_empty() {
        return Err(Error::Empty("admissible targets"));
    }

    let mut search = Search {
        library,
        design,
        targets,
        pool,
        max_support: config.max_terms - 1,
        archive: BTreeMap::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population: Vec<Genome> = Vec::new();
    refill(&mut search, &mut population, config.pop_size, &mut rng);

    for _ in 0..config.epochs {
        let scores: Vec<Score> = population.iter().map(|g| search.score(g)).collect::<Result<_>>()?;
        let ranks = pareto_ranks(&scores);
        let pick = |rng: &mut ChaCha8Rng| {
            let a = rng.random_range(0..population.len());
            let b = rng.random_range(0..population.len());
            let better = (ranks[a], scores[a].loss) <= (ranks[b], scores[b].loss);
            if better {
                a
            } else {
                b
            }
        };
        let mut offspring = Vec::with_capacity(config.pop_size);
        for _ in 0..config.pop_size {
            let a = pick(&mut rng);
            let mut child = if rng.random::<f64>() < config.crossover_rate {
                let b = pick(&mut rng);
                search.crossover(&population[a], &population[b], &mut rng)
            } else {
                population[a].clone()
            };
            search.mutate(&mut child, &mut rng);
            offspring.push(child);
        }
        let mut merged = population;
        merged.extend(offspring);
        merged.sort();
        merged.dedup();
        refill(&mut search, &mut merged, config.pop_size, &mut rng);
        population = select(&mut search, merged, config.pop_size)?;
    }
    for g in &population {
        search.score(g)?;
    }

    let entries: Vec<(Genome, Score)> = search.archive.iter().map(|(g, s)| (g.clone(), *s)).collect();
    let scores: Vec<Score> = entries.iter().map(|(_, s)| *s).collect();
    let ranks = pareto_ranks(&scores);
    let mut front: Vec<CandidateEquation> = Vec::new();
    for ((g, _), r) in entries.iter().zip(ranks) {
        if r == 0 {
            front.push(to_equation(&search, g)?);
        }
    }
    front.sort_by(|a, b| {
        a.complexity
            .cmp(&b.complexity)
            .then(a.relative_loss.total_cmp(&b.relative_loss))
            .then_with(|| a.target.cmp(&b.target))
    });
    Ok(front)
}

/// Tops the population up with random distinct genomes.
fn refill(search: &mut Search, population: &mut Vec<Genome>, size: usize, rng: &mut ChaCha8Rng) {
    let mut attempts = 0;
    while population.len() < size && attempts < 100 * size {
        let g = search.random(rng);
        if !population.contains(&g) {
            population.push(g);
        }
        attempts += 1;
    }
}

fn select(search: &mut Search, merged: Vec<Genome>, size: usize) -> Result<Vec<Genome>> {
    let scores: Vec<Score> = merged.iter().map(|g| search.score(g)).collect::<Result<_>>()?;
    let ranks = pareto_ranks(&scores);
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let mut keyed: Vec<(usize, f64, usize)> = Vec::with_capacity(merged.len());
    for level in 0..=max_rank {
        let members: Vec<usize> = (0..merged.len()).filter(|&i| ranks[i] == level).collect();
        let dist = crowding(&scores, &members);
        for (m, d) in members.into_iter().zip(dist) {
            keyed.push((level, d, m));
        }
    }
    keyed.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(b.1.total_cmp(&a.1))
            .then(scores[a.2].loss.total_cmp(&scores[b.2].loss))
            .then(merged[a.2].cmp(&merged[b.2]))
    });
    Ok(keyed.into_iter().take(size).map(|(_, _, i)| merged[i].clone()).collect())
}

fn to_equation(search: &Search, g: &Genome) -> Result<CandidateEquation> {
    let lib = search.library;
    let (xi, rel) = search.design.fit(g.0, &g.1, lib.rows())?;
    let coeffs = search.design.unscale(g.0, &g.1, &xi);
    let terms: Vec<TermSpec> = g.1.iter().map(|&j| lib.terms()[j].clone()).collect();
    let ms = search.design.scale(g.0).powi(2);
    let mut eq = CandidateEquation::from_regression(
        lib.terms()[g.0].clone(),
        &terms,
        &coeffs,
        rel * ms,
        ms,
        lib.names().to_vec(),
    );
    eq.relative_loss = rel;
    Ok(eq)
}
