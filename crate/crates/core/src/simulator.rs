//! Monte Carlo destruction of random trees.
//!
//! Two engines:
//!
//! - the size process, which only tracks component sizes and draws each split
//!   from `p_{m,k}` (exact in law because cut components are again random
//!   members of the family);
//! - explicit trees, sampled shape by shape and cut edge by edge, which is
//!   the way to test that property.
//!
//! Experiments are split into fixed blocks of samples. Block `b` draws from a
//! ChaCha20 stream keyed by `SHA-256(seed ‖ b)`, and block results are summed
//! in block order, so the output does not depend on the number of workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::counts::{compute_counts, WeightedCounts};
use crate::error::{Error, Result};
use crate::family::{solve_constants, FamilyKind, FamilySpec};
use crate::moments::{SizeOneCost, TollSpec, Variant};
use crate::rational;
use crate::summation::CompensatedSum;

/// Largest tree the explicit engine will build.
pub const EXPLICIT_N_MAX: usize = 64;

/// Samples per RNG block.
pub const BLOCK_SIZE: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DestructionSample {
    pub n: usize,
    pub variant: Variant,
    pub total_cost: f64,
    /// Size of the root component after the first cut; `None` for a single node.
    pub first_cut_root_size: Option<usize>,
}

/// Cumulative split tables `P(K_m ≤ k)` for every `2 ≤ m ≤ n_max`.
#[derive(Debug, Clone)]
pub struct SizeProcess {
    cdf: Vec<Vec<f64>>,
}

impl SizeProcess {
    pub fn new(counts: &WeightedCounts, n_max: usize) -> Result<Self> {
        if n_max > counts.n_max() {
            return Err(Error::OutOfRange {
                index: n_max,
                max: counts.n_max(),
            });
        }
        let mut cdf = vec![Vec::new(), Vec::new()];
        for m in 2..=n_max {
            let mut acc = CompensatedSum::new();
            let row: Vec<f64> = (1..m)
                .map(|k| {
                    acc.add(counts.split_prob(m, k));
                    acc.value()
                })
                .collect();
            cdf.push(row);
        }
        Ok(SizeProcess { cdf })
    }

    pub fn n_max(&self) -> usize {
        self.cdf.len() - 1
    }

    /// Draws `K_m` by inverting the cumulative table.
    pub fn draw_split<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> usize {
        let row = &self.cdf[m];
        let u = rng.random::<f64>() * row[row.len() - 1];
        row.partition_point(|&c| c <= u).min(row.len() - 1) + 1
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        toll: &TollSpec,
        n: usize,
        variant: Variant,
        rng: &mut R,
    ) -> DestructionSample {
        assert!(n >= 1 && n <= self.n_max(), "size {n} outside the split tables");
        let mut cost = CompensatedSum::new();
        let mut first = None;
        let mut stack = vec![n];
        while let Some(m) = stack.pop() {
            cost.add(toll.value(m));
            if m == 1 {
                continue;
            }
            let k = self.draw_split(m, rng);
            first.get_or_insert(k);
            stack.push(k);
            if variant == Variant::TwoSided {
                stack.push(m - k);
            }
        }
        DestructionSample {
            n,
            variant,
            total_cost: cost.value(),
            first_cut_root_size: first,
        }
    }
}

/// One destruction run of the size process. Builds the split tables on every
/// call; use [`SizeProcess`] directly for repeated sampling.
pub fn simulate_size_process<R: Rng + ?Sized>(
    counts: &WeightedCounts,
    toll: &TollSpec,
    n: usize,
    variant: Variant,
    rng: &mut R,
) -> Result<DestructionSample> {
    Ok(SizeProcess::new(counts, n)?.sample(toll, n, variant, rng))
}

/// Rooted tree with node 0 as root.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RootedTree {
    pub children: Vec<Vec<usize>>,
}

impl RootedTree {
    pub fn single() -> Self {
        RootedTree {
            children: vec![Vec::new()],
        }
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    /// Builds a tree from a parent array (`parent[root] = None`), relabelling the root as 0.
    pub fn from_parents(parent: &[Option<usize>]) -> Self {
        let n = parent.len();
        let root = parent.iter().position(Option::is_none).expect("tree needs a root");
        let relabel = |v: usize| {
            if v == root {
                0
            } else if v == 0 {
                root
            } else {
                v
            }
        };
        let mut children = vec![Vec::new(); n];
        for (v, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[relabel(*p)].push(relabel(v));
            }
        }
        RootedTree { children }
    }

    /// Canonical form as a nested bracket string; children sorted, so it identifies unordered shapes.
    pub fn unordered_shape(&self) -> String {
        fn go(t: &RootedTree, v: usize) -> String {
            let mut parts: Vec<String> = t.children[v].iter().map(|&c| go(t, c)).collect();
            parts.sort();
            format!("({})", parts.concat())
        }
        go(self, 0)
    }

    /// Nested bracket string keeping child order (plane shape).
    pub fn plane_shape(&self) -> String {
        fn go(t: &RootedTree, v: usize) -> String {
            let inner: String = t.children[v].iter().map(|&c| go(t, c)).collect();
            format!("({inner})")
        }
        go(self, 0)
    }
}

/// Uniform rooted labelled tree from a random Prüfer sequence and a uniform root.
fn sample_cayley<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RootedTree {
    if n == 1 {
        return RootedTree::single();
    }
    let code: Vec<usize> = (0..n.saturating_sub(2)).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut adjacency = vec![Vec::new(); n];
    for &c in &code {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        adjacency[leaf].push(c);
        adjacency[c].push(leaf);
        degree[leaf] -= 1;
        degree[c] -= 1;
    }
    let last: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    adjacency[last[0]].push(last[1]);
    adjacency[last[1]].push(last[0]);

    let root = rng.random_range(0..n);
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                stack.push(w);
            }
        }
    }
    RootedTree::from_parents(&parent)
}

/// Uniform plane tree: a uniform arrangement of `n − 1` up-steps and `n`
/// down-steps, rotated (cycle lemma) into the unique excursion form.
fn sample_plane<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RootedTree {
    let len = 2 * n - 1;
    let mut steps = vec![-1i32; len];
    for s in steps.iter_mut().take(n - 1) {
        *s = 1;
    }
    for i in (1..len).rev() {
        let j = rng.random_range(0..=i);
        steps.swap(i, j);
    }
    let mut sum = 0;
    let mut min = 0;
    let mut at = 0;
    for (i, s) in steps.iter().enumerate() {
        sum += s;
        if sum < min {
            min = sum;
            at = i;
        }
    }
    steps.rotate_left(at + 1);
    let mut children = vec![Vec::new()];
    let mut path = vec![0usize];
    for &s in &steps[..len - 1] {
        if s == 1 {
            let v = children.len();
            children.push(Vec::new());
            children[*path.last().unwrap()].push(v);
            path.push(v);
        } else {
            path.pop();
        }
    }
    RootedTree { children }
}

/// Galton–Watson tree with Binomial(d, p) offspring, conditioned on `n` nodes by rejection.
fn sample_binomial_gw<R: Rng + ?Sized>(n: usize, d: u32, p: f64, rng: &mut R) -> RootedTree {
    loop {
        let mut children: Vec<Vec<usize>> = vec![Vec::new()];
        let mut frontier = vec![0usize];
        let mut overflow = false;
        while let Some(v) = frontier.pop() {
            let k = (0..d).filter(|_| rng.random::<f64>() < p).count();
            if children.len() + k > n {
                overflow = true;
                break;
            }
            for _ in 0..k {
                let w = children.len();
                children.push(Vec::new());
                children[v].push(w);
                frontier.push(w);
            }
        }
        if !overflow && children.len() == n {
            return RootedTree { children };
        }
    }
}

/// Tree of size `n` drawn with probability proportional to its weight.
///
/// Supported: family A (the law does not depend on `α₀`), family B (any `d`),
/// and family C with `α₁ = α₀` (uniform plane trees).
pub fn sample_tree_explicit<R: Rng + ?Sized>(
    spec: &FamilySpec,
    n: usize,
    rng: &mut R,
) -> Result<RootedTree> {
    if n == 0 || n > EXPLICIT_N_MAX {
        return Err(Error::OutOfRange {
            index: n,
            max: EXPLICIT_N_MAX,
        });
    }
    match spec.kind() {
        FamilyKind::A => Ok(sample_cayley(n, rng)),
        FamilyKind::C if spec.is_uniform_plane() => Ok(sample_plane(n, rng)),
        FamilyKind::B => {
            let constants = solve_constants(spec)?;
            let d = spec.d().expect("family B has d");
            let x = rational::to_f64(spec.alpha0()) * constants.tau / d as f64;
            Ok(sample_binomial_gw(n, d, x / (1.0 + x), rng))
        }
        FamilyKind::C => Err(Error::Unsupported(format!(
            "explicit sampling of {} (only alpha1 = alpha0 is a uniform plane family)",
            spec.label()
        ))),
    }
}

/// Literal edge cutting: a uniform edge of the current component is cut and
/// `t_m` charged, `m` being the component size; an isolated node costs `t_1`.
pub fn destroy_tree<R: Rng + ?Sized>(
    tree: &RootedTree,
    variant: Variant,
    toll: &TollSpec,
    rng: &mut R,
) -> DestructionSample {
    assert!(!tree.is_empty(), "cannot destroy an empty tree");
    let n = tree.len();
    // edge_alive[v]: the edge from v to its parent is still present
    let mut edge_alive = vec![true; n];
    let mut cost = CompensatedSum::new();
    let mut first = None;
    let mut stack = vec![0usize];
    let mut members = Vec::with_capacity(n);
    while let Some(root) = stack.pop() {
        members.clear();
        members.push(root);
        let mut i = 0;
        while i < members.len() {
            let v = members[i];
            for &c in &tree.children[v] {
                if edge_alive[c] {
                    members.push(c);
                }
            }
            i += 1;
        }
        let m = members.len();
        cost.add(toll.value(m));
        if m == 1 {
            continue;
        }
        // non-root members are in bijection with the component's edges
        let cut = members[rng.random_range(1..m)];
        edge_alive[cut] = false;
        if first.is_none() {
            first = Some(m - subtree_size(tree, &edge_alive, cut));
        }
        stack.push(root);
        if variant == Variant::TwoSided {
            stack.push(cut);
        }
    }
    DestructionSample {
        n,
        variant,
        total_cost: cost.value(),
        first_cut_root_size: first,
    }
}

fn subtree_size(tree: &RootedTree, edge_alive: &[bool], v: usize) -> usize {
    let mut size = 0;
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        size += 1;
        stack.extend(tree.children[u].iter().filter(|&&c| edge_alive[c]));
    }
    size
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    SizeProcess,
    Explicit,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size_process" | "size-process" => Ok(Engine::SizeProcess),
            "explicit" => Ok(Engine::Explicit),
            other => Err(Error::Parse(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(serialize_with = "serialize_family", deserialize_with = "deserialize_family")]
    pub family: FamilySpec,
    pub alpha: f64,
    pub size_one: SizeOneCost,
    pub n: usize,
    pub variant: Variant,
    pub samples: usize,
    pub s_max: usize,
    pub seed: u64,
    pub engine: Engine,
    pub workers: usize,
}

fn serialize_family<S: serde::Serializer>(
    spec: &FamilySpec,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    serializer.serialize_str(spec.to_config().trim())
}

fn deserialize_family<'de, D: serde::Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<FamilySpec, D::Error> {
    let text = String::deserialize(deserializer)?;
    FamilySpec::from_config(&text).map_err(serde::de::Error::custom)
}

impl ExperimentConfig {
    pub fn new(family: FamilySpec, alpha: f64, n: usize, variant: Variant, samples: usize, seed: u64) -> Self {
        ExperimentConfig {
            family,
            alpha,
            size_one: SizeOneCost::Toll,
            n,
            variant,
            samples,
            s_max: 2,
            seed,
            engine: Engine::SizeProcess,
            workers: 1,
        }
    }

    pub fn toll(&self) -> Result<TollSpec> {
        Ok(TollSpec::power(self.alpha)?.with_size_one(self.size_one))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.samples == 0 {
            return bad("sample count must be positive".into());
        }
        if self.n == 0 {
            return bad("tree size must be positive".into());
        }
        if self.s_max == 0 {
            return bad("s_max must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("need at least one worker".into());
        }
        if self.engine == Engine::Explicit && self.n > EXPLICIT_N_MAX {
            return bad(format!("explicit engine is capped at n = {EXPLICIT_N_MAX}"));
        }
        TollSpec::power(self.alpha)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    /// Raw moments of orders `1..=s_max`.
    pub moment_estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub seed: u64,
}

/// ChaCha20 stream for block `block` of an experiment seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(block.to_le_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha20Rng::from_seed(digest)
}

/// Power sums `Σ x^j`, `j = 1..=2 s_max`, of one block.
fn run_block<F>(seed: u64, block: usize, size: usize, powers: usize, mut draw: F) -> Vec<f64>
where
    F: FnMut(&mut ChaCha20Rng) -> f64,
{
    let mut rng = block_rng(seed, block as u64);
    let mut sums = vec![CompensatedSum::new(); powers];
    for _ in 0..size {
        let x = draw(&mut rng);
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= x;
            s.add(p);
        }
    }
    sums.iter().map(CompensatedSum::value).collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<SampleStats> {
    config.validate()?;
    let toll = config.toll()?;
    let powers = 2 * config.s_max;
    let blocks = config.samples.div_ceil(BLOCK_SIZE);
    let block_len = |b: usize| BLOCK_SIZE.min(config.samples - b * BLOCK_SIZE);

    let process = match config.engine {
        Engine::SizeProcess => {
            let counts = compute_counts(&config.family, config.n, 0)?;
            Some(SizeProcess::new(&counts, config.n)?)
        }
        Engine::Explicit => {
            // surface unsupported families before spawning workers
            sample_tree_explicit(&config.family, config.n, &mut block_rng(config.seed, u64::MAX))?;
            None
        }
    };

    let run = |b: usize| -> Vec<f64> {
        match &process {
            Some(p) => run_block(config.seed, b, block_len(b), powers, |rng| {
                p.sample(&toll, config.n, config.variant, rng).total_cost
            }),
            None => run_block(config.seed, b, block_len(b), powers, |rng| {
                let tree = sample_tree_explicit(&config.family, config.n, rng).expect("checked above");
                destroy_tree(&tree, config.variant, &toll, rng).total_cost
            }),
        }
    };

    let workers = config.workers.min(blocks).max(1);
    let mut results: Vec<Option<Vec<f64>>> = vec![None; blocks];
    if workers == 1 {
        for (b, slot) in results.iter_mut().enumerate() {
            *slot = Some(run(b));
        }
    } else {
        let partial: Vec<Vec<(usize, Vec<f64>)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run = &run;
                    scope.spawn(move || (w..blocks).step_by(workers).map(|b| (b, run(b))).collect())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for (b, sums) in partial.into_iter().flatten() {
            results[b] = Some(sums);
        }
    }

    let mut totals = vec![CompensatedSum::new(); powers];
    for sums in results.into_iter().map(|r| r.expect("every block ran")) {
        for (t, v) in totals.iter_mut().zip(sums) {
            t.add(v);
        }
    }
    let count = config.samples as f64;
    let means: Vec<f64> = totals.iter().map(|t| t.value() / count).collect();
    let mut moment_estimates = Vec::with_capacity(config.s_max);
    let mut standard_errors = Vec::with_capacity(config.s_max);
    for s in 1..=config.s_max {
        let mean = means[s - 1];
        let second = means[2 * s - 1];
        let se = if config.samples < 2 {
            f64::NAN
        } else {
            let var = ((second - mean * mean) * count / (count - 1.0)).max(0.0);
            (var / count).sqrt()
        };
        moment_estimates.push(mean);
        standard_errors.push(se);
    }
    Ok(SampleStats {
        count: config.samples,
        moment_estimates,
        standard_errors,
        seed: config.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of `observed` counts against probabilities
/// `expected`. Adjacent cells are pooled until every expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::InvalidConfig("observed and expected lengths differ".into()));
    }
    let total: u64 = observed.iter().sum();
    let total_p: f64 = expected.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(expected) {
        o += obs as f64;
        e += p / total_p * total as f64;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::InvalidConfig("too few samples for a chi-square test".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        degrees_of_freedom: dof,
        p_value: dist.sf(statistic),
    })
}
