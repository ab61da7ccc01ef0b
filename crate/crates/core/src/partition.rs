//! Partitioning a resolution of `e` into `k` parts of small norm.
//!
//! The greedy search works in the `k`-fold product form `g = h(x^1)...h(x^k)`.
//! Every vector starts at its mean `u_j (+) ... (+) u_j`; indices are then
//! fixed one at a time to the block `p` whose choice `k * u_j` in block `p`
//! gives the smallest largest root of the conditional mixed characteristic
//! polynomial. The mixed polynomial is affine in each `w_j`, so one step
//! builds `R = ∏_{i != j} (1 - D_{w_i}) g` once and each candidate costs a
//! single derivative pass.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{partition_bound, Count};
use crate::error::{Error, Result};
use crate::hyperbolic::{embed_block, symdet_encode, FormSpec, HyperbolicForm};
use crate::mixedchar::{apply_operators, largest_certified_root, restrict_to_e};

/// Slack on the trace cap.
pub const TRACE_TOL: f64 = 1e-9;
/// Relative slack on `Σ u_i = e`.
pub const SUM_TOL: f64 = 1e-9;
/// Slack on per-part norms against the bound.
pub const NORM_TOL: f64 = 1e-6;
/// Default cap on `k^m` for the exhaustive oracle.
pub const BRUTE_FORCE_CAP: u128 = 2_000_000;

/// Input of the partitioner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub form: FormSpec,
    pub vectors: Vec<Vec<f64>>,
    pub k: usize,
    pub eps: f64,
    pub r: Count,
}

impl Instance {
    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    pub fn build_form(&self) -> Result<HyperbolicForm> {
        HyperbolicForm::builtin(&self.form)
    }

    /// `(1/k) δ(kε, m, rk)`.
    pub fn bound(&self) -> Result<f64> {
        partition_bound(
            self.eps,
            Count::Finite(self.m() as u64),
            self.r,
            self.k as u64,
        )
    }
}

/// Outcome of one hypothesis over all vectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest margin over all vectors; negative means violated.
    pub worst_slack: f64,
    pub worst_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Checks cone membership, trace and rank caps, and `Σ u_i = e`.
pub fn validate_instance(inst: &Instance) -> Result<ValidationReport> {
    let form = inst.build_form()?;
    validate_with(inst, &form)
}

fn worst(name: &'static str, slacks: impl Iterator<Item = (usize, f64)>) -> HypothesisCheck {
    let (worst_index, worst_slack) = slacks.fold((None, f64::INFINITY), |(wi, ws), (i, s)| {
        if s < ws {
            (Some(i), s)
        } else {
            (wi, ws)
        }
    });
    HypothesisCheck {
        name,
        passed: worst_slack >= 0.0,
        worst_slack,
        worst_index,
    }
}

fn validate_with(inst: &Instance, form: &HyperbolicForm) -> Result<ValidationReport> {
    let n = form.nvars();
    let mut notes = Vec::new();
    if inst.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if inst.k == 1 {
        notes.push(
            "k = 1 is a degenerate pass-through; the partition guarantee needs k >= 2".into(),
        );
    }
    if !(inst.eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {}",
            inst.eps
        )));
    }
    if let Some(bad) = inst.vectors.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.len(),
        });
    }

    let mut cone = Vec::new();
    let mut trace = Vec::new();
    let mut rank = Vec::new();
    for (i, u) in inst.vectors.iter().enumerate() {
        let eig = form.eigenvalues(u)?;
        let scale = eig.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        cone.push((i, eig[eig.len() - 1] + crate::mixedchar::CONE_TOL * scale));
        trace.push((i, inst.eps + TRACE_TOL - eig.iter().sum::<f64>()));
        let rk = form.rank(u)? as f64;
        rank.push((
            i,
            match inst.r {
                Count::Finite(r) => r as f64 - rk,
                Count::Infinite => f64::INFINITY,
            },
        ));
    }
    let mut sum = vec![0.0; n];
    for u in &inst.vectors {
        sum.iter_mut().zip(u).for_each(|(a, b)| *a += b);
    }
    let escale = form.e().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let sum_slack = sum
        .iter()
        .zip(form.e())
        .enumerate()
        .map(|(i, (s, e))| (i, SUM_TOL * escale - (s - e).abs()));

    let checks = vec![
        worst("closed_cone", cone.into_iter()),
        worst("trace_cap", trace.into_iter()),
        worst("rank_cap", rank.into_iter()),
        worst("sum_is_e", sum_slack),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        checks,
        passed,
        notes,
    })
}

/// Knobs of the greedy search.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GreedyOptions {
    /// Process indices in a seeded random order instead of input order.
    pub shuffle: Option<u64>,
    /// Record elapsed time in the report.
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    /// 0-based vector indices per part.
    pub parts: Vec<Vec<usize>>,
    /// Spectral norm of each part sum.
    pub norms: Vec<f64>,
    /// `(1/k) δ(kε, m, rk)`.
    pub bound: f64,
    /// Largest root of the conditional polynomial before the first step and after each step.
    pub trajectory: Vec<f64>,
    /// Order in which indices were fixed.
    pub order: Vec<usize>,
    pub within_bound: bool,
    pub trajectory_nonincreasing: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl PartitionReport {
    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }
}

/// Relative slack used when calling a trajectory step an increase, and for ties.
const STEP_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

/// Greedy partition; fails with [`Error::Infeasible`] if validation fails.
pub fn greedy_partition(inst: &Instance, opts: &GreedyOptions) -> Result<PartitionReport> {
    let start = Instant::now();
    let form = inst.build_form()?;
    let validation = validate_with(inst, &form)?;
    if !validation.passed {
        let names: Vec<&str> = validation.failures().iter().map(|c| c.name).collect();
        return Err(Error::Infeasible(format!(
            "instance violates {}",
            names.join(", ")
        )));
    }
    let (k, m) = (inst.k, inst.m());
    let g = form.product_form(k)?;

    let mut w: Vec<Vec<f64>> = inst.vectors.iter().map(|u| u.repeat(k)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    if let Some(seed) = opts.shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    let initial = restrict_to_e(&g, &apply_operators(g.poly(), &w)?)?;
    let mut trajectory = vec![largest_certified_root(&g, &initial)?];
    let mut assignment = vec![0usize; m];

    for &j in &order {
        let others: Vec<Vec<f64>> = w
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, x)| x.clone())
            .collect();
        let rest = apply_operators(g.poly(), &others)?;
        let base = restrict_to_e(&g, &rest)?;
        let values = (0..k)
            .into_par_iter()
            .map(|p| {
                let c: Vec<f64> = embed_block(&inst.vectors[j], p, k)?
                    .iter()
                    .map(|x| x * k as f64)
                    .collect();
                let q = base.sub(&restrict_to_e(&g, &rest.directional_derivative(&c)?)?);
                Ok((largest_certified_root(&g, &q)?, c))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for p in 1..k {
            let b = values[best].0;
            if values[p].0 < b - TIE_TOL * b.abs().max(1.0) {
                best = p;
            }
        }
        assignment[j] = best;
        trajectory.push(values[best].0);
        w[j] = values[best].1.clone();
    }

    let mut parts = vec![Vec::new(); k];
    for (i, &p) in assignment.iter().enumerate() {
        parts[p].push(i);
    }
    let norms = parts
        .iter()
        .map(|s| part_norm(&form, &inst.vectors, s))
        .collect::<Result<Vec<_>>>()?;
    let bound = inst.bound()?;
    let within_bound = norms.iter().all(|&x| x <= bound + NORM_TOL);
    let trajectory_nonincreasing = trajectory
        .windows(2)
        .all(|s| s[1] <= s[0] + STEP_TOL * s[0].abs().max(1.0));
    Ok(PartitionReport {
        parts,
        norms,
        bound,
        trajectory,
        order,
        within_bound,
        trajectory_nonincreasing,
        notes: validation.notes,
        wall_time: opts.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// `Σ_{i ∈ part} u_i`, summed in index order.
pub fn part_sum(vectors: &[Vec<f64>], n: usize, part: &[usize]) -> Vec<f64> {
    let mut s = vec![0.0; n];
    for &i in part {
        s.iter_mut().zip(&vectors[i]).for_each(|(a, b)| *a += b);
    }
    s
}

fn part_norm(form: &HyperbolicForm, vectors: &[Vec<f64>], part: &[usize]) -> Result<f64> {
    form.spectral_norm(&part_sum(vectors, form.nvars(), part))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartCheck {
    pub indices: Vec<usize>,
    pub sum: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Equals the largest eigenvalue, since part sums stay in the closed cone.
    pub norm: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub parts: Vec<PartCheck>,
    pub bound: f64,
    pub max_norm: f64,
    pub all_within_bound: bool,
}

/// Evaluates a given partition against the bound.
pub fn verify_partition(inst: &Instance, parts: &[Vec<usize>]) -> Result<VerifyReport> {
    let m = inst.m();
    let mut seen = vec![false; m];
    for &i in parts.iter().flatten() {
        if i >= m {
            return Err(Error::NotAPartition(format!(
                "index {i} out of range 0..{m}"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::NotAPartition(format!("index {i} appears twice")));
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::NotAPartition(format!("index {i} is missing")));
    }
    let form = inst.build_form()?;
    let bound = inst.bound()?;
    let checks = parts
        .iter()
        .map(|s| {
            let sum = part_sum(&inst.vectors, form.nvars(), s);
            let eigenvalues = form.eigenvalues(&sum)?;
            let norm = eigenvalues.iter().fold(0.0, |m: f64, l| m.max(l.abs()));
            Ok(PartCheck {
                indices: s.clone(),
                sum,
                eigenvalues,
                norm,
                within_bound: norm <= bound + NORM_TOL,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_norm = checks.iter().map(|c| c.norm).fold(0.0, f64::max);
    let all_within_bound = checks.iter().all(|c| c.within_bound);
    Ok(VerifyReport {
        parts: checks,
        bound,
        max_norm,
        all_within_bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub parts: Vec<Vec<usize>>,
    pub min_max_norm: f64,
}

/// Exhaustive min-max partition over all `k^m` assignments.
///
/// Part norms are memoized by subset mask. The first optimal assignment in
/// lexicographic order is returned.
pub fn brute_force_partition(inst: &Instance, cap: u128) -> Result<BruteForceResult> {
    let (k, m) = (inst.k, inst.m());
    let size = (k as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if size > cap || m >= 32 {
        return Err(Error::CapExceeded { size, cap });
    }
    let form = inst.build_form()?;
    let mut memo = vec![f64::NAN; 1usize << m];
    let mut norm_of = |mask: usize| -> Result<f64> {
        if memo[mask].is_nan() {
            let idx: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            memo[mask] = part_norm(&form, &inst.vectors, &idx)?;
        }
        Ok(memo[mask])
    };

    let mut digits = vec![0usize; m];
    let mut best = (f64::INFINITY, digits.clone());
    loop {
        let mut masks = vec![0usize; k];
        for (i, &p) in digits.iter().enumerate() {
            masks[p] |= 1 << i;
        }
        let mut worst = 0.0f64;
        for &mask in &masks {
            worst = worst.max(norm_of(mask)?);
            if worst >= best.0 {
                break;
            }
        }
        if worst < best.0 {
            best = (worst, digits.clone());
        }
        // next assignment, last index varying fastest
        let Some(pos) = (0..m).rev().find(|&i| digits[i] + 1 < k) else {
            break;
        };
        digits[pos] += 1;
        digits[pos + 1..].iter_mut().for_each(|d| *d = 0);
    }
    let mut parts = vec![Vec::new(); k];
    for (i, &p) in best.1.iter().enumerate() {
        parts[p].push(i);
    }
    Ok(BruteForceResult {
        parts,
        min_max_norm: best.0,
    })
}

/// Families supported by [`random_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    /// Whitened Gaussian frames, `u_i = Σ w wᵀ` over 1 or 2 columns.
    Symdet { n: usize },
    /// Coordinatewise splittings of the all-ones vector.
    Product { n: usize },
    /// Opposite boundary rays `(a, ±a s)` of the Lorentz cone.
    Lorentz { n: usize },
}

impl Family {
    pub fn form(&self) -> FormSpec {
        match *self {
            Family::Symdet { n } => FormSpec::Symdet { n },
            Family::Product { n } => FormSpec::Product { n },
            Family::Lorentz { n } => FormSpec::Lorentz { n },
        }
    }
}

/// Description of a random instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub m: usize,
    pub k: usize,
    /// Trace cap; `None` uses the largest generated trace.
    pub eps: Option<f64>,
    /// Largest rank of a generated vector, 1 or 2.
    pub max_rank: usize,
    pub seed: u64,
    /// Product family only: split each coordinate evenly instead of randomly.
    #[serde(default)]
    pub equal: bool,
}

const MAX_ATTEMPTS: usize = 10_000;

/// Random resolution of `e`, deterministic in `spec.seed`.
pub fn random_instance(spec: &InstanceSpec) -> Result<Instance> {
    if !(1..=2).contains(&spec.max_rank) {
        return Err(Error::InvalidParameter(format!(
            "max_rank must be 1 or 2, got {}",
            spec.max_rank
        )));
    }
    if spec.k == 0 || spec.m == 0 {
        return Err(Error::InvalidParameter("m and k must be at least 1".into()));
    }
    let form = HyperbolicForm::builtin(&spec.family.form())?;
    let d = form.degree() as f64;
    if let Some(eps) = spec.eps {
        if !(eps > 0.0) || spec.m as f64 * eps < d {
            return Err(Error::Infeasible(format!(
                "m * eps = {} is below tr(e) = {d}, so the trace caps cannot hold",
                spec.m as f64 * eps
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vectors = match spec.family {
        Family::Symdet { n } => symdet_vectors(n, spec, &mut rng)?,
        Family::Product { n } => product_vectors(n, spec, &mut rng)?,
        Family::Lorentz { n } => lorentz_vectors(n, spec, &mut rng)?,
    };
    let eps = match spec.eps {
        Some(e) => e,
        None => vectors
            .iter()
            .map(|u| form.trace(u))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max),
    };
    Ok(Instance {
        form: spec.family.form(),
        vectors,
        k: spec.k,
        eps,
        r: Count::Finite(spec.max_rank as u64),
    })
}

fn column_counts(spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..spec.m)
        .map(|_| {
            if spec.max_rank == 2 && rng.random_bool(0.5) {
                2
            } else {
                1
            }
        })
        .collect()
}

fn symdet_vectors(n: usize, spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let mut counts = column_counts(spec, rng);
    // whitening needs at least n columns
    while counts.iter().sum::<usize>() < n {
        let Some(c) = counts.iter_mut().find(|c| **c < spec.max_rank) else {
            return Err(Error::Infeasible(format!(
                "{} vectors of rank <= {} cannot sum to I_{n}",
                spec.m, spec.max_rank
            )));
        };
        *c += 1;
    }
    let cols: usize = counts.iter().sum();
    let owner: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i, c))
        .collect();
    let mut raw = DMatrix::<f64>::from_fn(n, cols, |_, _| StandardNormal.sample(rng));

    for _ in 0..MAX_ATTEMPTS {
        let white = whiten(&raw)?;
        let mut traces = vec![0.0; spec.m];
        for (j, &i) in owner.iter().enumerate() {
            traces[i] += white.column(j).norm_squared();
        }
        let over: Vec<usize> = (0..spec.m)
            .filter(|&i| spec.eps.is_some_and(|e| traces[i] > e))
            .collect();
        if over.is_empty() {
            let mut out = vec![vec![0.0; n * (n + 1) / 2]; spec.m];
            for (j, &i) in owner.iter().enumerate() {
                let c = white.column(j);
                let outer: Vec<f64> = (0..n * n).map(|t| c[t / n] * c[t % n]).collect();
                out[i]
                    .iter_mut()
                    .zip(symdet_encode(n, &outer))
                    .for_each(|(a, b)| *a += b);
            }
            return Ok(out);
        }
        for (j, &i) in owner.iter().enumerate() {
            if over.contains(&i) {
                for r in 0..n {
                    raw[(r, j)] = StandardNormal.sample(rng);
                }
            }
        }
    }
    Err(Error::Infeasible(format!(
        "no whitened frame met the trace cap after {MAX_ATTEMPTS} attempts"
    )))
}

/// `S^{-1/2} W` with `S = W Wᵀ`, so the columns form a tight frame.
fn whiten(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = w * w.transpose();
    let eig = SymmetricEigen::new(s);
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12) {
        return Err(Error::Infeasible("random frame is rank deficient".into()));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let root = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    Ok(root * w)
}

fn product_vectors(n: usize, spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let m = spec.m;
    if m < n.div_ceil(spec.max_rank) {
        return Err(Error::Infeasible(format!(
            "{m} vectors of rank <= {} cannot cover {n} coordinates",
            spec.max_rank
        )));
    }
    // supports: round robin guarantees coverage, a second coordinate is optional
    let mut support: Vec<Vec<usize>> = (0..m).map(|i| vec![i % n]).collect();
    if spec.max_rank == 2 {
        for (i, s) in support.iter_mut().enumerate() {
            if m < n && i + m < n {
                s.push(i + m);
            } else if !spec.equal && rng.random_bool(0.5) {
                let c = rng.random_range(0..n);
                if c != s[0] {
                    s.push(c);
                }
            }
        }
    }
    let holders: Vec<Vec<usize>> = (0..n)
        .map(|c| (0..m).filter(|&i| support[i].contains(&c)).collect())
        .collect();

    for _ in 0..MAX_ATTEMPTS {
        let mut out = vec![vec![0.0; n]; m];
        for (c, hs) in holders.iter().enumerate() {
            let weights: Vec<f64> = if spec.equal {
                vec![1.0; hs.len()]
            } else {
                hs.iter().map(|_| Exp1.sample(rng)).collect()
            };
            let total: f64 = weights.iter().sum();
            for (&i, wt) in hs.iter().zip(&weights) {
                out[i][c] = wt / total;
            }
        }
        let fits = spec
            .eps
            .is_none_or(|e| out.iter().all(|u| u.iter().sum::<f64>() <= e));
        if fits {
            return Ok(out);
        }
        if spec.equal {
            break;
        }
    }
    Err(Error::Infeasible("no splitting met the trace cap".into()))
}

fn lorentz_vectors(n: usize, spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    // rank-one rays come in opposite pairs (a, a s), (a, -a s) with |s| = 1
    if spec.m % 2 != 0 {
        return Err(Error::Infeasible(
            "the lorentz family needs an even number of vectors".into(),
        ));
    }
    let pairs = spec.m / 2;
    for _ in 0..MAX_ATTEMPTS {
        let weights: Vec<f64> = (0..pairs).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = weights.iter().sum();
        let mut out = Vec::with_capacity(spec.m);
        for wt in &weights {
            let a = 0.5 * wt / total;
            let mut s: Vec<f64> = (1..n).map(|_| StandardNormal.sample(rng)).collect();
            let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            s.iter_mut().for_each(|x| *x /= norm);
            for sign in [1.0, -1.0] {
                let mut v = vec![a];
                v.extend(s.iter().map(|x| sign * a * x));
                out.push(v);
            }
        }
        // trace of (a, a s) is 2a
        if spec
            .eps
            .is_none_or(|e| weights.iter().all(|w| w / total <= e))
        {
            return Ok(out);
        }
    }
    Err(Error::Infeasible("no ray weights met the trace cap".into()))
}
