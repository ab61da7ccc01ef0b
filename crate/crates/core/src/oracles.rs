//! Numerical checks of the correlation inequalities and their consequences.
//!
//! With `x` strictly inside the cone and `u, v` in its closure,
//!
//! ```text
//! η_k = D_u^k h(x) / h(x)
//! Φ_k = -D_v (D_u^k h / h)(x) = (D_u^k h · D_v h - D_v D_u^k h · h)(x) / h(x)²
//! ```
//!
//! Every check reports a signed slack: the margin of the inequality divided
//! by the total magnitude of the terms that enter it, so cancellation noise
//! never looks like a violation. A check passes when its slack is at least
//! `-tol`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{in_U_r, Count};
use crate::error::{Error, Result};
use crate::hyperbolic::{symdet_encode, FormSpec, HyperbolicForm};
use crate::polyalg::MultiPoly;

/// Default pass threshold on slacks.
pub const SLACK_TOL: f64 = 1e-9;
/// Smallest eigenvalue of generated interior points.
pub const INTERIOR_MARGIN: f64 = 0.1;
/// `Φ_1` counts as zero below this fraction of its term magnitude.
const VACUOUS_TOL: f64 = 1e-10;

/// Cached `η_k`, `Φ_k` at a fixed `(x, u, v)`.
#[derive(Clone, Debug)]
pub struct PhiEtaContext {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    rank: usize,
    eta: Vec<f64>,
    phi: Vec<f64>,
    /// `(|D_u^k h · D_v h| + |D_v D_u^k h · h|) / h²`, the scale of `Φ_k`.
    phi_mag: Vec<f64>,
}

impl PhiEtaContext {
    /// `x` must satisfy `λ_min(x) > tol`; `u`, `v` must lie in the closed cone.
    ///
    /// `D_u^k h` is taken to vanish identically for `k > rank(u)`.
    pub fn new(form: &HyperbolicForm, x: &[f64], u: &[f64], v: &[f64]) -> Result<Self> {
        let lmin = form.lambda_min(x)?;
        if lmin <= 1e-9 {
            return Err(Error::OutsideCone {
                index: 0,
                lambda_min: lmin,
            });
        }
        for (index, w) in [(1, u), (2, v)] {
            let l = form.lambda_min(w)?;
            if l < -1e-9 * w.iter().fold(1.0f64, |m, a| m.max(a.abs())) {
                return Err(Error::OutsideCone {
                    index,
                    lambda_min: l,
                });
            }
        }
        let rank = form.rank(u)?;
        let hx = form.poly().eval(x)?;
        if hx.abs() < f64::MIN_POSITIVE {
            return Err(Error::Domain("h(x) vanishes".into()));
        }
        let dvh = form.poly().directional_derivative(v)?.eval(x)?;

        let d = form.degree();
        let mut eta = vec![0.0; d + 3];
        let mut phi = vec![0.0; d + 3];
        let mut phi_mag = vec![0.0; d + 3];
        let mut duk: MultiPoly = form.poly().clone();
        for k in 0..=rank {
            let a = duk.eval(x)?;
            let b = duk.directional_derivative(v)?.eval(x)?;
            eta[k] = a / hx;
            phi[k] = (a * dvh - b * hx) / (hx * hx);
            phi_mag[k] = ((a * dvh).abs() + (b * hx).abs()) / (hx * hx);
            duk = duk.directional_derivative(u)?;
        }
        // Φ_0 = -D_v(1) is zero exactly
        phi[0] = 0.0;
        Ok(Self {
            x: x.to_vec(),
            u: u.to_vec(),
            v: v.to_vec(),
            rank,
            eta,
            phi,
            phi_mag,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eta(&self, k: usize) -> f64 {
        self.eta.get(k).copied().unwrap_or(0.0)
    }

    pub fn phi(&self, k: usize) -> f64 {
        self.phi.get(k).copied().unwrap_or(0.0)
    }

    fn phi_mag(&self, k: usize) -> f64 {
        self.phi_mag.get(k).copied().unwrap_or(0.0)
    }

    fn phi1_vanishes(&self) -> bool {
        self.phi(1).abs() <= VACUOUS_TOL * self.phi_mag(1)
    }
}

pub fn eta(ctx: &PhiEtaContext, k: usize) -> f64 {
    ctx.eta(k)
}

pub fn phi(ctx: &PhiEtaContext, k: usize) -> f64 {
    ctx.phi(k)
}

/// How a check ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Vacuous,
    Skipped,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub status: Status,
    /// Present for evaluated checks.
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn evaluated(slack: f64, tol: f64) -> Self {
        let status = if slack >= -tol {
            Status::Pass
        } else {
            Status::Failed
        };
        Self {
            status,
            slack: Some(slack),
            note: None,
        }
    }

    fn vacuous(note: &str) -> Self {
        Self {
            status: Status::Vacuous,
            slack: None,
            note: Some(note.into()),
        }
    }

    fn skipped(note: impl Into<String>) -> Self {
        Self {
            status: Status::Skipped,
            slack: None,
            note: Some(note.into()),
        }
    }

    /// `lhs <= rhs`, with `mag` the total size of the terms involved.
    fn le(lhs: f64, rhs: f64, mag: f64, tol: f64) -> Self {
        Self::evaluated(ratio(rhs - lhs, mag), tol)
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, Status::Pass | Status::Vacuous)
    }
}

fn ratio(margin: f64, mag: f64) -> f64 {
    if mag > 0.0 {
        margin / mag
    } else {
        0.0
    }
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `D_u^k h · D_v h - D_u^k D_v h · h >= 0`, normalized by `h²`; the slack is `Φ_k`.
pub fn check_correlation(ctx: &PhiEtaContext, k: usize, tol: f64) -> CheckResult {
    CheckResult::evaluated(ratio(ctx.phi(k), ctx.phi_mag(k)), tol)
}

/// Three-term recursion bound on `Φ_{k+1}`, for `1 <= k <= rank(u) + 1`.
pub fn check_trec(ctx: &PhiEtaContext, k: usize, tol: f64) -> CheckResult {
    if k == 0 || k > ctx.rank + 1 {
        return CheckResult::skipped(format!("k = {k} outside 1..={}", ctx.rank + 1));
    }
    let (e0, e1, e2) = (ctx.eta(k - 1), ctx.eta(k), ctx.eta(k + 1));
    let a = 2.0 * e1 / e0;
    let b = -2.0 * e1 * e1 / (e0 * e0) + e2 / e0;
    let lhs = ctx.phi(k + 1);
    let rhs = a * ctx.phi(k) + b * ctx.phi(k - 1);
    let mag = ctx.phi_mag(k + 1)
        + a.abs() * ctx.phi_mag(k)
        + (2.0 * e1 * e1 / (e0 * e0) + e2.abs() / e0) * ctx.phi_mag(k - 1);
    CheckResult::le(lhs, rhs, mag, tol)
}

/// `Φ_1 = 0` forces `Φ_k = 0`, and `Φ_1 > 0` forces `Φ_k > 0`, for `k <= rank(u)`.
pub fn check_post(ctx: &PhiEtaContext, tol: f64) -> CheckResult {
    let r = ctx.rank;
    if ctx.phi1_vanishes() {
        let worst = (1..=r)
            .map(|k| ratio(-ctx.phi(k).abs(), ctx.phi_mag(k)))
            .fold(0.0, f64::min);
        return if worst >= -VACUOUS_TOL.max(tol) {
            CheckResult::vacuous("Φ_1 = 0 and every Φ_k vanishes")
        } else {
            CheckResult::evaluated(worst, tol)
        };
    }
    let worst = (1..=r)
        .map(|k| ratio(ctx.phi(k), ctx.phi_mag(k)))
        .fold(f64::INFINITY, f64::min);
    CheckResult::evaluated(if worst.is_finite() { worst } else { 0.0 }, tol)
}

/// `Φ_k / Φ_{k-1} <= k/(k-1) · (r-k+2)/r · η_1` with `r = rank(u)` and `2 <= k <= r`.
pub fn check_stepped(ctx: &PhiEtaContext, k: usize, tol: f64) -> CheckResult {
    let r = ctx.rank;
    if k < 2 || k > r {
        return CheckResult::skipped(format!("k = {k} outside 2..={r}"));
    }
    if ctx.phi1_vanishes() {
        return CheckResult::vacuous("Φ_1 = 0");
    }
    // Φ_{k-1} > 0 here, so compare without dividing
    let c = k as f64 / (k - 1) as f64 * (r - k + 2) as f64 / r as f64 * ctx.eta(1);
    let mag = ctx.phi_mag(k) + c.abs() * ctx.phi_mag(k - 1);
    CheckResult::le(ctx.phi(k), c * ctx.phi(k - 1), mag, tol)
}

/// `Φ_k / Φ_1 <= k! C(r, k-1) (η_1/r)^(k-1)` for `rank(u) <= r` and `1 <= k <= r`.
pub fn check_fk1(ctx: &PhiEtaContext, k: usize, r: usize, tol: f64) -> CheckResult {
    if r < ctx.rank || r == 0 || k == 0 || k > r {
        return CheckResult::skipped(format!("need rank(u) <= r and 1 <= k <= r (k={k}, r={r})"));
    }
    if ctx.phi1_vanishes() {
        return CheckResult::vacuous("Φ_1 = 0");
    }
    let c = factorial(k) * binom(r, k - 1) * (ctx.eta(1) / r as f64).powi(k as i32 - 1);
    let mag = ctx.phi_mag(k) + c.abs() * ctx.phi_mag(1);
    CheckResult::le(ctx.phi(k), c * ctx.phi(1), mag, tol)
}

/// Newton's inequalities for `s -> h(x + s u)/h(x)` and the power bound they imply.
///
/// With `a_k = (η_k/k!) / C(r, k)` and `r = rank(u)`: `a_k² >= a_{k-1} a_{k+1}`
/// for `1 <= k <= r-1`, and `a_j <= a_0 (a_1/a_0)^j` for `j <= r`.
pub fn check_newton(ctx: &PhiEtaContext, tol: f64) -> Vec<CheckResult> {
    let r = ctx.rank;
    let a: Vec<f64> = (0..=r)
        .map(|k| ctx.eta(k) / factorial(k) / binom(r, k))
        .collect();
    let mut out = Vec::new();
    for k in 1..r {
        let (sq, prod) = (a[k] * a[k], a[k - 1] * a[k + 1]);
        out.push(CheckResult::le(prod, sq, sq.abs() + prod.abs(), tol));
    }
    if r >= 1 {
        for j in 0..=r {
            let cap = a[0] * (a[1] / a[0]).powi(j as i32);
            out.push(CheckResult::le(a[j], cap, a[j].abs() + cap.abs(), tol));
        }
    }
    out
}

/// Folds several results into the worst one.
pub fn worst_of(results: &[CheckResult]) -> CheckResult {
    let mut worst: Option<&CheckResult> = None;
    for r in results {
        let rank = |c: &CheckResult| match c.status {
            Status::Failed => 0,
            Status::Pass => 1,
            Status::Vacuous => 2,
            Status::Skipped => 3,
        };
        worst = match worst {
            None => Some(r),
            Some(w) if rank(r) < rank(w) => Some(r),
            Some(w)
                if rank(r) == rank(w)
                    && r.slack.unwrap_or(f64::INFINITY) < w.slack.unwrap_or(f64::INFINITY) =>
            {
                Some(r)
            }
            w => w,
        };
    }
    worst
        .cloned()
        .unwrap_or_else(|| CheckResult::skipped("no inequalities in range"))
}

fn rank_within(rank: usize, r: Count) -> bool {
    match r {
        Count::Finite(r) => rank as u64 <= r,
        Count::Infinite => true,
    }
}

/// `(h - D_u h)(x + δu) > 0` under `h(x)/D_u h(x) >= μ` and the side conditions on `(δ, μ)`.
pub fn check_stayabove(
    form: &HyperbolicForm,
    x: &[f64],
    u: &[f64],
    delta: f64,
    mu: f64,
    r: Count,
    tol: f64,
) -> Result<CheckResult> {
    if form.lambda_min(x)? <= 1e-9 {
        return Ok(CheckResult::skipped("x is not strictly inside the cone"));
    }
    if form.lambda_min(u)? < -1e-9 {
        return Ok(CheckResult::skipped("u is outside the closed cone"));
    }
    let rank = form.rank(u)?;
    if rank == 0 || !rank_within(rank, r) {
        return Ok(CheckResult::skipped(format!(
            "rank(u) = {rank} not in 1..={r}"
        )));
    }
    let side = match r {
        Count::Finite(rr) => {
            mu > 1.0 || ((1.0..=2.0).contains(&delta) && mu > 1.0 - delta / rr as f64)
        }
        Count::Infinite => mu > 1.0,
    };
    if !(delta > 0.0 && mu > 0.0 && side) {
        return Ok(CheckResult::skipped("(δ, μ) violates the side conditions"));
    }
    let h = form.poly();
    let du = h.directional_derivative(u)?;
    if h.eval(x)? < mu * du.eval(x)? {
        return Ok(CheckResult::skipped("h(x)/D_u h(x) < μ"));
    }
    let y: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + delta * b).collect();
    let (hy, dy) = (h.eval(&y)?, du.eval(&y)?);
    Ok(CheckResult::evaluated(
        ratio(hy - dy, hy.abs() + dy.abs()),
        tol,
    ))
}

/// `ξ_i[h - D_{u_j} h](x + δ u_j) >= ξ_i[h](x)` with `ξ_i[g] = g / D_{v_i} g`, for `(δ, μ) ∈ U_r`.
#[allow(clippy::too_many_arguments)]
pub fn check_eng2(
    form: &HyperbolicForm,
    x: &[f64],
    uj: &[f64],
    vi: &[f64],
    delta: f64,
    mu: f64,
    r: Count,
    tol: f64,
) -> Result<CheckResult> {
    if form.lambda_min(x)? <= 1e-9 {
        return Ok(CheckResult::skipped("x is not strictly inside the cone"));
    }
    if form.lambda_min(uj)? < -1e-9 || form.lambda_min(vi)? < -1e-9 {
        return Ok(CheckResult::skipped(
            "a direction is outside the closed cone",
        ));
    }
    let (rj, ri) = (form.rank(uj)?, form.rank(vi)?);
    if rj == 0 || ri == 0 || !rank_within(rj, r) {
        return Ok(CheckResult::skipped(format!(
            "ranks ({rj}, {ri}) violate 0 < rank(u_j) <= {r}, rank(v_i) > 0"
        )));
    }
    if !(delta > 0.0 && mu > 0.0) || !in_U_r(delta, mu, r)? {
        return Ok(CheckResult::skipped("(δ, μ) is not in U_r"));
    }
    let h = form.poly();
    let dj = h.directional_derivative(uj)?;
    if h.eval(x)? < mu * dj.eval(x)? {
        return Ok(CheckResult::skipped("ξ_j[h](x) < μ"));
    }
    let g = h.sub(&dj)?;
    let y: Vec<f64> = x.iter().zip(uj).map(|(a, b)| a + delta * b).collect();
    let (gy, digy) = (g.eval(&y)?, g.directional_derivative(vi)?.eval(&y)?);
    let (hx, dihx) = (h.eval(x)?, h.directional_derivative(vi)?.eval(x)?);
    if digy <= 0.0 || dihx <= 0.0 {
        return Ok(CheckResult::evaluated(-1.0, tol));
    }
    // compare gy/digy >= hx/dihx without dividing twice
    let (lhs, rhs) = (gy * dihx, hx * digy);
    Ok(CheckResult::evaluated(
        ratio(lhs - rhs, lhs.abs() + rhs.abs()),
        tol,
    ))
}

/// The inequalities a sweep can exercise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    Correlation,
    Trec,
    Post,
    Stepped,
    Fk1,
    Newton,
    Stayabove,
    Eng2,
}

impl Lemma {
    pub const ALL: [Lemma; 8] = [
        Lemma::Correlation,
        Lemma::Trec,
        Lemma::Post,
        Lemma::Stepped,
        Lemma::Fk1,
        Lemma::Newton,
        Lemma::Stayabove,
        Lemma::Eng2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Lemma::Correlation => "correlation",
            Lemma::Trec => "trec",
            Lemma::Post => "post",
            Lemma::Stepped => "stepped",
            Lemma::Fk1 => "fk1",
            Lemma::Newton => "newton",
            Lemma::Stayabove => "stayabove",
            Lemma::Eng2 => "eng2",
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lemma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Lemma::ALL
            .into_iter()
            .find(|l| l.name() == t)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown lemma `{s}`")))
    }
}

/// A random context together with the `(δ, μ, r)` drawn for the last two checks.
#[derive(Clone, Debug)]
pub struct RandomContext {
    pub ctx: PhiEtaContext,
    pub delta: f64,
    pub mu: f64,
    pub r: usize,
    /// Interior draws rejected before `x` was accepted.
    pub rejections: usize,
}

fn rank_one_generator(form: &FormSpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let gauss = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    };
    Ok(match *form {
        FormSpec::Product { n } | FormSpec::Elemsym { n, .. } => {
            let mut e = vec![0.0; n];
            e[rng.random_range(0..n)] = 1.0;
            e
        }
        FormSpec::Lorentz { n } => {
            let s = gauss(rng, n - 1);
            let norm = s.iter().map(|a| a * a).sum::<f64>().sqrt();
            std::iter::once(1.0)
                .chain(s.iter().map(|a| a / norm))
                .collect()
        }
        FormSpec::Symdet { n } => {
            let w = gauss(rng, n);
            let outer: Vec<f64> = (0..n * n).map(|t| w[t / n] * w[t % n]).collect();
            symdet_encode(n, &outer)
        }
        FormSpec::Custom { .. } => {
            return Err(Error::Unsupported(
                "random contexts for custom forms".into(),
            ))
        }
    })
}

/// A nonnegative combination of `1..=d` rank-one generators.
fn random_cone_vector(
    form: &HyperbolicForm,
    spec: &FormSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let count = rng.random_range(1..=form.degree());
    let scale = 0.2 + 1.8 * rng.random::<f64>();
    let mut out = vec![0.0; form.nvars()];
    for _ in 0..count {
        let g = rank_one_generator(spec, rng)?;
        let c: f64 = Exp1.sample(rng);
        out.iter_mut()
            .zip(&g)
            .for_each(|(a, b)| *a += scale * c * b);
    }
    Ok(out)
}

/// Draws `x = e + s p` with `λ_min(x) >= 0.1`, and `u`, `v` from rank-one generators.
pub fn random_context(form: &HyperbolicForm, spec: &FormSpec, seed: u64) -> Result<RandomContext> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = form.nvars();
    let mut rejections = 0;
    let x = loop {
        let s = 1.5 * rng.random::<f64>();
        let x: Vec<f64> = form
            .e()
            .iter()
            .map(|e| e + s * rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt())
            .collect();
        if form.lambda_min(&x)? >= INTERIOR_MARGIN {
            break x;
        }
        rejections += 1;
        if rejections > 10_000 {
            return Err(Error::Domain("could not draw an interior point".into()));
        }
    };
    // an occasional shared generator set makes u and v correlated
    let u = random_cone_vector(form, spec, &mut rng)?;
    let v = if rng.random_bool(0.2) {
        u.iter().map(|a| 0.5 * a).collect()
    } else {
        random_cone_vector(form, spec, &mut rng)?
    };
    let ctx = PhiEtaContext::new(form, &x, &u, &v)?;

    // (δ, μ) with μ up to h(x)/D_u h(x), drawn until it lies in U_r
    let r = ctx.rank.max(1) + rng.random_range(0..2usize);
    let xi = 1.0 / ctx.eta(1).max(f64::MIN_POSITIVE);
    let (mut delta, mut mu) = (2.0, xi);
    for _ in 0..200 {
        mu = xi * (0.05 + 0.95 * rng.random::<f64>());
        delta = 1.0 + 3.0 * rng.random::<f64>().powi(2);
        if in_U_r(delta, mu, Count::Finite(r as u64))? {
            break;
        }
    }
    Ok(RandomContext {
        ctx,
        delta,
        mu,
        r,
        rejections,
    })
}

/// Runs `lemma` over every admissible index on one context.
pub fn run_lemma(
    form: &HyperbolicForm,
    rc: &RandomContext,
    lemma: Lemma,
    tol: f64,
) -> Result<Vec<CheckResult>> {
    let ctx = &rc.ctx;
    let rank = ctx.rank();
    Ok(match lemma {
        Lemma::Correlation => (0..=rank + 1)
            .map(|k| check_correlation(ctx, k, tol))
            .collect(),
        Lemma::Trec => (1..=rank + 1).map(|k| check_trec(ctx, k, tol)).collect(),
        Lemma::Post => vec![check_post(ctx, tol)],
        Lemma::Stepped => (2..=rank).map(|k| check_stepped(ctx, k, tol)).collect(),
        Lemma::Fk1 => [rank, rank + 1]
            .into_iter()
            .filter(|&r| r >= 1)
            .flat_map(|r| (1..=r).map(move |k| (k, r)))
            .map(|(k, r)| check_fk1(ctx, k, r, tol))
            .collect(),
        Lemma::Newton => check_newton(ctx, tol),
        Lemma::Stayabove => {
            vec![check_stayabove(
                form,
                &ctx.x,
                &ctx.u,
                rc.delta,
                rc.mu,
                Count::Finite(rc.r as u64),
                tol,
            )?]
        }
        Lemma::Eng2 => {
            vec![check_eng2(
                form,
                &ctx.x,
                &ctx.u,
                &ctx.v,
                rc.delta,
                rc.mu,
                Count::Finite(rc.r as u64),
                tol,
            )?]
        }
    })
}

/// Counts for one lemma on one form family.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub checked: usize,
    pub passed: usize,
    pub vacuous: usize,
    pub failed: usize,
    pub skipped: usize,
    pub worst_slack: Option<f64>,
}

impl Summary {
    fn add(&mut self, c: &CheckResult) {
        match c.status {
            Status::Pass => self.passed += 1,
            Status::Vacuous => self.vacuous += 1,
            Status::Failed => self.failed += 1,
            Status::Skipped => {
                self.skipped += 1;
                return;
            }
        }
        self.checked += 1;
        if let Some(s) = c.slack {
            self.worst_slack = Some(self.worst_slack.map_or(s, |w| w.min(s)));
        }
    }

    fn merge(&mut self, o: &Summary) {
        self.checked += o.checked;
        self.passed += o.passed;
        self.vacuous += o.vacuous;
        self.failed += o.failed;
        self.skipped += o.skipped;
        self.worst_slack = match (self.worst_slack, o.worst_slack) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub lemma: Lemma,
    pub form: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub total: Summary,
    pub contexts: usize,
    pub rejections: usize,
    pub by_lemma: Vec<LemmaSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub forms: Vec<FormSpec>,
    pub lemmas: Vec<Lemma>,
    pub contexts: usize,
    pub seed: u64,
    pub tol: f64,
}

/// The built-in families swept by default.
pub fn default_families() -> Vec<FormSpec> {
    vec![
        FormSpec::Product { n: 3 },
        FormSpec::Lorentz { n: 3 },
        FormSpec::Symdet { n: 2 },
        FormSpec::Symdet { n: 3 },
        FormSpec::Elemsym { n: 4, k: 2 },
    ]
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            forms: default_families(),
            lemmas: Lemma::ALL.to_vec(),
            contexts: 200,
            seed: 0,
            tol: SLACK_TOL,
        }
    }
}

/// Seed of context `i` of family `f`; independent of the thread schedule.
fn context_seed(base: u64, family: usize, i: usize) -> u64 {
    base ^ (family as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (i as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

/// Runs every selected lemma on `contexts` random contexts per family.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let mut by_lemma = Vec::new();
    let mut total = Summary::default();
    let mut rejections = 0;
    for (fi, spec) in cfg.forms.iter().enumerate() {
        let form = HyperbolicForm::builtin(spec)?;
        let per_context = (0..cfg.contexts)
            .into_par_iter()
            .map(|i| {
                let rc = random_context(&form, spec, context_seed(cfg.seed, fi, i))?;
                let results = cfg
                    .lemmas
                    .iter()
                    .map(|&l| run_lemma(&form, &rc, l, cfg.tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok((rc.rejections, results))
            })
            .collect::<Result<Vec<_>>>()?;
        for (li, &lemma) in cfg.lemmas.iter().enumerate() {
            let mut s = Summary::default();
            for (_, results) in &per_context {
                results[li].iter().for_each(|c| s.add(c));
            }
            total.merge(&s);
            by_lemma.push(LemmaSummary {
                lemma,
                form: spec.label(),
                summary: s,
            });
        }
        rejections += per_context.iter().map(|(r, _)| r).sum::<usize>();
    }
    Ok(SweepReport {
        total,
        contexts: cfg.contexts * cfg.forms.len(),
        rejections,
        by_lemma,
    })
}
