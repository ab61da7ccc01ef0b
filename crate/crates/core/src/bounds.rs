//! The `U_r` feasibility region and the bound `δ(ε, m, r)`.
//!
//! `U_r` is the set of `(δ, μ) > 0` with
//!
//! ```text
//! δ - 1 >= (δ/μ) · ((1+x)^(r-1) - x^(r-1)) / ((1+x)^r - x^r),   x = δ/(rμ)
//! ```
//!
//! and either `μ > 1` or `1 <= δ <= 2, μ > 1 - δ/r`; `U_∞ = {μ >= δ/(δ-1)}`.
//! `δ(ε, m, r)` is the infimum over `U_r` of `(εμ + (1-1/m)δ) / (1-1/m + μ/m)`,
//! or of `εμ + δ` when `m = ∞`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive count that may be infinite; serialized as an integer or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CountRepr", into = "CountRepr")]
pub enum Count {
    Finite(u64),
    Infinite,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum CountRepr {
    Int(u64),
    Str(String),
}

impl TryFrom<CountRepr> for Count {
    type Error = String;

    fn try_from(r: CountRepr) -> std::result::Result<Self, String> {
        match r {
            CountRepr::Int(n) => Ok(Count::Finite(n)),
            CountRepr::Str(s) => s.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl From<Count> for CountRepr {
    fn from(c: Count) -> Self {
        match c {
            Count::Finite(n) => CountRepr::Int(n),
            Count::Infinite => CountRepr::Str("inf".into()),
        }
    }
}

impl FromStr for Count {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Count::Infinite),
            t => t.parse().map(Count::Finite).map_err(|_| {
                Error::InvalidParameter(format!("expected a count or \"inf\", got `{s}`"))
            }),
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Infinite => write!(f, "inf"),
        }
    }
}

impl Count {
    pub fn is_finite(&self) -> bool {
        matches!(self, Count::Finite(_))
    }

    /// `self * k`, with `∞ * k = ∞`.
    pub fn times(self, k: u64) -> Count {
        match self {
            Count::Finite(n) => Count::Finite(n * k),
            Count::Infinite => Count::Infinite,
        }
    }

    fn check_positive(self, name: &str) -> Result<()> {
        if self == Count::Finite(0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be at least 1"
            )));
        }
        Ok(())
    }
}

/// Parameters of `δ(ε, m, r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub eps: f64,
    pub m: Count,
    pub r: Count,
}

impl BoundQuery {
    pub fn new(eps: f64, m: Count, r: Count) -> Result<Self> {
        let q = Self { eps, m, r };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        self.m.check_positive("m")?;
        self.r.check_positive("r")
    }
}

/// `1 - q^k` for `q = x/(1+x)`, without cancellation for small `x`.
fn one_minus_qpow(x: f64, k: f64) -> f64 {
    -(-k * (1.0 / x).ln_1p()).exp_m1()
}

/// Right-hand side of the `U_r` master inequality.
pub fn dura_rhs(delta: f64, mu: f64, r: u64) -> f64 {
    if r <= 1 {
        return 0.0;
    }
    let x = delta / (r as f64 * mu);
    let r = r as f64;
    (delta / mu) * one_minus_qpow(x, r - 1.0) / ((1.0 + x) * one_minus_qpow(x, r))
}

fn check_point(delta: f64, mu: f64) -> Result<()> {
    if !(delta > 0.0 && mu > 0.0) || !delta.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "delta and mu must be positive, got ({delta}, {mu})"
        )));
    }
    Ok(())
}

/// Membership of `(δ, μ)` in `U_r`.
#[allow(non_snake_case)]
pub fn in_U_r(delta: f64, mu: f64, r: Count) -> Result<bool> {
    check_point(delta, mu)?;
    r.check_positive("r")?;
    Ok(match r {
        Count::Infinite => delta > 1.0 && mu >= delta / (delta - 1.0),
        Count::Finite(r) => {
            let dura = delta - 1.0 >= dura_rhs(delta, mu, r);
            let side = mu > 1.0 || ((1.0..=2.0).contains(&delta) && mu > 1.0 - delta / r as f64);
            dura && side
        }
    })
}

/// Which side condition of `U_r` the witness uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `μ > 1`.
    MuAboveOne,
    /// `1 <= δ <= 2` and `μ > 1 - δ/r`.
    DeltaAtMostTwo,
    /// `U_∞`.
    Infinite,
}

/// Search box and resolution of the numerical infimum.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchBox {
    pub delta_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Points of each of the log-spaced and uniform `δ` grids.
    pub grid: usize,
    /// Target `δ`-width of the final refinement bracket.
    pub refine_width: f64,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            delta_max: 8.0,
            mu_min: 1e-12,
            mu_max: 1e6,
            grid: 800,
            refine_width: 1e-7,
        }
    }
}

/// Box-boundary and fallback diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BoundFlags {
    pub mu_upper_hit: bool,
    pub mu_lower_hit: bool,
    pub delta_upper_hit: bool,
    /// The constraint was not monotone in μ on the probe grid somewhere.
    pub grid_fallback: bool,
}

/// A numerical infimum with its witness `(δ, μ) ∈ U_r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaBound {
    pub value: f64,
    pub delta: f64,
    pub mu: f64,
    pub branch: Branch,
    /// `δ`-width of the final refinement bracket.
    pub width: f64,
    pub flags: BoundFlags,
}

fn objective(q: &BoundQuery, delta: f64, mu: f64) -> f64 {
    match q.m {
        Count::Infinite => q.eps * mu + delta,
        Count::Finite(m) => {
            let m = m as f64;
            let b = 1.0 - 1.0 / m;
            (q.eps * mu + b * delta) / (b + mu / m)
        }
    }
}

/// Smallest feasible μ in `[lo, hi]` for fixed δ, or `None` if none.
///
/// The constraint is probed on a log grid first; a single infeasible-to-feasible
/// transition is refined by bisection. Anything else falls back to the first
/// grid cell after the last infeasible probe.
fn min_feasible_mu(delta: f64, r: Count, lo: f64, hi: f64, fallback: &mut bool) -> Option<f64> {
    let ok = |mu: f64| match r {
        Count::Infinite => mu >= delta / (delta - 1.0),
        Count::Finite(r) => delta - 1.0 >= dura_rhs(delta, mu, r),
    };
    if let Count::Infinite = r {
        let mu = (delta / (delta - 1.0)).max(lo);
        return (delta > 1.0 && mu <= hi).then_some(mu);
    }
    if ok(lo) {
        return Some(lo);
    }
    if !ok(hi) {
        return None;
    }
    const PROBES: usize = 48;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let probes: Vec<f64> = (0..=PROBES)
        .map(|i| (llo + (lhi - llo) * i as f64 / PROBES as f64).exp())
        .collect();
    let flags: Vec<bool> = probes.iter().map(|&mu| ok(mu)).collect();
    let changes = flags.windows(2).filter(|w| w[0] != w[1]).count();
    if changes != 1 {
        *fallback = true;
    }
    let last_bad = flags.iter().rposition(|f| !f).unwrap_or(0);
    let (mut a, mut b) = (probes[last_bad], probes[(last_bad + 1).min(PROBES)]);
    for _ in 0..200 {
        if b - a <= 1e-15 * b {
            break;
        }
        let mid = 0.5 * (a + b);
        if ok(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    Some(b)
}

/// Best `(value, μ, branch)` for fixed δ over both side-condition branches.
fn best_for_delta(
    q: &BoundQuery,
    bx: &SearchBox,
    delta: f64,
    flags: &mut BoundFlags,
) -> Option<(f64, f64, Branch)> {
    let increasing_in_mu = match q.m {
        Count::Infinite => true,
        Count::Finite(m) => delta <= m as f64 * q.eps,
    };
    let mut branches = Vec::with_capacity(2);
    match q.r {
        Count::Infinite => branches.push((bx.mu_min, Branch::Infinite)),
        Count::Finite(r) => {
            branches.push((1f64.next_up(), Branch::MuAboveOne));
            if (1.0..=2.0).contains(&delta) {
                let lo = (1.0 - delta / r as f64).max(0.0).next_up().max(bx.mu_min);
                branches.push((lo, Branch::DeltaAtMostTwo));
            }
        }
    }
    let mut best: Option<(f64, f64, Branch)> = None;
    for (lo, branch) in branches {
        let Some(mu_star) = min_feasible_mu(delta, q.r, lo, bx.mu_max, &mut flags.grid_fallback)
        else {
            continue;
        };
        let mu = if increasing_in_mu { mu_star } else { bx.mu_max };
        let v = objective(q, delta, mu);
        if best.is_none_or(|b| v < b.0) {
            best = Some((v, mu, branch));
        }
    }
    best
}

/// Numerical `δ(ε, m, r)` with the default search box.
pub fn delta_bound(q: &BoundQuery) -> Result<DeltaBound> {
    delta_bound_in(q, &SearchBox::default())
}

pub fn delta_bound_in(q: &BoundQuery, bx: &SearchBox) -> Result<DeltaBound> {
    q.validate()?;
    // the m = ∞ minimizer sits near δ = 1 + √ε; keep it well inside the box
    let delta_max = bx.delta_max.max(2.0 * (1.0 + q.eps.sqrt()).powi(2));

    let n = bx.grid.max(8);
    let mut grid: Vec<f64> = Vec::with_capacity(2 * n + 2);
    let (l0, l1) = (1e-9f64.ln(), (delta_max - 1.0).ln());
    grid.extend((0..n).map(|i| 1.0 + (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()));
    grid.extend((0..n).map(|i| 1.0 + (delta_max - 1.0) * i as f64 / (n - 1) as f64));
    grid.extend([1.0, 2.0]);
    if let Count::Finite(m) = q.m {
        let d = m as f64 * q.eps;
        if d > 1.0 && d < delta_max {
            grid.push(d);
        }
    }
    grid.retain(|&d| d <= delta_max);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let evals: Vec<(Option<(f64, f64, Branch)>, BoundFlags)> = grid
        .par_iter()
        .map(|&d| {
            let mut f = BoundFlags::default();
            (best_for_delta(q, bx, d, &mut f), f)
        })
        .collect();
    let mut flags = BoundFlags::default();
    flags.grid_fallback = evals.iter().any(|(_, f)| f.grid_fallback);

    let (imin, (mut value, mut mu, mut branch)) = evals
        .iter()
        .enumerate()
        .filter_map(|(i, (e, _))| e.map(|t| (i, t)))
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .ok_or_else(|| Error::EmptyFeasibleSet(format!("{q:?}")))?;
    let mut delta = grid[imin];

    // golden-section refinement between the neighbouring grid points
    let mut a = grid[imin.saturating_sub(1)];
    let mut b = grid[(imin + 1).min(grid.len() - 1)];
    let phi = |d: f64, fl: &mut BoundFlags| best_for_delta(q, bx, d, fl);
    const INV_GOLD: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_GOLD * (b - a);
    let mut d = a + INV_GOLD * (b - a);
    let val = |x: Option<(f64, f64, Branch)>| x.map_or(f64::INFINITY, |t| t.0);
    let mut fc = phi(c, &mut flags);
    let mut fd = phi(d, &mut flags);
    let target = bx.refine_width.min(1e-9);
    let mut iters = 0;
    while b - a > target * b && iters < 200 {
        iters += 1;
        if val(fc) < val(fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLD * (b - a);
            fc = phi(c, &mut flags);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLD * (b - a);
            fd = phi(d, &mut flags);
        }
        for (x, f) in [(c, fc), (d, fd)] {
            if let Some((v, m, br)) = f {
                if v < value {
                    (value, mu, branch, delta) = (v, m, br, x);
                }
            }
        }
    }

    if !in_U_r(delta, mu, q.r)? {
        return Err(Error::Domain(format!(
            "witness ({delta}, {mu}) escaped U_r for {q:?}"
        )));
    }
    flags.mu_upper_hit = mu >= bx.mu_max;
    flags.mu_lower_hit = mu <= bx.mu_min;
    flags.delta_upper_hit = delta >= delta_max;
    Ok(DeltaBound {
        value,
        delta,
        mu,
        branch,
        width: b - a,
        flags,
    })
}

/// Exact values for `(m finite, r = ∞)`, `(∞, ∞)` and `(∞, 2)`.
///
/// `Ok(None)` when no closed form is known for `(m, r)`. For finite `m` the
/// formula is the infimum only when `mε >= 1`; below that the infimum is `mε`
/// itself, so smaller `ε` is a domain error.
pub fn delta_closed_form(q: &BoundQuery) -> Result<Option<f64>> {
    q.validate()?;
    let eps = q.eps;
    match (q.m, q.r) {
        (Count::Finite(m), Count::Infinite) => {
            let m = m as f64;
            if m * eps < 1.0 {
                return Err(Error::Domain(format!(
                    "closed form needs eps >= 1/m, got eps={eps}, m={m}"
                )));
            }
            let b = 1.0 - 1.0 / m;
            Ok(Some((b + (eps - b / m).sqrt()).powi(2)))
        }
        (Count::Infinite, Count::Infinite) => Ok(Some((1.0 + eps.sqrt()).powi(2))),
        (Count::Infinite, Count::Finite(2)) => Ok(Some(if eps <= 0.5 {
            1.0 + 2.0 * (eps * (1.0 - eps)).sqrt()
        } else {
            2.0
        })),
        _ => Ok(None),
    }
}

/// Piecewise upper bound on `δ(ε, ∞, r)`; the `r = ∞` limit is `(1 + √ε)²`.
pub fn delta_upper_r(eps: f64, r: Count) -> f64 {
    match r {
        Count::Infinite => (1.0 + eps.sqrt()).powi(2),
        Count::Finite(r) => {
            let r = r as f64;
            if eps <= r / (r + 1.0) {
                1.0 + 2.0 * eps.sqrt() * (1.0 - eps / r).sqrt() + (r - 1.0) / r * eps
            } else {
                2.0 + eps * (1.0 - 2.0 / r)
            }
        }
    }
}

/// `(1 + √(rε))² / r`.
pub fn mss_bound(eps: f64, r: u64) -> f64 {
    let r = r as f64;
    (1.0 + (r * eps).sqrt()).powi(2) / r
}

/// `δ(kε, m, rk) / k`, with its witness.
pub fn partition_bound_detail(eps: f64, m: Count, r: Count, k: u64) -> Result<DeltaBound> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut d = delta_bound(&BoundQuery::new(k as f64 * eps, m, r.times(k))?)?;
    d.value /= k as f64;
    Ok(d)
}

pub fn partition_bound(eps: f64, m: Count, r: Count, k: u64) -> Result<f64> {
    Ok(partition_bound_detail(eps, m, r, k)?.value)
}
