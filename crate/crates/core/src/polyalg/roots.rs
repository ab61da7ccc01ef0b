//! Real roots of univariate polynomials.
//!
//! Roots come from the eigenvalues of the balanced companion matrix, then
//! get polished by Newton steps. A `k`-fold real root shows up in floating
//! point as a small ring of `k` eigenvalues whose radius grows like
//! `eps^(1/k)`, so a fixed bound on imaginary parts would reject exactly the
//! polynomials with repeated eigenvalues that hyperbolic forms produce all
//! the time. Non-real eigenvalues are therefore grouped into clusters and a
//! cluster is accepted as a multiple real root when the Taylor coefficients
//! of `q` at its (real) centre below the cluster size vanish to within the
//! tolerance, i.e. when a relative coefficient perturbation of size `tol`
//! makes the cluster an exact real root.

use nalgebra::{DMatrix, Schur};

use super::UniPoly;
use crate::error::{Error, Result};

/// Default relative real-rootedness tolerance.
pub const DEFAULT_REAL_TOL: f64 = 1e-7;

/// Roots classified by the companion-matrix analysis.
#[derive(Clone, Debug, Default)]
pub struct RootAnalysis {
    /// Real roots with multiplicity, descending.
    pub real: Vec<f64>,
    /// Eigenvalues (re, im) that could not be certified real.
    pub nonreal: Vec<(f64, f64)>,
}

impl RootAnalysis {
    pub fn is_real_rooted(&self) -> bool {
        self.nonreal.is_empty()
    }
}

/// Full classification of the roots of a nonzero polynomial.
pub fn analyze_roots(q: &UniPoly, tol: f64) -> Result<RootAnalysis> {
    let Some(deg) = q.degree() else {
        return Err(Error::ZeroPolynomial);
    };
    if deg == 0 {
        return Ok(RootAnalysis::default());
    }
    let (q, _) = q.normalized();
    let c = q.coeffs();

    // exact zero roots from vanishing low-order coefficients
    let zeros = c.iter().take_while(|&&x| x == 0.0).count();
    let reduced = UniPoly::new(c[zeros..].to_vec());
    let mut real = vec![0.0; zeros];
    let mut nonreal = Vec::new();

    match reduced.degree().unwrap_or(0) {
        0 => {}
        1 => {
            let r = reduced.coeffs();
            real.push(-r[0] / r[1]);
        }
        _ => {
            let eig = companion_eigenvalues(&reduced)?;
            classify(&reduced, &eig, tol, &mut real, &mut nonreal);
        }
    }
    real.sort_by(|a, b| b.total_cmp(a));
    Ok(RootAnalysis { real, nonreal })
}

/// All real roots with multiplicity, descending. Non-real roots are omitted.
pub fn real_roots(q: &UniPoly, tol: f64) -> Result<Vec<f64>> {
    Ok(analyze_roots(q, tol)?.real)
}

/// True when every root is real within `tol`; the zero polynomial counts as real-rooted.
pub fn is_real_rooted(q: &UniPoly, tol: f64) -> bool {
    if q.is_zero() {
        return true;
    }
    analyze_roots(q, tol)
        .map(|a| a.is_real_rooted())
        .unwrap_or(false)
}

/// Largest root of a real-rooted polynomial of degree at least one.
pub fn largest_root(q: &UniPoly) -> Result<f64> {
    largest_root_tol(q, DEFAULT_REAL_TOL)
}

pub fn largest_root_tol(q: &UniPoly, tol: f64) -> Result<f64> {
    match q.degree() {
        None => return Err(Error::ZeroPolynomial),
        Some(0) => return Err(Error::ConstantPolynomial),
        _ => {}
    }
    let a = analyze_roots(q, tol)?;
    if !a.is_real_rooted() {
        return Err(Error::NotRealRooted {
            coeffs: q.coeffs().to_vec(),
            tol,
        });
    }
    Ok(a.real[0])
}

fn companion_eigenvalues(q: &UniPoly) -> Result<Vec<(f64, f64)>> {
    let c = q.coeffs();
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut m);
    let schur = Schur::try_new(m, f64::EPSILON, 10_000).ok_or_else(|| Error::NotRealRooted {
        coeffs: c.to_vec(),
        tol: 0.0,
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect())
}

fn classify(
    q: &UniPoly,
    eig: &[(f64, f64)],
    tol: f64,
    real: &mut Vec<f64>,
    nonreal: &mut Vec<(f64, f64)>,
) {
    let n = eig.len();
    let modulus = |z: (f64, f64)| z.0.hypot(z.1);
    let is_real = |z: (f64, f64)| z.1.abs() <= tol * (1.0 + modulus(z));

    // single-linkage clustering seeded by the non-real eigenvalues
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        if is_real(eig[i]) {
            continue;
        }
        let reach = 2.5 * eig[i].1.abs() + tol * (1.0 + modulus(eig[i]));
        for j in 0..n {
            if j != i && (eig[i].0 - eig[j].0).hypot(eig[i].1 - eig[j].1) <= reach {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        clusters[r].push(i);
    }

    let mut singles = Vec::new();
    for members in clusters.into_iter().filter(|c| !c.is_empty()) {
        if members.len() == 1 && is_real(eig[members[0]]) {
            singles.push(eig[members[0]].0);
            continue;
        }
        let k = members.len();
        let re = members.iter().map(|&i| eig[i].0).sum::<f64>() / k as f64;
        let im = members.iter().map(|&i| eig[i].1).sum::<f64>() / k as f64;
        let centre = polish(q, re, k - 1);
        if im.abs() <= tol.sqrt() * (1.0 + re.abs()) && vanishes_to_order(q, centre, k, tol) {
            real.extend(std::iter::repeat_n(centre, k));
        } else {
            // the cluster is not a multiple root; its real members stand alone
            for &i in &members {
                if is_real(eig[i]) {
                    real.push(polish(q, eig[i].0, 0));
                } else {
                    nonreal.push(eig[i]);
                }
            }
        }
    }
    merge_real_runs(q, singles, real);
}

/// Run of real eigenvalues accepted as one multiple root only at rounding level.
const MERGE_TOL: f64 = 1e-14;
/// Largest relative gap inside a candidate run.
const MERGE_GAP: f64 = 1e-6;

/// A multiple root may also split into several real eigenvalues, each of
/// which Newton on `q` alone cannot improve. Close runs whose centre is a
/// root of the right order are replaced by the centre polished on the
/// matching derivative.
fn merge_real_runs(q: &UniPoly, mut xs: Vec<f64>, real: &mut Vec<f64>) {
    xs.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < xs.len() {
        let mut j = i + 1;
        while j < xs.len() && xs[j] - xs[j - 1] <= MERGE_GAP * (1.0 + xs[j].abs()) {
            j += 1;
        }
        let k = j - i;
        if k > 1 {
            let mean = xs[i..j].iter().sum::<f64>() / k as f64;
            let centre = polish(q, mean, k - 1);
            if (centre - mean).abs() <= MERGE_GAP * (1.0 + mean.abs())
                && vanishes_to_order(q, centre, k, MERGE_TOL)
            {
                real.extend(std::iter::repeat_n(centre, k));
                i = j;
                continue;
            }
        }
        real.extend(xs[i..j].iter().map(|&x| polish(q, x, 0)));
        i = j;
    }
}

/// Taylor coefficients of `q` at `c` below degree `k` are negligible.
fn vanishes_to_order(q: &UniPoly, c: f64, k: usize, tol: f64) -> bool {
    let shifted = q.shifted_coeffs(c);
    let scale = q.abs_scale(1.0 + c.abs());
    shifted.iter().take(k).all(|b| b.abs() <= tol * scale)
}

/// Newton on the `order`-th derivative, which has a simple root at a root of multiplicity `order + 1`.
fn polish(q: &UniPoly, x0: f64, order: usize) -> f64 {
    let f = q.nth_derivative(order);
    let df = f.derivative();
    if df.is_zero() {
        return x0;
    }
    let mut x = x0;
    let mut fx = f.eval(x).abs();
    for _ in 0..12 {
        let d = df.eval(x);
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let cand = x - f.eval(x) / d;
        let fc = f.eval(cand).abs();
        if !(fc < fx) {
            break;
        }
        x = cand;
        fx = fc;
    }
    x
}
