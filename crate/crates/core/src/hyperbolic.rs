//! Hyperbolic forms and their spectral functionals.
//!
//! The eigenvalues of `x` with respect to `(h, e)` are the roots of
//! `t -> h(t e - x)`; trace, rank and spectral norm are defined from them
//! exactly as for symmetric matrices. The norm is only a seminorm when the
//! lineality space of the cone is nontrivial; that case is not detected.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::{analyze_roots, is_real_rooted, MultiPoly, UniPoly, DEFAULT_REAL_TOL};

/// Relative factor for deciding that an eigenvalue is zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Random directions used to certify a custom form.
pub const DEFAULT_CERTIFICATE_SAMPLES: usize = 200;

/// JSON-level description of a form.
///
/// `symdet` uses `n(n+1)/2` coordinates: first the `n` diagonal entries,
/// then the entries `(i, j)` with `i < j` in row-major order. Each
/// off-diagonal coordinate fills both mirror positions of the matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FormSpec {
    Product {
        n: usize,
    },
    Symdet {
        n: usize,
    },
    Lorentz {
        n: usize,
    },
    Elemsym {
        n: usize,
        k: usize,
    },
    Custom {
        terms: Vec<(Vec<u16>, f64)>,
        e: Vec<f64>,
    },
}

impl FormSpec {
    /// Parses the shorthand `product:3`, `symdet:2`, `lorentz:3`, `elemsym:4:2`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .and_then(|p| p.trim().parse().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("malformed form shorthand `{s}`")))
        };
        match (parts[0], parts.len()) {
            ("product", 2) => Ok(Self::Product { n: num(1)? }),
            ("symdet", 2) => Ok(Self::Symdet { n: num(1)? }),
            ("lorentz", 2) => Ok(Self::Lorentz { n: num(1)? }),
            ("elemsym", 3) => Ok(Self::Elemsym {
                n: num(1)?,
                k: num(2)?,
            }),
            _ => Err(Error::InvalidParameter(format!(
                "unknown form shorthand `{s}`"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Product { n } => format!("product({n})"),
            Self::Symdet { n } => format!("symdet({n})"),
            Self::Lorentz { n } => format!("lorentz({n})"),
            Self::Elemsym { n, k } => format!("elemsym({n},{k})"),
            Self::Custom { e, .. } => format!("custom(n={})", e.len()),
        }
    }
}

/// A homogeneous polynomial together with a hyperbolicity direction.
#[derive(Clone, Debug)]
pub struct HyperbolicForm {
    poly: MultiPoly,
    e: Vec<f64>,
    he: f64,
    degree: usize,
    real_tol: f64,
    rank_tol: f64,
}

impl HyperbolicForm {
    /// Checks homogeneity and `h(e) != 0`; hyperbolicity is taken on trust.
    pub fn new(poly: MultiPoly, e: Vec<f64>) -> Result<Self> {
        if e.len() != poly.nvars() {
            return Err(Error::DimensionMismatch {
                expected: poly.nvars(),
                got: e.len(),
            });
        }
        let degree = poly
            .homogeneous_degree()?
            .ok_or(Error::DegenerateDirection)?;
        let he = poly.eval(&e)?;
        if he == 0.0 || !he.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        Ok(Self {
            poly,
            e,
            he,
            degree,
            real_tol: DEFAULT_REAL_TOL,
            rank_tol: DEFAULT_RANK_TOL,
        })
    }

    /// Like [`HyperbolicForm::new`] plus a sampled hyperbolicity certificate.
    pub fn certified(poly: MultiPoly, e: Vec<f64>, samples: usize, seed: u64) -> Result<Self> {
        let f = Self::new(poly, e)?;
        f.certify(samples, seed)?;
        Ok(f)
    }

    pub fn builtin(spec: &FormSpec) -> Result<Self> {
        match spec {
            FormSpec::Product { n } => product(*n),
            FormSpec::Symdet { n } => symdet(*n),
            FormSpec::Lorentz { n } => lorentz(*n),
            FormSpec::Elemsym { n, k } => elemsym(*n, *k),
            FormSpec::Custom { terms, e } => {
                let n = e.len();
                if let Some((bad, _)) = terms.iter().find(|(x, _)| x.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: bad.len(),
                    });
                }
                let poly = MultiPoly::from_terms(n, terms.iter().map(|(x, c)| (x.as_slice(), *c)));
                Self::certified(poly, e.clone(), DEFAULT_CERTIFICATE_SAMPLES, 0x5eed)
            }
        }
    }

    pub fn with_tolerances(mut self, real_tol: f64, rank_tol: f64) -> Self {
        self.real_tol = real_tol;
        self.rank_tol = rank_tol;
        self
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn he(&self) -> f64 {
        self.he
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.poly.nvars()
    }

    pub fn real_tol(&self) -> f64 {
        self.real_tol
    }

    /// Real-rootedness of `t -> h(t e - x)` along random Gaussian `x`.
    pub fn certify(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.nvars())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let q = self.char_poly(&x)?;
            if !is_real_rooted(&q, self.real_tol) {
                return Err(Error::NotHyperbolic { witness: x });
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.nvars(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Monic `t -> h(t e - x) / h(e)`.
    pub fn char_poly(&self, x: &[f64]) -> Result<UniPoly> {
        self.check_dim(x)?;
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        Ok(self
            .poly
            .restrict_to_line(&neg, &self.e)?
            .scale(1.0 / self.he))
    }

    /// The `d` eigenvalues of `x`, descending, with multiplicity.
    pub fn eigenvalues(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = self.char_poly(x)?;
        if q.degree() != Some(self.degree) {
            // leading coefficient is exactly 1 after scaling, so this is a genuine failure
            return Err(Error::NotRealRooted {
                coeffs: q.coeffs().to_vec(),
                tol: self.real_tol,
            });
        }
        let a = analyze_roots(&q, self.real_tol)?;
        if !a.is_real_rooted() || a.real.len() != self.degree {
            return Err(Error::NotRealRooted {
                coeffs: q.coeffs().to_vec(),
                tol: self.real_tol,
            });
        }
        // spot-check the factorization away from the roots
        let t = 1.0 + a.real.iter().fold(0.0f64, |m, r| m.max(r.abs())) * 1.618;
        let lhs = q.eval(t);
        let rhs: f64 = a.real.iter().map(|r| t - r).product();
        if (lhs - rhs).abs() > 1e-8 * q.abs_scale(t).max(rhs.abs()) {
            return Err(Error::NotRealRooted {
                coeffs: q.coeffs().to_vec(),
                tol: self.real_tol,
            });
        }
        Ok(a.real)
    }

    pub fn lambda_max(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eigenvalues(x)?[0])
    }

    pub fn lambda_min(&self, x: &[f64]) -> Result<f64> {
        Ok(*self.eigenvalues(x)?.last().unwrap())
    }

    /// Sum of eigenvalues.
    pub fn trace(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eigenvalues(x)?.iter().sum())
    }

    /// `D_x h(e) / h(e)`, the linear route to the trace.
    pub fn trace_via_derivative(&self, x: &[f64]) -> Result<f64> {
        Ok(self.poly.directional_derivative(x)?.eval(&self.e)? / self.he)
    }

    pub fn spectral_norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eigenvalues(x)?.iter().fold(0.0, |m, l| m.max(l.abs())))
    }

    fn rank_from_eigs(&self, eig: &[f64]) -> usize {
        let norm = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let thresh = self.rank_tol * norm.max(1.0);
        eig.iter().filter(|l| l.abs() > thresh).count()
    }

    /// `deg_t h(e - t x)`, i.e. the largest `k` with `D_x^k h(e) != 0`.
    pub fn rank_via_derivatives(&self, x: &[f64]) -> Result<usize> {
        self.check_dim(x)?;
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        Ok(self
            .poly
            .restrict_to_line(&self.e, &neg)?
            .degree()
            .unwrap_or(0))
    }

    /// Number of nonzero eigenvalues, cross-checked against the derivative degree.
    pub fn rank(&self, x: &[f64]) -> Result<usize> {
        let eig = self.eigenvalues(x)?;
        let by_eigenvalues = self.rank_from_eigs(&eig);
        let by_derivatives = self.rank_via_derivatives(x)?;
        if by_eigenvalues != by_derivatives {
            return Err(Error::RankDisagreement {
                by_eigenvalues,
                by_derivatives,
            });
        }
        Ok(by_eigenvalues)
    }

    /// Open (`lambda_min > tol`) or closed (`lambda_min >= -tol`) cone membership.
    pub fn in_cone(&self, x: &[f64], closed: bool, tol: f64) -> Result<bool> {
        let lmin = self.lambda_min(x)?;
        Ok(if closed { lmin >= -tol } else { lmin > tol })
    }

    /// Validates closed-cone membership and caches the spectral data.
    pub fn cone_vector(&self, x: &[f64]) -> Result<ConeVector> {
        let eigs = self.eigenvalues(x)?;
        let lmin = *eigs.last().unwrap();
        let norm = eigs.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        if lmin < -self.rank_tol * norm {
            return Err(Error::OutsideCone {
                index: 0,
                lambda_min: lmin,
            });
        }
        let trace: f64 = eigs.iter().sum();
        let linear = self.trace_via_derivative(x)?;
        if (trace - linear).abs() > 1e-9 * trace.abs().max(1.0) {
            return Err(Error::NotRealRooted {
                coeffs: self.char_poly(x)?.coeffs().to_vec(),
                tol: self.real_tol,
            });
        }
        let rank = self.rank(x)?;
        Ok(ConeVector {
            coords: x.to_vec(),
            eigs,
            trace,
            rank,
        })
    }

    /// `g(x^1, ..., x^k) = h(x^1) ... h(x^k)` with direction `e (+) ... (+) e`.
    pub fn product_form(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("product_form needs k >= 1".into()));
        }
        let n = self.nvars();
        let total = n * k;
        let mut g = self.poly.embed(0, total)?;
        for p in 1..k {
            g = g.mul(&self.poly.embed(p * n, total)?)?;
        }
        let e = self.e.repeat(k);
        let mut f = Self::new(g, e)?;
        f.real_tol = self.real_tol;
        f.rank_tol = self.rank_tol;
        Ok(f)
    }
}

/// A point of the closed cone with its spectrum computed once.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeVector {
    pub coords: Vec<f64>,
    /// Descending.
    pub eigs: Vec<f64>,
    pub trace: f64,
    pub rank: usize,
}

impl ConeVector {
    pub fn lambda_max(&self) -> f64 {
        self.eigs[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigs.last().unwrap()
    }

    pub fn norm(&self) -> f64 {
        self.eigs.iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

/// Places `x` in block `block` (0-based) of the `k`-fold variable space.
pub fn embed_block(x: &[f64], block: usize, k: usize) -> Result<Vec<f64>> {
    if block >= k {
        return Err(Error::IndexOutOfRange {
            index: block,
            len: k,
        });
    }
    let n = x.len();
    let mut out = vec![0.0; n * k];
    out[block * n..(block + 1) * n].copy_from_slice(x);
    Ok(out)
}

fn product(n: usize) -> Result<HyperbolicForm> {
    if n == 0 {
        return Err(Error::InvalidParameter("product form needs n >= 1".into()));
    }
    HyperbolicForm::new(
        MultiPoly::from_terms(n, [(vec![1u16; n], 1.0)]),
        vec![1.0; n],
    )
}

fn lorentz(n: usize) -> Result<HyperbolicForm> {
    if n < 2 {
        return Err(Error::InvalidParameter("lorentz form needs n >= 2".into()));
    }
    let terms = (0..n).map(|i| {
        let mut e = vec![0u16; n];
        e[i] = 2;
        (e, if i == 0 { 1.0 } else { -1.0 })
    });
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    HyperbolicForm::new(MultiPoly::from_terms(n, terms.collect::<Vec<_>>()), e)
}

fn elemsym(n: usize, k: usize) -> Result<HyperbolicForm> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "elemsym needs 1 <= k <= n, got n={n}, k={k}"
        )));
    }
    let mut terms = Vec::new();
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let mut e = vec![0u16; n];
        for &i in &subset {
            e[i] = 1;
        }
        terms.push((e, 1.0));
        // next k-subset in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| subset[i] < n - k + i) else {
            break;
        };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
    HyperbolicForm::new(MultiPoly::from_terms(n, terms), vec![1.0; n])
}

/// Number of coordinates used by `symdet(n)`.
pub fn symdet_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Coordinate index of matrix entry `(i, j)` in the `symdet(n)` layout.
pub fn symdet_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        return i;
    }
    // off-diagonal entries of rows before i, then offset within row i
    n + i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Encodes a symmetric matrix (row-major, `n*n` entries) in the `symdet(n)` layout.
pub fn symdet_encode(n: usize, m: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; symdet_dim(n)];
    for i in 0..n {
        for j in i..n {
            out[symdet_index(n, i, j)] = m[i * n + j];
        }
    }
    out
}

/// Inverse of [`symdet_encode`].
pub fn symdet_decode(n: usize, x: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = x[symdet_index(n, i, j)];
        }
    }
    m
}

fn symdet(n: usize) -> Result<HyperbolicForm> {
    if n == 0 {
        return Err(Error::InvalidParameter("symdet needs n >= 1".into()));
    }
    let dim = symdet_dim(n);
    let mut terms = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, 1.0, &mut |p, sign| {
        let mut e = vec![0u16; dim];
        for (i, &j) in p.iter().enumerate() {
            e[symdet_index(n, i, j)] += 1;
        }
        terms.push((e, sign));
    });
    let mut e = vec![0.0; dim];
    e[..n].fill(1.0);
    HyperbolicForm::new(MultiPoly::from_terms(dim, terms), e)
}

fn permutations(p: &mut Vec<usize>, start: usize, sign: f64, f: &mut impl FnMut(&[usize], f64)) {
    if start == p.len() {
        f(p, sign);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, if i == start { sign } else { -sign }, f);
        p.swap(start, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn builtin_polys() {
        let p = HyperbolicForm::builtin(&FormSpec::Product { n: 3 }).unwrap();
        assert_eq!(p.poly(), &MultiPoly::from_terms(3, [([1u16, 1, 1], 1.0)]));
        assert_eq!(p.e(), &[1.0, 1.0, 1.0]);

        let l = HyperbolicForm::builtin(&FormSpec::Lorentz { n: 3 }).unwrap();
        assert_eq!(l.e(), &[1.0, 0.0, 0.0]);
        assert_eq!(l.poly().eval(&[3.0, 1.0, 2.0]).unwrap(), 4.0);

        let s = HyperbolicForm::builtin(&FormSpec::Symdet { n: 2 }).unwrap();
        assert_eq!(s.e(), &[1.0, 1.0, 0.0]);
        // x11 x22 - x12^2
        assert_eq!(
            s.poly(),
            &MultiPoly::from_terms(3, [([1u16, 1, 0], 1.0), ([0, 0, 2], -1.0)])
        );

        let s3 = HyperbolicForm::builtin(&FormSpec::Symdet { n: 3 }).unwrap();
        assert_eq!(s3.poly().nterms(), 5);
        assert_eq!(s3.he(), 1.0);

        let es = HyperbolicForm::builtin(&FormSpec::Elemsym { n: 4, k: 2 }).unwrap();
        assert_eq!(es.poly().nterms(), 6);
        assert_eq!(es.he(), 6.0);
    }

    #[test]
    fn symdet_layout() {
        assert_eq!(symdet_index(3, 0, 1), 3);
        assert_eq!(symdet_index(3, 0, 2), 4);
        assert_eq!(symdet_index(3, 2, 1), 5);
        let m = [1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0];
        let x = symdet_encode(3, &m);
        assert_eq!(x, vec![1.0, 4.0, 6.0, 2.0, 3.0, 5.0]);
        assert_eq!(symdet_decode(3, &x), m.to_vec());
    }

    #[test]
    fn eigenvalue_examples() {
        let p = HyperbolicForm::builtin(&FormSpec::Product { n: 3 }).unwrap();
        assert!(close(
            &p.eigenvalues(&[1.0, 2.0, 3.0]).unwrap(),
            &[3.0, 2.0, 1.0],
            1e-12
        ));

        let l = HyperbolicForm::builtin(&FormSpec::Lorentz { n: 3 }).unwrap();
        let r2 = 2f64.sqrt();
        assert!(close(
            &l.eigenvalues(&[2.0, 1.0, 1.0]).unwrap(),
            &[2.0 + r2, 2.0 - r2],
            1e-12
        ));

        let s = HyperbolicForm::builtin(&FormSpec::Symdet { n: 2 }).unwrap();
        assert!(close(
            &s.eigenvalues(&[2.0, 5.0, 0.0]).unwrap(),
            &[5.0, 2.0],
            1e-12
        ));
    }

    #[test]
    fn trace_and_norm() {
        let p = HyperbolicForm::builtin(&FormSpec::Product { n: 3 }).unwrap();
        assert!((p.trace(&[0.5, -2.0, 4.0]).unwrap() - 2.5).abs() < 1e-12);
        let l = HyperbolicForm::builtin(&FormSpec::Lorentz { n: 3 }).unwrap();
        assert!((l.trace(&[2.0, 1.0, 1.0]).unwrap() - 4.0).abs() < 1e-12);
        assert!((l.trace_via_derivative(&[2.0, 1.0, 1.0]).unwrap() - 4.0).abs() < 1e-12);
        assert!((l.spectral_norm(&[2.0, 1.0, 1.0]).unwrap() - (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn rank_examples() {
        let l = HyperbolicForm::builtin(&FormSpec::Lorentz { n: 3 }).unwrap();
        assert_eq!(l.rank(&[1.0, 1.0, 0.0]).unwrap(), 1);
        assert!(close(
            &l.eigenvalues(&[1.0, 1.0, 0.0]).unwrap(),
            &[2.0, 0.0],
            1e-12
        ));
        let p = HyperbolicForm::builtin(&FormSpec::Product { n: 3 }).unwrap();
        assert_eq!(p.rank(&[1.0, 1.0, 0.0]).unwrap(), 2);
        assert_eq!(p.rank(&[0.0, 0.0, 0.0]).unwrap(), 0);
        assert_eq!(l.rank(&[0.0, 0.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn cone_membership() {
        let p = HyperbolicForm::builtin(&FormSpec::Product { n: 3 }).unwrap();
        assert!(p.in_cone(&[1.0, 2.0, 3.0], false, 1e-9).unwrap());
        let l = HyperbolicForm::builtin(&FormSpec::Lorentz { n: 3 }).unwrap();
        assert!(l.in_cone(&[1.0, 1.0, 0.0], true, 1e-9).unwrap());
        assert!(!l.in_cone(&[1.0, 1.0, 0.0], false, 1e-9).unwrap());
        assert!(!l.in_cone(&[1.0, 2.0, 0.0], true, 1e-9).unwrap());
        assert!(matches!(
            l.cone_vector(&[1.0, 2.0, 0.0]),
            Err(Error::OutsideCone { .. })
        ));
        let cv = l.cone_vector(&[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(cv.rank, 1);
        assert!((cv.trace - 2.0).abs() < 1e-12);
    }

    #[test]
    fn product_form_and_blocks() {
        let p2 = HyperbolicForm::builtin(&FormSpec::Product { n: 2 }).unwrap();
        let g = p2.product_form(2).unwrap();
        assert_eq!(
            g.poly(),
            &MultiPoly::from_terms(4, [([1u16, 1, 1, 1], 1.0)])
        );
        assert_eq!(g.e(), &[1.0; 4]);

        assert_eq!(
            embed_block(&[1.0, 2.0], 0, 2).unwrap(),
            vec![1.0, 2.0, 0.0, 0.0]
        );
        assert_eq!(
            embed_block(&[1.0, 2.0], 1, 2).unwrap(),
            vec![0.0, 0.0, 1.0, 2.0]
        );
        assert!(matches!(
            embed_block(&[1.0], 2, 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));

        let l = HyperbolicForm::builtin(&FormSpec::Lorentz { n: 3 }).unwrap();
        let g = l.product_form(3).unwrap();
        let u = [2.0, 1.0, 1.0];
        let sum: Vec<f64> = (0..3)
            .map(|b| embed_block(&u, b, 3).unwrap())
            .fold(vec![0.0; 9], |acc, v| {
                acc.iter().zip(&v).map(|(a, b)| a + b).collect()
            });
        let eig = g.eigenvalues(&sum).unwrap();
        let r2 = 2f64.sqrt();
        assert!(
            close(
                &eig,
                &[2.0 + r2, 2.0 + r2, 2.0 + r2, 2.0 - r2, 2.0 - r2, 2.0 - r2],
                1e-7
            ),
            "{eig:?}"
        );
        assert!((g.trace(&sum).unwrap() - 3.0 * l.trace(&u).unwrap()).abs() < 1e-9);
        assert_eq!(g.rank(&sum).unwrap(), 3 * l.rank(&u).unwrap());
    }

    #[test]
    fn custom_forms() {
        let spec = FormSpec::Custom {
            terms: vec![(vec![2, 0], 1.0), (vec![0, 2], -1.0)],
            e: vec![1.0, 0.0],
        };
        assert!(HyperbolicForm::builtin(&spec).is_ok());

        // x1^2 + x2^2 is not hyperbolic in any direction
        let bad = FormSpec::Custom {
            terms: vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)],
            e: vec![1.0, 0.0],
        };
        assert!(matches!(
            HyperbolicForm::builtin(&bad),
            Err(Error::NotHyperbolic { .. })
        ));

        let degenerate = FormSpec::Custom {
            terms: vec![(vec![1, 1], 1.0)],
            e: vec![1.0, 0.0],
        };
        assert!(matches!(
            HyperbolicForm::builtin(&degenerate),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn form_spec_json() {
        let s: FormSpec = serde_json::from_str(r#"{"kind":"elemsym","n":4,"k":2}"#).unwrap();
        assert_eq!(s, FormSpec::Elemsym { n: 4, k: 2 });
        let c: FormSpec =
            serde_json::from_str(r#"{"kind":"custom","terms":[[[1,1],1.0]],"e":[1,1]}"#).unwrap();
        assert_eq!(
            c,
            FormSpec::Custom {
                terms: vec![(vec![1, 1], 1.0)],
                e: vec![1.0, 1.0]
            }
        );
        assert_eq!(
            FormSpec::parse_short("elemsym:4:2").unwrap(),
            FormSpec::Elemsym { n: 4, k: 2 }
        );
        assert!(FormSpec::parse_short("cube:3").is_err());
    }
}
