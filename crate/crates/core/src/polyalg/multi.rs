use std::cmp::Ordering;
use std::fmt;

use super::{NeumaierSum, UniPoly, TAU_CLEAN};
use crate::error::{Error, Result};

/// Sparse multivariate polynomial with real coefficients.
///
/// Terms are stored flat: `exps` holds `nvars` exponents per term and the
/// term list is kept in lexicographic order of exponent tuples with no
/// duplicate tuples and no zero coefficients. That ordering is preserved by
/// partial differentiation, which lets the directional-derivative pass merge
/// sorted streams instead of hashing.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    exps: Vec<u16>,
    coeffs: Vec<f64>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            exps: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, [(vec![0u16; nvars], c)])
    }

    /// The coordinate polynomial `x_index`.
    pub fn var(nvars: usize, index: usize) -> Self {
        let mut e = vec![0u16; nvars];
        e[index] = 1;
        Self::from_terms(nvars, [(e, 1.0)])
    }

    /// Builds a polynomial from arbitrary (possibly repeated) terms.
    ///
    /// Panics if an exponent tuple has the wrong length.
    pub fn from_terms<E, I>(nvars: usize, terms: I) -> Self
    where
        E: AsRef<[u16]>,
        I: IntoIterator<Item = (E, f64)>,
    {
        let mut exps = Vec::new();
        let mut coeffs = Vec::new();
        for (e, c) in terms {
            let e = e.as_ref();
            assert_eq!(e.len(), nvars, "exponent tuple length must equal nvars");
            exps.extend_from_slice(e);
            coeffs.push(c);
        }
        let mut p = Self {
            nvars,
            exps,
            coeffs,
        };
        p.normalize();
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nterms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    fn exp(&self, i: usize) -> &[u16] {
        &self.exps[i * self.nvars..(i + 1) * self.nvars]
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u16], f64)> + '_ {
        (0..self.nterms()).map(move |i| (self.exp(i), self.coeffs[i]))
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms().map(|(e, _)| total(e)).max()
    }

    /// `Some(d)` when every term has total degree `d`.
    pub fn homogeneous_degree(&self) -> Result<Option<usize>> {
        let mut it = self.terms().map(|(e, _)| total(e));
        let Some(first) = it.next() else {
            return Ok(None);
        };
        let (mut lo, mut hi) = (first, first);
        for d in it {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo != hi {
            return Err(Error::NotHomogeneous { min: lo, max: hi });
        }
        Ok(Some(lo))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: len,
            });
        }
        Ok(())
    }

    /// Value at `x`, summed with Neumaier compensation over the terms.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let mut acc = NeumaierSum::default();
        for (e, c) in self.terms() {
            let mut m = c;
            for (xi, &a) in x.iter().zip(e) {
                if a > 0 {
                    m *= xi.powi(a as i32);
                }
            }
            acc.add(m);
        }
        Ok(acc.total())
    }

    /// `d/dx_k` as a sorted term stream scaled by `w`.
    fn partial_scaled(&self, k: usize, w: f64) -> Self {
        let mut exps = Vec::new();
        let mut coeffs = Vec::new();
        for (e, c) in self.terms() {
            let a = e[k];
            if a == 0 {
                continue;
            }
            let start = exps.len();
            exps.extend_from_slice(e);
            exps[start + k] -= 1;
            coeffs.push(c * f64::from(a) * w);
        }
        Self {
            nvars: self.nvars,
            exps,
            coeffs,
        }
    }

    pub fn partial(&self, k: usize) -> Result<Self> {
        if k >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.nvars,
            });
        }
        let mut p = self.partial_scaled(k, 1.0);
        p.clean();
        Ok(p)
    }

    /// `D_v p = sum_k v_k dp/dx_k`, computed exactly on the term list.
    pub fn directional_derivative(&self, v: &[f64]) -> Result<Self> {
        self.check_dim(v.len())?;
        let streams: Vec<Self> = v
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(k, &w)| self.partial_scaled(k, w))
            .collect();
        let mut out = merge_all(self.nvars, streams);
        out.clean();
        Ok(out)
    }

    /// `(1 - y D_v) p` in one pass.
    pub fn one_minus_derivative(&self, v: &[f64], y: f64) -> Result<Self> {
        self.check_dim(v.len())?;
        let mut streams = Vec::with_capacity(v.len() + 1);
        streams.push(self.clone());
        for (k, &w) in v.iter().enumerate() {
            if w != 0.0 && y != 0.0 {
                streams.push(self.partial_scaled(k, -y * w));
            }
        }
        let mut out = merge_all(self.nvars, streams);
        out.clean();
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = self.clone();
        p.coeffs.iter_mut().for_each(|c| *c *= s);
        p.clean();
        p
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.nvars)?;
        let mut out = merge_sorted(self, other);
        out.clean();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.nvars)?;
        let mut exps = Vec::with_capacity(self.nterms() * other.nterms() * self.nvars);
        let mut coeffs = Vec::with_capacity(self.nterms() * other.nterms());
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                exps.extend(a.iter().zip(b).map(|(x, y)| x + y));
                coeffs.push(ca * cb);
            }
        }
        let mut p = Self {
            nvars: self.nvars,
            exps,
            coeffs,
        };
        p.normalize();
        Ok(p)
    }

    /// Re-embeds the polynomial into `total` variables, its own variables
    /// occupying positions `offset..offset + nvars`.
    pub fn embed(&self, offset: usize, total: usize) -> Result<Self> {
        if offset + self.nvars > total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: offset + self.nvars,
            });
        }
        let terms = self.terms().map(|(e, c)| {
            let mut big = vec![0u16; total];
            big[offset..offset + self.nvars].copy_from_slice(e);
            (big, c)
        });
        Ok(Self::from_terms(total, terms.collect::<Vec<_>>()))
    }

    /// `t -> p(base + t * dir)`; the coefficient of `t^k` is `(D_dir^k p)(base) / k!`.
    pub fn restrict_to_line(&self, base: &[f64], dir: &[f64]) -> Result<UniPoly> {
        self.check_dim(base.len())?;
        self.check_dim(dir.len())?;
        let Some(deg) = self.degree() else {
            return Ok(UniPoly::zero());
        };
        let mut acc = vec![NeumaierSum::default(); deg + 1];

        if base.iter().all(|&b| b == 0.0) {
            for (e, c) in self.terms() {
                let mut m = c;
                for (d, &a) in dir.iter().zip(e) {
                    if a > 0 {
                        m *= d.powi(a as i32);
                    }
                }
                acc[total(e)].add(m);
            }
        } else {
            // powers[i][a] = (base_i + t dir_i)^a as dense ascending coefficients
            let mut max_exp = vec![0u16; self.nvars];
            for (e, _) in self.terms() {
                for (m, &a) in max_exp.iter_mut().zip(e) {
                    *m = (*m).max(a);
                }
            }
            let powers: Vec<Vec<Vec<f64>>> = (0..self.nvars)
                .map(|i| {
                    let mut table = vec![vec![1.0]];
                    for _ in 0..max_exp[i] {
                        let prev = table.last().unwrap();
                        table.push(mul_linear(prev, base[i], dir[i]));
                    }
                    table
                })
                .collect();
            let mut buf = Vec::with_capacity(deg + 1);
            for (e, c) in self.terms() {
                buf.clear();
                buf.push(c);
                for (i, &a) in e.iter().enumerate() {
                    if a > 0 {
                        buf = mul_dense(&buf, &powers[i][a as usize]);
                    }
                }
                for (k, v) in buf.iter().enumerate() {
                    acc[k].add(*v);
                }
            }
        }
        Ok(UniPoly::new(acc.into_iter().map(|s| s.total()).collect()))
    }

    /// Sorts terms, merges duplicates and applies the relative cleaning threshold.
    fn normalize(&mut self) {
        let n = self.nvars;
        let mut order: Vec<usize> = (0..self.coeffs.len()).collect();
        order.sort_by(|&a, &b| {
            cmp_exp(
                &self.exps[a * n..(a + 1) * n],
                &self.exps[b * n..(b + 1) * n],
            )
        });
        let mut exps: Vec<u16> = Vec::with_capacity(self.exps.len());
        let mut coeffs: Vec<f64> = Vec::with_capacity(self.coeffs.len());
        for i in order {
            let e = &self.exps[i * n..(i + 1) * n];
            let c = self.coeffs[i];
            if let Some(last) = coeffs.len().checked_sub(1) {
                if exps[last * n..(last + 1) * n] == *e {
                    coeffs[last] += c;
                    continue;
                }
            }
            exps.extend_from_slice(e);
            coeffs.push(c);
        }
        self.exps = exps;
        self.coeffs = coeffs;
        self.clean();
    }

    /// Drops terms with `|c| <= TAU_CLEAN * max|c|` (and exact zeros).
    fn clean(&mut self) {
        let thresh = TAU_CLEAN * self.max_abs_coeff();
        if self.coeffs.iter().all(|c| c.abs() > thresh) {
            return;
        }
        let n = self.nvars;
        let mut w = 0;
        for i in 0..self.coeffs.len() {
            if self.coeffs[i].abs() > thresh {
                if w != i {
                    self.coeffs[w] = self.coeffs[i];
                    self.exps.copy_within(i * n..(i + 1) * n, w * n);
                }
                w += 1;
            }
        }
        self.coeffs.truncate(w);
        self.exps.truncate(w * n);
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (v, &a) in e.iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "*x{}", v + 1)?,
                    _ => write!(f, "*x{}^{}", v + 1, a)?,
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn total(e: &[u16]) -> usize {
    e.iter().map(|&a| a as usize).sum()
}

#[inline]
fn cmp_exp(a: &[u16], b: &[u16]) -> Ordering {
    a.cmp(b)
}

fn mul_linear(p: &[f64], b: f64, d: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k] += c * b;
        out[k + 1] += c * d;
    }
    out
}

fn mul_dense(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Linear merge of two sorted term lists, adding coefficients on equal tuples.
fn merge_sorted(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let n = a.nvars;
    let mut exps = Vec::with_capacity(a.exps.len() + b.exps.len());
    let mut coeffs = Vec::with_capacity(a.nterms() + b.nterms());
    let (mut i, mut j) = (0, 0);
    while i < a.nterms() && j < b.nterms() {
        match cmp_exp(a.exp(i), b.exp(j)) {
            Ordering::Less => {
                exps.extend_from_slice(a.exp(i));
                coeffs.push(a.coeffs[i]);
                i += 1;
            }
            Ordering::Greater => {
                exps.extend_from_slice(b.exp(j));
                coeffs.push(b.coeffs[j]);
                j += 1;
            }
            Ordering::Equal => {
                let c = a.coeffs[i] + b.coeffs[j];
                if c != 0.0 {
                    exps.extend_from_slice(a.exp(i));
                    coeffs.push(c);
                }
                i += 1;
                j += 1;
            }
        }
    }
    exps.extend_from_slice(&a.exps[i * n..]);
    coeffs.extend_from_slice(&a.coeffs[i..]);
    exps.extend_from_slice(&b.exps[j * n..]);
    coeffs.extend_from_slice(&b.coeffs[j..]);
    MultiPoly {
        nvars: n,
        exps,
        coeffs,
    }
}

fn merge_all(nvars: usize, mut streams: Vec<MultiPoly>) -> MultiPoly {
    if streams.is_empty() {
        return MultiPoly::zero(nvars);
    }
    while streams.len() > 1 {
        let mut next = Vec::with_capacity(streams.len().div_ceil(2));
        let mut it = streams.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge_sorted(&a, &b)),
                None => next.push(a),
            }
        }
        streams = next;
    }
    streams.pop().unwrap()
}
