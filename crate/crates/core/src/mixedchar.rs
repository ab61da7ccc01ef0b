//! Mixed hyperbolic polynomials and the mixed characteristic polynomial.
//!
//! `∏ (1 - D_{w_j}) h` is built by `m` sequential operator passes in the
//! x-variables, so its size never exceeds the monomial count of `h`.

use crate::error::{Error, Result};
use crate::hyperbolic::HyperbolicForm;
use crate::polyalg::{analyze_roots, MultiPoly, UniPoly};

/// Closed-cone slack used when validating the vectors of a [`MixedSpec`].
pub const CONE_TOL: f64 = 1e-9;

/// A form with vectors `w_1, ..., w_m` in its closed cone.
#[derive(Clone, Debug)]
pub struct MixedSpec<'a> {
    form: &'a HyperbolicForm,
    vectors: Vec<Vec<f64>>,
}

impl<'a> MixedSpec<'a> {
    pub fn new(form: &'a HyperbolicForm, vectors: Vec<Vec<f64>>) -> Result<Self> {
        for (index, w) in vectors.iter().enumerate() {
            if w.len() != form.nvars() {
                return Err(Error::DimensionMismatch {
                    expected: form.nvars(),
                    got: w.len(),
                });
            }
            let lmin = form.lambda_min(w)?;
            let scale = w.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            if lmin < -CONE_TOL * scale {
                return Err(Error::OutsideCone {
                    index,
                    lambda_min: lmin,
                });
            }
        }
        Ok(Self { form, vectors })
    }

    /// Skips the cone check; for callers that already validated the vectors.
    pub fn new_unchecked(form: &'a HyperbolicForm, vectors: Vec<Vec<f64>>) -> Self {
        Self { form, vectors }
    }

    pub fn form(&self) -> &HyperbolicForm {
        self.form
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// `w_1 + ... + w_m`.
    pub fn sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.form.nvars()];
        for w in &self.vectors {
            for (a, b) in s.iter_mut().zip(w) {
                *a += b;
            }
        }
        s
    }
}

/// `∏ (1 - D_{w_j}) p`, one pass per vector. Zero vectors act as the identity.
pub fn apply_operators(p: &MultiPoly, ws: &[Vec<f64>]) -> Result<MultiPoly> {
    let mut out = p.clone();
    for w in ws {
        if w.len() != p.nvars() {
            return Err(Error::DimensionMismatch {
                expected: p.nvars(),
                got: w.len(),
            });
        }
        if w.iter().all(|&x| x == 0.0) {
            continue;
        }
        out = out.one_minus_derivative(w, 1.0)?;
    }
    Ok(out)
}

pub fn apply_mixed_operator(spec: &MixedSpec) -> Result<MultiPoly> {
    apply_operators(spec.form.poly(), &spec.vectors)
}

/// `t -> p(t e) / h(e)` for a mixed polynomial `p` of `form`.
pub fn restrict_to_e(form: &HyperbolicForm, p: &MultiPoly) -> Result<UniPoly> {
    let zero = vec![0.0; form.nvars()];
    Ok(p.restrict_to_line(&zero, form.e())?.scale(1.0 / form.he()))
}

/// Checks real-rootedness and returns the roots, descending.
fn certified_roots(form: &HyperbolicForm, q: &UniPoly) -> Result<Vec<f64>> {
    let tol = form.real_tol();
    let a = analyze_roots(q, tol)?;
    if !a.is_real_rooted() {
        return Err(Error::NotRealRooted {
            coeffs: q.coeffs().to_vec(),
            tol,
        });
    }
    Ok(a.real)
}

/// The mixed characteristic polynomial, monic of degree `d`, checked real-rooted.
pub fn mixed_char_poly(spec: &MixedSpec) -> Result<UniPoly> {
    let q = restrict_to_e(spec.form, &apply_mixed_operator(spec)?)?;
    certified_roots(spec.form, &q)?;
    Ok(q)
}

/// All roots of the mixed characteristic polynomial, descending.
pub fn mixed_roots(spec: &MixedSpec) -> Result<Vec<f64>> {
    let q = restrict_to_e(spec.form, &apply_mixed_operator(spec)?)?;
    certified_roots(spec.form, &q)
}

/// Largest root of the mixed characteristic polynomial.
pub fn lambda_max_mixed(spec: &MixedSpec) -> Result<f64> {
    let q = restrict_to_e(spec.form, &apply_mixed_operator(spec)?)?;
    largest_certified_root(spec.form, &q)
}

pub(crate) fn largest_certified_root(form: &HyperbolicForm, q: &UniPoly) -> Result<f64> {
    match q.degree() {
        None => Err(Error::ZeroPolynomial),
        Some(0) => Err(Error::ConstantPolynomial),
        _ => Ok(certified_roots(form, q)?[0]),
    }
}

/// Largest root found without a root finder.
///
/// The signs of `∏ (1 + D_{w_j}) h` are flipped relative to the mixed
/// polynomial, so `P(τ e)` has the negated roots. The point `ρ` lies above
/// every root iff all roots of `s -> P((s - ρ) e)` are positive, which for a
/// real-rooted polynomial means its coefficients alternate in sign. Bisection
/// on `ρ` over `[-B, B]` (Cauchy bound) locates the infimum of that set.
/// Coefficients within floating-point noise of zero are not counted as sign
/// violations, so multiple roots are located to the noise level of the lowest
/// non-vanishing derivative rather than its `d`-th root.
pub fn lambda_max_via_cone(spec: &MixedSpec, tol: f64) -> Result<f64> {
    let neg: Vec<Vec<f64>> = spec
        .vectors
        .iter()
        .map(|w| w.iter().map(|x| -x).collect())
        .collect();
    let plus = apply_operators(spec.form.poly(), &neg)?;
    let p = restrict_to_e(spec.form, &plus)?;
    let d = match p.degree() {
        None => return Err(Error::ZeroPolynomial),
        Some(0) => return Err(Error::ConstantPolynomial),
        Some(d) => d,
    };
    let lead = p.leading();
    let bound = 1.0
        + p.coeffs()[..d]
            .iter()
            .fold(0.0f64, |m, c| m.max((c / lead).abs()));

    // all roots of s -> P(s - rho) nonnegative, up to noise
    let above = |rho: f64| -> bool {
        let c = p.shifted_coeffs(-rho);
        let noise = 1e-13 * p.abs_scale(1.0 + rho.abs());
        c.iter().enumerate().all(|(j, &cj)| {
            let want = if (d - j) % 2 == 0 {
                lead.signum()
            } else {
                -lead.signum()
            };
            cj * want >= -noise
        })
    };

    let (mut lo, mut hi) = (-bound, bound);
    if !above(hi) || above(lo) {
        return Err(Error::Bracket(format!(
            "cone membership does not change sign on [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol.max(f64::EPSILON * bound) {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One index of a conditional expectation: already fixed, or a uniform choice
/// among the listed outcomes that is replaced by their mean.
#[derive(Clone, Debug, PartialEq)]
pub enum Slot {
    Decided(Vec<f64>),
    Pending(Vec<Vec<f64>>),
}

impl Slot {
    pub fn value(&self) -> Result<Vec<f64>> {
        match self {
            Slot::Decided(w) => Ok(w.clone()),
            Slot::Pending(outcomes) => {
                let first = outcomes.first().ok_or_else(|| {
                    Error::InvalidParameter("pending slot with no outcomes".into())
                })?;
                let mut mean = vec![0.0; first.len()];
                for o in outcomes {
                    if o.len() != mean.len() {
                        return Err(Error::DimensionMismatch {
                            expected: mean.len(),
                            got: o.len(),
                        });
                    }
                    for (a, b) in mean.iter_mut().zip(o) {
                        *a += b;
                    }
                }
                let k = outcomes.len() as f64;
                mean.iter_mut().for_each(|a| *a /= k);
                Ok(mean)
            }
        }
    }
}

/// The mixed characteristic polynomial with every pending slot at its mean.
pub fn conditional_expected_poly(form: &HyperbolicForm, slots: &[Slot]) -> Result<UniPoly> {
    let ws = slots.iter().map(Slot::value).collect::<Result<Vec<_>>>()?;
    mixed_char_poly(&MixedSpec::new(form, ws)?)
}
