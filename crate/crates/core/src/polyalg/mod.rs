//! Polynomial arithmetic: sparse multivariate polynomials with exact
//! directional derivatives, line restriction, and univariate root finding.

mod multi;
mod roots;
mod sturm;
mod uni;

pub use multi::MultiPoly;
pub use roots::{
    analyze_roots, is_real_rooted, largest_root, largest_root_tol, real_roots, RootAnalysis,
    DEFAULT_REAL_TOL,
};
pub use sturm::{sturm_is_real_rooted, STURM_MAX_DEGREE};
pub use uni::UniPoly;

/// Relative threshold below which coefficients are treated as zero.
pub const TAU_CLEAN: f64 = 1e-12;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Real-rootedness with the optional exact Sturm backstop for low degrees.
pub fn is_real_rooted_checked(q: &UniPoly, tol: f64, sturm: bool) -> bool {
    let fast = is_real_rooted(q, tol);
    if sturm && q.degree().is_some_and(|d| d <= STURM_MAX_DEGREE) {
        return fast && sturm_is_real_rooted(q).unwrap_or(false);
    }
    fast
}
