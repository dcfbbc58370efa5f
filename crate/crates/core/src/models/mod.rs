//! The equation class contract and its concrete instantiations.
//!
//! A model is a steady nonlocal equation L(mu) u + N(mu, u) = 0 on the unit
//! circle, described by an even linear Fourier symbol l_mu(k) and multilinear
//! nonlinearity symbols n_{m,mu}(k_1..k_m). Four instantiations ship here:
//! Whitham-type equations with finite and infinite depth (quadratic
//! nonlinearity) and Babenko-type water wave formulations (surface-tension
//! series nonlinearity of unbounded degree).

mod babenko;
mod whitham;

pub use babenko::{b_coeff, BabenkoFinite, BabenkoInfinite};
pub use whitham::{WhithamFinite, WhithamInfinite};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{FixedParams, Params};
use crate::series::SeriesEvaluator;
use crate::spectral::{ModeVec, SpectralGrid};

/// Relative tolerance for declaring l_mu0(k1) = l_mu0(k2) = 0 after a kernel
/// solve, scaled by 1 + |l_mu0(1)|.
pub const KERNEL_RESIDUAL_TOL: f64 = 1e-10;

/// Default wavenumber range checked for extra kernel elements: 16 * k2.
pub const KERNEL_CHECK_FACTOR: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ModelId {
    WhithamFinite,
    WhithamInfinite,
    BabenkoInfinite,
    BabenkoFinite,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [
        ModelId::WhithamFinite,
        ModelId::WhithamInfinite,
        ModelId::BabenkoInfinite,
        ModelId::BabenkoFinite,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelId::WhithamFinite => "whitham-fin",
            ModelId::WhithamInfinite => "whitham-inf",
            ModelId::BabenkoInfinite => "babenko-inf",
            ModelId::BabenkoFinite => "babenko-fin",
        }
    }

    /// Instantiates the model for this identifier.
    pub fn model(&self) -> Box<dyn Model> {
        match self {
            ModelId::WhithamFinite => Box::new(WhithamFinite),
            ModelId::WhithamInfinite => Box::new(WhithamInfinite),
            ModelId::BabenkoInfinite => Box::new(BabenkoInfinite),
            ModelId::BabenkoFinite => Box::new(BabenkoFinite),
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitham-fin" => Ok(ModelId::WhithamFinite),
            "whitham-inf" => Ok(ModelId::WhithamInfinite),
            "babenko-inf" => Ok(ModelId::BabenkoInfinite),
            "babenko-fin" => Ok(ModelId::BabenkoFinite),
            other => Err(Error::bad_input(format!(
                "unknown model `{other}` (expected whitham-fin|whitham-inf|babenko-inf|babenko-fin)"
            ))),
        }
    }
}

/// A pluggable equation: linear symbol, multilinear nonlinearity symbols,
/// parameter names, and the solves/evaluations built on top of them.
///
/// All methods are pure functions of their arguments; model values carry no
/// state and may be shared freely across threads.
pub trait Model: Sync + Send {
    fn id(&self) -> ModelId;

    fn param_names(&self) -> &'static [&'static str];

    /// Whether the equation is posed on zero-mean functions (mode 0 removed).
    fn zero_mean(&self) -> bool;

    /// Highest nonlinearity degree, or None when the series is unbounded and
    /// truncated on demand.
    fn max_degree(&self) -> Option<usize>;

    /// The linear symbol l_mu(k). Even in k by construction.
    fn linear_symbol(&self, mu: &Params, k: i64) -> Result<f64>;

    /// The degree-m multilinear symbol n_{m,mu}(k_1..k_m), m = ks.len().
    /// Returns 0 whenever the wavenumbers sum to zero on a zero-mean model.
    fn nonlinear_symbol(&self, mu: &Params, ks: &[i64]) -> Result<f64>;

    /// Kernel parameters mu0 with l_mu0(k1) = l_mu0(k2) = 0, with a
    /// simplicity certificate.
    fn solve_kernel_params(&self, k1: u32, k2: u32, fixed: &FixedParams) -> Result<KernelSpec>;

    /// Analytic gradient of l_mu(k) with respect to all parameters, when the
    /// symbol permits; None requests finite differences.
    fn linear_symbol_param_gradient(&self, _mu: &Params, _k: i64) -> Option<Vec<f64>> {
        None
    }

    /// Order-by-order evaluator of N(u) for the expansion recursion.
    fn series_evaluator(
        &self,
        mu: &Params,
        k1: u32,
        k2: u32,
        max_order: usize,
    ) -> Result<Box<dyn SeriesEvaluator>>;

    /// Full residual L(mu) u + N(mu, u) in mode space, with the nonlinearity
    /// evaluated pointwise from its closed form on the oversampled grid.
    fn oracle_residual(&self, mu: &Params, grid: &SpectralGrid, u: &ModeVec) -> Result<ModeVec>;

    /// The variational functional J_mu(u) whose gradient is the residual.
    fn functional(&self, mu: &Params, grid: &SpectralGrid, u: &ModeVec) -> Result<f64>;

    fn params_from_values(&self, values: Vec<f64>) -> Result<Params> {
        Params::new(self.param_names(), values)
    }
}

/// Validated kernel data for a wavenumber pair: the parameter point, the
/// coprimality flag and the simplicity certificate.
#[derive(Debug, Clone, Serialize)]
pub struct KernelSpec {
    pub k1: u32,
    pub k2: u32,
    pub mu0: Params,
    pub coprime: bool,
    pub certificate: KernelCertificate,
}

/// Numerical evidence that the kernel is exactly four-dimensional: residuals
/// at k1, k2, the smallest |l| over off-kernel wavenumbers up to k_check, and
/// a monotone-growth witness for the tail beyond it.
#[derive(Debug, Clone, Serialize)]
pub struct KernelCertificate {
    pub k_check: u32,
    pub residual_k1: f64,
    pub residual_k2: f64,
    pub min_abs_off_kernel: f64,
    pub argmin_k: u32,
    /// Smallest k* such that l is positive and strictly increasing on
    /// [k*, k_check]; the symbol growing beyond k_check rules out further
    /// kernel elements.
    pub monotone_tail_from: Option<u32>,
    pub simple: bool,
    pub offending: Vec<u32>,
}

impl KernelCertificate {
    pub fn passed(&self) -> bool {
        self.simple && self.monotone_tail_from.is_some()
    }
}

/// Checks that l_mu0 vanishes only at +-k1, +-k2 among 1..=k_check and that
/// the symbol is eventually growing.
pub fn verify_kernel_dimension(
    model: &dyn Model,
    mu0: &Params,
    k1: u32,
    k2: u32,
    k_check: u32,
) -> Result<KernelCertificate> {
    if !(1 <= k1 && k1 < k2) {
        return Err(Error::bad_input(format!(
            "need 1 <= k1 < k2, got ({k1},{k2})"
        )));
    }
    let k_check = k_check.max(k2 + 1);
    let scale = 1.0 + model.linear_symbol(mu0, 1)?.abs();
    let tol = KERNEL_RESIDUAL_TOL * scale;

    let residual_k1 = model.linear_symbol(mu0, k1 as i64)?.abs();
    let residual_k2 = model.linear_symbol(mu0, k2 as i64)?.abs();

    let mut min_abs = f64::INFINITY;
    let mut argmin = 0u32;
    let mut offending = Vec::new();
    let mut values = Vec::with_capacity(k_check as usize);
    for k in 1..=k_check {
        let l = model.linear_symbol(mu0, k as i64)?;
        if !l.is_finite() {
            return Err(Error::NonFinite {
                context: format!("linear symbol at k={k}"),
            });
        }
        values.push(l);
        if k == k1 || k == k2 {
            continue;
        }
        if l.abs() < min_abs {
            min_abs = l.abs();
            argmin = k;
        }
        if l.abs() <= tol {
            offending.push(k);
        }
    }

    // walk back from k_check while the symbol stays positive and increasing
    let mut tail_from = None;
    if *values.last().expect("nonempty") > 0.0 {
        let mut start = k_check;
        for k in (2..=k_check).rev() {
            let cur = values[(k - 1) as usize];
            let prev = values[(k - 2) as usize];
            if cur > prev && prev > 0.0 {
                start = k - 1;
            } else {
                break;
            }
        }
        if start < k_check {
            tail_from = Some(start);
        }
    }

    Ok(KernelCertificate {
        k_check,
        residual_k1,
        residual_k2,
        min_abs_off_kernel: min_abs,
        argmin_k: argmin,
        monotone_tail_from: tail_from,
        simple: offending.is_empty(),
        offending,
    })
}

/// Shared post-solve validation: residual check at k1, k2 plus the
/// simplicity certificate at the default range 16 * k2.
pub(crate) fn finish_kernel_solve(
    model: &dyn Model,
    k1: u32,
    k2: u32,
    mu0: Params,
) -> Result<KernelSpec> {
    let scale = 1.0 + model.linear_symbol(&mu0, 1)?.abs();
    let l1 = model.linear_symbol(&mu0, k1 as i64)?;
    let l2 = model.linear_symbol(&mu0, k2 as i64)?;
    if l1.abs() > KERNEL_RESIDUAL_TOL * scale || l2.abs() > KERNEL_RESIDUAL_TOL * scale {
        return Err(Error::KernelUnsolvable {
            k1,
            k2,
            reason: format!(
                "kernel residuals |l(k1)|={:.3e}, |l(k2)|={:.3e} exceed tolerance {:.3e}",
                l1.abs(),
                l2.abs(),
                KERNEL_RESIDUAL_TOL * scale
            ),
        });
    }
    let certificate = verify_kernel_dimension(model, &mu0, k1, k2, KERNEL_CHECK_FACTOR * k2)?;
    Ok(KernelSpec {
        k1,
        k2,
        mu0,
        coprime: gcd(k1, k2) == 1,
        certificate,
    })
}

pub fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn check_pair(k1: u32, k2: u32) -> Result<()> {
    if !(1 <= k1 && k1 < k2) {
        return Err(Error::bad_input(format!(
            "wavenumbers must satisfy 1 <= k1 < k2, got ({k1},{k2})"
        )));
    }
    Ok(())
}
