//! Whitham-type models: quadratic nonlinearity under a square-root
//! dispersion symbol, at finite and infinite depth.

use crate::error::{Error, Result};
use crate::params::{FixedParams, Params};
use crate::series::{conv_order, Graded, OrderSlice, SeriesEvaluator};
use crate::spectral::{ModeVec, SpectralGrid};

use super::{check_pair, finish_kernel_solve, KernelSpec, Model, ModelId};

/// Dispersion value m_{T,d}(xi) = sqrt((1 + T xi^2) tanh(xi d) / xi) for
/// xi >= 0, extended continuously by m(0) = sqrt(d).
fn dispersion_finite(t: f64, d: f64, xi: f64) -> f64 {
    if xi == 0.0 {
        d.sqrt()
    } else {
        ((1.0 + t * xi * xi) * (xi * d).tanh() / xi).sqrt()
    }
}

/// Infinite-depth dispersion m_{T,inf}(xi) = sqrt(1/xi + T xi), xi > 0.
fn dispersion_infinite(t: f64, xi: f64) -> f64 {
    (1.0 / xi + t * xi).sqrt()
}

/// Quadratic-nonlinearity series evaluator: the order-o component of N(u) is
/// the self-convolution of the coefficient table, with wavenumber-zero
/// entries removed when the model projects onto zero-mean functions.
struct QuadraticSeries {
    k1: u32,
    k2: u32,
    zero_mean: bool,
    table: Graded,
}

impl SeriesEvaluator for QuadraticSeries {
    fn push_order(&mut self, order: usize, coeffs: &OrderSlice) {
        self.table.set_order(order, coeffs.clone());
    }

    fn order_component(&mut self, order: usize) -> OrderSlice {
        let mut out = conv_order(&self.table, &self.table, order);
        if self.zero_mean {
            out.retain(|(idx, _)| idx.wavenumber(self.k1, self.k2) != 0);
        }
        out
    }
}

fn quadratic_residual(
    model: &dyn Model,
    mu: &Params,
    grid: &SpectralGrid,
    u: &ModeVec,
) -> Result<ModeVec> {
    let sq = grid.product_modes(u, u);
    let n = grid.n_modes() as i64;
    let mut out = ModeVec::zeros(grid.n_modes());
    for k in -n..=n {
        if model.zero_mean() && k == 0 {
            continue;
        }
        let l = model.linear_symbol(mu, k)?;
        out.set(k, u.get(k) * l + sq.get(k));
    }
    Ok(out)
}

/// J(u) = int 1/2 u (M u - c u) + u^3/3 dx, whose gradient is the residual.
fn cubic_functional(
    mu: &Params,
    grid: &SpectralGrid,
    u: &ModeVec,
    dispersion: impl FnMut(i64) -> f64,
) -> f64 {
    let c = mu.get("c").expect("wave speed");
    let mu_u = u.multiplier(dispersion);
    let pu = grid.to_physical(u);
    let pmu = grid.to_physical(&mu_u);
    let density: Vec<f64> = pu
        .iter()
        .zip(&pmu)
        .map(|(&v, &mv)| 0.5 * v * (mv - c * v) + v * v * v / 3.0)
        .collect();
    grid.integrate(&density)
}

/// Finite-depth Whitham model with surface tension: parameters
/// (c, kappa, T, d), no zero-mean projection, quadratic nonlinearity.
pub struct WhithamFinite;

impl WhithamFinite {
    fn unpack(mu: &Params) -> (f64, f64, f64, f64) {
        (mu.value(0), mu.value(1), mu.value(2), mu.value(3))
    }
}

impl Model for WhithamFinite {
    fn id(&self) -> ModelId {
        ModelId::WhithamFinite
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["c", "kappa", "T", "d"]
    }

    fn zero_mean(&self) -> bool {
        false
    }

    fn max_degree(&self) -> Option<usize> {
        Some(2)
    }

    fn linear_symbol(&self, mu: &Params, k: i64) -> Result<f64> {
        let (c, kappa, t, d) = Self::unpack(mu);
        Ok(-c + dispersion_finite(t, d, kappa * k.unsigned_abs() as f64))
    }

    fn nonlinear_symbol(&self, _mu: &Params, ks: &[i64]) -> Result<f64> {
        if ks.len() != 2 {
            return Err(Error::domain(format!(
                "whitham-fin nonlinearity is quadratic; degree {} requested",
                ks.len()
            )));
        }
        Ok(1.0)
    }

    fn solve_kernel_params(&self, k1: u32, k2: u32, fixed: &FixedParams) -> Result<KernelSpec> {
        check_pair(k1, k2)?;
        let t = fixed.require("whitham-fin", "T")?;
        let d = fixed.require("whitham-fin", "d")?;
        // l(k1) = l(k2) = 0 forces m(kappa k1) = m(kappa k2); the dispersion
        // has a single interior minimum only when T < d^2/3, otherwise it is
        // strictly monotone and no pair of equal values exists.
        let f = |kappa: f64| {
            dispersion_finite(t, d, kappa * k1 as f64) - dispersion_finite(t, d, kappa * k2 as f64)
        };
        let (mut lo, mut hi) = (1e-6, 1e6);
        let (flo, fhi) = (f(lo), f(hi));
        if !(flo > 0.0 && fhi < 0.0) {
            return Err(Error::KernelUnsolvable {
                k1,
                k2,
                reason: format!(
                    "dispersion values at k1 and k2 never cross for T={t}, d={d} \
                     (requires T < d^2/3 = {:.6})",
                    d * d / 3.0
                ),
            });
        }
        while hi - lo > 1e-13 * (1.0 + lo) {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let kappa0 = 0.5 * (lo + hi);
        let c0 = dispersion_finite(t, d, kappa0 * k1 as f64);
        let mu0 = Params::new(self.param_names(), vec![c0, kappa0, t, d])?;
        finish_kernel_solve(self, k1, k2, mu0)
    }

    fn series_evaluator(
        &self,
        _mu: &Params,
        k1: u32,
        k2: u32,
        _max_order: usize,
    ) -> Result<Box<dyn SeriesEvaluator>> {
        Ok(Box::new(QuadraticSeries {
            k1,
            k2,
            zero_mean: false,
            table: Graded::new(),
        }))
    }

    fn oracle_residual(&self, mu: &Params, grid: &SpectralGrid, u: &ModeVec) -> Result<ModeVec> {
        quadratic_residual(self, mu, grid, u)
    }

    fn functional(&self, mu: &Params, grid: &SpectralGrid, u: &ModeVec) -> Result<f64> {
        let (_, kappa, t, d) = Self::unpack(mu);
        Ok(cubic_functional(mu, grid, u, |k| {
            dispersion_finite(t, d, kappa * k.unsigned_abs() as f64)
        }))
    }
}

/// Infinite-depth Whitham model with surface tension: parameters
/// (c, kappa, T), zero-mean formulation, quadratic nonlinearity.
pub struct WhithamInfinite;

impl WhithamInfinite {
    fn unpack(mu: &Params) -> (f64, f64, f64) {
        (mu.value(0), mu.value(1), mu.value(2))
    }
}

impl Model for WhithamInfinite {
    fn id(&self) -> ModelId {
        ModelId::WhithamInfinite
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["c", "kappa", "T"]
    }

    fn zero_mean(&self) -> bool {
        true
    }

    fn max_degree(&self) -> Option<usize> {
        Some(2)
    }

    fn linear_symbol(&self, mu: &Params, k: i64) -> Result<f64> {
        if k == 0 {
            return Err(Error::ZeroModeOnZeroMeanModel {
                model: "whitham-inf",
            });
        }
        let (c, kappa, t) = Self::unpack(mu);
        Ok(-c + dispersion_infinite(t, kappa * k.unsigned_abs() as f64))
    }

    fn nonlinear_symbol(&self, _mu: &Params, ks: &[i64]) -> Result<f64> {
        if ks.len() != 2 {
            return Err(Error::domain(format!(
                "whitham-inf nonlinearity is quadratic; degree {} requested",
                ks.len()
            )));
        }
        Ok(if ks[0] + ks[1] == 0 { 0.0 } else { 1.0 })
    }

    fn solve_kernel_params(&self, k1: u32, k2: u32, fixed: &FixedParams) -> Result<KernelSpec> {
        check_pair(k1, k2)?;
        let t = fixed.require("whitham-inf", "T")?;
        let (k1f, k2f) = (k1 as f64, k2 as f64);
        let kappa0 = 1.0 / (k1f * k2f * t).sqrt();
        let c0 = t.powf(0.25) * ((k1f / k2f).sqrt() + (k2f / k1f).sqrt()).sqrt();
        let mu0 = Params::new(self.param_names(), vec![c0, kappa0, t])?;
        finish_kernel_solve(self, k1, k2, mu0)
    }

    fn linear_symbol_param_gradient(&self, mu: &Params, k: i64) -> Option<Vec<f64>> {
        if k == 0 {
            return None;
        }
        let (_, kappa, t) = Self::unpack(mu);
        let ka = k.unsigned_abs() as f64;
        let xi = kappa * ka;
        let m = dispersion_infinite(t, xi);
        // m^2 = 1/(kappa |k|) + T kappa |k|
        let dm_dkappa = (-1.0 / (kappa * kappa * ka) + t * ka) / (2.0 * m);
        let dm_dt = xi / (2.0 * m);
        Some(vec![-1.0, dm_dkappa, dm_dt])
    }

    fn series_evaluator(
        &self,
        _mu: &Params,
        k1: u32,
        k2: u32,
        _max_order: usize,
    ) -> Result<Box<dyn SeriesEvaluator>> {
        Ok(Box::new(QuadraticSeries {
            k1,
            k2,
            zero_mean: true,
            table: Graded::new(),
        }))
    }

    fn oracle_residual(&self, mu: &Params, grid: &SpectralGrid, u: &ModeVec) -> Result<ModeVec> {
        quadratic_residual(self, mu, grid, u)
    }

    fn functional(&self, mu: &Params, grid: &SpectralGrid, u: &ModeVec) -> Result<f64> {
        let (_, kappa, t) = Self::unpack(mu);
        Ok(cubic_functional(mu, grid, u, |k| {
            if k == 0 {
                0.0
            } else {
                dispersion_infinite(t, kappa * k.unsigned_abs() as f64)
            }
        }))
    }
}
