//! Taylor-Fourier coefficient tables and the quantities read off them.
//!
//! The solution of the complement equation expands as
//!   u = sum over (alpha, gamma) of u_{alpha,gamma} r^(alpha+gamma) E^(alpha-gamma)
//! with the recursion
//!   u_{alpha,gamma} = -ell(k_{alpha,gamma}) * n*_{alpha,gamma},
//! where n*_{alpha,gamma} is the same-order coefficient of N(u) assembled
//! from strictly lower-order data and ell inverts the linear symbol away
//! from the kernel wavenumbers (and vanishes on them, encoding the
//! complement projection); the minus carries the inversion of
//! L w = -P_W N(u). Everything downstream of the recursion -- the
//! resonance coefficient, the tension-scaled constant and the
//! transversality Jacobian -- lives here too.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{KernelSpec, Model};
use crate::multi_index::{resonance_index, MultiIndexPair};
use crate::params::Params;
use crate::series::OrderSlice;

/// |ell(k)| beyond this value is flagged as a small divisor (near-degenerate
/// kernel parameters); the build continues but carries the warning.
pub const SMALL_DIVISOR_GUARD: f64 = 1e8;

/// Relative spread above which the exact T-scaling check is reported as a
/// scaling-law violation.
pub const SCALING_SPREAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
struct Entry {
    u_hat: f64,
    n_hat: f64,
}

/// A wavenumber whose inverted symbol exceeded the small-divisor guard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallDivisorWarning {
    pub k: i64,
    pub ell: f64,
}

/// All u and n coefficients of a model at fixed (kernel, mu) up to a target
/// order. Only canonical index representatives are stored; the swapped index
/// reads back the same value.
pub struct CoefficientTable {
    kernel: KernelSpec,
    mu: Params,
    order: usize,
    entries: BTreeMap<MultiIndexPair, Entry>,
    ell_cache: BTreeMap<i64, f64>,
    warnings: Vec<SmallDivisorWarning>,
}

impl CoefficientTable {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn mu(&self) -> &Params {
        &self.mu
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn warnings(&self) -> &[SmallDivisorWarning] {
        &self.warnings
    }

    /// u_{alpha,gamma}; zero if the coefficient vanishes (or is untracked).
    pub fn u_hat(&self, idx: &MultiIndexPair) -> f64 {
        let (c, _) = idx.canonical();
        self.entries.get(&c).map(|e| e.u_hat).unwrap_or(0.0)
    }

    /// n_{alpha,gamma}; defined from order 2 on.
    pub fn n_hat(&self, idx: &MultiIndexPair) -> Option<f64> {
        if idx.order() < 2 {
            return None;
        }
        let (c, _) = idx.canonical();
        Some(self.entries.get(&c).map(|e| e.n_hat).unwrap_or(0.0))
    }

    /// The inverted linear symbol used during the build.
    pub fn ell(&self, k: i64) -> Option<f64> {
        self.ell_cache.get(&k).copied()
    }

    /// The resonance coefficient n at index ((0,k1),(k2-1,0)).
    pub fn resonance(&self) -> Result<f64> {
        let idx = resonance_index(self.kernel.k1, self.kernel.k2);
        if idx.order() > self.order {
            return Err(Error::bad_input(format!(
                "table order {} below the resonance order {}",
                self.order,
                idx.order()
            )));
        }
        Ok(self.n_hat(&idx).expect("resonance order is >= 2"))
    }

    /// Largest |n| over stored entries of the given order.
    pub fn max_abs_nhat(&self, order: usize) -> f64 {
        self.entries
            .iter()
            .filter(|(idx, _)| idx.order() == order)
            .map(|(_, e)| e.n_hat.abs())
            .fold(0.0, f64::max)
    }

    /// Complex Fourier coefficients per mode of the truncated expansion at
    /// amplitudes r and phases theta. Conjugate symmetry is structural: the
    /// swapped index contributes the conjugate term on the negated mode.
    pub fn evaluate(
        &self,
        r: (f64, f64),
        theta: (f64, f64),
    ) -> BTreeMap<i64, num_complex::Complex64> {
        let (k1, k2) = (self.kernel.k1, self.kernel.k2);
        let mut out: BTreeMap<i64, num_complex::Complex64> = BTreeMap::new();
        for (idx, entry) in &self.entries {
            if entry.u_hat == 0.0 {
                continue;
            }
            for index in [*idx, idx.swapped()] {
                let amp = entry.u_hat * index.amplitude_power(r.0, r.1);
                if amp == 0.0 {
                    continue;
                }
                let phase = index.phase(k1, k2, theta.0, theta.1);
                let term = num_complex::Complex64::from_polar(amp, phase);
                let k = index.wavenumber(k1, k2);
                *out.entry(k).or_insert(num_complex::Complex64::ZERO) += term;
                if *idx == idx.swapped() {
                    break; // self-symmetric index contributes once
                }
            }
        }
        out
    }
}

/// Builds the coefficient table up to `order` by the order-by-order
/// recursion. `mu` may differ from the kernel point (needed for parameter
/// derivatives); the kernel wavenumbers of `ks` always define the
/// annihilated modes.
pub fn build_table(
    model: &dyn Model,
    ks: &KernelSpec,
    mu: &Params,
    order: usize,
) -> Result<CoefficientTable> {
    if order < 1 {
        return Err(Error::bad_input("table order must be at least 1"));
    }
    if order > 64 {
        return Err(Error::bad_input(
            "table order capped at 64 (cost grows superlinearly; desk scale targets <= 40)",
        ));
    }
    let (k1, k2) = (ks.k1, ks.k2);
    let mut evaluator = model.series_evaluator(mu, k1, k2, order)?;

    let mut entries: BTreeMap<MultiIndexPair, Entry> = BTreeMap::new();
    let mut ell_cache: BTreeMap<i64, f64> = BTreeMap::new();
    let mut warnings: Vec<SmallDivisorWarning> = Vec::new();

    // order 1: the kernel modes themselves, amplitude 1/2 each
    let base: OrderSlice = {
        let mut slice: Vec<(MultiIndexPair, f64)> = vec![
            (MultiIndexPair::new(1, 0, 0, 0), 0.5),
            (MultiIndexPair::new(0, 1, 0, 0), 0.5),
            (MultiIndexPair::new(0, 0, 1, 0), 0.5),
            (MultiIndexPair::new(0, 0, 0, 1), 0.5),
        ];
        slice.sort_unstable_by_key(|&(idx, _)| idx);
        slice
    };
    for &(idx, v) in &base {
        if idx.is_canonical() {
            entries.insert(
                idx,
                Entry {
                    u_hat: v,
                    n_hat: 0.0,
                },
            );
        }
    }
    evaluator.push_order(1, &base);

    for o in 2..=order {
        let component = evaluator.order_component(o);

        // symmetry check on the mirrored half before collapsing to canonical;
        // the two accumulation orders may differ by rounding proportional to
        // the largest same-order coefficient
        let slice_scale = component
            .iter()
            .map(|&(_, v)| v.abs())
            .fold(0.0f64, f64::max);
        let sym_tol = 1e-8 * (1.0 + slice_scale);
        for &(idx, value) in &component {
            let (canon, swapped) = idx.canonical();
            if swapped {
                let partner = component
                    .binary_search_by_key(&canon, |&(i, _)| i)
                    .ok()
                    .map(|pos| component[pos].1)
                    .unwrap_or(0.0);
                if (partner - value).abs() > sym_tol {
                    return Err(Error::domain(format!(
                        "index-symmetry violation at {idx:?}: {value} vs mirrored {partner}"
                    )));
                }
            }
        }

        let mut push: OrderSlice = Vec::new();
        for &(idx, n_value) in &component {
            if !n_value.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("n coefficient at index {idx:?} (order {o})"),
                });
            }
            let k = idx.wavenumber(k1, k2);
            let ell = match ell_cache.get(&k) {
                Some(&e) => e,
                None => {
                    let e = if k.unsigned_abs() as u32 == k1 || k.unsigned_abs() as u32 == k2 {
                        0.0
                    } else {
                        let l = model.linear_symbol(mu, k)?;
                        if l == 0.0 || !l.is_finite() {
                            return Err(Error::NonFinite {
                                context: format!("inverted linear symbol at k={k}"),
                            });
                        }
                        1.0 / l
                    };
                    if e.abs() > SMALL_DIVISOR_GUARD {
                        warnings.push(SmallDivisorWarning { k, ell: e });
                    }
                    ell_cache.insert(k, e);
                    e
                }
            };
            // complement inversion of L w = -P_W N(u)
            let u_value = -ell * n_value;
            if !u_value.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("u coefficient at index {idx:?} (order {o})"),
                });
            }
            if idx.is_canonical() {
                entries.insert(
                    idx,
                    Entry {
                        u_hat: u_value,
                        n_hat: n_value,
                    },
                );
            }
            if u_value != 0.0 {
                push.push((idx, u_value));
            }
        }
        // mirrored values are re-synthesized from the canonical ones so both
        // halves feed the next order bit-identically
        let mut next: OrderSlice = push
            .iter()
            .map(|&(idx, _)| {
                let (c, _) = idx.canonical();
                let value = entries.get(&c).map(|e| e.u_hat).unwrap_or(0.0);
                (idx, value)
            })
            .collect();
        next.sort_unstable_by_key(|&(idx, _)| idx);
        evaluator.push_order(o, &next);
    }

    Ok(CoefficientTable {
        kernel: ks.clone(),
        mu: mu.clone(),
        order,
        entries,
        ell_cache,
        warnings,
    })
}

/// The resonance coefficient n_{(0,k1),(k2-1,0)}(mu): builds (or reuses) a
/// table of order k1 + k2 - 1 and reads the entry.
pub fn resonance_coefficient(model: &dyn Model, ks: &KernelSpec, mu: &Params) -> Result<f64> {
    let order = (ks.k1 + ks.k2 - 1) as usize;
    build_table(model, ks, mu, order)?.resonance()
}

/// Result of the tension-scaling collapse for the infinite-depth Whitham
/// model: n(T) * T^((k1+k2-3)/4) is T-independent, so the samples must agree.
#[derive(Debug, Clone, Serialize)]
pub struct ScaledConstant {
    pub k1: u32,
    pub k2: u32,
    pub value: f64,
    pub spread: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Computes the scaled constant C(k1,k2) from resonance coefficients at the
/// given surface tensions, with the relative spread as the exactness check.
pub fn scaled_constant(
    model: &dyn Model,
    k1: u32,
    k2: u32,
    t_samples: &[f64],
) -> Result<ScaledConstant> {
    use crate::models::ModelId;
    if model.id() != ModelId::WhithamInfinite {
        return Err(Error::bad_input(
            "the scaled constant is defined for the infinite-depth Whitham model only",
        ));
    }
    if t_samples.len() < 2 {
        return Err(Error::bad_input("need at least two tension samples"));
    }
    let exponent = (k1 as f64 + k2 as f64 - 3.0) / 4.0;
    let mut samples = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        if t <= 0.0 || !t.is_finite() {
            return Err(Error::bad_input("tension samples must be positive"));
        }
        let ks = model.solve_kernel_params(k1, k2, &crate::params::FixedParams::new().with("T", t))?;
        let nhat = resonance_coefficient(model, &ks, &ks.mu0.clone())?;
        samples.push((t, nhat * t.powf(exponent)));
    }
    let mean = samples.iter().map(|&(_, v)| v).sum::<f64>() / samples.len() as f64;
    let max = samples.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let spread = (max - min).abs() / mean.abs().max(1e-300);
    if spread > SCALING_SPREAD_TOL {
        return Err(Error::ScalingLawViolation {
            spread,
            tolerance: SCALING_SPREAD_TOL,
        });
    }
    Ok(ScaledConstant {
        k1,
        k2,
        value: mean,
        spread,
        samples,
    })
}

/// Transversality data: either the Jacobian of (l(k1), l(k2), n_res) with
/// respect to a parameter triple, or a marker that the model has too few
/// parameters for the sufficiency test.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Transversality {
    /// Fewer than three parameters: the sufficiency branch is untestable.
    DegenerateParameters { n_params: usize },
    Jacobian(TransversalityData),
}

impl Transversality {
    pub fn determinant(&self) -> Option<f64> {
        match self {
            Transversality::DegenerateParameters { .. } => None,
            Transversality::Jacobian(data) => Some(data.determinant),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransversalityData {
    pub param_names: [String; 3],
    /// Rows: l(k1), l(k2), n_res; columns: the parameter triple.
    pub matrix: [[f64; 3]; 3],
    pub determinant: f64,
    /// Step-halving (Richardson) error estimate on the determinant.
    pub det_error_estimate: f64,
    /// Central-difference steps used for the n row.
    pub steps: [f64; 3],
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Jacobian of (l(k1), l(k2), n_res) with respect to `param_triple` at the
/// kernel point. Linear-symbol rows use the analytic parameter gradient when
/// the model provides one, central differences otherwise; the resonance row
/// always uses central differences with a step-halving consistency check.
pub fn transversality_jacobian(
    model: &dyn Model,
    ks: &KernelSpec,
    param_triple: Option<[&str; 3]>,
) -> Result<Transversality> {
    let names = model.param_names();
    if names.len() < 3 {
        return Ok(Transversality::DegenerateParameters {
            n_params: names.len(),
        });
    }
    let triple: [&str; 3] = match param_triple {
        Some(t) => t,
        None => default_param_triple(model),
    };
    let mu0 = &ks.mu0;
    let mut cols = [0usize; 3];
    for (slot, name) in triple.iter().enumerate() {
        cols[slot] = mu0.index_of(name).ok_or_else(|| Error::UnknownParameter {
            model: model.id().as_str(),
            name: name.to_string(),
        })?;
    }

    let order = (ks.k1 + ks.k2 - 1) as usize;
    let nhat = |mu: &Params| -> Result<f64> { build_table(model, ks, mu, order)?.resonance() };

    let mut matrix = [[0.0; 3]; 3];
    let mut matrix_fine = [[0.0; 3]; 3];
    let mut steps = [0.0; 3];

    for (slot, &col) in cols.iter().enumerate() {
        // rows 0 and 1: the linear symbol at k1 and k2
        for (row, k) in [(0usize, ks.k1 as i64), (1usize, ks.k2 as i64)] {
            let d = match model.linear_symbol_param_gradient(mu0, k) {
                Some(grad) => grad[col],
                None => {
                    let h = 1e-6 * mu0.value(col).abs().max(1e-6);
                    let plus = model.linear_symbol(&mu0.with_value(col, mu0.value(col) + h), k)?;
                    let minus = model.linear_symbol(&mu0.with_value(col, mu0.value(col) - h), k)?;
                    (plus - minus) / (2.0 * h)
                }
            };
            matrix[row][slot] = d;
            matrix_fine[row][slot] = d;
        }
        // row 2: the resonance coefficient, by central differences at h and
        // h/2 with Richardson extrapolation
        let h = 1e-5 * mu0.value(col).abs();
        steps[slot] = h;
        let diff = |step: f64| -> Result<f64> {
            let plus = nhat(&mu0.with_value(col, mu0.value(col) + step))?;
            let minus = nhat(&mu0.with_value(col, mu0.value(col) - step))?;
            Ok((plus - minus) / (2.0 * step))
        };
        let d_h = diff(h)?;
        let d_h2 = diff(0.5 * h)?;
        matrix_fine[2][slot] = d_h2;
        matrix[2][slot] = (4.0 * d_h2 - d_h) / 3.0;
    }

    let determinant = det3(&matrix);
    let det_fine = det3(&matrix_fine);
    let det_error_estimate = (determinant - det_fine).abs();

    Ok(Transversality::Jacobian(TransversalityData {
        param_names: [
            triple[0].to_string(),
            triple[1].to_string(),
            triple[2].to_string(),
        ],
        matrix,
        determinant,
        det_error_estimate,
        steps,
    }))
}

/// First three parameters by convention: (c, kappa, T) for the Whitham
/// models, (c, g, T) for the finite-depth Babenko model.
pub fn default_param_triple(model: &dyn Model) -> [&'static str; 3] {
    let names = model.param_names();
    debug_assert!(names.len() >= 3);
    [names[0], names[1], names[2]]
}
