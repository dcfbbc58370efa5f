//! Cross-checks of the expansion recursion against independent routes:
//! a literal ordered-composition evaluation of the recursion formula, the
//! finite/infinite-depth change of variables, and the pseudo-spectral
//! solver.

use std::collections::BTreeMap;

use asymwave_core::expansion::{build_table, resonance_coefficient};
use asymwave_core::models::{Model, ModelId};
use asymwave_core::multi_index::{indices_of_order, MultiIndexPair};
use asymwave_core::oracle;
use asymwave_core::params::{FixedParams, Params};
use asymwave_core::spectral::SpectralGrid;

/// All ordered tuples of nonzero multi-index pairs summing to `target`.
fn ordered_compositions(target: MultiIndexPair) -> Vec<Vec<MultiIndexPair>> {
    fn nonzero_parts(v: &MultiIndexPair) -> Vec<MultiIndexPair> {
        let mut out = Vec::new();
        for a1 in 0..=v.a1 {
            for a2 in 0..=v.a2 {
                for g1 in 0..=v.g1 {
                    for g2 in 0..=v.g2 {
                        let p = MultiIndexPair::new(a1, a2, g1, g2);
                        if !p.is_zero() {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }
    fn recurse(v: MultiIndexPair, acc: &mut Vec<MultiIndexPair>, out: &mut Vec<Vec<MultiIndexPair>>) {
        for p in nonzero_parts(&v) {
            let rest = v.checked_sub(&p).expect("part fits");
            acc.push(p);
            if rest.is_zero() {
                out.push(acc.clone());
            } else {
                recurse(rest, acc, out);
            }
            acc.pop();
        }
    }
    let mut out = Vec::new();
    recurse(target, &mut Vec::new(), &mut out);
    out
}

/// Literal evaluation of the recursion: u = -ell * sum over degrees m of
/// ordered m-tuples of nonzero pairs composing the index, with the
/// degree-m symbol on the tuple wavenumbers.
fn brute_force_tables(
    model: &dyn Model,
    mu: &Params,
    k1: u32,
    k2: u32,
    order: usize,
) -> (BTreeMap<MultiIndexPair, f64>, BTreeMap<MultiIndexPair, f64>) {
    let mut u: BTreeMap<MultiIndexPair, f64> = BTreeMap::new();
    let mut n: BTreeMap<MultiIndexPair, f64> = BTreeMap::new();
    for idx in indices_of_order(1) {
        u.insert(idx, 0.5);
    }
    for o in 2..=order {
        for idx in indices_of_order(o) {
            let mut n_star = 0.0;
            for tuple in ordered_compositions(idx) {
                let m = tuple.len();
                if m < 2 {
                    continue;
                }
                if let Some(max) = model.max_degree() {
                    if m > max {
                        continue;
                    }
                }
                let product: f64 =
                    tuple.iter().map(|p| u.get(p).copied().unwrap_or(0.0)).product();
                if product == 0.0 {
                    continue;
                }
                let ks: Vec<i64> = tuple.iter().map(|p| p.wavenumber(k1, k2)).collect();
                n_star += model.nonlinear_symbol(mu, &ks).unwrap() * product;
            }
            let k = idx.wavenumber(k1, k2);
            let on_kernel = k.unsigned_abs() as u32 == k1 || k.unsigned_abs() as u32 == k2;
            let ell = if on_kernel || (model.zero_mean() && k == 0) {
                0.0
            } else {
                1.0 / model.linear_symbol(mu, k).unwrap()
            };
            n.insert(idx, n_star);
            u.insert(idx, -ell * n_star);
        }
    }
    (u, n)
}

fn compare_tables(model: &dyn Model, fixed: &FixedParams, k1: u32, k2: u32, order: usize) {
    let ks = model.solve_kernel_params(k1, k2, fixed).unwrap();
    let table = build_table(model, &ks, &ks.mu0, order).unwrap();
    let (u_ref, n_ref) = brute_force_tables(model, &ks.mu0, k1, k2, order);
    for o in 1..=order {
        for idx in indices_of_order(o) {
            let expect_u = u_ref.get(&idx).copied().unwrap_or(0.0);
            let got_u = table.u_hat(&idx);
            let scale = expect_u.abs().max(1.0);
            assert!(
                (got_u - expect_u).abs() <= 1e-11 * scale,
                "{} ({k1},{k2}) u at {idx:?}: recursion {got_u}, composition sum {expect_u}",
                model.id()
            );
            if o >= 2 {
                let expect_n = n_ref.get(&idx).copied().unwrap_or(0.0);
                let got_n = table.n_hat(&idx).unwrap();
                let scale = expect_n.abs().max(1.0);
                assert!(
                    (got_n - expect_n).abs() <= 1e-11 * scale,
                    "{} ({k1},{k2}) n at {idx:?}: recursion {got_n}, composition sum {expect_n}",
                    model.id()
                );
            }
        }
    }
}

#[test]
fn whitham_infinite_recursion_matches_composition_sum() {
    let model = ModelId::WhithamInfinite.model();
    compare_tables(
        model.as_ref(),
        &FixedParams::new().with("T", 1.0),
        2,
        3,
        5,
    );
}

#[test]
fn whitham_finite_recursion_matches_composition_sum() {
    // mode 0 participates here, exercising the no-projection branch
    let model = ModelId::WhithamFinite.model();
    compare_tables(
        model.as_ref(),
        &FixedParams::new().with("T", 0.2).with("d", 1.0),
        2,
        3,
        4,
    );
}

#[test]
fn babenko_infinite_recursion_matches_composition_sum() {
    let model = ModelId::BabenkoInfinite.model();
    compare_tables(model.as_ref(), &FixedParams::new(), 2, 3, 4);
}

#[test]
fn babenko_finite_recursion_matches_composition_sum() {
    let model = ModelId::BabenkoFinite.model();
    compare_tables(
        model.as_ref(),
        &FixedParams::new()
            .with("g", 1.0)
            .with("kappa", 1.0)
            .with("d", 1.0),
        2,
        3,
        4,
    );
}

#[test]
fn depth_change_of_variables_rescales_coefficients() {
    // tables at depth d and the transformed parameters at depth 1 agree up
    // to the amplitude rescaling d^((order-1)/2)
    let model = ModelId::WhithamFinite.model();
    let d = 2.0;
    let fixed = FixedParams::new().with("T", 0.5).with("d", d);
    let ks = model.solve_kernel_params(2, 3, &fixed).unwrap();
    let mu = &ks.mu0;
    let table = build_table(model.as_ref(), &ks, mu, 4).unwrap();

    let mu1 = Params::new(
        &["c", "kappa", "T", "d"],
        vec![
            mu.get("c").unwrap() / d.sqrt(),
            mu.get("kappa").unwrap() * d,
            mu.get("T").unwrap() / (d * d),
            1.0,
        ],
    )
    .unwrap();
    let ks1 = {
        let fixed1 = FixedParams::new()
            .with("T", mu.get("T").unwrap() / (d * d))
            .with("d", 1.0);
        model.solve_kernel_params(2, 3, &fixed1).unwrap()
    };
    let table1 = build_table(model.as_ref(), &ks1, &mu1, 4).unwrap();

    for o in 1..=4 {
        let factor = d.powf(-((o as f64) - 1.0) / 2.0);
        for idx in indices_of_order(o) {
            let lhs = table.u_hat(&idx);
            let rhs = factor * table1.u_hat(&idx);
            let scale = lhs.abs().max(rhs.abs()).max(1e-12);
            assert!(
                ((lhs - rhs) / scale).abs() < 1e-9,
                "order {o} index {idx:?}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn oracle_psi3_converges_to_the_resonance_coefficient() {
    // the central dual computation: the series recursion and the
    // pseudo-spectral solve must agree on the resonance coefficient
    let model = ModelId::WhithamInfinite.model();
    let ks = model
        .solve_kernel_params(2, 3, &FixedParams::new().with("T", 1.0))
        .unwrap();
    let nhat = resonance_coefficient(model.as_ref(), &ks, &ks.mu0).unwrap();

    let grid = SpectralGrid::with_default_oversample(40).unwrap();
    let theta = (0.0, 0.2);
    let rho_coarse = 2f64.powi(-7);
    let rho_fine = 2f64.powi(-9);
    let psi_coarse = oracle::psi_estimates(
        model.as_ref(),
        &ks.mu0,
        2,
        3,
        (rho_coarse, rho_coarse),
        theta,
        &grid,
    )
    .unwrap()
    .psi3;
    let psi_fine = oracle::psi_estimates(
        model.as_ref(),
        &ks.mu0,
        2,
        3,
        (rho_fine, rho_fine),
        theta,
        &grid,
    )
    .unwrap()
    .psi3;
    // Richardson in r^2 with ratio (rho_coarse/rho_fine)^2 = 16
    let extrapolated = (16.0 * psi_fine - psi_coarse) / 15.0;
    let rel = ((extrapolated - nhat) / nhat).abs();
    assert!(
        rel < 1e-4,
        "expansion {nhat}, oracle coarse {psi_coarse}, fine {psi_fine}, \
         extrapolated {extrapolated} (rel {rel:.3e})"
    );
}

#[test]
fn babenko_oracle_psi3_approaches_the_resonance_coefficient() {
    // same dual check for the Babenko family: the closed-form square-root
    // nonlinearity on the grid against the series recursion
    let model = ModelId::BabenkoInfinite.model();
    let ks = model.solve_kernel_params(2, 3, &FixedParams::new()).unwrap();
    let nhat = resonance_coefficient(model.as_ref(), &ks, &ks.mu0).unwrap();
    let grid = SpectralGrid::with_default_oversample(40).unwrap();
    let theta = (0.0, 0.2);
    let psi3_at = |rho: f64| {
        oracle::psi_estimates(model.as_ref(), &ks.mu0, 2, 3, (rho, rho), theta, &grid)
            .unwrap()
            .psi3
    };
    let coarse = psi3_at(2f64.powi(-7));
    let fine = psi3_at(2f64.powi(-9));
    let extrapolated = (16.0 * fine - coarse) / 15.0;
    let rel = ((extrapolated - nhat) / nhat).abs();
    assert!(
        rel < 1e-4,
        "expansion {nhat}, oracle {coarse} -> {fine}, extrapolated {extrapolated} (rel {rel:.3e})"
    );
}

#[test]
fn oracle_solution_matches_truncated_expansion() {
    let model = ModelId::WhithamInfinite.model();
    let ks = model
        .solve_kernel_params(2, 3, &FixedParams::new().with("T", 1.0))
        .unwrap();
    let table = build_table(model.as_ref(), &ks, &ks.mu0, 3).unwrap();
    let grid = SpectralGrid::with_default_oversample(40).unwrap();
    let theta = (0.0, 0.2);

    let max_diff = |r: (f64, f64)| -> f64 {
        let sol = oracle::ls_solve(model.as_ref(), &ks.mu0, 2, 3, r, theta, &grid).unwrap();
        let expansion = table.evaluate(r, theta);
        let mut max = 0.0f64;
        for k in -9i64..=9 {
            if k == 0 || k.unsigned_abs() == 2 || k.unsigned_abs() == 3 {
                continue;
            }
            let a = sol.modes.get(k);
            let b = expansion
                .get(&k)
                .copied()
                .unwrap_or(num_complex::Complex64::ZERO);
            max = max.max((a - b).norm());
        }
        max
    };

    let r = (2f64.powi(-7), 2f64.powi(-7));
    let diff = max_diff(r);
    let diff_half = max_diff((r.0 / 2.0, r.1 / 2.0));
    // order-3 truncation leaves an O(r^4) discrepancy, so halving r must
    // shrink it by at least 2^3 * 0.9
    assert!(diff > 0.0 && diff_half > 0.0);
    let shrink = diff / diff_half;
    assert!(
        shrink >= 8.0 * 0.9,
        "shrink factor {shrink} (diff {diff:.3e} -> {diff_half:.3e})"
    );
}
