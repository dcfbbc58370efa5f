//! Per-pair verdicts and pair scans.
//!
//! For each wavenumber pair the classification runs the full pipeline:
//! kernel solve, simplicity certificate, resonance coefficient, scaled
//! constant (infinite-depth Whitham), transversality data, and finally the
//! case analysis. A nonzero resonance coefficient rules out asymmetric
//! bifurcation from zero; a vanishing one together with coprime k1 >= 2 and
//! transversal parameter dependence marks a candidate.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{
    build_table, transversality_jacobian, Transversality,
};
use crate::models::{gcd, KernelCertificate, Model, ModelId};
use crate::params::FixedParams;

/// Default factor for declaring the resonance coefficient zero, relative to
/// the magnitude of same-order coefficients (double-precision cancellation
/// floor for the orders reached at desk scale).
pub const DEFAULT_ZERO_THRESHOLD_FACTOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// No parameter point with a kernel exists for this pair; nearby
    /// parameters admit only the trivial solution.
    NoNontrivialSolutions,
    /// The kernel collapsed to a single wavenumber pair, which only carries
    /// symmetric branches.
    SymmetricOnly,
    /// Resonance coefficient nonzero: no small asymmetric waves bifurcate.
    NoAsymmetric,
    /// Resonance coefficient vanishes and the transversality data is
    /// nondegenerate: asymmetric bifurcation is possible.
    CandidateAsymmetric,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::NoNontrivialSolutions => "no-nontrivial-solutions",
            Verdict::SymmetricOnly => "symmetric-only",
            Verdict::NoAsymmetric => "no-asymmetric",
            Verdict::CandidateAsymmetric => "candidate-asymmetric",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything the classification produced for one wavenumber pair.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationReport {
    pub model: String,
    pub k1: u32,
    pub k2: u32,
    pub coprime: bool,
    /// Order of the resonance coefficient, k1 + k2 - 1.
    pub order: usize,
    pub mu0: Option<BTreeMap<String, f64>>,
    pub kernel_certificate: Option<KernelCertificate>,
    pub resonance_nhat: Option<f64>,
    /// Largest |n| among same-order coefficients (threshold scale).
    pub nhat_scale: Option<f64>,
    pub zero_threshold: Option<f64>,
    /// Tension-scaled constant, infinite-depth Whitham only.
    pub c_scaled: Option<f64>,
    pub transversality: Option<Transversality>,
    pub verdict: Verdict,
    pub exploratory: bool,
    pub diagnostics: Vec<String>,
}

impl BifurcationReport {
    fn skeleton(model: &dyn Model, k1: u32, k2: u32) -> Self {
        BifurcationReport {
            model: model.id().as_str().to_string(),
            k1,
            k2,
            coprime: gcd(k1, k2) == 1,
            order: (k1 + k2 - 1) as usize,
            mu0: None,
            kernel_certificate: None,
            resonance_nhat: None,
            nhat_scale: None,
            zero_threshold: None,
            c_scaled: None,
            transversality: None,
            verdict: Verdict::Inconclusive,
            exploratory: model.id() == ModelId::BabenkoFinite,
            diagnostics: Vec::new(),
        }
    }

    pub fn transversality_det(&self) -> Option<f64> {
        self.transversality.as_ref().and_then(|t| t.determinant())
    }
}

/// Classifies one pair. Errors are returned only for malformed requests
/// (bad wavenumbers, missing fixed parameters); everything the pipeline
/// itself can fail at is folded into the verdict and diagnostics.
pub fn classify(
    model: &dyn Model,
    k1: u32,
    k2: u32,
    fixed: &FixedParams,
    zero_threshold_factor: f64,
) -> Result<BifurcationReport> {
    if !(1 <= k1 && k1 < k2) {
        return Err(Error::bad_input(format!(
            "wavenumbers must satisfy 1 <= k1 < k2, got ({k1},{k2})"
        )));
    }
    let mut report = BifurcationReport::skeleton(model, k1, k2);
    if report.exploratory {
        report.diagnostics.push(
            "exploratory: finite-depth nonlinearity obtained by symbol substitution, \
             no closed-form reference"
                .to_string(),
        );
    }
    if k1 == 1 {
        report.diagnostics.push(
            "k1=1: cosine-projection factorization unavailable, necessary conditions only"
                .to_string(),
        );
    }
    if !report.coprime {
        report.diagnostics.push(
            "non-coprime pair: necessary conditions only (sufficiency requires coprime \
             wavenumbers)"
                .to_string(),
        );
    }

    let ks = match model.solve_kernel_params(k1, k2, fixed) {
        Ok(ks) => ks,
        Err(Error::KernelUnsolvable { reason, .. }) => {
            report.verdict = Verdict::NoNontrivialSolutions;
            report.diagnostics.push(format!(
                "no parameter point with a four-dimensional kernel: {reason}; nearby \
                 parameters carry kernels of dimension at most two (symmetric branches only)"
            ));
            return Ok(report);
        }
        Err(Error::MissingParameter { model, name }) => {
            return Err(Error::MissingParameter { model, name });
        }
        Err(err) => {
            report.verdict = Verdict::Inconclusive;
            report.diagnostics.push(format!("kernel solve failed: {err}"));
            return Ok(report);
        }
    };

    report.mu0 = Some(ks.mu0.as_map());
    report.kernel_certificate = Some(ks.certificate.clone());

    if !ks.certificate.simple {
        report.verdict = Verdict::Inconclusive;
        report.diagnostics.push(format!(
            "kernel not simple: the linear symbol also vanishes at {:?}",
            ks.certificate.offending
        ));
        return Ok(report);
    }
    if ks.certificate.monotone_tail_from.is_none() {
        report.verdict = Verdict::Inconclusive;
        report
            .diagnostics
            .push("no growth witness for the symbol tail; kernel dimension unconfirmed".into());
        return Ok(report);
    }

    let order = report.order;
    let table = match build_table(model, &ks, &ks.mu0, order) {
        Ok(t) => t,
        Err(err) => {
            report.verdict = Verdict::Inconclusive;
            report
                .diagnostics
                .push(format!("expansion build failed: {err}"));
            return Ok(report);
        }
    };
    for w in table.warnings() {
        report
            .diagnostics
            .push(format!("small divisor at k={}: ell={:.3e}", w.k, w.ell));
    }

    let nhat = table.resonance().expect("table was built to order");
    let scale = table.max_abs_nhat(order);
    let threshold = zero_threshold_factor * (1.0 + scale);
    report.resonance_nhat = Some(nhat);
    report.nhat_scale = Some(scale);
    report.zero_threshold = Some(threshold);

    if model.id() == ModelId::WhithamInfinite {
        let t = ks.mu0.get("T").expect("whitham-inf has T");
        let exponent = (k1 as f64 + k2 as f64 - 3.0) / 4.0;
        report.c_scaled = Some(nhat * t.powf(exponent));
    }

    match transversality_jacobian(model, &ks, None) {
        Ok(t) => report.transversality = Some(t),
        Err(err) => report
            .diagnostics
            .push(format!("transversality computation failed: {err}")),
    }

    report.verdict = if nhat.abs() > threshold {
        Verdict::NoAsymmetric
    } else {
        report.diagnostics.push(format!(
            "resonance coefficient {nhat:.3e} below zero threshold {threshold:.3e}"
        ));
        let transversal = match &report.transversality {
            Some(Transversality::Jacobian(data)) => {
                data.determinant.abs() > 100.0 * data.det_error_estimate
            }
            _ => false,
        };
        if report.coprime && k1 >= 2 && transversal {
            Verdict::CandidateAsymmetric
        } else {
            if !transversal {
                report.diagnostics.push(
                    "sufficiency untestable: transversality determinant degenerate or \
                     unavailable"
                        .to_string(),
                );
            }
            Verdict::Inconclusive
        }
    };
    Ok(report)
}

/// Classifies all pairs 1 <= k1 < k2 <= kmax (coprime only unless
/// `include_noncoprime`). Pairs are independent, so the work fans out over
/// a small thread pool; results are merged back in (k1, k2) order, so the
/// output is deterministic regardless of scheduling. Per-pair pipeline
/// failures are recorded in the affected row and never abort the scan.
pub fn scan_pairs(
    model: &dyn Model,
    kmax: u32,
    fixed: &FixedParams,
    include_noncoprime: bool,
    zero_threshold_factor: f64,
) -> Result<Vec<BifurcationReport>> {
    if kmax < 2 {
        return Err(Error::bad_input("scan requires kmax >= 2"));
    }
    let mut pairs = Vec::new();
    for k1 in 1..kmax {
        for k2 in (k1 + 1)..=kmax {
            if include_noncoprime || gcd(k1, k2) == 1 {
                pairs.push((k1, k2));
            }
        }
    }

    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(pairs.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<BifurcationReport>>> = Vec::new();
    slots.resize_with(pairs.len(), || None);

    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for _ in 0..workers {
            let pairs = &pairs;
            let next = &next;
            handles.push(scope.spawn(move || {
                let mut local = Vec::new();
                loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    let Some(&(k1, k2)) = pairs.get(i) else {
                        break;
                    };
                    local.push((i, classify(model, k1, k2, fixed, zero_threshold_factor)));
                }
                local
            }));
        }
        for handle in handles {
            for (i, result) in handle.join().expect("scan worker panicked") {
                slots[i] = Some(result);
            }
        }
    });

    slots
        .into_iter()
        .map(|slot| slot.expect("every pair classified"))
        .collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// CSV header for scan tables of one model:
/// model,k1,k2,coprime,order,mu0_<name>...,resonance_nhat,C_scaled,transversality_det,verdict,diagnostics
pub fn csv_header(param_names: &[&str]) -> String {
    let mut cols = vec![
        "model".to_string(),
        "k1".to_string(),
        "k2".to_string(),
        "coprime".to_string(),
        "order".to_string(),
    ];
    for name in param_names {
        cols.push(format!("mu0_{name}"));
    }
    cols.extend(
        [
            "resonance_nhat",
            "C_scaled",
            "transversality_det",
            "verdict",
            "diagnostics",
        ]
        .map(str::to_string),
    );
    cols.join(",")
}

/// One report flattened onto the CSV column contract (17 significant digits).
pub fn csv_row(report: &BifurcationReport, param_names: &[&str]) -> String {
    let mut cols = vec![
        report.model.clone(),
        report.k1.to_string(),
        report.k2.to_string(),
        report.coprime.to_string(),
        report.order.to_string(),
    ];
    for name in param_names {
        let cell = report
            .mu0
            .as_ref()
            .and_then(|m| m.get(*name))
            .map(|&v| fmt_f64(v))
            .unwrap_or_default();
        cols.push(cell);
    }
    cols.push(report.resonance_nhat.map(fmt_f64).unwrap_or_default());
    cols.push(report.c_scaled.map(fmt_f64).unwrap_or_default());
    let det_cell = match &report.transversality {
        Some(Transversality::Jacobian(data)) => fmt_f64(data.determinant),
        Some(Transversality::DegenerateParameters { .. }) => "degenerate".to_string(),
        None => String::new(),
    };
    cols.push(det_cell);
    cols.push(report.verdict.to_string());
    cols.push(csv_escape(&report.diagnostics.join("; ")));
    cols.join(",")
}

/// Writes a scan as CSV with the fixed column contract.
pub fn write_csv<W: Write>(
    writer: &mut W,
    param_names: &[&str],
    reports: &[BifurcationReport],
) -> std::io::Result<()> {
    writeln!(writer, "{}", csv_header(param_names))?;
    for report in reports {
        writeln!(writer, "{}", csv_row(report, param_names))?;
    }
    Ok(())
}

/// JSON for a single report (pretty, deterministic field order).
pub fn report_json(report: &BifurcationReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization is infallible")
}

/// JSON array for a scan.
pub fn scan_json(reports: &[BifurcationReport]) -> String {
    serde_json::to_string_pretty(reports).expect("report serialization is infallible")
}
