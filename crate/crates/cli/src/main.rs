//! Command line front end: pair scans, single-pair reports and the
//! cross-check suites, emitting CSV or JSON.
//!
//! Exit codes: 0 success, 1 failed verification check, 2 scan/report with an
//! inconclusive pair, 64 usage error, 74 unwritable output.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use asymwave_core::bifurcation::{
    classify, csv_header, csv_row, report_json, scan_json, scan_pairs, Verdict,
    DEFAULT_ZERO_THRESHOLD_FACTOR,
};
use asymwave_core::expansion::{build_table, resonance_coefficient, scaled_constant};
use asymwave_core::models::ModelId;
use asymwave_core::multi_index::indices_of_order;
use asymwave_core::oracle;
use asymwave_core::params::{FixedParams, Params};
use asymwave_core::spectral::{ModeVec, SpectralGrid};

const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "asymwave",
    about = "Symmetry-breaking bifurcation tests for nonlocal dispersive wave equations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    #[value(name = "whitham-fin")]
    WhithamFin,
    #[value(name = "whitham-inf")]
    WhithamInf,
    #[value(name = "babenko-inf")]
    BabenkoInf,
    #[value(name = "babenko-fin")]
    BabenkoFin,
}

impl ModelArg {
    fn id(self) -> ModelId {
        match self {
            ModelArg::WhithamFin => ModelId::WhithamFinite,
            ModelArg::WhithamInf => ModelId::WhithamInfinite,
            ModelArg::BabenkoInf => ModelId::BabenkoInfinite,
            ModelArg::BabenkoFin => ModelId::BabenkoFinite,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonParams {
    /// Surface tension strength
    #[arg(long = "t", default_value_t = 1.0)]
    t: f64,
    /// Water depth (finite-depth models; defaults to 1, or 2 for the
    /// depth covariance check)
    #[arg(long = "d")]
    d: Option<f64>,
    /// Gravitational acceleration (finite-depth Babenko)
    #[arg(long = "g", default_value_t = 1.0)]
    g: f64,
    /// Wavenumber scale (finite-depth Babenko)
    #[arg(long = "kappa", default_value_t = 1.0)]
    kappa: f64,
}

impl CommonParams {
    fn fixed(&self) -> FixedParams {
        FixedParams::new()
            .with("T", self.t)
            .with("d", self.d.unwrap_or(1.0))
            .with("g", self.g)
            .with("kappa", self.kappa)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify all wavenumber pairs up to a cutoff
    Scan {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Largest wavenumber (pairs 1 <= k1 < k2 <= kmax)
        #[arg(long)]
        kmax: u32,
        #[command(flatten)]
        params: CommonParams,
        /// Also classify pairs with gcd(k1,k2) > 1 (necessary conditions only)
        #[arg(long = "include-noncoprime", default_value_t = false)]
        include_noncoprime: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output path (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomized checks (reserved; scans are deterministic)
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Classify a single wavenumber pair
    Report {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        k1: u32,
        #[arg(long)]
        k2: u32,
        #[command(flatten)]
        params: CommonParams,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cross-check suites
    Verify {
        /// Which check to run
        #[arg(value_enum)]
        check: CheckArg,
        #[arg(long, default_value_t = 2)]
        k1: u32,
        #[arg(long, default_value_t = 3)]
        k2: u32,
        #[command(flatten)]
        params: CommonParams,
        /// Expansion order for the depth check
        #[arg(long, default_value_t = 4)]
        order: usize,
        /// Fourier cutoff for the spectral solver (default 8 (k1+k2))
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    /// Tension-scaling collapse of the resonance coefficient
    Scaling,
    /// Sine-projection factorization identities
    Factorization,
    /// Variational gradient consistency (finite differences of J)
    Gradient,
    /// Depth change-of-variables covariance of the coefficient tables
    Depth,
    /// Series recursion against the pseudo-spectral solver
    Dual,
    /// Everything above
    All,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match cli.command {
        Command::Scan {
            model,
            kmax,
            params,
            include_noncoprime,
            format,
            out,
            seed: _,
        } => cmd_scan(model.id(), kmax, &params.fixed(), include_noncoprime, format, out),
        Command::Report {
            model,
            k1,
            k2,
            params,
            format,
            out,
        } => cmd_report(model.id(), k1, k2, &params.fixed(), format, out),
        Command::Verify {
            check,
            k1,
            k2,
            params,
            order,
            modes,
            seed,
        } => cmd_verify(check, k1, k2, &params, order, modes, seed),
    }
}

fn usage_error(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_USAGE)
}

fn write_output(out: Option<PathBuf>, content: &str) -> Result<(), ExitCode> {
    match out {
        None => {
            println!("{content}");
            Ok(())
        }
        Some(path) => {
            let write = || -> std::io::Result<()> {
                let mut file = std::fs::File::create(&path)?;
                file.write_all(content.as_bytes())?;
                file.write_all(b"\n")?;
                Ok(())
            };
            write().map_err(|err| {
                eprintln!("error: cannot write {}: {err}", path.display());
                ExitCode::from(EXIT_IO)
            })
        }
    }
}

fn cmd_scan(
    model_id: ModelId,
    kmax: u32,
    fixed: &FixedParams,
    include_noncoprime: bool,
    format: Format,
    out: Option<PathBuf>,
) -> ExitCode {
    let model = model_id.model();
    let reports = match scan_pairs(
        model.as_ref(),
        kmax,
        fixed,
        include_noncoprime,
        DEFAULT_ZERO_THRESHOLD_FACTOR,
    ) {
        Ok(reports) => reports,
        Err(err) => return usage_error(err),
    };
    let content = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            asymwave_core::bifurcation::write_csv(&mut buf, model.param_names(), &reports)
                .expect("in-memory write");
            String::from_utf8(buf).expect("csv is utf8").trim_end().to_string()
        }
        Format::Json => scan_json(&reports),
    };
    if let Err(code) = write_output(out, &content) {
        return code;
    }
    if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        ExitCode::from(EXIT_INCONCLUSIVE)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_report(
    model_id: ModelId,
    k1: u32,
    k2: u32,
    fixed: &FixedParams,
    format: Format,
    out: Option<PathBuf>,
) -> ExitCode {
    let model = model_id.model();
    let report = match classify(model.as_ref(), k1, k2, fixed, DEFAULT_ZERO_THRESHOLD_FACTOR) {
        Ok(report) => report,
        Err(err) => return usage_error(err),
    };
    let content = match format {
        Format::Json => report_json(&report),
        Format::Csv => {
            let header = csv_header(model.param_names());
            let row = csv_row(&report, model.param_names());
            format!("{header}\n{row}")
        }
    };
    if let Err(code) = write_output(out, &content) {
        return code;
    }
    if report.verdict == Verdict::Inconclusive {
        ExitCode::from(EXIT_INCONCLUSIVE)
    } else {
        ExitCode::SUCCESS
    }
}

struct CheckOutcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn cmd_verify(
    check: CheckArg,
    k1: u32,
    k2: u32,
    params: &CommonParams,
    order: usize,
    modes: Option<usize>,
    seed: u64,
) -> ExitCode {
    if !(1 <= k1 && k1 < k2) {
        return usage_error(format!("need 1 <= k1 < k2, got ({k1},{k2})"));
    }
    let n_modes = modes.unwrap_or(8 * (k1 + k2) as usize);
    let mut outcomes = Vec::new();
    let run = |outcomes: &mut Vec<CheckOutcome>,
               name: &'static str,
               result: Result<(bool, String), asymwave_core::Error>| {
        let outcome = match result {
            Ok((passed, detail)) => CheckOutcome {
                name,
                passed,
                detail,
            },
            Err(err) => CheckOutcome {
                name,
                passed: false,
                detail: format!("error: {err}"),
            },
        };
        outcomes.push(outcome);
    };

    let do_all = matches!(check, CheckArg::All);
    if do_all || matches!(check, CheckArg::Scaling) {
        run(&mut outcomes, "scaling", check_scaling(k1, k2));
    }
    if do_all || matches!(check, CheckArg::Factorization) {
        run(
            &mut outcomes,
            "factorization",
            check_factorization(k1, k2, params.t, n_modes),
        );
    }
    if do_all || matches!(check, CheckArg::Gradient) {
        run(&mut outcomes, "gradient", check_gradient(n_modes, seed));
    }
    if do_all || matches!(check, CheckArg::Depth) {
        run(
            &mut outcomes,
            "depth",
            check_depth(k1, k2, params.t, params.d.unwrap_or(2.0), order),
        );
    }
    if do_all || matches!(check, CheckArg::Dual) {
        run(&mut outcomes, "dual", check_dual(k1, k2, params.t, n_modes));
    }

    let mut all_passed = true;
    for outcome in &outcomes {
        let status = if outcome.passed { "pass" } else { "FAIL" };
        println!("{status} {}: {}", outcome.name, outcome.detail);
        all_passed &= outcome.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        let failed: Vec<&str> = outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| o.name)
            .collect();
        eprintln!("failed checks: {}", failed.join(", "));
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn check_scaling(k1: u32, k2: u32) -> Result<(bool, String), asymwave_core::Error> {
    let model = ModelId::WhithamInfinite.model();
    let sc = scaled_constant(model.as_ref(), k1, k2, &[0.25, 0.5, 1.0, 2.0, 4.0])?;
    let passed = sc.spread <= 1e-8;
    Ok((
        passed,
        format!(
            "C({k1},{k2}) = {:.12e}, relative spread {:.3e} (tolerance 1e-8)",
            sc.value, sc.spread
        ),
    ))
}

fn check_factorization(
    k1: u32,
    k2: u32,
    t: f64,
    n_modes: usize,
) -> Result<(bool, String), asymwave_core::Error> {
    let model = ModelId::WhithamInfinite.model();
    let ks = model.solve_kernel_params(k1, k2, &FixedParams::new().with("T", t))?;
    let grid = SpectralGrid::with_default_oversample(n_modes)?;
    let dtheta = std::f64::consts::FRAC_PI_2 / (k1 * k2) as f64;
    let est = oracle::psi_estimates(
        model.as_ref(),
        &ks.mu0,
        k1,
        k2,
        (1e-3, 1e-3),
        (0.0, dtheta),
        &grid,
    )?;
    let lhs = k1 as f64 * est.psi3;
    let rhs = k2 as f64 * est.psi4;
    let identity_rel = ((lhs - rhs) / lhs).abs();

    // sine projections must vanish identically at equal phases
    let sol_even = oracle::ls_solve(
        model.as_ref(),
        &ks.mu0,
        k1,
        k2,
        (1e-3, 1e-3),
        (0.1, 0.1),
        &grid,
    )?;
    let res_even = oracle::residual(model.as_ref(), &ks.mu0, &grid, &sol_even)?;
    let vanish = oracle::sin_projection(&res_even, k1, 0.1)
        .abs()
        .max(oracle::sin_projection(&res_even, k2, 0.1).abs());

    let passed = identity_rel <= 1e-6 && vanish <= 1e-10;
    Ok((
        passed,
        format!(
            "|k1 psi3 - k2 psi4| / |k1 psi3| = {identity_rel:.3e} (tolerance 1e-6); \
             equal-phase sine projection {vanish:.3e} (tolerance 1e-10)"
        ),
    ))
}

fn random_test_function(n_modes: usize, max_mode: i64, rng: &mut impl rand::Rng) -> ModeVec {
    let mut phi = ModeVec::zeros(n_modes);
    for k in 1..=max_mode {
        let c = num_complex::Complex64::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        );
        phi.set(k, c);
        phi.set(-k, c.conj());
    }
    phi
}

fn check_gradient(n_modes: usize, seed: u64) -> Result<(bool, String), asymwave_core::Error> {
    use rand::SeedableRng;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let steps = [1e-2, 1e-3, 1e-4];
    let grid = SpectralGrid::with_default_oversample(n_modes)?;

    let mut worst: f64 = 2.0;
    for id in [ModelId::WhithamInfinite, ModelId::BabenkoInfinite] {
        let model = id.model();
        let mu = match id {
            ModelId::WhithamInfinite => {
                model
                    .solve_kernel_params(2, 3, &FixedParams::new().with("T", 1.0))?
                    .mu0
            }
            _ => model.solve_kernel_params(2, 3, &FixedParams::new())?.mu0,
        };
        // a fixed low-mode state of amplitude 1e-2
        let mut u = ModeVec::zeros(n_modes);
        u.set(1, num_complex::Complex64::new(4e-3, 1e-3));
        u.set(-1, num_complex::Complex64::new(4e-3, -1e-3));
        u.set(2, num_complex::Complex64::new(3e-3, -2e-3));
        u.set(-2, num_complex::Complex64::new(3e-3, 2e-3));
        u.set(5, num_complex::Complex64::new(-1e-3, 1e-3));
        u.set(-5, num_complex::Complex64::new(-1e-3, -1e-3));
        for _ in 0..5 {
            let phi = random_test_function(n_modes, 8, &mut rng);
            let errors =
                oracle::directional_derivative_errors(model.as_ref(), &mu, &grid, &u, &phi, &steps)?;
            let slope = oracle::log_log_slope(&steps, &errors);
            if (slope - 2.0).abs() > (worst - 2.0).abs() {
                worst = slope;
            }
        }
    }
    let passed = (worst - 2.0).abs() <= 0.1;
    Ok((
        passed,
        format!("worst finite-difference convergence slope {worst:.4} (target 2 +- 0.1)"),
    ))
}

fn check_depth(
    k1: u32,
    k2: u32,
    t: f64,
    d: f64,
    order: usize,
) -> Result<(bool, String), asymwave_core::Error> {
    let model = ModelId::WhithamFinite.model();
    let fixed = FixedParams::new().with("T", t).with("d", d);
    let ks = model.solve_kernel_params(k1, k2, &fixed)?;
    let mu = &ks.mu0;
    let table = build_table(model.as_ref(), &ks, mu, order)?;

    let t1 = mu.get("T").unwrap() / (d * d);
    let mu1 = Params::new(
        &["c", "kappa", "T", "d"],
        vec![
            mu.get("c").unwrap() / d.sqrt(),
            mu.get("kappa").unwrap() * d,
            t1,
            1.0,
        ],
    )?;
    let ks1 = model.solve_kernel_params(k1, k2, &FixedParams::new().with("T", t1).with("d", 1.0))?;
    let table1 = build_table(model.as_ref(), &ks1, &mu1, order)?;

    let mut max_rel: f64 = 0.0;
    for o in 1..=order {
        let factor = d.powf(-((o as f64) - 1.0) / 2.0);
        for idx in indices_of_order(o) {
            let lhs = table.u_hat(&idx);
            let rhs = factor * table1.u_hat(&idx);
            let scale = lhs.abs().max(rhs.abs());
            if scale > 1e-12 {
                max_rel = max_rel.max(((lhs - rhs) / scale).abs());
            }
        }
    }
    let passed = max_rel <= 1e-9;
    Ok((
        passed,
        format!(
            "depth covariance at d={d}: max relative deviation {max_rel:.3e} over orders <= {order} \
             (tolerance 1e-9)"
        ),
    ))
}

fn check_dual(
    k1: u32,
    k2: u32,
    t: f64,
    n_modes: usize,
) -> Result<(bool, String), asymwave_core::Error> {
    let model = ModelId::WhithamInfinite.model();
    let ks = model.solve_kernel_params(k1, k2, &FixedParams::new().with("T", t))?;
    let nhat = resonance_coefficient(model.as_ref(), &ks, &ks.mu0)?;
    let grid = SpectralGrid::with_default_oversample(n_modes)?;
    let dtheta = std::f64::consts::FRAC_PI_2 / (k1 * k2) as f64;
    let theta = (0.0, dtheta);
    let coarse = oracle::psi_estimates(
        model.as_ref(),
        &ks.mu0,
        k1,
        k2,
        (2f64.powi(-7), 2f64.powi(-7)),
        theta,
        &grid,
    )?
    .psi3;
    let fine = oracle::psi_estimates(
        model.as_ref(),
        &ks.mu0,
        k1,
        k2,
        (2f64.powi(-9), 2f64.powi(-9)),
        theta,
        &grid,
    )?
    .psi3;
    let extrapolated = (16.0 * fine - coarse) / 15.0;
    let rel = ((extrapolated - nhat) / nhat).abs();
    let passed = rel <= 1e-4;
    Ok((
        passed,
        format!(
            "expansion {nhat:.9e} vs oracle extrapolation {extrapolated:.9e}, \
             relative difference {rel:.3e} (tolerance 1e-4)"
        ),
    ))
}
