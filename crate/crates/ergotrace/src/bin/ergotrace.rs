//! Command-line front end: parse a domain configuration, dispatch one
//! subcommand, write CSV/JSON artifacts under `<out>/<manifest-hash>/`, and
//! exit 0 exactly when every enabled check passes.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use ergotrace::billiard::{self, PhasePoint};
use ergotrace::classical::{self, MeasureKind, Symbol};
use ergotrace::config::{load_domain, Config};
use ergotrace::eigensolve::{
    characteristic_matrix, solve_spectrum_many, weyl_prediction, ScanPolicy, SpectrumResult,
};
use ergotrace::geometry::Domain;
use ergotrace::grid::{self, BoundaryGrid};
use ergotrace::qe::{self, HeatMode, Window};
use ergotrace::report::{
    egorov_table, heat_table, norm_table, orbit_table, qe_table, rellich_table, scan_table,
    spectrum_table, termination_label, variance_table, Check, GridPolicyManifest, RunManifest,
    RunOutput, Summary,
};
use ergotrace::BcKind;

#[derive(Parser)]
#[command(
    name = "ergotrace",
    version,
    about = "Laplace eigenvalues, eigenfunction boundary traces, and their \
             classical-limit statistics on piecewise-smooth planar domains"
)]
struct Cli {
    /// Output root; artifacts land in a per-run subdirectory named by the
    /// manifest hash.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for every stochastic ingredient (test batches, phase-space
    /// sampling). Defaults to the config file's `seed`, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Linear-algebra backend threads (exported as OPENBLAS_NUM_THREADS).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the billiard map and verify the chord generating relation.
    Billiard {
        /// Domain: config path or preset name (disk, stadium, square).
        #[arg(long)]
        domain: String,
        /// Start phase point as `s,eta` (arclength, tangential momentum).
        #[arg(long)]
        start: String,
        /// Number of reflections.
        #[arg(long)]
        steps: usize,
    },
    /// Limit measures ω_B, closed-form cross-checks, mean-ergodic decay.
    Classical {
        #[arg(long)]
        domain: String,
        /// Observable: `const | fourier(m) | eta_bump(c,w) | product(a,b)`.
        #[arg(long, default_value = "const")]
        observable: String,
        /// Ψ¹-Robin symbol strength α in K = α|η|.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Locate eigenvalues in (lmin, lmax] and emit the spectrum + scan.
    Spectrum {
        #[arg(long)]
        domain: String,
        /// Boundary condition: `neumann | dirichlet | robin:K | psirobin:A`.
        #[arg(long)]
        bc: String,
        #[arg(long, default_value_t = 0.0)]
        lmin: f64,
        #[arg(long)]
        lmax: f64,
        /// Points per wavelength at λ = lmax (grid sizing).
        #[arg(long)]
        ppw: Option<f64>,
        /// Fixed boundary node count (overrides --ppw).
        #[arg(long)]
        n: Option<usize>,
        /// Also dump the characteristic matrix at each eigenvalue (binary).
        #[arg(long, default_value_t = false)]
        dump: bool,
    },
    /// Matrix elements, Cesàro average vs ω_B, windowed variances and norms.
    Qe {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        bc: String,
        #[arg(long, default_value_t = 0.0)]
        lmin: f64,
        #[arg(long)]
        lmax: f64,
        /// Cesàro cutoff (defaults to lmax).
        #[arg(long)]
        lcut: Option<f64>,
        #[arg(long, default_value = "const")]
        observable: String,
        /// State windows as `start:end[,start:end…]` (1-based, inclusive).
        #[arg(long)]
        windows: Option<String>,
        #[arg(long)]
        ppw: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// One-step symbol-transport residuals and their λ-slope.
    Egorov {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "neumann")]
        bc: String,
        /// Band-limited observable (must vanish for |η| ≥ 0.9).
        #[arg(long, default_value = "product(fourier(1),eta_bump(0.5,0.2))")]
        observable: String,
        /// Comma-separated wavenumbers for the residual fit.
        #[arg(long, default_value = "20,40,80")]
        lambdas: String,
        #[arg(long, default_value_t = 10.0)]
        ppw: f64,
    },
    /// Boundary identity for Dirichlet traces: 2λ² = ∫ (x·ν)|∂_ν u|² dσ.
    Rellich {
        #[arg(long)]
        domain: String,
        #[arg(long, default_value_t = 0.0)]
        lmin: f64,
        #[arg(long)]
        lmax: f64,
        /// Check only the first `count` states (default: all found).
        #[arg(long)]
        count: Option<usize>,
        /// Per-state relative-error bound (disk runs warrant 1e-6).
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[arg(long)]
        ppw: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Truncated heat traces against their leading small-t asymptotics.
    Heat {
        #[arg(long)]
        domain: String,
        /// `boundary` (trace sum, Neumann/Robin/Ψ¹-Robin) or
        /// `dirichlet-tilde` (λ⁻²-scaled normal-derivative sum).
        #[arg(long, default_value = "boundary")]
        mode: String,
        #[arg(long, default_value = "neumann")]
        bc: String,
        /// Comma-separated times.
        #[arg(long, default_value = "0.03")]
        times: String,
        #[arg(long, default_value_t = 25.0)]
        lmax: f64,
        /// Optional boundary weight φ(s) (observable grammar, η ignored).
        #[arg(long)]
        observable: Option<String>,
        /// Relative tolerance against the leading asymptotics.
        #[arg(long, default_value_t = 0.2)]
        tol: f64,
        #[arg(long)]
        ppw: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // OpenBLAS reads this at first use; set it before any assembly runs.
    std::env::set_var("OPENBLAS_NUM_THREADS", cli.threads.to_string());
    match run(&cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Dispatch, write artifacts, print per-check lines; `Ok(true)` iff every
/// enabled check passed.
fn run(cli: &Cli) -> Result<bool> {
    let (mut output, summary) = match &cli.command {
        Command::Billiard {
            domain,
            start,
            steps,
        } => cmd_billiard(cli, domain, start, *steps)?,
        Command::Classical {
            domain,
            observable,
            alpha,
        } => cmd_classical(cli, domain, observable, *alpha)?,
        Command::Spectrum {
            domain,
            bc,
            lmin,
            lmax,
            ppw,
            n,
            dump,
        } => cmd_spectrum(cli, domain, bc, *lmin, *lmax, *ppw, *n, *dump)?,
        Command::Qe {
            domain,
            bc,
            lmin,
            lmax,
            lcut,
            observable,
            windows,
            ppw,
            n,
        } => cmd_qe(
            cli, domain, bc, *lmin, *lmax, *lcut, observable, windows, *ppw, *n,
        )?,
        Command::Egorov {
            domain,
            bc,
            observable,
            lambdas,
            ppw,
        } => cmd_egorov(cli, domain, bc, observable, lambdas, *ppw)?,
        Command::Rellich {
            domain,
            lmin,
            lmax,
            count,
            tol,
            ppw,
            n,
        } => cmd_rellich(cli, domain, *lmin, *lmax, *count, *tol, *ppw, *n)?,
        Command::Heat {
            domain,
            mode,
            bc,
            times,
            lmax,
            observable,
            tol,
            ppw,
            n,
        } => cmd_heat(cli, domain, mode, bc, times, *lmax, observable.as_deref(), *tol, *ppw, *n)?,
    };

    for check in &summary.checks {
        output.manifest.record_check(&check.name, check.passed);
    }
    output.json("summary", summary.to_json()?);
    let dir = output.write(&cli.out)?;
    println!("artifacts: {}", dir.display());
    for check in &summary.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!(
            "[{status}] {}: value {:.6e} target {:.6e} tolerance {:.1e} ({})",
            check.name, check.value, check.target, check.tolerance, check.tolerance_kind
        );
    }
    if !summary.passed {
        eprintln!("failing checks: {}", summary.failing().join(", "));
    }
    Ok(summary.passed)
}

/// Effective seed: flag beats config beats 0.
fn effective_seed(cli: &Cli, cfg: &Config) -> u64 {
    cli.seed.or(cfg.options.seed).unwrap_or(0)
}

/// Build the scan policy from config options and per-command flags.
fn build_policy(cfg: &Config, ppw: Option<f64>, n: Option<usize>) -> ScanPolicy {
    let mut policy = ScanPolicy::default();
    if let Some(p) = cfg.options.ppw {
        policy.ppw = p;
    }
    if let Some(p) = ppw {
        policy.ppw = p;
    }
    if let Some(m) = cfg.options.n_max {
        policy.n_max = m;
    }
    policy.n_fixed = n.or(cfg.options.n_fixed);
    policy
}

fn manifest_for(
    subcommand: &str,
    cfg: &Config,
    bcs: &[String],
    lmin: f64,
    lmax: f64,
    policy: &ScanPolicy,
    seed: u64,
) -> RunManifest {
    RunManifest::new(
        subcommand,
        &cfg.name,
        &cfg.file_hash,
        bcs,
        lmin,
        lmax,
        GridPolicyManifest::from(policy),
        seed,
    )
}

/// Solve one boundary condition over (lmin, lmax] and return the result with
/// the grid it solved on. The scan needs a strictly positive lower end; a
/// requested 0 becomes 0.05, far below any desk-scale fundamental tone.
fn solve_one(
    domain: &Arc<Domain>,
    bc: &BcKind,
    lmin: f64,
    lmax: f64,
    policy: &ScanPolicy,
) -> Result<(SpectrumResult, BoundaryGrid)> {
    let lmin = lmin.max(0.05);
    let mut results = solve_spectrum_many(domain, std::slice::from_ref(bc), lmin, lmax, policy)?;
    let result = results.pop().ok_or_else(|| anyhow!("solver returned no result"))?;
    let grid = grid::make_grid_n(domain, result.grid_n)?;
    Ok((result, grid))
}

fn parse_phase_point(text: &str) -> Result<PhasePoint> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        bail!("--start expects `s,eta`, got {text:?}");
    }
    let s: f64 = parts[0].trim().parse().context("bad arclength in --start")?;
    let eta: f64 = parts[1].trim().parse().context("bad momentum in --start")?;
    if !(-1.0..=1.0).contains(&eta) {
        bail!("tangential momentum must lie in [-1, 1], got {eta}");
    }
    Ok(PhasePoint::new(s, eta))
}

fn parse_float_list(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("bad {what} entry {t:?}"))
        })
        .collect()
}

fn parse_windows(text: &str, n_states: usize) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("window {part:?} is not `start:end`"))?;
        let start: usize = a.trim().parse().context("bad window start")?;
        let end: usize = b.trim().parse().context("bad window end")?;
        if start < 1 || end < start || end > n_states {
            bail!("window {part:?} is out of range for {n_states} states");
        }
        out.push(Window::new(&format!("{start}:{end}"), start, end));
    }
    Ok(out)
}

/// Default windows when none are given: the acceptance split 1–25 / 26–100
/// when enough states exist, otherwise halves.
fn default_windows(n_states: usize) -> Vec<Window> {
    if n_states >= 100 {
        vec![
            Window::new("early", 1, 25),
            Window::new("late", 26, n_states.min(100)),
        ]
    } else if n_states >= 4 {
        let half = n_states / 2;
        vec![
            Window::new("early", 1, half),
            Window::new("late", half + 1, n_states),
        ]
    } else if n_states >= 1 {
        vec![Window::new("all", 1, n_states)]
    } else {
        Vec::new()
    }
}

fn cmd_billiard(cli: &Cli, domain: &str, start: &str, steps: usize) -> Result<(RunOutput, Summary)> {
    let cfg = load_domain(domain)?;
    let dom = cfg.domain.clone();
    let q0 = parse_phase_point(start)?;
    let orbit = billiard::orbit(&dom, q0, steps)?;

    // The generating relation is checked at every completed step.
    let mut worst_gen = 0.0f64;
    for q in &orbit.points[..orbit.points.len().saturating_sub(1)] {
        worst_gen = worst_gen.max(billiard::generating_check(&dom, *q)?);
    }

    let policy = ScanPolicy::default();
    let seed = effective_seed(cli, &cfg);
    let mut manifest = manifest_for("billiard", &cfg, &[], 0.0, 0.0, &policy, seed);
    manifest.option("start", start);
    manifest.option("steps", &steps.to_string());

    let mut summary = Summary::new();
    summary
        .meta_str("domain", &cfg.name)
        .meta_str("termination", &termination_label(&orbit.termination))
        .meta_u64("completed_steps", orbit.steps() as u64)
        .meta_f64("worst_generating_residual", worst_gen);
    summary.push(Check::upper_bound("generating_relation", worst_gen, 1e-10));

    let mut output = RunOutput::new(manifest);
    output.csv("orbit", &orbit_table(&dom, &orbit)?);
    Ok((output, summary))
}

fn cmd_classical(cli: &Cli, domain: &str, observable: &str, alpha: f64) -> Result<(RunOutput, Summary)> {
    use rand::SeedableRng;

    let cfg = load_domain(domain)?;
    let dom = cfg.domain.clone();
    let a = classical::parse_observable(observable, dom.length()).map_err(|e| anyhow!(e))?;
    let seed = effective_seed(cli, &cfg);

    let psirobin = MeasureKind::psi_robin(Symbol::eta_abs(alpha))?;
    let kinds: Vec<(&str, MeasureKind)> = vec![
        ("neumann", MeasureKind::Neumann),
        ("dirichlet", MeasureKind::Dirichlet),
        ("robin", MeasureKind::Robin),
        ("psirobin", psirobin),
    ];

    let mut omega_tbl = ergotrace::report::Table::new(&["measure", "omega_re", "omega_im"]);
    let one = Symbol::one();
    let mut summary = Summary::new();
    summary
        .meta_str("domain", &cfg.name)
        .meta_str("observable", observable)
        .meta_f64("length", dom.length())
        .meta_f64("area", dom.area());

    for (label, kind) in &kinds {
        let w = classical::omega(kind, &a, &dom);
        omega_tbl.push_row(vec![
            label.to_string(),
            ergotrace::report::float_cell(w.re),
            ergotrace::report::float_cell(w.im),
        ])?;
        // ω(1) closed forms: 2L/A for γ⁻¹-weighted measures, L/A for the
        // γ-weighted Dirichlet measure (Ψ¹-Robin has no such form).
        let w1 = classical::omega(kind, &one, &dom).re;
        summary.meta_f64(&format!("omega_one_{label}"), w1);
        match label {
            &"neumann" | &"robin" => {
                let target = 2.0 * dom.length() / dom.area();
                summary.push(Check::relative(&format!("omega_one_{label}"), w1, target, 1e-10));
            }
            &"dirichlet" => {
                let target = dom.length() / dom.area();
                summary.push(Check::relative("omega_one_dirichlet", w1, target, 1e-10));
            }
            _ => {}
        }
    }

    // Mean-ergodic contrast: Monte-Carlo distance of the finite transfer
    // average from its closed-form projection, at increasing step counts.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let checkpoints = [10usize, 100, 1000];
    let dists = classical::mean_ergodic_distances(
        &MeasureKind::Neumann,
        &a,
        &dom,
        &checkpoints,
        4096,
        &mut rng,
    )?;
    let mut erg_tbl = ergotrace::report::Table::new(&["steps", "distance"]);
    for (n, d) in checkpoints.iter().zip(&dists) {
        erg_tbl.push_row(vec![
            ergotrace::report::int_cell(*n as i64),
            ergotrace::report::float_cell(*d),
        ])?;
    }
    summary
        .meta_f64("mean_ergodic_distance_10", dists[0])
        .meta_f64("mean_ergodic_distance_1000", dists[2]);
    summary.push(Check::upper_bound(
        "mean_ergodic_decay_3x",
        dists[2],
        dists[0] / 3.0,
    ));

    let policy = ScanPolicy::default();
    let mut manifest = manifest_for("classical", &cfg, &[], 0.0, 0.0, &policy, seed);
    manifest.option("observable", observable);
    manifest.option("alpha", &alpha.to_string());

    let mut output = RunOutput::new(manifest);
    output.csv("omega", &omega_tbl);
    output.csv("ergodic", &erg_tbl);
    Ok((output, summary))
}

#[allow(clippy::too_many_arguments)]
fn cmd_spectrum(
    cli: &Cli,
    domain: &str,
    bc: &str,
    lmin: f64,
    lmax: f64,
    ppw: Option<f64>,
    n: Option<usize>,
    dump: bool,
) -> Result<(RunOutput, Summary)> {
    let cfg = load_domain(domain)?;
    let dom = Arc::new(cfg.domain.clone());
    let bck = BcKind::parse(bc).map_err(|e| anyhow!(e))?;
    let policy = build_policy(&cfg, ppw, n);
    let seed = effective_seed(cli, &cfg);

    let (result, grid_obj) = solve_one(&dom, &bck, lmin, lmax, &policy)?;

    let mut manifest = manifest_for("spectrum", &cfg, &[bck.label()], lmin, lmax, &policy, seed);
    manifest.option("dump", &dump.to_string());

    let mut summary = Summary::new();
    summary
        .meta_str("domain", &cfg.name)
        .meta_str("bc", &bck.label())
        .meta_u64("grid_n", result.grid_n as u64)
        .meta_u64("states", result.pairs.len() as u64)
        .meta_u64("rescans", result.audit.rescans as u64)
        .meta_f64(
            "weyl_prediction",
            weyl_prediction(&dom, &bck, lmax) - weyl_prediction(&dom, &bck, lmin),
        );
    summary.push(Check::flag("weyl_audit", result.audit.passed));
    let worst_op = result
        .pairs
        .iter()
        .map(|p| p.operator_residual)
        .fold(0.0f64, f64::max);
    summary.meta_f64("worst_operator_residual", worst_op);

    let mut output = RunOutput::new(manifest);
    output.csv("spectrum", &spectrum_table(&result)?);
    output.csv("scan", &scan_table(&result)?);

    if dump {
        for (k, pair) in result.pairs.iter().enumerate().filter(|(_, p)| p.cluster_index == 0) {
            let m = characteristic_matrix(&bck, pair.lambda, &grid_obj)?;
            let name = format!("matrix_{k:04}.bin");
            let dir = cli.out.join(output.manifest.short_hash()?);
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            m.dump(&dir.join(&name))?;
        }
    }
    Ok((output, summary))
}

#[allow(clippy::too_many_arguments)]
fn cmd_qe(
    cli: &Cli,
    domain: &str,
    bc: &str,
    lmin: f64,
    lmax: f64,
    lcut: Option<f64>,
    observable: &str,
    windows: &Option<String>,
    ppw: Option<f64>,
    n: Option<usize>,
) -> Result<(RunOutput, Summary)> {
    let cfg = load_domain(domain)?;
    let dom = Arc::new(cfg.domain.clone());
    let bck = BcKind::parse(bc).map_err(|e| anyhow!(e))?;
    let a = classical::parse_observable(observable, dom.length()).map_err(|e| anyhow!(e))?;
    let policy = build_policy(&cfg, ppw, n);
    let seed = effective_seed(cli, &cfg);
    let lambda_cut = lcut.unwrap_or(lmax);

    let (result, grid_obj) = solve_one(&dom, &bck, lmin, lmax, &policy)?;
    let report = qe::matrix_elements(&grid_obj, &result, &a)?;
    let wa = qe::weyl_average(&report, lambda_cut)?;

    let wins = match windows {
        Some(text) => parse_windows(text, report.rows.len())?,
        None => default_windows(report.rows.len()),
    };
    let variances = qe::qe_variance(&report, &wins)?;
    let norms = qe::norm_limit(&report, &wins)?;

    let mut manifest = manifest_for("qe", &cfg, &[bck.label()], lmin, lmax, &policy, seed);
    manifest.option("observable", observable);
    manifest.option("lambda_cut", &format!("{lambda_cut}"));
    if let Some(w) = windows {
        manifest.option("windows", w);
    }

    let mut summary = Summary::new();
    summary
        .meta_str("domain", &cfg.name)
        .meta_str("bc", &bck.label())
        .meta_str("observable", observable)
        .meta_u64("states", report.rows.len() as u64)
        .meta_f64("lambda_cut", wa.lambda_cut)
        .meta_f64("cesaro_average", wa.average)
        .meta_f64("target", wa.target)
        .meta_f64("omega_one", report.omega_one);
    summary.push(Check::flag("weyl_audit", report.audit_passed));
    summary.push(Check::relative("cesaro_vs_omega", wa.average, wa.target, 0.15));
    for w in &norms {
        summary.meta_f64(&format!("norm_mean_{}", w.label), w.mean);
    }
    for w in &variances {
        summary.meta_f64(&format!("variance_{}", w.label), w.normalized);
    }

    let mut output = RunOutput::new(manifest);
    output.csv("qe", &qe_table(&report)?);
    output.csv("variance", &variance_table(&variances)?);
    output.csv("norms", &norm_table(&norms)?);
    Ok((output, summary))
}

fn cmd_egorov(
    cli: &Cli,
    domain: &str,
    bc: &str,
    observable: &str,
    lambdas: &str,
    ppw: f64,
) -> Result<(RunOutput, Summary)> {
    let cfg = load_domain(domain)?;
    let dom = Arc::new(cfg.domain.clone());
    let bck = BcKind::parse(bc).map_err(|e| anyhow!(e))?;
    let a = classical::parse_observable(observable, dom.length()).map_err(|e| anyhow!(e))?;
    let lams = parse_float_list(lambdas, "lambda")?;
    if lams.is_empty() {
        bail!("--lambdas needs at least one wavenumber");
    }
    let seed = effective_seed(cli, &cfg);

    let points = qe::egorov_residual(&dom, &bck, &a, &lams, ppw, seed)?;
    let slope = qe::fit_log_slope(&points);

    let lo = lams.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lams.iter().cloned().fold(0.0f64, f64::max);
    let policy = ScanPolicy {
        ppw,
        ..ScanPolicy::default()
    };
    let mut manifest = manifest_for("egorov", &cfg, &[bck.label()], lo, hi, &policy, seed);
    manifest.option("observable", observable);
    manifest.option("lambdas", lambdas);

    let mut summary = Summary::new();
    summary
        .meta_str("domain", &cfg.name)
        .meta_str("bc", &bck.label())
        .meta_str("observable", observable);
    let worst_corner = points.iter().map(|p| p.corner_fraction).fold(0.0f64, f64::max);
    summary.meta_f64("worst_corner_fraction", worst_corner);
    match slope {
        Some(m) => {
            summary.meta_f64("slope", m);
            summary.push(Check::absolute("residual_slope", m, -1.0, 0.3));
        }
        None => {
            summary.push(Check::flag("residual_slope_defined", false));
        }
    }

    let mut output = RunOutput::new(manifest);
    output.csv("egorov", &egorov_table(&points)?);
    Ok((output, summary))
}

#[allow(clippy::too_many_arguments)]
fn cmd_rellich(
    cli: &Cli,
    domain: &str,
    lmin: f64,
    lmax: f64,
    count: Option<usize>,
    tol: f64,
    ppw: Option<f64>,
    n: Option<usize>,
) -> Result<(RunOutput, Summary)> {
    let cfg = load_domain(domain)?;
    let dom = Arc::new(cfg.domain.clone());
    let policy = build_policy(&cfg, ppw, n);
    let seed = effective_seed(cli, &cfg);

    let (result, grid_obj) = solve_one(&dom, &BcKind::Dirichlet, lmin, lmax, &policy)?;
    let kept = count.unwrap_or(result.pairs.len()).min(result.pairs.len());
    let report = qe::rellich_check(&grid_obj, &result.pairs[..kept])?;

    let mut manifest = manifest_for(
        "rellich",
        &cfg,
        &[BcKind::Dirichlet.label()],
        lmin,
        lmax,
        &policy,
        seed,
    );
    manifest.option("count", &kept.to_string());
    manifest.option("tol", &format!("{tol}"));

    let worst = report.rows.iter().map(|r| r.rel_error).fold(0.0f64, f64::max);
    let bounds_ok = report.rows.iter().all(|r| r.norm_bound_ok);

    let mut summary = Summary::new();
    summary
        .meta_str("domain", &cfg.name)
        .meta_u64("states", report.rows.len() as u64)
        .meta_f64("min_x_nu", report.min_xnu)
        .meta_f64("max_x_nu", report.max_xnu)
        .meta_f64("worst_rel_error", worst);
    summary.push(Check::flag("weyl_audit", result.audit.passed));
    summary.push(Check::upper_bound("rellich_identity", worst, tol));
    summary.push(Check::flag("norm_bounds", bounds_ok));

    let mut output = RunOutput::new(manifest);
    output.csv("rellich", &rellich_table(&report)?);
    output.csv("spectrum", &spectrum_table(&result)?);
    Ok((output, summary))
}

#[allow(clippy::too_many_arguments)]
fn cmd_heat(
    cli: &Cli,
    domain: &str,
    mode: &str,
    bc: &str,
    times: &str,
    lmax: f64,
    observable: Option<&str>,
    tol: f64,
    ppw: Option<f64>,
    n: Option<usize>,
) -> Result<(RunOutput, Summary)> {
    let cfg = load_domain(domain)?;
    let dom = Arc::new(cfg.domain.clone());
    let heat_mode = match mode {
        "boundary" => HeatMode::Boundary,
        "dirichlet-tilde" => HeatMode::DirichletTilde,
        other => bail!("unknown heat mode {other:?}; expected boundary or dirichlet-tilde"),
    };
    let bck = match heat_mode {
        HeatMode::DirichletTilde => BcKind::Dirichlet,
        HeatMode::Boundary => BcKind::parse(bc).map_err(|e| anyhow!(e))?,
    };
    let t_list = parse_float_list(times, "time")?;
    if t_list.is_empty() {
        bail!("--times needs at least one time");
    }
    let phi = observable
        .map(|text| classical::parse_observable(text, dom.length()).map_err(|e| anyhow!(e)))
        .transpose()?;
    let policy = build_policy(&cfg, ppw, n);
    let seed = effective_seed(cli, &cfg);

    let (result, grid_obj) = solve_one(&dom, &bck, 0.0, lmax, &policy)?;
    let rows = qe::heat_trace(&grid_obj, &result, &t_list, heat_mode, phi.as_ref())?;

    let mut manifest = manifest_for("heat", &cfg, &[bck.label()], 0.0, lmax, &policy, seed);
    manifest.option("mode", mode);
    manifest.option("times", times);
    if let Some(text) = observable {
        manifest.option("observable", text);
    }

    let mut summary = Summary::new();
    summary
        .meta_str("domain", &cfg.name)
        .meta_str("mode", mode)
        .meta_str("bc", &bck.label())
        .meta_u64("states", result.pairs.len() as u64);
    summary.push(Check::flag("weyl_audit", result.audit.passed));
    for row in &rows {
        summary.push(Check::relative(
            &format!("heat_trace_t_{}", row.t),
            row.trace,
            row.target,
            tol,
        ));
    }

    let mut output = RunOutput::new(manifest);
    output.csv("heat", &heat_table(&rows)?);
    output.csv("spectrum", &spectrum_table(&result)?);
    Ok((output, summary))
}
