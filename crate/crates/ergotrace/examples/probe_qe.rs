//! Scratch probe for the spectral-statistics harness on the unit disk.

use std::sync::Arc;

use ergotrace::classical::Symbol;
use ergotrace::eigensolve::{solve_spectrum_many, ScanPolicy};
use ergotrace::geometry;
use ergotrace::qe::{self, HeatMode, Window};
use ergotrace::BcKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let disk = Arc::new(geometry::unit_disk());
    let length = disk.length();

    // --- Egorov residual decay on the disk --------------------------------
    let a = Symbol::product(&Symbol::fourier_cos(1, length), &Symbol::eta_bump(0.5, 0.2));
    let t0 = std::time::Instant::now();
    let pts = qe::egorov_residual(&disk, &BcKind::Neumann, &a, &[20.0, 40.0, 80.0], 10.0, 7)?;
    for p in &pts {
        println!(
            "egorov lambda {:5.1}  n {:4}  residual {:.6e}  corner_frac {:.3e}",
            p.lambda, p.grid_n, p.residual, p.corner_fraction
        );
    }
    for w in pts.windows(2) {
        println!(
            "  pair slope {:.4}",
            (w[1].residual / w[0].residual).ln() / (w[1].lambda / w[0].lambda).ln()
        );
    }
    println!(
        "  fit slope {:?}   ({:.1?}s)",
        qe::fit_log_slope(&pts),
        t0.elapsed().as_secs_f64()
    );

    // --- Matrix elements / identities on a small disk run -----------------
    let policy = ScanPolicy {
        n_fixed: Some(128),
        ..ScanPolicy::default()
    };
    let t0 = std::time::Instant::now();
    let results = solve_spectrum_many(
        &disk,
        &[BcKind::Neumann, BcKind::Dirichlet],
        0.5,
        8.0,
        &policy,
    )?;
    println!(
        "solve (0.5, 8.0] N=128: {} + {} states ({:.1}s) audits {} {}",
        results[0].pairs.len(),
        results[1].pairs.len(),
        t0.elapsed().as_secs_f64(),
        results[0].audit.passed,
        results[1].audit.passed
    );
    let grid = ergotrace::grid::make_grid_n(&disk, 128)?;

    for res in &results {
        let one = qe::matrix_elements(&grid, res, &Symbol::one())?;
        let max_gap = one
            .rows
            .iter()
            .map(|r| (r.rho - r.norm_sq).abs())
            .fold(0.0f64, f64::max);
        let max_im = one
            .rows
            .iter()
            .map(|r| r.rho_im.abs())
            .fold(0.0f64, f64::max);
        println!(
            "{}: a=1 rows vs norm_sq max gap {:.3e}, max |Im rho| {:.3e}, omega {:.6}",
            res.bc.label(),
            max_gap,
            max_im,
            one.omega_target
        );
        let wa = qe::weyl_average(&one, 8.0)?;
        println!(
            "  weyl_average(1, 8.0) = {:.6} over {} states (target {:.4})",
            wa.average, wa.count, wa.target
        );
        let nl = qe::norm_limit(&one, &[Window::new("all", 1, one.rows.len())])?;
        println!(
            "  norm window mean {:.6} +- {:.3e} (consistency gap {:.3e})",
            nl[0].mean,
            nl[0].std_error,
            (nl[0].mean - wa.average).abs()
        );
        let bump = qe::matrix_elements(&grid, res, &Symbol::eta_bump(0.5, 0.2))?;
        let var = qe::qe_variance(&bump, &[Window::new("all", 1, bump.rows.len())])?;
        println!(
            "  eta-bump omega {:.6}, last cesaro {:.6}, window variance {:.4e} / raw {:.4e}",
            bump.omega_target,
            bump.rows.last().map(|r| r.cesaro).unwrap_or(0.0),
            var[0].normalized,
            var[0].unnormalized
        );
    }

    // --- Rellich on the Dirichlet run --------------------------------------
    let rr = qe::rellich_check(&grid, &results[1].pairs)?;
    let worst = rr.rows.iter().map(|r| r.rel_error).fold(0.0f64, f64::max);
    let bounds_ok = rr.rows.iter().all(|r| r.norm_bound_ok);
    println!(
        "rellich: {} states, worst rel_error {:.3e}, xnu range [{:.3}, {:.3}], bounds ok {}",
        rr.rows.len(),
        worst,
        rr.min_xnu,
        rr.max_xnu,
        bounds_ok
    );

    // --- Heat traces --------------------------------------------------------
    // Guard: lambda_max = 8 here, t >= 18.5/64 = 0.289.
    let hn = qe::heat_trace(&grid, &results[0], &[0.3, 0.5], HeatMode::Boundary, None)?;
    for h in &hn {
        println!(
            "heat neumann t {:.2}: trace {:.4} target {:.4} ratio {:.4} ({} states)",
            h.t, h.trace, h.target, h.ratio, h.count
        );
    }
    let hd = qe::heat_trace(&grid, &results[1], &[0.3], HeatMode::DirichletTilde, None)?;
    println!(
        "heat dirichlet-tilde t 0.30: trace {:.4} target {:.4} ratio {:.4}",
        hd[0].trace, hd[0].target, hd[0].ratio
    );
    match qe::heat_trace(&grid, &results[0], &[0.1], HeatMode::Boundary, None) {
        Err(e) => println!("heat guard refuses t=0.1: {e}"),
        Ok(_) => println!("heat guard FAILED to refuse t=0.1"),
    }

    Ok(())
}
