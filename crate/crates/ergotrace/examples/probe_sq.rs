//! Scratch probe: σ landscape geometry on the unit square's graded grids.
//!
//! Measures, for several grid sizes, (a) the off-eigenvalue σ floor set by
//! corner-localized junk directions, and (b) the width and position of the
//! genuine dips at known eigenvalues — low/high λ, simple/double roots.

use std::sync::Arc;

use ergotrace::eigensolve::{characteristic_matrix, sigma_min};
use ergotrace::geometry;
use ergotrace::grid::make_grid_n;
use ergotrace::BcKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let square = Arc::new(geometry::unit_square());
    let pi = std::f64::consts::PI;
    let roots = [
        ("pi*sqrt2  (1,1) simple", pi * 2.0f64.sqrt()),
        ("pi*sqrt5  (1,2) double", pi * 5.0f64.sqrt()),
        ("pi*sqrt50 (5,5) simple", pi * 50.0f64.sqrt()),
        ("pi*sqrt61 (5,6) double", pi * 61.0f64.sqrt()),
    ];
    let deltas = [
        -3e-2, -1e-2, -3e-3, -1e-3, -3e-4, -1e-4, -3e-5, -1e-5, 0.0, 1e-5, 3e-5, 1e-4, 3e-4,
        1e-3, 3e-3, 1e-2, 3e-2,
    ];
    for &n in &[64usize, 128, 256] {
        let grid = make_grid_n(&square, n)?;
        let t0 = std::time::Instant::now();
        for &lam in &[5.0f64, 12.0, 23.0] {
            let m = characteristic_matrix(&BcKind::Dirichlet, lam, &grid)?;
            println!("n {n:3}  floor at lambda {lam:5.2}: {:.4e}", sigma_min(&m.entries)?);
        }
        for (label, lam0) in &roots {
            print!("n {n:3}  {label} @ {lam0:.6}:");
            for &d in &deltas {
                let m = characteristic_matrix(&BcKind::Dirichlet, lam0 + d, &grid)?;
                print!(" {:.1e}", sigma_min(&m.entries)?);
            }
            println!();
        }
        println!("n {n:3}  ({:.1}s)", t0.elapsed().as_secs_f64());
    }

    // Full pipeline at n=256 against the separable oracle, first 50 states.
    let mut oracle: Vec<f64> = Vec::new();
    for m in 1..12u32 {
        for k in 1..12u32 {
            let lam = pi * ((m * m + k * k) as f64).sqrt();
            if lam <= 26.0 {
                oracle.push(lam);
            }
        }
    }
    oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
    oracle.truncate(52);
    println!("oracle: {} states up to {:.6}", oracle.len(), oracle.last().unwrap());

    let t0 = std::time::Instant::now();
    let policy = ergotrace::eigensolve::ScanPolicy {
        n_fixed: Some(256),
        ..Default::default()
    };
    let res = ergotrace::eigensolve::solve_spectrum_many(
        &square,
        &[BcKind::Dirichlet],
        4.0,
        25.3,
        &policy,
    )?
    .pop()
    .unwrap();
    println!(
        "solve (4.0, 25.3] n=256: {} states in {:.1}s, audit {} (rescans {}), scan pts {}",
        res.pairs.len(),
        t0.elapsed().as_secs_f64(),
        res.audit.passed,
        res.audit.rescans,
        res.scan.lambdas.len()
    );
    let found: Vec<f64> = res.pairs.iter().map(|p| p.lambda).collect();
    let n_cmp = found.len().min(oracle.iter().filter(|&&l| l <= 25.3).count());
    let mut worst = 0.0f64;
    for i in 0..n_cmp {
        let rel = (found[i] - oracle[i]).abs() / oracle[i];
        if rel > worst {
            worst = rel;
        }
        if rel > 1e-4 {
            println!("  mismatch at state {}: found {:.8} oracle {:.8}", i + 1, found[i], oracle[i]);
        }
    }
    println!(
        "matched {} states, worst rel err {:.2e}; found {} vs oracle {}",
        n_cmp,
        worst,
        found.len(),
        oracle.iter().filter(|&&l| l <= 25.3).count()
    );
    let worst_bc = res.pairs.iter().map(|p| p.bc_residual).fold(0.0f64, f64::max);
    let worst_pde = res.pairs.iter().map(|p| p.pde_residual).fold(0.0f64, f64::max);
    let worst_nq = res.pairs.iter().map(|p| p.norm_quality).fold(0.0f64, f64::max);
    println!("worst bc_residual {worst_bc:.2e}, pde_residual {worst_pde:.2e}, norm_quality {worst_nq:.2e}");

    // Rellich over the first 50.
    let grid = make_grid_n(&square, 256)?;
    let rr = ergotrace::qe::rellich_check(&grid, &res.pairs)?;
    let worst_rel = rr.rows.iter().take(50).map(|r| r.rel_error).fold(0.0f64, f64::max);
    println!(
        "rellich first {}: worst rel_error {:.3e}, xnu [{:.3}, {:.3}], bounds ok {}",
        rr.rows.len().min(50),
        worst_rel,
        rr.min_xnu,
        rr.max_xnu,
        rr.rows.iter().take(50).all(|r| r.norm_bound_ok)
    );
    Ok(())
}
