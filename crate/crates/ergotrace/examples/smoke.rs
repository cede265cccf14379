//! Development smoke test: exercises the kernel→grid→operator→eigensolve→
//! field pipeline on the disk and square against closed forms.

use ergotrace::eigensolve::{characteristic_matrix, sigma_min, solve_spectrum_many, ScanPolicy};
use ergotrace::field;
use ergotrace::geometry::{unit_disk, unit_square};
use ergotrace::grid::make_grid_n;
use ergotrace::BcKind;
use std::sync::Arc;

fn main() {
    let disk = Arc::new(unit_disk());
    let grid = make_grid_n(&disk, 256).unwrap();

    let checks: Vec<(&str, BcKind, f64, f64)> = vec![
        ("Neumann at j'_{1,1}", BcKind::Neumann, 1.841183781340659, 5e-6),
        ("Dirichlet at j_{0,1}", BcKind::Dirichlet, 2.404825557695773, 5e-6),
        ("Robin(1) root", BcKind::Robin { kappa: 1.0 }, 1.255783711794594, 5e-6),
        ("PsiRobin(1) m=1 at j_{0,1}", BcKind::PsiRobin { alpha: 1.0 }, 2.404825557695773, 5e-6),
        ("PsiRobin(1) m=0 at j_{1,1}", BcKind::PsiRobin { alpha: 1.0 }, 3.831705970207512, 5e-6),
    ];
    for (name, bc, lambda, tol) in checks {
        let m = characteristic_matrix(&bc, lambda, &grid).unwrap();
        let s = sigma_min(&m.entries).unwrap();
        println!(
            "[{}] sigma_min({name}) = {s:.3e} (tol {tol:.0e})",
            if s < tol { "PASS" } else { "FAIL" }
        );
    }
    // Off-eigenvalue control.
    let m = characteristic_matrix(&BcKind::Neumann, 3.5, &grid).unwrap();
    let s = sigma_min(&m.entries).unwrap();
    println!(
        "[{}] sigma_min(Neumann at 3.5) = {s:.3e} (want > 0.05)",
        if s > 0.05 { "PASS" } else { "FAIL" }
    );

    // Full spectral solve on [0.5, 5] for Neumann and Dirichlet.
    let policy = ScanPolicy {
        n_fixed: Some(256),
        ..ScanPolicy::default()
    };
    let results = solve_spectrum_many(
        &disk,
        &[BcKind::Neumann, BcKind::Dirichlet],
        0.5,
        5.0,
        &policy,
    )
    .unwrap();
    let want_neu: &[(f64, usize)] = &[
        (1.841183781340659, 2),
        (3.054236928227140, 2),
        (3.831705970207512, 1),
        (4.201188941210528, 2),
    ];
    let want_dir: &[(f64, usize)] = &[
        (2.404825557695773, 1),
        (3.831705970207512, 2),
    ];
    for (res, want) in results.iter().zip([want_neu, want_dir]) {
        let label = res.bc.label();
        let mut clusters: Vec<(f64, usize)> = Vec::new();
        for p in &res.pairs {
            if let Some(last) = clusters.last_mut() {
                if (last.0 - p.lambda).abs() < 1e-6 {
                    last.1 += 1;
                    continue;
                }
            }
            clusters.push((p.lambda, 1));
        }
        let ok = clusters.len() == want.len()
            && clusters
                .iter()
                .zip(want)
                .all(|(got, w)| (got.0 - w.0).abs() < 1e-6 && got.1 == w.1);
        println!(
            "[{}] {label} spectrum on [0.5,5]: got {clusters:?}, want {want:?}, audit passed={}",
            if ok { "PASS" } else { "FAIL" },
            res.audit.passed
        );
        for p in &res.pairs {
            println!(
                "    lambda={:.9} mult={} sigma={:.2e} bc_res={:.2e} pde_res={:.2e} quality={:.2e}",
                p.lambda, p.multiplicity, p.sigma_min, p.bc_residual, p.pde_residual, p.norm_quality
            );
        }
        // Normalization closed forms: boundary norms of normalized traces.
        for p in &res.pairs {
            let norm2 = grid.norm(&p.trace).powi(2);
            let want_norm2 = match res.bc {
                BcKind::Neumann => {
                    // 2/(1−m²/λ²); infer m from multiplicity/cluster values
                    let m = match p.lambda {
                        x if (x - 1.841183781340659).abs() < 1e-6 => 1.0,
                        x if (x - 3.054236928227140).abs() < 1e-6 => 2.0,
                        x if (x - 3.831705970207512).abs() < 1e-6 => 0.0,
                        _ => 3.0,
                    };
                    2.0 / (1.0 - m * m / (p.lambda * p.lambda))
                }
                BcKind::Dirichlet => 2.0 * p.lambda * p.lambda,
                _ => unreachable!(),
            };
            let rel = (norm2 - want_norm2).abs() / want_norm2;
            println!(
                "    [{}] boundary norm^2 at {:.4}: got {:.6}, want {:.6} (rel {:.1e})",
                if rel < 1e-4 { "PASS" } else { "FAIL" },
                p.lambda,
                norm2,
                want_norm2,
                rel
            );
        }
    }

    // Interior field ratio for the Dirichlet ground state: u ∝ J0(λ|z|).
    let dir = &results[1].pairs[0];
    let u_half = field::interior_field(
        &BcKind::Dirichlet,
        dir.lambda,
        &grid,
        &dir.trace,
        [0.5, 0.0],
    )
    .unwrap();
    let u_zero = field::interior_field(
        &BcKind::Dirichlet,
        dir.lambda,
        &grid,
        &dir.trace,
        [0.0, 0.0],
    )
    .unwrap();
    let got = (u_half.value / u_zero.value).re;
    let want = ergotrace::kernels::bessel(ergotrace::kernels::BesselFamily::J0, dir.lambda * 0.5)
        .unwrap();
    println!(
        "[{}] Dirichlet ground interior ratio: got {got:.9}, want {want:.9}",
        if (got - want).abs() < 1e-6 { "PASS" } else { "FAIL" }
    );

    // Square Dirichlet on [4, 8]: pi*sqrt(2) simple, pi*sqrt(5) double.
    let square = Arc::new(unit_square());
    let policy = ScanPolicy {
        n_fixed: Some(64),
        ..ScanPolicy::default()
    };
    let results = solve_spectrum_many(&square, &[BcKind::Dirichlet], 4.0, 8.0, &policy).unwrap();
    let res = &results[0];
    let sq_grid = make_grid_n(&square, res.grid_n).unwrap();
    println!("square Dirichlet [4,8]: audit passed={}", res.audit.passed);
    for p in &res.pairs {
        let norm2 = sq_grid.norm(&p.trace).powi(2);
        println!(
            "    lambda={:.9} mult={} sigma={:.2e} bc_res={:.2e} pde_res={:.2e} |v|^2/lam^2={:.6}",
            p.lambda,
            p.multiplicity,
            p.sigma_min,
            p.bc_residual,
            p.pde_residual,
            norm2 / (p.lambda * p.lambda)
        );
    }
    let want = [
        (std::f64::consts::PI * 2.0f64.sqrt(), 1usize),
        (std::f64::consts::PI * 5.0f64.sqrt(), 2usize),
    ];
    println!(
        "    want lambda = {:.9} (x1), {:.9} (x2)",
        want[0].0, want[1].0
    );
}
