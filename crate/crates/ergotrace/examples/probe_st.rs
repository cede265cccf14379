//! Scratch probe: stadium solve cost and health on a mid-λ slice.

use std::sync::Arc;

use ergotrace::eigensolve::{solve_spectrum_many, weyl_prediction, ScanPolicy};
use ergotrace::geometry;
use ergotrace::BcKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let st = Arc::new(geometry::stadium(1.0, 1.0));
    println!(
        "stadium: L {:.6} A {:.6} corners {:?}",
        st.length(),
        st.area(),
        st.corners()
    );
    let grid = ergotrace::grid::make_grid_n(&st, 328)?;
    println!("grid n {} uniform {}", grid.len(), grid.is_uniform());

    let bcs = [
        BcKind::Neumann,
        BcKind::Dirichlet,
        BcKind::Robin { kappa: 1.0 },
    ];
    let policy = ScanPolicy {
        n_fixed: Some(328),
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let results = solve_spectrum_many(&st, &bcs, 14.0, 15.5, &policy)?;
    let dt = t0.elapsed().as_secs_f64();
    for r in &results {
        let pred =
            weyl_prediction(&st, &r.bc, 15.5) - weyl_prediction(&st, &r.bc, 14.0);
        let worst_bc = r.pairs.iter().map(|p| p.bc_residual).fold(0.0f64, f64::max);
        let worst_op = r
            .pairs
            .iter()
            .map(|p| p.operator_residual)
            .fold(0.0f64, f64::max);
        let worst_nq = r.pairs.iter().map(|p| p.norm_quality).fold(0.0f64, f64::max);
        println!(
            "{:<12} states {:3} (weyl {:6.1}) audit {} rescans {} | worst op_res {:.2e} bc_res {:.2e} norm_q {:.2e}",
            r.bc.label(),
            r.pairs.len(),
            pred,
            r.audit.passed,
            r.audit.rescans,
            worst_op,
            worst_bc,
            worst_nq
        );
    }
    println!(
        "slice (14.0, 15.5] x3bc took {:.1}s, scan pts {}",
        dt,
        results[0].scan.lambdas.len()
    );
    Ok(())
}
