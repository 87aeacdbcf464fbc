//! Non-backtracking spectra: the determinant identity, Bethe–Hessian
//! positivity, the norm bound and the χ-weighted block norm.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use spinlab::linalg::sym_operator_norm;
use spinlab::random_graph::SparseGraph;
use spinlab::rng::stream_rng;
use spinlab::spectral::{
    bethe_hessian_mineig, boundw_bound, chi_weighted_block_norm, copies_matrix_norm, ihara_bass_residual,
    nonbacktracking_matrix, path_product_matrix,
};
use spinlab::walk_trees::build_ap_tree;

fn main() -> spinlab::Result<()> {
    let mut rng = stream_rng(5, 0);
    let n = 10;
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < 0.4 {
                let x: f64 = rng.sample(StandardNormal);
                q[(i, j)] = x;
                q[(j, i)] = x;
            }
        }
    }
    let rho = nonbacktracking_matrix(&q)?.spectral_radius()?;
    let lambda = rho.max(q.amax());
    println!("ρ(B) = {rho:.5}, max |Q| = {:.5}, ‖Q‖₂ = {:.5}", q.amax(), sym_operator_norm(&q)?);
    for frac in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let t = frac / lambda;
        let r = ihara_bass_residual(&q, t)?;
        println!("t = {t:+.4}: identity residual {:.2e}, Bethe–Hessian min eigenvalue {:.4}", r.relative, bethe_hessian_mineig(&q, t)?);
    }
    println!("norm bound (δ = 0.1): {:.5}", boundw_bound(&q, 0.1, q.amax())?);

    let g = SparseGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5)])?;
    let tree = build_ap_tree(&g, 5)?;
    let gammas: Vec<f64> = tree.nodes().iter().map(|z| if z.edge.is_some() { 0.4 } else { 0.0 }).collect();
    let y = path_product_matrix(&tree, &gammas);
    println!(
        "block of {} tree nodes: ‖Y‖₂ = {:.4} ≤ χ-bound {:.4}; ‖K‖₂ = {:.4}",
        tree.len(),
        sym_operator_norm(&y)?,
        chi_weighted_block_norm(&tree, &gammas, 0.1)?,
        copies_matrix_norm(&tree, 6)?
    );
    Ok(())
}
