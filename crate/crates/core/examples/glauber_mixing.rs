//! Heat-bath Glauber dynamics: exact relaxation and mixing times, the
//! worst-start total-variation curve, and the block-dynamics comparison.

use spinlab::gibbs_exact::{exact_from_pairs, GibbsModel};
use spinlab::glauber::{chain_diagnostics, comparison_check, HeatBath, TRANSITION_CAP};
use spinlab::random_graph::{couplings_sample, sample_gnp, CouplingDist};
use spinlab::rng::stream_rng;

fn main() -> spinlab::Result<()> {
    let mut rng = stream_rng(7, 0);
    let g = sample_gnp(8, 2.5, &mut rng)?;
    let c = couplings_sample(&g, CouplingDist::Gaussian, &mut rng);
    let model = GibbsModel::zero_field(g, c, 0.7)?;

    let diag = chain_diagnostics(&model, 1.0 / (2.0 * std::f64::consts::E), 10_000)?;
    println!("relaxation time {:.3} steps, mixing time {} steps", diag.relaxation_time, diag.mixing_time);
    for (t, tv) in diag.tv_curve.iter().enumerate().step_by((diag.tv_curve.len() / 8).max(1)) {
        println!("  t = {:>4}  worst TV = {tv:.5}", t + 1);
    }

    let pairs = model.pair_model();
    let halves = vec![(0..4).collect::<Vec<_>>(), (3..8).collect()];
    let report = comparison_check(&pairs, &halves)?;
    println!(
        "comparison: τ_glauber/n = {:.3} ≤ {:.3} (block · local · multiplicity): {}",
        report.glauber_continuous,
        report.continuous_bound(),
        report.holds()
    );

    let exact = exact_from_pairs(&pairs, TRANSITION_CAP)?.marginals();
    let chain = HeatBath::new(&model);
    let mut spins = vec![1i8; model.n()];
    let mut acc = vec![0.0; model.n()];
    let sweeps = 50_000;
    for _ in 0..sweeps {
        chain.sweep(&mut spins, &mut rng);
        for (a, &s) in acc.iter_mut().zip(&spins) {
            *a += s as f64;
        }
    }
    for v in 0..model.n() {
        println!("  σ_{v}: chain {:+.4}  exact {:+.4}", acc[v] / sweeps as f64, exact[v]);
    }
    Ok(())
}
