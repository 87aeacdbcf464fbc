//! Exact Gibbs distribution of a small spin glass: partition function,
//! magnetisations, covariances and the pinned influence matrix.

use spinlab::gibbs_exact::{exact_distribution, influence_matrix, GibbsModel, Pinning, DEFAULT_ENUMERATION_CAP};
use spinlab::random_graph::{couplings_sample, sample_gnp, CouplingDist};
use spinlab::rng::stream_rng;

fn main() -> spinlab::Result<()> {
    let mut rng = stream_rng(42, 0);
    let g = sample_gnp(10, 3.0, &mut rng)?;
    let c = couplings_sample(&g, CouplingDist::Gaussian, &mut rng);
    let field = vec![0.1; g.n()];
    let model = GibbsModel::new(g, c, 0.8, field)?;

    let dist = exact_distribution(&model, DEFAULT_ENUMERATION_CAP)?;
    println!("{} spins, {} edges, log Z = {:.6}", model.n(), model.graph().m(), dist.log_partition());
    for (v, m) in dist.marginals().iter().enumerate() {
        println!("  E[σ_{v}] = {m:+.4}");
    }
    let cov = dist.covariance();
    println!("largest off-diagonal |Cov| = {:.4}", (0..model.n())
        .flat_map(|u| (0..model.n()).filter(move |&v| v != u).map(move |v| (u, v)))
        .map(|(u, v)| cov[(u, v)].abs())
        .fold(0.0, f64::max));

    let mut pinning = Pinning::new();
    pinning.insert(0, 1);
    let infl = influence_matrix(&model, &pinning, DEFAULT_ENUMERATION_CAP)?;
    if let Some(x) = infl.get(1, 2) {
        println!("influence of vertex 1 on vertex 2 with σ_0 = +: {x:+.4}");
    }
    Ok(())
}
