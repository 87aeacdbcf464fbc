//! Good/bad split of the interaction matrix and the localisation path
//! `J_t = J̄ - t C²` on a partitioned instance.

use spinlab::block_partition::{partition_matrices, PartitionMatrices};
use spinlab::linalg::{max_eigenvalue, min_eigenvalue};
use spinlab::random_graph::interaction_matrix;
use spinlab::spectral::{fact_margin, localisation_matrices, random_fact_instance, LocalisationParams, ShiftForm};
use spinlab::rng::stream_rng;
use spinlab::verification::{pipeline_instance, PipelineSweep};
use spinlab::weights::WeightContext;
use spinlab::block_partition::partition_pipeline;

fn main() -> spinlab::Result<()> {
    let sweep = PipelineSweep::desk_scale();
    let seed = (0..50).find(|&s| matches!(sweep.run(s).map(|o| o.status()), Ok("ok"))).unwrap_or(0);
    let model = pipeline_instance(sweep.n, sweep.mean_degree, sweep.beta, seed)?;
    let ctx = WeightContext::new(&model, sweep.epsilon, sweep.d)?;
    let outcome = partition_pipeline(&ctx, &sweep.thresholds)?;
    let j = interaction_matrix(model.graph(), model.couplings()).to_dense();
    let pm = match &outcome.partition {
        Ok(bp) => partition_matrices(&j, bp)?,
        Err(_) => PartitionMatrices::without_partition(&j),
    };
    let h = pm.in_h.iter().filter(|&&x| x).count();
    println!("seed {seed}: status {}, |H| = {h}, |∂H| = {}", outcome.status(), pm.on_boundary.iter().filter(|&&x| x).count());

    let params = LocalisationParams { epsilon: sweep.epsilon, zeta: sweep.epsilon * (1.0 - 1e-4), n: sweep.n, d: sweep.d, form: ShiftForm::FromEpsilon };
    let lm = localisation_matrices(&pm, &params)?;
    println!("control matrix min eigenvalue {:.4e}", lm.c_sq_min_eig);
    for t in [0.0, 0.5, 1.0] {
        let jt = lm.j_t(t);
        println!("t = {t}: spectrum of J_t in [{:.4}, {:.4}]", min_eigenvalue(&jt)?, max_eigenvalue(&jt)?);
    }

    let mut rng = stream_rng(9, 0);
    let worst = (0..100)
        .map(|_| {
            let (k, l, _, e1, e2) = random_fact_instance(6, &mut rng);
            fact_margin(&k, &l, e1, e2)
        })
        .collect::<spinlab::Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    println!("smallest PSD margin over 100 random (K, L): {worst:.4e}");
    Ok(())
}
