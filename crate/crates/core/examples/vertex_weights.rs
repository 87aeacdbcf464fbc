//! Edge influences, heaviness, ε-weights, comparison weights and
//! weighted-sphere sums on a sparse random graph.

use spinlab::gibbs_exact::GibbsModel;
use spinlab::random_graph::{couplings_sample, sample_gnp, CouplingDist};
use spinlab::rng::stream_rng;
use spinlab::thresholds::{beta_c, KAPPA_C};
use spinlab::weights::WeightContext;

fn main() -> spinlab::Result<()> {
    let (n, d, eps) = (400, 8.0, 0.3);
    let mut rng = stream_rng(1, 0);
    let g = sample_gnp(n, d, &mut rng)?;
    let c = couplings_sample(&g, CouplingDist::Gaussian, &mut rng);
    let model = GibbsModel::zero_field(g, c, beta_c(d, KAPPA_C)?)?;
    let ctx = WeightContext::new(&model, eps, d)?;

    let light = (0..n).filter(|&u| ctx.is_light(u)).count();
    let mean_theta = (0..n).map(|u| ctx.aggregate_theta(u)).sum::<f64>() / n as f64;
    println!("β = β_c({d}) = {:.5}", model.beta());
    println!("mean Θ = {mean_theta:.4}, light vertices {light}/{n}");

    let heaviest = (0..n).max_by(|&a, &b| ctx.vertex_weight(a).total_cmp(&ctx.vertex_weight(b))).unwrap_or(0);
    println!("heaviest vertex {heaviest}: weight {:.3}", ctx.vertex_weight(heaviest));

    let path: Vec<usize> = {
        let mut p = vec![heaviest];
        while p.len() < 4 {
            let last = *p.last().unwrap();
            match model.graph().neighbors(last).find(|x| !p.contains(x)) {
                Some(x) => p.push(x),
                None => break,
            }
        }
        p
    };
    println!("path {path:?}: ε-weight {:.4}, Υ {:.4}", ctx.path_weight(&path)?, ctx.upsilon(&path)?);
    for ell in 1..=3 {
        println!("SQR({heaviest}, {ell}) = {:.5}", ctx.sqr_sphere(heaviest, ell)?);
    }
    Ok(())
}
