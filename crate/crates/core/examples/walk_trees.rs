//! Trees of self-avoiding walks: pinned cycle closures, the influence
//! reduction to the tree, and the all-paths tree of a unicyclic graph.

use spinlab::gibbs_exact::{GibbsModel, Pinning};
use spinlab::random_graph::{couplings_sample, CouplingDist, SparseGraph};
use spinlab::rng::stream_rng;
use spinlab::walk_trees::{
    all_paths_property_check, build_ap_tree, build_saw_tree, natural_order, saw_reduction_check, DEFAULT_WALK_BUDGET,
};

fn main() -> spinlab::Result<()> {
    let g = SparseGraph::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)])?;
    let mut rng = stream_rng(3, 0);
    let c = couplings_sample(&g, CouplingDist::Gaussian, &mut rng);
    let model = GibbsModel::new(g.clone(), c, 0.9, vec![0.2, -0.1, 0.0, 0.3, 0.0])?;

    let tree = build_saw_tree(&g, 0, &natural_order(5), &Pinning::new(), DEFAULT_WALK_BUDGET)?;
    println!("walk tree from 0: {} nodes, copies per vertex {:?}", tree.len(), tree.copy_counts(5));
    println!("{}", tree.to_dot());
    println!("max |graph influence - tree influence| = {:.2e}", saw_reduction_check(&model, 0, &Pinning::new())?);

    for w in 0..5 {
        let ap = build_ap_tree(&g, w)?;
        let ok = all_paths_property_check(&g, w, 1_000_000)?;
        println!("all-paths tree at {w}: {} nodes, max copies {}, path property {ok}", ap.len(), ap.copy_counts(5).into_iter().max().unwrap_or(0));
    }
    Ok(())
}
