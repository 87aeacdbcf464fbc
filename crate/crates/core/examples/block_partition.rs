//! Block partitions: the two-stage decomposition, refinement and validation
//! at the asymptotic thresholds and at a desk-scale override.

use spinlab::verification::{pipeline_tally, PipelineSweep};

fn main() -> spinlab::Result<()> {
    let standard = PipelineSweep::standard()?;
    println!("thresholds at n=200, d=8, ε=0.3: {:?}", standard.thresholds);
    let outcome = standard.run(7)?;
    match &outcome.partition {
        Ok(bp) => println!("seed 7: {} blocks", bp.blocks.len()),
        Err(f) => println!("seed 7: {f}"),
    }
    let tally = pipeline_tally(&standard, 20, 4)?;
    println!("20 seeds: {} ok, {} failed {:?}", tally.ok, tally.failed, tally.failure_tags);

    let desk = PipelineSweep::desk_scale();
    let tally = pipeline_tally(&desk, 50, 4)?;
    println!(
        "desk scale (n={}, mean degree {}): {} ok with {} multi-vertex blocks, {} failed {:?}",
        desk.n, desk.mean_degree, tally.ok, tally.multi_blocks, tally.failed, tally.failure_tags
    );
    for seed in 0..50 {
        let outcome = desk.run(seed)?;
        if let (Ok(bp), Some(report)) = (&outcome.partition, &outcome.report) {
            if bp.multi_blocks().next().is_some() {
                println!("seed {seed}:\n{report}");
                for b in bp.multi_blocks() {
                    println!("  {:?} block {:?}, inner boundary {:?}", b.kind, b.vertices, b.inner_boundary);
                }
                break;
            }
        }
    }
    Ok(())
}
