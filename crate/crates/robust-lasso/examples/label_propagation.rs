//! Classifies unlabeled nodes by diffusing a handful of seed labels
//! through the similarity graph with restarting lazy walks.

use robust_lasso::classify::lrw_propagate;
use robust_lasso::dataset::{equiangular_means, generate_mislabeled, MislabelConfig};
use robust_lasso::tdca::build_graph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate_mislabeled(&MislabelConfig {
        class_means: equiangular_means(3, 3.0),
        class_std: 0.3,
        per_class_count: 80,
        mislabeled_per_class: 0,
        mislabel_scale: 1.0,
        rng_seed: 11,
    })?;
    let ids = ds.resolve_class_ids();

    // Keep every tenth label; the rest of the graph must be inferred.
    let seeds: Vec<Option<usize>> = ids
        .iter()
        .enumerate()
        .map(|(i, &c)| if i % 10 == 0 { Some(c) } else { None })
        .collect();
    let seeded = seeds.iter().filter(|s| s.is_some()).count();

    let graph = build_graph(ds.features.view(), 15)?;
    let predicted = lrw_propagate(&graph, &seeds, 0.5)?;

    let unseeded: Vec<usize> = (0..ds.n()).filter(|&i| seeds[i].is_none()).collect();
    let correct = unseeded.iter().filter(|&&i| predicted[i] == ids[i]).count();
    println!(
        "{seeded} seeds propagated to {} nodes: accuracy {:.3}",
        unseeded.len(),
        correct as f64 / unseeded.len() as f64
    );
    Ok(())
}
