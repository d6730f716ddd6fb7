//! Runs the staged detect-then-classify pipeline in its main
//! configurations on one corrupted dataset and prints the comparison.

use robust_lasso::bench::{
    pipeline_benchmark_dataset, run_pipeline, ClassifierStage, FeatureStage, PipelineConfig,
    RemovalStage,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = 1;
    let ds = pipeline_benchmark_dataset(seed)?;
    println!(
        "dataset: {} instances, {} corrupted, 70/30 split\n",
        ds.n(),
        ds.outlier_count()
    );

    let stages = [
        (FeatureStage::Raw, RemovalStage::None, ClassifierStage::Linear),
        (FeatureStage::Raw, RemovalStage::None, ClassifierStage::Lrw),
        (FeatureStage::Raw, RemovalStage::Plasso, ClassifierStage::Linear),
        (FeatureStage::Raw, RemovalStage::Ipod, ClassifierStage::Linear),
        (FeatureStage::Tdca, RemovalStage::Plasso, ClassifierStage::Linear),
    ];
    for (features, removal, classifier) in stages {
        let cfg = PipelineConfig::new(features, removal, classifier, seed);
        let result = run_pipeline(&ds, &cfg)?;
        let rec = &result.records[0];
        print!(
            "{:22} clean-test accuracy {:.3}",
            cfg.label(),
            rec.classifier_accuracy.unwrap()
        );
        if let Some(r) = rec.recall {
            print!("  (detection recall {r:.3})");
        }
        println!();
    }
    Ok(())
}
