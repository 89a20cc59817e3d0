use smixup::data::{generate_sbm, save_dataset, FeatureFormat, SbmSpec};

use crate::artifacts as art;
use crate::failure::CliResult;
use crate::SbmArgs;

pub fn run(args: &SbmArgs) -> CliResult {
    let spec = SbmSpec {
        num_nodes: args.nodes,
        num_classes: args.classes,
        num_features: args.features,
        noise: args.noise,
        homophily: args.homophily,
        mean_degree: args.degree,
        train_per_class: args.train_per_class,
        num_val: args.val,
        num_test: args.test,
        seed: args.seed,
    };
    let g = generate_sbm::<f64>(&spec)?;
    art::ensure_dir(&args.out)?;
    save_dataset(&g, &args.out, FeatureFormat::Csv)?;
    println!(
        "{}: {} nodes, {} edges, written to {}",
        g.name(),
        g.num_nodes(),
        g.num_edges(),
        args.out.display()
    );
    Ok(())
}
