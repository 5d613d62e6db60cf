//! Plug-in vs debiased covariate shift on Gaussian samples in growing
//! dimension. Both populations are N(0, I) unless an offset is given, so the
//! true distance is the offset.
//!
//! cargo run --release --example xshift_debiased -- [n] [offset]

use datashifts::measures::Metric;
use datashifts::ot::SolverConfig;
use datashifts::shift::{debiased_xshift_averaged, plugin_xshift, SplitScheme};
use datashifts::synth::{gen_gaussian_pair, GaussianShiftSpec};

fn main() -> datashifts::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(400, |s| s.parse().expect("n"));
    let offset: f64 = args.next().map_or(0.0, |s| s.parse().expect("offset"));
    let config = SolverConfig::with_beta(1e-3);

    println!("n = {n}, true distance = {offset}");
    println!("{:>4} {:>10} {:>10}", "d", "plug-in", "debiased");
    for d in [2, 10, 30, 70] {
        let spec = GaussianShiftSpec {
            dimension: d,
            mean_offset_norm: offset,
            sample_size: n,
            seed: 1,
        };
        let (source, target) = gen_gaussian_pair(&spec)?;
        let (plugin, _) = plugin_xshift(&source, &target, Metric::Euclidean, &config)?;
        // averaging the squared terms over a few splits steadies the estimate
        let schemes = SplitScheme::family(n, n, 7, 3)?;
        let debiased = debiased_xshift_averaged(&source, &target, Metric::Euclidean, &config, &schemes)?;
        println!("{d:>4} {plugin:>10.4} {debiased:>10.4}");
    }
    Ok(())
}
