//! CSV in, JSON out: writes two labelled CSV files, reads them back with the
//! label column named, and prints the shift report that `datashifts yshift`
//! would produce. The plug-in coupling is saved next to the inputs.
//!
//! cargo run --release --example csv_report -- [out_dir]

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use datashifts::measures::{read_labeled_csv, Domain, LabeledSample, Metric};
use datashifts::shift::{estimate_shifts, plugin_xshift, ShiftOptions};
use datashifts::synth::{gen_gaussian_pair, GaussianShiftSpec};

fn write_csv(path: &PathBuf, sample: &LabeledSample, label: impl Fn(f64, f64) -> f64) -> std::io::Result<()> {
    let mut f = File::create(path)?;
    writeln!(f, "x1,x2,y")?;
    for x in sample.covariates().outer_iter() {
        writeln!(f, "{},{},{}", x[0], x[1], label(x[0], x[1]))?;
    }
    Ok(())
}

fn main() -> datashifts::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/csv_report".into()));
    std::fs::create_dir_all(&out)?;
    let (xs, xt) = gen_gaussian_pair(&GaussianShiftSpec {
        dimension: 2,
        mean_offset_norm: 1.0,
        sample_size: 200,
        seed: 5,
    })?;
    let (source_path, target_path) = (out.join("source.csv"), out.join("target.csv"));
    write_csv(&source_path, &xs, |a, b| a - b)?;
    write_csv(&target_path, &xt, |a, b| a - b + 0.5)?;

    let labels = vec!["y".to_string()];
    let source = read_labeled_csv(&source_path, &labels, Domain::Source)?;
    let target = read_labeled_csv(&target_path, &labels, Domain::Target)?;
    let options = ShiftOptions::default();
    let report = estimate_shifts(&source, &target, &options)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    let (_, plan) = plugin_xshift(&source, &target, Metric::Euclidean, &options.solver)?;
    plan.write_csv(File::create(out.join("plan.csv"))?, 1e-8)?;
    println!("inputs and plan.csv in {}", out.display());
    Ok(())
}
