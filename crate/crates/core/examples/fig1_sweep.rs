//! A reduced version of the plug-in vs debiased sweeps, written as CSV and
//! SVG. The full grid is `datashifts fig1`.
//!
//! cargo run --release --example fig1_sweep -- [out_dir]

use std::fs::File;
use std::path::PathBuf;

use datashifts::synth::{fig1_cells, plot_fig1, run_fig1, write_fig1_csv, Fig1Cell, FIG1_ANCHOR_DIM};

fn main() -> datashifts::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/fig1".into()));
    std::fs::create_dir_all(&out)?;

    let mut cells = fig1_cells(&[2, 10, 30], &[], &[2.0, 4.0]);
    cells.retain(|c| c.n <= 1000);
    cells.extend([250, 500].map(|n| Fig1Cell {
        d: FIG1_ANCHOR_DIM,
        n,
        offset: 0.0,
    }));
    let rows = run_fig1(&cells, 1e-3, &[1, 2, 3])?;
    write_fig1_csv(&rows, File::create(out.join("fig1.csv"))?)?;
    plot_fig1(&rows, &out.join("fig1.svg"))?;

    for r in rows.iter().filter(|r| r.seed == 1) {
        println!(
            "d={:>2} n={:>4} |T|={:>3} {:>9?} {:.4}",
            r.d, r.n, r.offset, r.estimator, r.estimate
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
