//! Desk-scale comparison of the three separators.
//!
//! ```text
//! cargo run --release --example benchmark -- [manifest.json] [seeds]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use online_iva::harness::{run_benchmark, RunManifest, output_root};

fn main() -> online_iva::Result<()> {
    let mut args = std::env::args().skip(1);
    let manifest = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/desk/manifest.json")));
    let mut m = RunManifest::load(&manifest, &[], &output_root())?;
    if let Some(n) = args.next() {
        m.seeds.truncate(n.parse().expect("seed count"));
    }
    let plan = m.plan()?;
    let start = Instant::now();
    let outcome = run_benchmark(&plan, Some(&m.output_dir))?;
    print!("{}", outcome.table);
    for r in &outcome.runs {
        println!(
            "{:<8} seed {}  rtf {:.3}  {:.1} frames/s",
            r.label, r.seed, r.separation.real_time_factor, r.separation.frames_per_s
        );
    }
    println!("wrote {} in {:.1} s", m.output_dir.display(), start.elapsed().as_secs_f64());
    Ok(())
}
