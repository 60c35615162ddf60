//! Running a canned figure recipe from the library instead of the CLI.
//!
//! Usage: `cargo run --release --example reproduce_figure -- [figure] [output_dir]`

use ringstar::experiment::reproduce::{recipe, reproduce, FIGURES};
use ringstar::experiment::RunOptions;

fn main() -> ringstar::Result<()> {
    let mut args = std::env::args().skip(1);
    let figure = args.next().unwrap_or_else(|| "fig2".into());
    let r = recipe(&figure)?;
    println!("{figure}: {} experiment(s); available: {}", r.configs.len(), FIGURES.join(" "));
    for d in &r.deviations {
        println!("  deviation: {d}");
    }
    let options = RunOptions {
        output_dir: args.next().map(Into::into),
        ..RunOptions::default()
    };
    let summary = reproduce(&figure, &options)?;
    for f in &summary.manifest.files {
        println!("{}  {}", &f.sha256[..12], f.path);
    }
    println!("wrote {}", summary.output_dir.display());
    Ok(())
}
