//! Regenerates the bundled demo inputs: `cargo run -p skillscope-cli --example gen_demo [dir]`.

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/demo")));
    skillscope_cli::demo::write_demo(&dir)?;
    println!("wrote demo inputs to {}", dir.display());
    Ok(())
}
