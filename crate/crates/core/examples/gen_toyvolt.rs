//! Rewrites the bundled toyvolt files: `cargo run --example gen_toyvolt [seed]`.

use styleforge::toyvolt;

fn main() -> std::io::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(toyvolt::SEED);
    let dir = toyvolt::data_dir();
    std::fs::create_dir_all(&dir)?;
    for (name, contents) in toyvolt::generate(seed).files() {
        std::fs::write(dir.join(&name), contents)?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
