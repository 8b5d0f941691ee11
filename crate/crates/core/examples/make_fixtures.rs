//! Regenerates the bundled flower fixture: `cargo run -p colorfulness --example make_fixtures`

fn main() -> colorfulness::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    colorfulness::synth::flower(64).save_png(dir.join("flower.png"))
}
