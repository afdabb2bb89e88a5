//! Writes a small room with crossing avatars to the given directory.
//!
//! ```text
//! cargo run --release -p splatnav --example demo_scene -- /tmp/demo
//! splatnav episode --scene /tmp/demo/scene.json --task pointnav_avatar --out /tmp/runs
//! ```

use splatnav::synth::{write_demo_scene, DemoOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "demo_scene".into());
    let path = write_demo_scene(&dir, &DemoOptions::default())?;
    println!("{}", path.display());
    Ok(())
}
