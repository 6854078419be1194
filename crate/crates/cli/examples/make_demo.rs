//! Regenerates the demo fixture: `cargo run -p crisismine --example make_demo [DIR]`.

use std::path::PathBuf;

fn main() {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo"));
    match crisismine::demo::write_demo(&dir) {
        Ok(demo) => println!("wrote {} files to {} ({} planted segments)", demo.files.len(), dir.display(), demo.planted.len()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
