use std::path::Path;

use aspic::shell::{transcript, Session};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let script = std::fs::read_to_string(data.join("session.aspic")).expect("session script");
    print!("{}", transcript(&mut Session::with_base_dir(data), &script));
}
