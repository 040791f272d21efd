//! Rewrites the committed fixtures, or writes them into the directory
//! given as the only argument.

use std::path::PathBuf;

fn main() {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(hetnet_lb::fixtures::default_dir);
    match hetnet_lb::fixtures::generate(&dir) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("gen-fixtures: {e}");
            std::process::exit(3);
        }
    }
}
