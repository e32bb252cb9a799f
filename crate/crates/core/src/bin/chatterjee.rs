use std::io;

use chatterjee_core::cli::{requested_threads, run};

fn main() {
    if let Some(threads) = requested_threads() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let code = run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
