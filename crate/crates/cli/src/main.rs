//! `openbia`: transparent bioimpedance body composition at the command line.
//!
//! Exit codes: 0 on success, 1 on input/usage errors, 2 on internal errors.

mod args;
mod commands;

use clap::Parser;

fn main() {
    // Die quietly on a closed pipe (`openbia ... | head`) instead of
    // panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let code = match args::Cli::try_parse() {
        Ok(cli) => match commands::run(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            // --help/--version go to stdout with success; real usage errors
            // go to stderr with exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    };
    std::process::exit(code);
}
