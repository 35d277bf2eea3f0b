use clap::Parser;
use oppenheim_runner::{run, Cli, EXIT_INVALID};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            // Help and version go to stdout and succeed; usage errors are invalid input.
            std::process::exit(if usage { EXIT_INVALID } else { 0 });
        }
    };
    std::process::exit(run(&cli));
}
