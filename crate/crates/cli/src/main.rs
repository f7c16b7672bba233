use clap::Parser;

use liouvspec_cli::{resolve_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    let threads = match resolve_threads(cli.command.common().threads) {
        Ok(threads) => threads,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    };
    if let Some(count) = threads {
        // Sized once for the whole process; every parallel stage inherits it.
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global()
        {
            eprintln!("error: cannot size the thread pool: {err}");
            std::process::exit(1);
        }
    }
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
