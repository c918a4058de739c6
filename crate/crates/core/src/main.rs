use clap::Parser;

fn main() {
    let cli = rpsim::cli::Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RPS_LOG", "warn")).init();
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    if let Err(e) = rpsim::cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
