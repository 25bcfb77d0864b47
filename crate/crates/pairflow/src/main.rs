use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PAIRFLOW_LOG"))
        .format_timestamp(None)
        .init();
    let cli = pairflow::cli::Cli::parse();
    std::process::exit(pairflow::cli::run(cli));
}
