use clap::Parser;
use polya_waves::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = run(cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
