use clap::Parser;
use ncdist_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NCDIST_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(outcome) => outcome.code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
