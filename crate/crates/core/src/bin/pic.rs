use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = pic::cli::Cli::parse();
    if let Err(e) = pic::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(pic::cli::exit_code(&e));
    }
}
