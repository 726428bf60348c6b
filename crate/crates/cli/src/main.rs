use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match seaopt_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the validation code; 2 is reserved for infeasible LPs
            std::process::exit(if e.use_stderr() { seaopt_cli::exit::INVALID } else { seaopt_cli::exit::OK });
        }
    };
    std::process::exit(seaopt_cli::run(cli));
}
