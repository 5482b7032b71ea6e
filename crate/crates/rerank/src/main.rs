use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let status = rerank::cli::run(std::env::args_os().collect());
    ExitCode::from(status as u8)
}
