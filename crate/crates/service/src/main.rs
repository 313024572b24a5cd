use clap::Parser;
use std::net::SocketAddr;

/// DSW proposal service.
#[derive(Parser)]
#[command(name = "dsw-service", version)]
struct Args {
    /// Address to bind, e.g. 127.0.0.1:8080 (port 0 picks a free port).
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

fn main() -> std::process::ExitCode {
    let args = Args::parse();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {}", e);
            return std::process::ExitCode::from(2);
        }
    };
    if let Err(e) = runtime.block_on(dsw_service::run(args.addr)) {
        eprintln!("error: {}", e);
        return std::process::ExitCode::from(2);
    }
    std::process::ExitCode::SUCCESS
}
