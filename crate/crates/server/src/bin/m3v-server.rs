use anyhow::Context;
use clap::Parser;
use tokio::net::TcpListener;

/// Serve the m3v operations over HTTP/JSON.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long, env = "M3V_ADDR", default_value = "127.0.0.1:8080")]
    addr: String,
    /// Cap on enumeration threads for the whole process.
    #[arg(long, env = "M3V_THREADS")]
    threads: Option<usize>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let listener = TcpListener::bind(&args.addr).await.with_context(|| format!("binding {}", args.addr))?;
    eprintln!("m3v-server listening on {}", listener.local_addr()?);
    axum::serve(listener, m3v_server::router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
