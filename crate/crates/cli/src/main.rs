use std::io::{self, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use aspic::service::{Request, SessionRegistry, Status};
use aspic::shell::{render, run_repl, Session};
use clap::Parser;

/// Interactive answer set programming shell.
#[derive(Parser, Debug)]
#[command(name = "aspic", version)]
struct Args {
    /// Program files loaded before the first prompt.
    files: Vec<PathBuf>,
    /// Run the JSON session server instead of the interactive shell.
    #[arg(long)]
    serve: bool,
    /// Port for the session server.
    #[arg(long, default_value_t = 8080, requires = "serve")]
    port: u16,
    /// Address the session server binds to.
    #[arg(long, default_value = "127.0.0.1", requires = "serve")]
    host: String,
    /// Directory of static files served next to the protocol endpoints.
    #[arg(long = "static", value_name = "DIR", requires = "serve")]
    static_dir: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let cwd = std::env::current_dir().context("no working directory")?;
    if args.serve {
        return serve(args, cwd);
    }
    let mut session = Session::with_base_dir(cwd);
    let mut stdout = io::stdout().lock();
    for file in &args.files {
        let text = session.repl_step(&format!("load {}", file.display()));
        write!(stdout, "{text}")?;
    }
    let stdin = io::stdin();
    let echo = !stdin.is_terminal();
    run_repl(&mut session, stdin.lock(), stdout, echo)?;
    Ok(())
}

fn serve(args: Args, cwd: PathBuf) -> anyhow::Result<()> {
    let registry = Arc::new(SessionRegistry::with_base_dir(cwd));
    if !args.files.is_empty() {
        registry.create("default").map_err(anyhow::Error::msg)?;
        for (k, file) in args.files.iter().enumerate() {
            let r = registry.handle_request(Request::command(
                format!("load{k}"),
                "default",
                format!("load {}", file.display()),
            ));
            if r.status == Status::Error {
                anyhow::bail!("{}", r.error.unwrap_or_default());
            }
            let outcome = aspic::shell::Outcome { messages: r.messages, warnings: r.warnings, ..Default::default() };
            eprint!("{}", render(&outcome));
        }
    }
    let addr: SocketAddr = format!("{}:{}", args.host, args.port).parse().context("invalid address")?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let (listener, local) = aspic_cli::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
        eprintln!("aspic: serving sessions on ws://{local}/ws and http://{local}/rpc");
        aspic_cli::serve(listener, registry, args.static_dir).await?;
        Ok(())
    })
}
