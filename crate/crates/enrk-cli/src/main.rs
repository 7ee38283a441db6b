//! `enrk` command-line tool. Every subcommand is a client of the HTTP
//! service: either a remote instance (`--server URL`) or an in-process
//! one bound to an ephemeral localhost port.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use enrk_client::types::*;
use enrk_client::{Client, ClientError};

#[derive(Parser)]
#[command(name = "enrk", version, about = "Positivity- and stability-preserving nonstandard Runge-Kutta toolkit")]
struct Cli {
    /// Base URL of a running service; when absent an in-process server is
    /// started for the duration of the command.
    #[arg(long, global = true)]
    server: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model name (predator_prey, vaccination, keymer, amarasekare).
    #[arg(long)]
    model: String,

    /// Model parameter override, repeatable: --param A=2 --param D=1.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold report (phi*, H, tau*, parameter rules) for a method-model pair.
    Thresholds {
        /// Method name (euler, rk2, rk43, rk54, rk4classic).
        #[arg(long)]
        method: String,
        #[command(flatten)]
        model: ModelArgs,
        /// Exponent m for the phi2/phi3 recommendations (default 2p).
        #[arg(long = "m")]
        m: Option<u32>,
        /// Blend exponent k for phi3 (default m).
        #[arg(long = "k")]
        k: Option<u32>,
        /// Emit the raw JSON report instead of the text block.
        #[arg(long)]
        json: bool,
    },
    /// Run the ENRK integrator and write the trajectory as CSV.
    Integrate {
        #[arg(long)]
        method: String,
        #[command(flatten)]
        model: ModelArgs,
        /// Denominator spec: h, phi1(tau1=..), phi2(tau2=..,m=..),
        /// phi3(tau1=..,tau2=..,m=..,k=..).
        #[arg(long)]
        denominator: String,
        /// Step size.
        #[arg(long = "h")]
        h: f64,
        #[arg(long)]
        steps: usize,
        /// Initial state, comma separated (model default when omitted).
        #[arg(long)]
        y0: Option<String>,
        /// Output CSV path.
        #[arg(long)]
        out: String,
    },
    /// Error/rate table over a descending step ladder, written as CSV.
    Converge {
        #[arg(long)]
        method: String,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated denominator specs (commas inside parentheses
        /// belong to the spec).
        #[arg(long)]
        denominators: String,
        /// Comma-separated decreasing step sizes, e.g. 0.2,0.1,0.05,0.01.
        #[arg(long)]
        hs: String,
        /// Integration horizon.
        #[arg(long = "T")]
        t_end: f64,
        /// Reference step size (default 1e-5).
        #[arg(long)]
        h_ref: Option<f64>,
        #[arg(long)]
        out: String,
    },
    /// Positivity radius R(A,b) of a method.
    Radius {
        #[arg(long)]
        method: String,
        /// Bisection accuracy.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Verify the classical order conditions of a method.
    Order {
        #[arg(long)]
        method: String,
    },
}

enum CliError {
    Client(ClientError),
    Usage(String),
    Io(std::io::Error),
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        CliError::Client(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Client(e) => match e.api_kind() {
                Some(ApiErrorKind::Divergence) => 3,
                Some(ApiErrorKind::NotFound) | Some(ApiErrorKind::Precondition) => 2,
                Some(ApiErrorKind::Internal) | None => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Io(e) => e.to_string(),
            CliError::Client(e) => e.to_string(),
        }
    }
}

fn parse_params(raw: &[String]) -> Result<Option<ParamMap>, CliError> {
    if raw.is_empty() {
        return Ok(None);
    }
    let mut map = ParamMap::new();
    for item in raw {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param expects NAME=VALUE, got `{item}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|e| CliError::Usage(format!("bad value in `{item}`: {e}")))?;
        map.insert(key.trim().to_string(), value);
    }
    Ok(Some(map))
}

fn parse_f64_list(raw: &str, what: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad {what} entry `{s}`: {e}")))
        })
        .collect()
}

/// Splits on commas at parenthesis depth zero, so spec lists like
/// "h,phi2(tau2=0.095,m=4)" keep their inner commas.
fn split_specs(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in raw.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => {
                out.push(current.trim().to_string());
                current.clear();
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        out.push(current.trim().to_string());
    }
    out
}

async fn make_client(server: Option<String>) -> Result<Client, CliError> {
    match server {
        Some(url) => Ok(Client::new(url)),
        None => {
            let listener = tokio::net::TcpListener::bind(("127.0.0.1", 0)).await?;
            let addr = listener.local_addr()?;
            tokio::spawn(enrk_server::serve(listener));
            Ok(Client::new(format!("http://{addr}")))
        }
    }
}

fn render_report(r: &ThresholdReport) -> String {
    let ext = |v: f64| {
        if v.is_infinite() {
            "inf".to_string()
        } else {
            format!("{v:.4}")
        }
    };
    let mut out = String::new();
    out.push_str(&format!(
        "method {} (s={}, p={}) on model {}\n",
        r.method, r.s, r.p, r.model
    ));
    out.push_str(&format!("  R(A,b)   = {:.5}\n", r.radius));
    out.push_str(&format!("  alpha    = {}\n", r.alpha));
    out.push_str(&format!("  phi*     = {}\n", ext(r.phi_star.0)));
    let h_text = match r.h.as_finite() {
        Some(v) => ext(v),
        None => r.h.to_string(),
    };
    out.push_str(&format!("  H        = {h_text}\n"));
    out.push_str(&format!(
        "  tau*     = {}{}\n",
        ext(r.tau_star.value.0),
        if r.tau_star.stability_only {
            " (stability-only)"
        } else {
            ""
        }
    ));
    if let (Some(t1), Some(t2)) = (r.tau1_opt, r.tau2_opt) {
        out.push_str(&format!("  tau1_opt = {t1:.4}\n"));
        out.push_str(&format!("  tau2_opt = {t2:.4e}  (m={})\n", r.m));
    }
    if let Some(rec) = &r.recommended {
        out.push_str(&format!("  phi1: {}\n", rec.phi1));
        out.push_str(&format!("  phi2: {}\n", rec.phi2));
        out.push_str(&format!("  phi3: {}\n", rec.phi3));
    }
    for note in &r.notes {
        out.push_str(&format!("  note: {note}\n"));
    }
    out
}

async fn run(cli: Cli) -> Result<(), CliError> {
    let client = make_client(cli.server).await?;
    match cli.command {
        Command::Thresholds {
            method,
            model,
            m,
            k,
            json,
        } => {
            let report = client
                .thresholds(&ThresholdsRequest {
                    method,
                    model: model.model,
                    params: parse_params(&model.params)?,
                    m,
                    k,
                })
                .await?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .expect("report serialization is infallible")
                );
            } else {
                print!("{}", render_report(&report));
            }
        }
        Command::Integrate {
            method,
            model,
            denominator,
            h,
            steps,
            y0,
            out,
        } => {
            let y0 = y0.map(|s| parse_f64_list(&s, "y0")).transpose()?;
            let csv = client
                .integrate_csv(&IntegrateRequest {
                    method,
                    model: model.model,
                    params: parse_params(&model.params)?,
                    denominator,
                    h,
                    steps,
                    y0,
                    format: OutputFormat::Csv,
                })
                .await?;
            let rows = csv.lines().count().saturating_sub(1);
            std::fs::write(&out, csv)?;
            println!("wrote {rows} states to {out}");
        }
        Command::Converge {
            method,
            model,
            denominators,
            hs,
            t_end,
            h_ref,
            out,
        } => {
            let csv = client
                .converge_csv(&ConvergeRequest {
                    method,
                    model: model.model,
                    params: parse_params(&model.params)?,
                    denominators: split_specs(&denominators),
                    hs: parse_f64_list(&hs, "hs")?,
                    t_end,
                    h_ref,
                    format: OutputFormat::Csv,
                })
                .await?;
            let rows = csv.lines().count().saturating_sub(1);
            std::fs::write(&out, csv)?;
            println!("wrote {rows} rows to {out}");
        }
        Command::Radius { method, tol } => {
            let r = client.radius(&method, tol).await?;
            println!("R(A,b) for {} = {:.9} (tol {:.1e})", r.name, r.radius, r.tol);
        }
        Command::Order { method } => {
            let o = client.order(&method).await?;
            println!(
                "method {}: claimed order {}, conditions satisfied: {} (max satisfied order: {})",
                o.name, o.p, o.satisfied, o.max_satisfied_order
            );
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
