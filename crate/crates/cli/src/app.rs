//! Argument parsing and the top-level run.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use lhskit_core::par::Exec;
use lhskit_core::report::VerificationReport;

use crate::config::Config;
use crate::output::records_table;
use crate::pipeline::{self, timed, Context, Stage, SurfaceQuery};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "lhskit", version, about = "Checks and computations for Liouville-Hamiltonian structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config; the golden-mean torus bundle when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report or table here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record stage wall times (reports stop being byte-stable).
    #[arg(long, global = true)]
    pub timings: bool,
    /// Run scans on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Axioms, deformation type, dβ(C, ζ) and contact signs.
    Verify,
    /// Suspension domain and its normal form.
    Suspend,
    /// Liouville flow expansion law and integrator order.
    Flow,
    /// Periodic orbit census of a torus bundle.
    Orbits {
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Exact Lagrangian cylinder over the period-one orbit.
    Lagrangian,
    /// Integral obstruction on the closed quotient.
    Integral,
    /// Surface admissibility; the full table without --surface.
    Obstruct {
        /// sphere, torus, klein, rp2, genus:N or crosscaps:N
        #[arg(long)]
        surface: Option<String>,
        #[arg(long)]
        mod4: bool,
        /// Largest genus or crosscap count in the table.
        #[arg(long, default_value_t = 20)]
        max: u32,
    },
    /// Every pipeline that applies to the structure.
    All {
        #[arg(long)]
        kmax: Option<usize>,
    },
}

/// Rendered output and the report behind it.
pub struct Outcome {
    pub report: VerificationReport,
    pub text: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            0
        } else {
            1
        }
    }
}

fn render(report: VerificationReport, stages: &[Stage], format: Format) -> Outcome {
    let text = match format {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        Format::Csv => match stages {
            [only] if only.table.is_some() => only.table.as_ref().unwrap().render(),
            _ => records_table(&report.checks).render(),
        },
    };
    Outcome { report, text }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    if let Command::Obstruct { surface, mod4, max } = &cli.command {
        let query = match surface {
            Some(s) => SurfaceQuery::One(pipeline::parse_surface(s)?),
            None => SurfaceQuery::Table(*max),
        };
        let stages = vec![timed(cli.timings, || pipeline::obstruct(&query, *mod4))];
        let report = pipeline::assemble(None, None, stages.iter().map(clone_records).collect());
        return Ok(render(report, &stages, cli.format));
    }
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let ctx = Context::new(config, exec)?;
    let mut stages = vec![Stage {
        records: ctx.setup_records().to_vec(),
        table: None,
    }];
    if ctx.setup_ok() {
        let t = cli.timings;
        match &cli.command {
            Command::Verify => stages.push(timed(t, || pipeline::verify(&ctx))),
            Command::Suspend => stages.push(timed(t, || pipeline::suspend(&ctx))),
            Command::Flow => stages.push(timed(t, || pipeline::flow(&ctx))),
            Command::Orbits { kmax } => stages.push(timed(t, || pipeline::orbits(&ctx, *kmax))),
            Command::Lagrangian => stages.push(timed(t, || pipeline::lagrangian(&ctx))),
            Command::Integral => stages.push(timed(t, || pipeline::integral(&ctx))),
            Command::All { kmax } => {
                stages.push(timed(t, || pipeline::verify(&ctx)));
                stages.push(timed(t, || pipeline::suspend(&ctx)));
                stages.push(timed(t, || pipeline::flow(&ctx)));
                if ctx.is_torus_bundle() {
                    stages.push(timed(t, || pipeline::orbits(&ctx, *kmax)));
                    stages.push(timed(t, || pipeline::lagrangian(&ctx)));
                }
                if ctx.structure.quotient().is_some() {
                    stages.push(timed(t, || pipeline::integral(&ctx)));
                }
                stages.push(timed(t, || pipeline::obstruct(&SurfaceQuery::Table(20), false)));
            }
            Command::Obstruct { .. } => unreachable!("handled above"),
        }
    }
    if stages[0].records.is_empty() {
        stages.remove(0);
    }
    let seed = Some(ctx.grid.seed);
    let report = pipeline::assemble(Some(&ctx.config), seed, stages.iter().map(clone_records).collect());
    Ok(render(report, &stages, cli.format))
}

fn clone_records(st: &Stage) -> Stage {
    Stage {
        records: st.records.clone(),
        table: None,
    }
}
