use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use bellforge::classical::{classical_report, ClassicalReport};
use bellforge::poly::{catalog, catalog_entries, BellPolynomial, Objective};
use bellforge::probability::{evaluate_expression, probability_catalog, MeasurementBases};
use bellforge::quantum::{bound_report, parse_settings, BoundReport, OptimizerConfig, SettingsChoice};
use bellforge::report::{reproduce, sig6, ReproduceConfig, Status, TableId};
use bellforge::states::{parse_state, StateJson};
use bellforge::Error;

#[derive(Parser)]
#[command(name = "bellforge", version, about = "Classical and quantum bounds of multipartite Bell polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the registered inequalities.
    Catalog {
        #[arg(long)]
        json: bool,
    },
    /// Classical extrema by exhaustive enumeration.
    Classical {
        #[command(flatten)]
        ineq: IneqArg,
        #[arg(long)]
        json: bool,
    },
    /// Quantum value at given settings.
    Quantum {
        #[command(flatten)]
        ineq: IneqArg,
        /// `X,Z` for every party, or `X,Z;X,mos:0` per party.
        #[arg(long)]
        settings: String,
        #[arg(long)]
        json: bool,
    },
    /// Best quantum value found by restarted pattern search and see-saw.
    Optimize {
        #[command(flatten)]
        ineq: IneqArg,
        #[command(flatten)]
        opt: OptArgs,
        /// Local dimension, default the outcome count.
        #[arg(long)]
        dim: Option<usize>,
        /// Share one list of settings between all parties.
        #[arg(long)]
        symmetric: bool,
        /// Alternating state/settings rounds after the joint search.
        #[arg(long, default_value_t = 30)]
        see_saw: usize,
        #[arg(long)]
        json: bool,
    },
    /// Probability-language expression on a state.
    Prob {
        /// `cglmp:d`, `acin333` or `acin333_printed`.
        #[arg(long)]
        expr: String,
        /// `ghz:n,d`, `quasi:n,gamma`, `ame43` or `bell+`.
        #[arg(long)]
        state: String,
        /// Measurement bases: `cglmp` or a settings string whose eigenbases are used.
        #[arg(long, default_value = "cglmp")]
        bases: String,
        #[arg(long)]
        json: bool,
    },
    /// Reproduce a table of results.
    Reproduce {
        #[arg(value_enum)]
        table: TableArg,
        #[command(flatten)]
        opt: OptArgs,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a polynomial as JSON.
    Export {
        #[command(flatten)]
        ineq: IneqArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct IneqArg {
    /// Catalog name or path to a polynomial JSON file.
    #[arg(long)]
    ineq: String,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Objective evaluations per restart.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Table1,
    Table2,
    Table3,
    #[value(name = "appendixC", alias = "appendixc")]
    AppendixC,
}

impl From<TableArg> for TableId {
    fn from(t: TableArg) -> Self {
        match t {
            TableArg::Table1 => TableId::Table1,
            TableArg::Table2 => TableId::Table2,
            TableArg::Table3 => TableId::Table3,
            TableArg::AppendixC => TableId::AppendixC,
        }
    }
}

fn load(ineq: &IneqArg) -> anyhow::Result<BellPolynomial> {
    let name = ineq.ineq.as_str();
    if name.ends_with(".json") || Path::new(name).is_file() {
        let text = fs::read_to_string(name).with_context(|| format!("reading {name}"))?;
        return Ok(BellPolynomial::from_json_str(&text)?);
    }
    Ok(catalog(name)?)
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn print_classical(r: &ClassicalReport) {
    println!("{} ({} strategies)", r.id, r.strategies);
    for o in Objective::ALL {
        let e = r.extremum(o);
        let mark = if o == r.pattern.bold { " *" } else { "" };
        println!("  {:<5} {:>12}  witness {:?}{mark}", format!("{o:?}"), sig6(e.value), e.witness.outcomes);
    }
    println!("  min = -2 max: {}", r.pattern.min_is_minus_twice_max);
    if let Some(ratio) = r.pattern.max_ratio {
        println!("  |Hmax|/|Amax| ratio {} (sqrt3: {})", sig6(ratio), r.pattern.sqrt3_factor);
    }
}

fn print_bound(r: &BoundReport) {
    println!("{}", r.id);
    println!("  classical bound {}", sig6(r.classical_bound));
    println!("  quantum value   {} ({:?})", sig6(r.quantum_value), r.method);
    println!("  ratio           {}", sig6(r.ratio));
    println!("  settings        {}", r.settings.label);
    for (size, [lo, hi]) in &r.purity.summary {
        println!("  purity, {size}-party reductions: {} .. {}", sig6(*lo), sig6(*hi));
    }
    if let Some(seed) = r.seed {
        println!("  seed {seed}, converged {}", r.converged);
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Catalog { json } => {
            if json {
                let list: Vec<_> = catalog_entries()
                    .iter()
                    .map(|e| serde_json::json!({ "name": e.name, "description": e.description }))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&list)?);
            } else {
                for e in catalog_entries() {
                    println!("{:<12} {}", e.name, e.description);
                }
            }
        }
        Command::Classical { ineq, json } => {
            let r = classical_report(&load(&ineq)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                print_classical(&r);
            }
        }
        Command::Quantum { ineq, settings, json } => {
            let p = load(&ineq)?;
            let s = parse_settings(&settings, p.n, p.d)?;
            let r = bound_report(&p, SettingsChoice::Given(s))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                print_bound(&r);
            }
        }
        Command::Optimize {
            ineq,
            opt,
            dim,
            symmetric,
            see_saw,
            json,
        } => {
            let p = load(&ineq)?;
            let d = dim.unwrap_or(p.d);
            let cfg = OptimizerConfig {
                restarts: opt.restarts,
                budget: opt.budget,
                seed: opt.seed,
                symmetric,
                see_saw_rounds: see_saw,
                ..OptimizerConfig::default()
            };
            let r = if d == p.d {
                bound_report(&p, SettingsChoice::Optimize(cfg))?
            } else {
                let o = bellforge::quantum::optimize_settings(&p, d, &cfg)?;
                bound_report(&p, SettingsChoice::Given(o.settings))?
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                print_bound(&r);
            }
        }
        Command::Prob {
            expr,
            state,
            bases,
            json,
        } => {
            let e = probability_catalog(&expr)?;
            let psi = parse_state(&state)?;
            let b = if bases == "cglmp" {
                MeasurementBases::cglmp(e.d)?
            } else {
                let s = parse_settings(&bases, e.n, e.d)?;
                MeasurementBases::from_settings(&s, bellforge::probability::Labeling::Conjugate)?
            };
            let v = evaluate_expression(&e, &psi, &b)?;
            if json {
                let doc = serde_json::json!({
                    "expression": e.name,
                    "state": StateJson::from(&psi),
                    "value": v,
                    "bound": e.bound,
                });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!("{} on {}: {} (classical bound {})", e.name, psi.label(), sig6(v), sig6(e.bound));
            }
        }
        Command::Reproduce {
            table,
            opt,
            json,
            csv,
            out,
        } => {
            let cfg = ReproduceConfig {
                seed: opt.seed,
                budget: opt.budget,
                restarts: opt.restarts,
            };
            let doc = reproduce(table.into(), &cfg)?;
            if json {
                emit(&doc.to_json()?, out.as_deref())?;
            } else if csv {
                emit(doc.to_csv().trim_end(), out.as_deref())?;
            } else {
                let mut text = String::new();
                for r in &doc.rows {
                    text.push_str(&format!("{}", r.name));
                    if let Some(s) = &r.settings {
                        text.push_str(&format!("  [{s}]"));
                    }
                    text.push('\n');
                    for c in &r.cells {
                        let status = match c.status {
                            Status::Pass => "PASS",
                            Status::Fail => "FAIL",
                            Status::Flagged => "FLAG",
                        };
                        text.push_str(&format!(
                            "  {status} {:<14} computed {:>12}  printed {:>12}  dev {}\n",
                            c.quantity,
                            sig6(c.computed),
                            sig6(c.printed),
                            sig6(c.deviation)
                        ));
                    }
                }
                text.push_str(if doc.pass { "all cells pass" } else { "some cells fail" });
                emit(&text, out.as_deref())?;
            }
            if !doc.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Export { ineq, out } => {
            let p = load(&ineq)?;
            emit(&serde_json::to_string_pretty(&p.to_json())?, out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Capacity { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    if let Some(threads) = std::env::var("BELLFORGE_THREADS").ok().and_then(|t| t.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
