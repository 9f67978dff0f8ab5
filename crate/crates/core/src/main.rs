// SPDX-License-Identifier: MIT
use std::io::{BufReader, Read, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use causal_spec::analysis::{
    backdoor_sets, enumerate_paths_capped, observability_gaps, InnerRole, DEFAULT_PATH_CAP,
};
use causal_spec::api::{self, to_json};
use causal_spec::derivation::{derive_monitors, render_markdown, resolve_roles};
use causal_spec::dsl::{serialize, Format, ModelDocument, NodeRole};
use causal_spec::graph::{to_dot, CausalDag, GraphError, NodeSet};
use causal_spec::implications::{local_markov_basis, CiStatement, Provenance};
use causal_spec::monitor::{read_csv, read_ndjson, run_stream, Statistic};
use causal_spec::scm::{sample, validate_model, validate_statements, CiMethod, Dataset, ScmSpec};
use causal_spec::Error;

#[derive(Parser)]
#[command(
    name = "causal-spec",
    version,
    about = "Derive and check requirements from a causal model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Roles {
    /// Exposure node (defaults to the node with role exposure)
    #[arg(long)]
    exposure: Option<String>,
    /// Outcome node (defaults to the node with role outcome)
    #[arg(long)]
    outcome: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the model parses, is acyclic, and (with roles) has no observability gaps
    Validate {
        model: PathBuf,
        #[command(flatten)]
        roles: Roles,
        /// Exit 1 when observability gaps are found
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Paths, adjustment sets, implications, requirements and monitors in one report
    Analyze {
        model: PathBuf,
        #[command(flatten)]
        roles: Roles,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Test d-separation of two nodes
    Dsep {
        model: PathBuf,
        x: String,
        y: String,
        /// Comma-separated conditioning set
        #[arg(long, default_value = "")]
        given: String,
        #[arg(long)]
        json: bool,
    },
    /// List the paths between two nodes with their status
    Paths {
        model: PathBuf,
        x: String,
        y: String,
        #[arg(long, default_value = "")]
        given: String,
        /// Stop after this many paths
        #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
        cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Minimal back-door adjustment sets
    Adjust {
        model: PathBuf,
        #[command(flatten)]
        roles: Roles,
        /// Comma-separated candidates (default: observed nodes)
        #[arg(long)]
        candidates: Option<String>,
        #[arg(long)]
        max_size: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Conditional independencies implied by the graph
    Implications {
        model: PathBuf,
        /// Comma-separated scope (default: observed nodes plus the exposure)
        #[arg(long)]
        scope: Option<String>,
        #[arg(long, default_value_t = api::DEFAULT_MAX_GIVEN)]
        max_given: usize,
        /// Print the pairwise local Markov basis instead
        #[arg(long)]
        local: bool,
        #[arg(long)]
        json: bool,
    },
    /// Data, model, test-case and monitor requirements
    Requirements {
        model: PathBuf,
        #[command(flatten)]
        roles: Roles,
        #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
        format: ReportFormat,
        /// Same as --format json
        #[arg(long)]
        json: bool,
    },
    /// Sample a dataset from the model's mechanism blocks (CSV)
    Simulate {
        model: PathBuf,
        #[arg(short = 'n', long, default_value_t = 1000)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add an edge before sampling, as FROM->TO=WEIGHT
        #[arg(long)]
        mutate: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Test the model's implied independencies on a dataset
    Citest {
        model: PathBuf,
        /// CSV with a header row of node names
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Method::FisherZ)]
        method: Method,
        /// Comma-separated scope (default: observed nodes and the exposure, if present in the data)
        #[arg(long)]
        scope: Option<String>,
        #[arg(long, default_value_t = api::DEFAULT_MAX_GIVEN)]
        max_given: usize,
        /// Test this statement ("X ⊥ Y | A, B") instead of the implied set; repeatable
        #[arg(long)]
        statement: Vec<String>,
        /// Exit 1 when any test rejects
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run the model's monitors over a stream; alarms are printed as NDJSON
    Monitor {
        model: PathBuf,
        /// Input file (default: standard input)
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = StreamFormat::Csv)]
        format: StreamFormat,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        consecutive: Option<usize>,
        #[arg(long)]
        spearman: bool,
        /// Only monitor marginal independencies
        #[arg(long)]
        no_stratified: bool,
        /// Print the full report (window statistics and alarms) as JSON
        #[arg(long)]
        report: bool,
    },
    /// Write the model as DOT, JSON or DSL
    Export {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Dot)]
        format: ExportFormat,
    },
    /// Serve the HTTP API over a directory of models
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "models")]
        models: PathBuf,
        /// Listen on all interfaces instead of loopback only
        #[arg(long)]
        bind_any: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Md,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    FisherZ,
    GTest,
}

#[derive(Clone, Copy, ValueEnum)]
enum StreamFormat {
    Csv,
    Ndjson,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Json,
    Dsl,
}

/// Result of a command: text for stdout and the exit status.
struct Outcome {
    stdout: String,
    code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_doc(path: &Path) -> Result<ModelDocument, Error> {
    let text = read_text(path)?;
    ModelDocument::parse_any(&text).map_err(|e| Error::Usage(format!("{}:{e}", path.display())))
}

fn load_dag(path: &Path) -> Result<CausalDag, Error> {
    Ok(CausalDag::build(&load_doc(path)?)?)
}

fn node_list(dag: &CausalDag, list: &str) -> Result<NodeSet, Error> {
    let set = NodeSet::parse_list(list);
    for n in set.iter() {
        dag.node(n)?;
    }
    Ok(set)
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Validate {
            model,
            roles,
            strict,
            json,
        } => validate(&model, &roles, strict, json),
        Command::Analyze {
            model,
            roles,
            strict,
            json,
        } => {
            let dag = load_dag(&model)?;
            let report = api::analyze(
                &dag,
                &api::RolesRequest {
                    exposure: roles.exposure,
                    outcome: roles.outcome,
                },
            )?;
            let code = u8::from(strict && !report.validation.observability_gaps.is_empty());
            let stdout = if json {
                to_json(&report)
            } else {
                analysis_text(&report)
            };
            Ok(Outcome { stdout, code })
        }
        Command::Dsep {
            model,
            x,
            y,
            given,
            json,
        } => {
            let dag = load_dag(&model)?;
            let given = node_list(&dag, &given)?;
            let resp = api::dsep(
                &dag,
                &api::DsepRequest {
                    x,
                    y,
                    given: given.to_vec(),
                },
            )?;
            Ok(Outcome::ok(if json {
                to_json(&resp)
            } else {
                format!("d-separated: {}\n", resp.separated)
            }))
        }
        Command::Paths {
            model,
            x,
            y,
            given,
            cap,
            json,
        } => {
            let dag = load_dag(&model)?;
            let given = node_list(&dag, &given)?;
            let paths = enumerate_paths_capped(&dag, &x, &y, &given, cap)?;
            if json {
                return Ok(Outcome::ok(to_json(&paths)));
            }
            let mut out = String::new();
            for p in &paths {
                let roles: Vec<&str> = p
                    .inner_roles
                    .iter()
                    .map(|r| match r {
                        InnerRole::Chain => "chain",
                        InnerRole::Fork => "fork",
                        InnerRole::Collider => "collider",
                    })
                    .collect();
                out.push_str(&format!(
                    "{:<8}{}  [{}]\n",
                    if p.is_open() { "open" } else { "blocked" },
                    p.render(),
                    roles.join(", ")
                ));
            }
            Ok(Outcome::ok(out))
        }
        Command::Adjust {
            model,
            roles,
            candidates,
            max_size,
            json,
        } => {
            let dag = load_dag(&model)?;
            let (x, y) = resolve_roles(&dag, roles.exposure.as_deref(), roles.outcome.as_deref())?;
            let candidates = match candidates {
                Some(c) => node_list(&dag, &c)?,
                None => {
                    let mut c = dag.observed();
                    c.remove(&x);
                    c.remove(&y);
                    c
                }
            };
            let sets = backdoor_sets(
                &dag,
                &x,
                &y,
                &candidates,
                max_size.unwrap_or(candidates.len()),
            )?;
            if json {
                return Ok(Outcome::ok(to_json(&sets)));
            }
            if sets.is_empty() {
                return Ok(Outcome::ok(format!(
                    "no admissible adjustment set for {x} -> {y}\n"
                )));
            }
            Ok(Outcome::ok(
                sets.iter().map(|s| format!("{}\n", s.members)).collect(),
            ))
        }
        Command::Implications {
            model,
            scope,
            max_given,
            local,
            json,
        } => {
            let dag = load_dag(&model)?;
            let statements = if local {
                local_markov_basis(&dag)
            } else {
                let scope = scope.map(|s| NodeSet::parse_list(&s).to_vec());
                api::implications(
                    &dag,
                    &api::ImplicationsRequest {
                        scope,
                        max_given: Some(max_given),
                    },
                )?
                .statements
            };
            if json {
                return Ok(Outcome::ok(to_json(&statements)));
            }
            Ok(Outcome::ok(
                statements.iter().map(|s| format!("{s}\n")).collect(),
            ))
        }
        Command::Requirements {
            model,
            roles,
            format,
            json,
        } => {
            let dag = load_dag(&model)?;
            let report = api::requirements(
                &dag,
                &api::RolesRequest {
                    exposure: roles.exposure,
                    outcome: roles.outcome,
                },
            )?;
            Ok(Outcome::ok(match (json, format) {
                (true, _) | (_, ReportFormat::Json) => to_json(&report),
                _ => render_markdown(&report),
            }))
        }
        Command::Simulate {
            model,
            rows,
            seed,
            mutate,
            output,
        } => {
            let mut scm = ScmSpec::from_document(&load_doc(&model)?)?;
            for m in &mutate {
                let (from, to, w) = parse_mutation(m)?;
                scm = scm.with_added_edge(&from, &to, w)?;
            }
            let data = sample(&scm, rows, seed);
            match output {
                Some(path) => {
                    let f = std::fs::File::create(&path)?;
                    data.write_csv(std::io::BufWriter::new(f))?;
                    Ok(Outcome::ok(String::new()))
                }
                None => Ok(Outcome::ok(data.to_csv_string())),
            }
        }
        Command::Citest {
            model,
            data,
            alpha,
            method,
            scope,
            max_given,
            statement,
            strict,
            json,
        } => {
            let dag = load_dag(&model)?;
            let file = std::fs::File::open(&data)
                .map_err(|e| Error::Usage(format!("cannot read {}: {e}", data.display())))?;
            let dataset = Dataset::read_csv(BufReader::new(file))?;
            let method = match method {
                Method::FisherZ => CiMethod::FisherZ,
                Method::GTest => CiMethod::GTest,
            };
            let report = if statement.is_empty() {
                let scope = match scope {
                    Some(s) => node_list(&dag, &s)?,
                    None => api::default_scope(
                        &dag,
                        dag.node_with_role(NodeRole::Exposure)
                            .map(|n| n.name.as_str()),
                    )
                    .iter()
                    .filter(|n| dataset.columns.contains_key(*n))
                    .cloned()
                    .collect(),
                };
                validate_model(&dag, &dataset, &scope, alpha, max_given, method)?
            } else {
                let stmts = statement
                    .iter()
                    .map(|s| CiStatement::parse(s, Provenance::UserAsserted))
                    .collect::<Result<Vec<_>, _>>()?;
                validate_statements(&dataset, &stmts, alpha, method)?
            };
            let code = u8::from(strict && report.violations > 0);
            let stdout = if json {
                to_json(&report)
            } else {
                let mut out = String::new();
                for r in &report.results {
                    out.push_str(&format!(
                        "{:<9}p = {:.4}  {}\n",
                        if r.rejected { "REJECTED" } else { "ok" },
                        r.p_value,
                        r.statement
                    ));
                }
                out.push_str(&format!(
                    "{} of {} tests rejected at alpha = {alpha}\n",
                    report.violations,
                    report.results.len()
                ));
                out
            };
            Ok(Outcome { stdout, code })
        }
        Command::Monitor {
            model,
            input,
            format,
            window,
            threshold,
            consecutive,
            spearman,
            no_stratified,
            report,
        } => {
            let dag = load_dag(&model)?;
            let mut specs = derive_monitors(&dag, !no_stratified)?;
            for s in &mut specs {
                if let Some(w) = window {
                    s.window = w;
                }
                if let Some(t) = threshold {
                    s.threshold = t;
                }
                if let Some(c) = consecutive {
                    s.consecutive = c;
                }
                if spearman {
                    s.statistic = Statistic::Spearman;
                }
                s.validate(Some(&dag))?;
            }
            let reader: Box<dyn Read> = match &input {
                Some(p) => Box::new(
                    std::fs::File::open(p)
                        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", p.display())))?,
                ),
                None => Box::new(std::io::stdin()),
            };
            let result = match format {
                StreamFormat::Csv => run_stream(&specs, read_csv(reader)),
                StreamFormat::Ndjson => run_stream(&specs, read_ndjson(BufReader::new(reader))),
            }?;
            if report {
                return Ok(Outcome::ok(to_json(&result)));
            }
            Ok(Outcome::ok(
                result
                    .alarms
                    .iter()
                    .map(|a| format!("{}\n", serde_json::to_string(a).expect("alarm serializes")))
                    .collect(),
            ))
        }
        Command::Export { model, format } => {
            let doc = load_doc(&model)?;
            Ok(Outcome::ok(match format {
                ExportFormat::Dot => to_dot(&CausalDag::build(&doc)?),
                ExportFormat::Json => serialize(&doc, Format::Json),
                ExportFormat::Dsl => serialize(&doc, Format::Dsl),
            }))
        }
        Command::Serve {
            port,
            models,
            bind_any,
        } => {
            let ip = if bind_any {
                eprintln!(
                    "warning: listening on all interfaces; the service has no authentication"
                );
                IpAddr::V4(Ipv4Addr::UNSPECIFIED)
            } else {
                IpAddr::V4(Ipv4Addr::LOCALHOST)
            };
            let addr = SocketAddr::new(ip, port);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("serving {} on http://{addr}", models.display());
            rt.block_on(causal_spec::service::serve(addr, models))?;
            Ok(Outcome::ok(String::new()))
        }
    }
}

fn validate(model: &Path, roles: &Roles, strict: bool, json: bool) -> Result<Outcome, Error> {
    let doc = load_doc(model)?;
    let dag = match CausalDag::build(&doc) {
        Ok(d) => d,
        Err(GraphError::Cycle { witness }) => {
            let stdout = if json {
                to_json(&serde_json::json!({ "valid": false, "cycle": witness }))
            } else {
                format!("cycle detected: {}\n", witness.join(" -> "))
            };
            return Ok(Outcome { stdout, code: 1 });
        }
        Err(e) => return Err(e.into()),
    };
    let has_roles = roles.exposure.is_some() || dag.node_with_role(NodeRole::Exposure).is_some();
    let gaps = if has_roles {
        let (x, y) = resolve_roles(&dag, roles.exposure.as_deref(), roles.outcome.as_deref())?;
        observability_gaps(&dag, &x, &y)?
    } else {
        NodeSet::new()
    };
    let code = u8::from(strict && !gaps.is_empty());
    let stdout = if json {
        to_json(&serde_json::json!({
            "valid": true,
            "nodes": dag.len(),
            "edges": dag.edges().len(),
            "observability_gaps": gaps,
        }))
    } else {
        let mut s = format!(
            "valid: {} nodes, {} edges, acyclic\n",
            dag.len(),
            dag.edges().len()
        );
        if !gaps.is_empty() {
            s.push_str(&format!("observability gaps: {gaps}\n"));
        }
        s
    };
    Ok(Outcome { stdout, code })
}

fn parse_mutation(spec: &str) -> Result<(String, String, f64), Error> {
    let bad = || Error::Usage(format!("mutation `{spec}` is not FROM->TO=WEIGHT"));
    let (edge, weight) = spec.split_once('=').ok_or_else(bad)?;
    let (from, to) = edge.split_once("->").ok_or_else(bad)?;
    let w: f64 = weight.trim().parse().map_err(|_| bad())?;
    Ok((from.trim().to_string(), to.trim().to_string(), w))
}

fn analysis_text(r: &api::AnalysisReport) -> String {
    let mut s = format!("model {}: {} -> {}\n\n", r.model, r.exposure, r.outcome);
    s.push_str(&format!("causal paths ({}):\n", r.paths.causal.len()));
    for p in &r.paths.causal {
        s.push_str(&format!("  {}\n", p.render()));
    }
    s.push_str(&format!(
        "open biasing paths ({}):\n",
        r.paths.biasing_open.len()
    ));
    for p in &r.paths.biasing_open {
        s.push_str(&format!("  {}\n", p.render()));
    }
    s.push_str(&format!("blocked paths: {}\n\n", r.paths.blocked.len()));
    s.push_str("adjustment sets:\n");
    for a in &r.adjustment {
        s.push_str(&format!("  {}\n", a.members));
    }
    if !r.validation.observability_gaps.is_empty() {
        s.push_str(&format!(
            "observability gaps: {}\n",
            r.validation.observability_gaps
        ));
    }
    s.push_str(&format!(
        "\nimplied independencies ({}):\n",
        r.implications.len()
    ));
    for i in &r.implications {
        s.push_str(&format!("  {i}\n"));
    }
    if !r.validation.asserted.is_empty() {
        s.push_str("\nrecorded independence assumptions:\n");
        for a in &r.validation.asserted {
            s.push_str(&format!(
                "  {:<5}{}  {}\n",
                a.tag,
                if a.holds { "implied" } else { "NOT implied" },
                a.statement
            ));
        }
    }
    s.push_str(&format!("\nrequirements ({}):\n", r.requirements.len()));
    for a in &r.requirements {
        s.push_str(&format!("  {:<7}{}\n", a.id, a.text));
    }
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth a panic
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
