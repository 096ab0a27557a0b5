use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use signdim::analysis::{
    analyze_file, dimension_pipeline, discover_batch, generate_synthetic, leave_one_out,
    parse_discussion, read_text_sidecar, run_report, synthetic_comment_texts, texts_for, LooConfig,
    LooModel, PipelineConfig, ReportConfig, SyntheticParams, VotingModel,
};
use signdim::feasibility::{
    decide_feasibility, emit_smt_constraints, parse_smt_model, parse_solver_output,
    predict_deterministic, ExternalSolver, FeasibilityConfig, FeasibilityOutcome, Method,
    SearchBudget, SolverVerdict, Status,
};
use signdim::mle_embed::{fit, predict_direction, predict_prob, EmbeddingDocument, FitConfig};
use signdim::sc_bound::{estimate_dimension_upper_bound, BoundConfig};
use signdim::seeds::derive_seed;
use signdim::sign_matrix::{write_votes_csv, MatrixDocument, PartialSignMatrix, Sign};

#[derive(Parser)]
#[command(
    name = "signdim",
    version,
    about = "Latent opinion dimension of up/down vote matrices"
)]
struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML or JSON configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Votes as CSV (comment_id,voter_id,vote) or JSON, a matrix document, or `-` for stdin.
    input: PathBuf,

    /// Drop the discussion when fewer comments remain after pruning.
    #[arg(long)]
    min_comments: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and prune votes, print the matrix document and its statistics.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Estimate the dimension: rank-one test, feasibility, then the sign-change bound.
    Dim {
        #[command(flatten)]
        input: InputArgs,
        /// Largest dimension tried with the feasibility stage.
        #[arg(long)]
        max_exact: Option<usize>,
        /// Solver command line, e.g. "z3 -in -smt2".
        #[arg(long)]
        solver: Option<String>,
    },
    /// Upper bound from column sign changes, with its certificate.
    Bound {
        #[command(flatten)]
        input: InputArgs,
        /// Walk sources sampled when there are many rows.
        #[arg(long)]
        sources: Option<usize>,
    },
    /// Decide feasibility at dimension r, or check a solver model against the votes.
    Feas {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        r: usize,
        /// Random restarts for the witness search.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        solver: Option<String>,
        /// Solver output (sat/unsat and model) to check instead of searching; `-` for stdin.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print the SMT-LIB feasibility problem at dimension r.
    ExportSmt {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        r: usize,
    },
    /// Fit a probabilistic embedding.
    Embed {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Predict one vote from a fitted embedding.
    Predict {
        /// Embedding document written by `embed`.
        #[arg(long)]
        model: PathBuf,
        /// Comment label or row index.
        #[arg(long)]
        comment: String,
        /// Voter label or column index.
        #[arg(long)]
        voter: String,
    },
    /// Leave-one-out vote prediction accuracy.
    Loo {
        #[command(flatten)]
        input: InputArgs,
        /// dvm or pvm.
        #[arg(long, default_value = "pvm")]
        model: String,
        /// Use a baseline instead of the model (only `majority`).
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        max_holdouts: Option<usize>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Full report for one discussion, or JSON lines for a directory.
    Analyze {
        /// Vote file; omit with --batch.
        input: Option<PathBuf>,
        /// comment_id,text sidecar for lexical similarity.
        #[arg(long)]
        text: Option<PathBuf>,
        /// Directory of vote files with optional <stem>.text.csv sidecars.
        #[arg(long, conflicts_with_all = ["input", "text"])]
        batch: Option<PathBuf>,
        #[arg(long)]
        min_comments: Option<usize>,
        #[arg(long)]
        no_loo: bool,
    },
    /// Generate a synthetic discussion from a planted embedding.
    Simulate {
        #[arg(long)]
        n_comments: Option<usize>,
        #[arg(long)]
        n_voters: Option<usize>,
        #[arg(long)]
        r_true: Option<usize>,
        /// deterministic or probabilistic.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        observe_prob: Option<f64>,
        #[arg(long)]
        consensus: Option<f64>,
        /// Also write the votes as CSV here.
        #[arg(long)]
        votes_csv: Option<PathBuf>,
        /// Write a corpus of discussions with text sidecars into this directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 20, requires = "corpus")]
        count: usize,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    min_comments: Option<usize>,
    max_exact: Option<usize>,
    solver: Option<String>,
    sources: Option<usize>,
    max_holdouts: Option<usize>,
    search: Option<SearchBudget>,
    fit: Option<FitConfig>,
    synthetic: Option<SyntheticParams>,
}

impl FileConfig {
    fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let is_json =
            path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let cfg = if is_json {
            serde_json::from_str(&text).map_err(signdim::Error::from)?
        } else {
            toml::from_str(&text)
                .map_err(|e| signdim::Error::Parse(format!("{}: {e}", path.display())))?
        };
        Ok(cfg)
    }
}

/// Configuration after merging the file with command line flags.
struct Settings {
    seed: u64,
    file: FileConfig,
}

impl Settings {
    fn min_comments(&self, flag: Option<usize>) -> usize {
        flag.or(self.file.min_comments).unwrap_or(1)
    }

    fn budget(&self, restarts: Option<usize>) -> SearchBudget {
        let mut b = self.file.search.unwrap_or_default();
        if let Some(r) = restarts {
            b.restarts = r;
        }
        b
    }

    fn solver(&self, flag: Option<&str>) -> anyhow::Result<Option<ExternalSolver>> {
        Ok(match flag.or(self.file.solver.as_deref()) {
            Some(cmd) => Some(ExternalSolver::from_command_line(cmd)?),
            None => None,
        })
    }

    fn fit(&self, args: Option<&FitArgs>) -> FitConfig {
        let mut cfg = self.file.fit.clone().unwrap_or_default();
        cfg.seed = self.seed;
        if let Some(a) = args {
            cfg.r = a.r.unwrap_or(cfg.r);
            cfg.alpha = a.alpha.unwrap_or(cfg.alpha);
            cfg.n_epochs = a.epochs.unwrap_or(cfg.n_epochs);
            cfg.step_size = a.step_size.unwrap_or(cfg.step_size);
            cfg.batch = a.batch.unwrap_or(cfg.batch);
        }
        cfg
    }

    fn pipeline(
        &self,
        max_exact: Option<usize>,
        solver: Option<&str>,
    ) -> anyhow::Result<PipelineConfig> {
        let mut bound = BoundConfig {
            seed: self.seed,
            ..BoundConfig::default()
        };
        if let Some(n) = self.file.sources {
            bound.n_sources = n;
        }
        Ok(PipelineConfig {
            seed: self.seed,
            budget: self.budget(None),
            solver: self.solver(solver)?,
            max_exact: max_exact.or(self.file.max_exact).unwrap_or(3),
            bound,
        })
    }
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .context("reading standard input")?;
        Ok(text)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn load(input: &InputArgs, settings: &Settings) -> anyhow::Result<PartialSignMatrix> {
    let text = read_input(&input.input)?;
    let m = parse_discussion(&text, settings.min_comments(input.min_comments))
        .with_context(|| format!("loading {}", input.input.display()))?;
    log::info!(
        "{}: {} comments, {} voters, {} votes",
        input.input.display(),
        m.n_comments(),
        m.n_voters(),
        m.n_observed()
    );
    Ok(m)
}

struct Sink {
    out: Box<dyn Write>,
}

impl Sink {
    fn open(path: Option<&Path>) -> anyhow::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(
                fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink { out })
    }

    fn json<T: Serialize>(&mut self, value: &T) -> anyhow::Result<()> {
        serde_json::to_writer_pretty(&mut self.out, value)?;
        writeln!(self.out)?;
        Ok(())
    }

    fn json_line<T: Serialize>(&mut self, value: &T) -> anyhow::Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        writeln!(self.out)?;
        Ok(())
    }

    fn text(&mut self, text: &str) -> anyhow::Result<()> {
        self.out.write_all(text.as_bytes())?;
        Ok(())
    }

    fn finish(mut self) -> anyhow::Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

fn resolve_index(key: &str, labels: &[String], what: &str) -> anyhow::Result<usize> {
    if let Some(i) = labels.iter().position(|l| l == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if labels.is_empty() || i < labels.len() => Ok(i),
        _ => Err(signdim::Error::InvalidParams(format!("unknown {what} {key:?}")).into()),
    }
}

fn check_solver_output(
    m: &PartialSignMatrix,
    r: usize,
    text: &str,
) -> anyhow::Result<FeasibilityOutcome> {
    let status = match parse_solver_output(text)? {
        SolverVerdict::Sat(model) => Status::Feasible {
            witness: parse_smt_model(&model, m, r)?,
        },
        SolverVerdict::Unsat => Status::InfeasibleCertified,
        SolverVerdict::Unknown => Status::Unknown,
    };
    Ok(FeasibilityOutcome {
        status,
        method: Method::ExternalSolver,
        r,
    })
}

#[derive(Serialize)]
struct IngestOutput<'a> {
    matrix: MatrixDocument,
    stats: &'a signdim::sign_matrix::MatrixStats,
}

#[derive(Serialize)]
struct Prediction {
    comment: String,
    voter: String,
    p_up: f64,
    direction: signdim::Direction,
    deterministic_direction: signdim::Direction,
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    truth: &'a signdim::analysis::SyntheticGroundTruth,
    matrix: MatrixDocument,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let settings = Settings {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        file,
    };
    let mut sink = Sink::open(cli.output.as_deref())?;

    match cli.command {
        Command::Ingest { input } => {
            let m = load(&input, &settings)?;
            let stats = m.stats();
            sink.json(&IngestOutput {
                matrix: MatrixDocument::from(&m),
                stats: &stats,
            })?;
        }
        Command::Dim {
            input,
            max_exact,
            solver,
        } => {
            let m = load(&input, &settings)?;
            let cfg = settings.pipeline(max_exact, solver.as_deref())?;
            let id = signdim::analysis::discussion_id(&input.input);
            sink.json(&dimension_pipeline(&m, &id, &cfg)?)?;
        }
        Command::Bound { input, sources } => {
            let m = load(&input, &settings)?;
            let mut cfg = settings.pipeline(None, None)?.bound;
            if let Some(n) = sources {
                cfg.n_sources = n;
            }
            sink.json(&estimate_dimension_upper_bound(&m, &cfg)?)?;
        }
        Command::Feas {
            input,
            r,
            budget,
            solver,
            model,
        } => {
            let m = load(&input, &settings)?;
            let outcome = match model {
                Some(path) => check_solver_output(&m, r, &read_input(&path)?)?,
                None => {
                    let cfg = FeasibilityConfig {
                        budget: settings.budget(budget),
                        seed: settings.seed,
                        solver: settings.solver(solver.as_deref())?,
                    };
                    decide_feasibility(&m, r, &cfg)?
                }
            };
            sink.json(&outcome)?;
        }
        Command::ExportSmt { input, r } => {
            let m = load(&input, &settings)?;
            sink.text(&emit_smt_constraints(&m, r)?)?;
        }
        Command::Embed { input, fit: args } => {
            let m = load(&input, &settings)?;
            let out = fit(&m, &settings.fit(Some(&args)))?;
            sink.json(&EmbeddingDocument::new(
                &out.embedding,
                out.objective,
                Some(&m),
            ))?;
        }
        Command::Predict {
            model,
            comment,
            voter,
        } => {
            let text = read_input(&model)?;
            let doc: EmbeddingDocument =
                serde_json::from_str(&text).map_err(signdim::Error::from)?;
            let emb = doc.embedding()?;
            let i = resolve_index(&comment, &doc.row_labels, "comment")?;
            let j = resolve_index(&voter, &doc.col_labels, "voter")?;
            let p_up = predict_prob(&emb, i, j, Sign::Plus)?;
            let direction = predict_direction(&emb, i, j)?;
            let deterministic_direction =
                predict_deterministic(&emb.c.row(i).to_vec(), &emb.v.row(j).to_vec())?;
            sink.json(&Prediction {
                comment,
                voter,
                p_up,
                direction,
                deterministic_direction,
            })?;
        }
        Command::Loo {
            input,
            model,
            baseline,
            max_holdouts,
            fit: args,
        } => {
            let m = load(&input, &settings)?;
            let model = match baseline.as_deref() {
                Some("majority") => LooModel::Majority,
                Some(other) => bail!(signdim::Error::InvalidParams(format!(
                    "unknown baseline {other:?}"
                ))),
                None => model.parse()?,
            };
            let fit_cfg = settings.fit(Some(&args));
            let cfg = LooConfig {
                max_holdouts: max_holdouts.or(settings.file.max_holdouts).unwrap_or(500),
                seed: settings.seed,
                r: fit_cfg.r,
                budget: settings.budget(None),
                fit: fit_cfg,
            };
            sink.json(&leave_one_out(&m, model, &cfg)?)?;
        }
        Command::Analyze {
            input,
            text,
            batch,
            min_comments,
            no_loo,
        } => {
            let mut cfg = ReportConfig {
                pipeline: settings.pipeline(None, None)?,
                fit: settings.fit(None),
                min_comments: settings.min_comments(min_comments),
                run_loo: !no_loo,
                ..ReportConfig::default()
            };
            cfg.loo.max_holdouts = settings.file.max_holdouts.unwrap_or(cfg.loo.max_holdouts);
            cfg.loo.budget = settings.budget(None);
            match (input, batch) {
                (_, Some(dir)) => {
                    for (votes, sidecar) in discover_batch(&dir)? {
                        log::info!("analyzing {}", votes.display());
                        let report = analyze_file(&votes, sidecar.as_deref(), &cfg)
                            .with_context(|| format!("analyzing {}", votes.display()))?;
                        sink.json_line(&report)?;
                    }
                }
                (Some(path), None) if path == Path::new("-") => {
                    let m = parse_discussion(&read_input(&path)?, cfg.min_comments)?;
                    let texts = text
                        .as_deref()
                        .map(read_text_sidecar)
                        .transpose()?
                        .map(|s| texts_for(&m, &s));
                    sink.json(&run_report(&m, "stdin", texts.as_deref(), &cfg)?)?;
                }
                (Some(path), None) => {
                    let report = analyze_file(&path, text.as_deref(), &cfg)
                        .with_context(|| format!("analyzing {}", path.display()))?;
                    sink.json(&report)?;
                }
                (None, None) => bail!(signdim::Error::InvalidParams(
                    "give an input file or --batch".into()
                )),
            }
        }
        Command::Simulate {
            n_comments,
            n_voters,
            r_true,
            model,
            observe_prob,
            consensus,
            votes_csv,
            corpus,
            count,
        } => {
            let mut params = settings.file.synthetic.clone().unwrap_or_default();
            params.seed = settings.seed;
            params.n_comments = n_comments.unwrap_or(params.n_comments);
            params.n_voters = n_voters.unwrap_or(params.n_voters);
            params.r_true = r_true.unwrap_or(params.r_true);
            params.observe_prob = observe_prob.unwrap_or(params.observe_prob);
            params.consensus = consensus.unwrap_or(params.consensus);
            if let Some(name) = model {
                params.model = match name.to_ascii_lowercase().as_str() {
                    "deterministic" | "dvm" => VotingModel::Deterministic,
                    "probabilistic" | "pvm" => VotingModel::Probabilistic,
                    _ => bail!(signdim::Error::InvalidParams(format!(
                        "unknown voting model {name:?}"
                    ))),
                };
            }
            match corpus {
                Some(dir) => write_corpus(&dir, count, &params, &mut sink)?,
                None => {
                    let (m, truth) = generate_synthetic(&params)?;
                    if let Some(path) = votes_csv {
                        let f = fs::File::create(&path)
                            .with_context(|| format!("creating {}", path.display()))?;
                        write_votes_csv(f, &m.to_votes())?;
                    }
                    sink.json(&SimulationOutput {
                        truth: &truth,
                        matrix: MatrixDocument::from(&m),
                    })?;
                }
            }
        }
    }
    sink.finish()
}

/// Discussions of varying size, sparsity and planted dimension, each written
/// as `<id>.csv`, `<id>.text.csv` and `<id>.truth.json`. Prints one line per
/// discussion.
fn write_corpus(
    dir: &Path,
    count: usize,
    base: &SyntheticParams,
    sink: &mut Sink,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for k in 0..count {
        let seed = derive_seed(base.seed, k as u64);
        let params = SyntheticParams {
            n_comments: 8 + (seed % 13) as usize,
            n_voters: 15 + ((seed >> 8) % 26) as usize,
            r_true: 1 + k % 4,
            observe_prob: 0.35 + ((seed >> 16) % 40) as f64 / 100.0,
            seed,
            ..base.clone()
        };
        let (m, truth) = generate_synthetic(&params)?;
        let id = format!("discussion_{k:02}");

        let votes = fs::File::create(dir.join(format!("{id}.csv")))?;
        write_votes_csv(votes, &m.to_votes())?;

        let mut texts = csv::Writer::from_path(dir.join(format!("{id}.text.csv")))
            .map_err(signdim::Error::from)?;
        texts
            .write_record(["comment_id", "text"])
            .map_err(signdim::Error::from)?;
        for (label, text) in m
            .row_labels()
            .iter()
            .zip(synthetic_comment_texts(&truth, seed))
        {
            texts
                .write_record([label.as_str(), text.as_str()])
                .map_err(signdim::Error::from)?;
        }
        texts.flush()?;

        fs::write(
            dir.join(format!("{id}.truth.json")),
            serde_json::to_string_pretty(&truth)? + "\n",
        )?;
        sink.json_line(&serde_json::json!({
            "discussion_id": id,
            "n_comments": params.n_comments,
            "n_voters": params.n_voters,
            "r_true": params.r_true,
            "observe_prob": params.observe_prob,
            "seed": seed,
        }))?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<signdim::Error>() {
            return e.exit_code() as u8;
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 2;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
