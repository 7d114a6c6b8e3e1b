use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kard::pipeline::{
    cmd_candidates, cmd_emit_train, cmd_eval, cmd_index, cmd_rerank_infer, cmd_rerank_train,
    cmd_simulate, run_pipeline, CandidateParams, EmitParams, EvalParams, FilterSpec, IndexParams,
    InferParams, Manifest, PipelineConfig, ScorerSource, TrainParams,
};
use kard::rerank::Optimizer;
use kard::sim::{SimConfig, Sweep};

#[derive(Parser)]
#[command(
    name = "kard",
    version,
    about = "Knowledge-augmented reasoning distillation toolkit"
)]
struct Cli {
    /// Seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress the stage summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Where to write the run manifest (default: <output>.manifest.json).
    #[arg(long, global = true)]
    manifest_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a BM25 index from a corpus JSONL.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        k1: f64,
        #[arg(long, default_value_t = 0.4)]
        b: f64,
    },
    /// Emit knowledge-augmented training examples.
    EmitTrain {
        #[arg(long)]
        rationales: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Passages per example.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// medqa, strategyqa or custom:<header file>.
        #[arg(long, default_value = "medqa")]
        template: String,
        /// answer-match, none or verdict-file:<path>.
        #[arg(long, default_value = "answer-match")]
        filter: FilterSpec,
        #[arg(long)]
        max_knowledge_chars: Option<usize>,
        /// Emit without the Knowledge block.
        #[arg(long)]
        no_knowledge: bool,
    },
    /// Build reranker candidate sets with BM25 teacher scores.
    Candidates {
        #[arg(long)]
        rationales: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Documents retrieved by the rationale.
        #[arg(long)]
        kappa1: Option<usize>,
        /// Documents retrieved by the question.
        #[arg(long)]
        kappa2: Option<usize>,
        /// single-domain (8, 0) or mixed (4, 4); explicit kappas override it.
        #[arg(long, value_enum, default_value_t = KappaPreset::SingleDomain)]
        preset: KappaPreset,
        #[arg(long, default_value = "answer-match")]
        filter: FilterSpec,
    },
    /// Distill teacher scores into the reranker.
    RerankTrain {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Continue from this checkpoint instead of the identity model.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        tau1: f64,
        #[arg(long, default_value_t = 100.0)]
        tau2: f64,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, value_enum, default_value_t = OptimizerArg::Gd)]
        optimizer: OptimizerArg,
        #[arg(long, default_value_t = 256)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        hash_seed: u64,
    },
    /// Retrieve with BM25, rerank, keep the top k.
    RerankInfer {
        /// JSONL with "id" and "question" (the rationale file works).
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        index: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, group = "scorer")]
        model: Option<PathBuf>,
        /// External scores, {"id", "doc_id", "score"} JSONL.
        #[arg(long, group = "scorer")]
        score_file: Option<PathBuf>,
        /// Rank by BM25 only.
        #[arg(long, group = "scorer")]
        baseline: bool,
        #[arg(long, default_value_t = 100)]
        kappa_star: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Hits@k against silver documents and self-consistency accuracy.
    Eval {
        #[arg(long)]
        rationales: PathBuf,
        #[arg(long)]
        index: PathBuf,
        /// rerank-infer output.
        #[arg(long)]
        retrieved: Option<PathBuf>,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,3,10")]
        k: Vec<usize>,
        /// Count a hit only when every silver document is in the top k.
        #[arg(long)]
        all_silver: bool,
        #[arg(long, default_value_t = 0)]
        gold_j: usize,
    },
    /// Memorization simulation.
    Simulate(SimArgs),
    /// Run the whole chain from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long = "N", default_value_t = 100)]
    num_references: usize,
    #[arg(long = "n", default_value_t = 100)]
    num_samples: usize,
    #[arg(long = "d", default_value_t = 128)]
    length: usize,
    #[arg(long = "R", default_value_t = 100)]
    distractors: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 500)]
    tests: usize,
    /// param=start:end:step, param one of N, n, d, R, eps. Output becomes CSV.
    #[arg(long)]
    sweep: Option<Sweep>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KappaPreset {
    SingleDomain,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    Gd,
    Adam,
}

fn finish(cli: &Cli, manifest: &Manifest, primary: &Path) -> Result<()> {
    let path = manifest.write(cli.manifest_out.as_deref(), primary)?;
    if !cli.quiet {
        eprintln!("{} -> {}", manifest.command, primary.display());
        eprintln!("{}", serde_json::to_string(&manifest.stats)?);
        eprintln!("manifest: {}", path.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Index {
            corpus,
            output,
            k1,
            b,
        } => {
            let m = cmd_index(corpus, output, &IndexParams { k1: *k1, b: *b })?;
            finish(cli, &m, output)
        }
        Command::EmitTrain {
            rationales,
            corpus,
            index,
            output,
            k,
            template,
            filter,
            max_knowledge_chars,
            no_knowledge,
        } => {
            let params = EmitParams {
                k: *k,
                template: template.clone(),
                filter: filter.clone(),
                max_knowledge_chars: *max_knowledge_chars,
                no_knowledge: *no_knowledge,
            };
            let m = cmd_emit_train(rationales, corpus, index, output, &params)?;
            finish(cli, &m, output)
        }
        Command::Candidates {
            rationales,
            index,
            output,
            kappa1,
            kappa2,
            preset,
            filter,
        } => {
            let (p1, p2) = match preset {
                KappaPreset::SingleDomain => (8, 0),
                KappaPreset::Mixed => (4, 4),
            };
            let params = CandidateParams {
                kappa1: kappa1.unwrap_or(p1),
                kappa2: kappa2.unwrap_or(p2),
                filter: filter.clone(),
            };
            let m = cmd_candidates(rationales, index, output, &params)?;
            finish(cli, &m, output)
        }
        Command::RerankTrain {
            candidates,
            corpus,
            output,
            init,
            tau1,
            tau2,
            lr,
            epochs,
            optimizer,
            dim,
            hash_seed,
        } => {
            let params = TrainParams {
                tau1: *tau1,
                tau2: *tau2,
                lr: *lr,
                epochs: *epochs,
                optimizer: match optimizer {
                    OptimizerArg::Gd => Optimizer::GradientDescent,
                    OptimizerArg::Adam => Optimizer::adam(),
                },
                dim: *dim,
                hash_seed: *hash_seed,
                seed: cli.seed,
            };
            let m = cmd_rerank_train(candidates, corpus, init.as_deref(), output, &params)?;
            finish(cli, &m, output)
        }
        Command::RerankInfer {
            questions,
            corpus,
            index,
            output,
            model,
            score_file,
            baseline,
            kappa_star,
            k,
        } => {
            let scorer = match (model, score_file, baseline) {
                (Some(p), _, _) => ScorerSource::Model(p.clone()),
                (_, Some(p), _) => ScorerSource::ScoreFile(p.clone()),
                (_, _, true) => ScorerSource::Bm25,
                _ => anyhow::bail!("one of --model, --score-file or --baseline is required"),
            };
            let params = InferParams {
                kappa_star: *kappa_star,
                k: *k,
            };
            let m = cmd_rerank_infer(questions, corpus, index, &scorer, output, &params)?;
            finish(cli, &m, output)
        }
        Command::Eval {
            rationales,
            index,
            retrieved,
            predictions,
            output,
            k,
            all_silver,
            gold_j,
        } => {
            let params = EvalParams {
                ks: k.clone(),
                all_silver: *all_silver,
                gold_j: *gold_j,
            };
            let m = cmd_eval(
                rationales,
                index,
                retrieved.as_deref(),
                predictions.as_deref(),
                output,
                &params,
            )?;
            finish(cli, &m, output)
        }
        Command::Simulate(a) => {
            let config = SimConfig {
                num_references: a.num_references,
                num_samples: a.num_samples,
                length: a.length,
                distractors: a.distractors,
                epsilon: a.eps,
                trials: a.trials,
                tests_per_trial: a.tests,
                seed: cli.seed,
            };
            let (rendered, m) = cmd_simulate(&config, a.sweep.as_ref(), a.output.as_deref())?;
            match &a.output {
                Some(p) => finish(cli, &m, p),
                None => {
                    print!("{rendered}");
                    Ok(())
                }
            }
        }
        Command::Run { config } => {
            let config = PipelineConfig::load(config)?;
            for m in run_pipeline(&config)? {
                if !cli.quiet {
                    eprintln!("{}: {}", m.command, serde_json::to_string(&m.stats)?);
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
