//! Command-line front end. Every subcommand resolves its settings from an
//! optional config file plus flags, derives its random stream from the seed
//! and its own name, writes its artifacts and closes with `manifest.json`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use srcbias_core::ablation::Ablation;
use srcbias_core::corpus::{validate_queries, Corpus, QueryRecord, RelevanceMap, Source};
use srcbias_core::eval::{evaluate, evaluate_pooled, EvalOptions, EvalReport};
use srcbias_core::metrics::{location_delta, mixr, simulate_interleaved, interleave_seeds, DeltaReport, DEFAULT_KS};
use srcbias_core::pvector::{
    apply_shift, cluster_stats, extract_p, pca_project_2d, shift_delta_report, EmbeddingSpace, PVariant,
};
use srcbias_core::ranking::{pool_corpus, resample_corpus, shuffle_corpus, PooledEmbedding, Pooling, ShuffleMode, DEFAULT_FRAMES};
use srcbias_core::rng::derive_seed;
use srcbias_core::scorer::{score, ScorerParams};
use srcbias_core::stats::{flow_summary, paired_t_test, DEFAULT_FLOW_BINS};
use srcbias_core::synth::{generate_flows, generate_synthetic, FlowSynthConfig, SynthConfig};
use srcbias_core::train::{train, TrainConfig};
use srcbias_core::vector::norm;

use crate::config::Settings;
use crate::error::{Error, Result};
use crate::io;
use crate::report::{self, OutputDir};
use crate::svg;

#[derive(Parser, Debug)]
#[command(name = "srcbias", version, about = "Measure and reverse source bias in text-video retrieval")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank both corpora alone and mixed, and report bundles and deltas.
    Metrics {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Simulate mixed ranks from two single-source rank tables.
    Interleave {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        real_ranks: Option<PathBuf>,
        #[arg(long)]
        ai_ranks: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        ks: Option<String>,
    },
    /// Re-evaluate after shuffling, reversing or single-frame retrieval.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        /// shuffle-all | shuffle-ai | reverse | single-frame
        #[arg(long)]
        mode: Option<String>,
    },
    /// Train the linear scorer with the contrastive debias objective.
    TrainDebias {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Extract, apply or summarize debiasing shift vectors.
    Pvector {
        #[command(subcommand)]
        action: PvectorAction,
    },
    /// Generate synthetic corpora or flow fields.
    Synth {
        #[command(subcommand)]
        action: SynthAction,
    },
    /// Paired t-test of text-real against text-AI similarity.
    Ttest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        /// Scorer parameters; the identity projection when absent.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Entropy of paired real/AI optical-flow magnitude grids.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        real_flows: Option<PathBuf>,
        #[arg(long)]
        ai_flows: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Collect the deltas of several run directories into one table and chart.
    Report {
        #[command(flatten)]
        common: Common,
        /// Directories containing `deltas.json`.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum PvectorAction {
    /// p = h^d - h for every video of the target corpus.
    Extract {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        /// Original scorer; the identity projection when absent.
        #[arg(long)]
        original: Option<PathBuf>,
        #[arg(long)]
        debiased: Option<PathBuf>,
        /// real | ai
        #[arg(long)]
        target: Option<String>,
        /// projected | raw
        #[arg(long)]
        space: Option<String>,
        /// standard | random
        #[arg(long)]
        variant: Option<String>,
    },
    /// Add p_avg to the target corpus and report the change in deltas.
    Apply {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        pvectors: Option<PathBuf>,
        /// Scorer whose projected space the shifts live in; identity when absent.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Cluster statistics and a PCA projection of shifts against embeddings.
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        pvectors: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SynthAction {
    /// Write a real corpus, its AI counterpart, queries and relevance.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_items: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        drift: Option<f64>,
        #[arg(long)]
        temporal_bias: Option<f64>,
    },
    /// Write paired real/AI flow magnitude grids.
    Flows {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        ai_spread: Option<f64>,
    },
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct Inputs {
    #[arg(long)]
    real: Option<PathBuf>,
    #[arg(long)]
    ai: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    relevance: Option<PathBuf>,
    /// uniform-mean | positional-ramp | single-frame
    #[arg(long)]
    pool: Option<String>,
    /// Frames sampled per video.
    #[arg(long)]
    frames: Option<usize>,
    /// Frame index for single-frame pooling; the middle frame when absent.
    #[arg(long)]
    frame: Option<usize>,
    /// Interleavings averaged for Location delta.
    #[arg(long)]
    seeds: Option<usize>,
    /// Recall cutoffs, comma separated.
    #[arg(long)]
    ks: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    holdout: Option<f64>,
}

fn settings(common: &Common) -> Result<Settings> {
    let mut s = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    s.set("seed", common.seed);
    s.set("out", common.out.as_ref().map(|p| p.display()));
    Ok(s)
}

fn apply_inputs(s: &mut Settings, i: &Inputs) {
    s.set("real", i.real.as_ref().map(|p| p.display()));
    s.set("ai", i.ai.as_ref().map(|p| p.display()));
    s.set("queries", i.queries.as_ref().map(|p| p.display()));
    s.set("relevance", i.relevance.as_ref().map(|p| p.display()));
    s.set("pool", i.pool.as_ref());
    s.set("frames", i.frames);
    s.set("frame", i.frame);
    s.set("seeds", i.seeds);
    s.set("ks", i.ks.as_ref());
}

fn set_path(s: &mut Settings, key: &str, p: &Option<PathBuf>) {
    s.set(key, p.as_ref().map(|p| p.display()));
}

fn frames(s: &Settings) -> Result<usize> {
    let f = s.parse_or("frames", DEFAULT_FRAMES)?;
    if f == 0 {
        return Err(Error::Config("`frames` must be at least 1".into()));
    }
    Ok(f)
}

fn pooling(s: &Settings, default: Pooling) -> Result<Pooling> {
    let f = frames(s)?;
    let pool = match s.get("pool") {
        None => default,
        Some("uniform-mean") => Pooling::UniformMean,
        Some("positional-ramp") => Pooling::PositionalRamp,
        Some("single-frame") => Pooling::middle_frame(f),
        Some(other) => {
            return Err(Error::Config(format!(
                "`pool` = `{other}`: expected uniform-mean, positional-ramp or single-frame"
            )))
        }
    };
    Ok(match (pool, s.parse::<usize>("frame")?) {
        (Pooling::SingleFrame(_), Some(k)) if k >= f => {
            return Err(Error::Config(format!("`frame` = {k} is out of range for {f} frames")))
        }
        (Pooling::SingleFrame(_), Some(k)) => Pooling::SingleFrame(k),
        (p, _) => p,
    })
}

fn eval_options(s: &Settings, seed: u64) -> Result<EvalOptions> {
    let ks = match s.get("ks") {
        None => DEFAULT_KS.to_vec(),
        Some(text) => text
            .split(',')
            .map(|k| k.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<u32>, _>>()
            .map_err(|e| Error::Config(format!("`ks` = `{text}`: {e}")))?,
    };
    if !ks.contains(&1) || ks.contains(&0) {
        return Err(Error::Config("`ks` must include 1 and only positive cutoffs".into()));
    }
    let runs = s.parse_or("seeds", 1usize)?;
    if runs == 0 {
        return Err(Error::Config("`seeds` must be at least 1".into()));
    }
    Ok(EvalOptions { ks, seed, runs })
}

fn target(s: &Settings) -> Result<Source> {
    match s.get("target").unwrap_or("ai") {
        "real" => Ok(Source::Real),
        "ai" => Ok(Source::Ai),
        other => Err(Error::Config(format!("`target` = `{other}`: expected real or ai"))),
    }
}

fn load_side(s: &Settings, source: Source) -> Result<Corpus> {
    io::load_corpus_from(&s.path(source.as_str())?, source)
}

/// Both corpora, queries and relevance, cross-checked.
struct Loaded {
    real: Corpus,
    ai: Corpus,
    queries: Vec<QueryRecord>,
    rel: RelevanceMap,
}

fn load_all(s: &Settings) -> Result<Loaded> {
    let real_path = s.path("real")?;
    let ai_path = s.path("ai")?;
    let real = io::load_corpus_from(&real_path, Source::Real)?;
    let ai = io::load_corpus_from(&ai_path, Source::Ai)?;
    if ai.dim() != real.dim() {
        return Err(Error::Config(format!(
            "{}: dimension {} differs from the real corpus ({})",
            ai_path.display(),
            ai.dim(),
            real.dim()
        )));
    }
    let q_path = s.path("queries")?;
    let queries = io::load_queries(&q_path)?;
    validate_queries(&queries, real.dim()).map_err(|e| Error::invalid(&q_path, e))?;
    let r_path = s.path("relevance")?;
    let rel = io::load_relevance(&r_path)?;
    rel.check_against(&queries, &real).map_err(|e| Error::invalid(&r_path, e))?;
    rel.check_against(&queries, &ai).map_err(|e| Error::invalid(&r_path, e))?;
    Ok(Loaded { real, ai, queries, rel })
}

fn load_params_or_identity(s: &Settings, key: &str, dim: usize) -> Result<ScorerParams> {
    match s.get(key) {
        Some(p) => {
            let path = PathBuf::from(p);
            let params = io::load_params(&path)?;
            if params.dim() != dim {
                return Err(Error::Config(format!(
                    "{}: scorer dimension {} does not match corpus dimension {dim}",
                    path.display(),
                    params.dim()
                )));
            }
            Ok(params)
        }
        None => Ok(ScorerParams::identity(dim, 1.0)?),
    }
}

fn out_dir(s: &Settings) -> Result<OutputDir> {
    Ok(OutputDir::new(s.path("out")?))
}

fn delta_chart(title: &str, d: &DeltaReport) -> String {
    let series = ["Relative", "Location", "Normalized"].map(String::from);
    let mut groups: Vec<(String, Vec<f64>)> = d
        .relative
        .iter()
        .zip(d.location.iter())
        .zip(d.normalized.iter())
        .map(|(((m, r), (_, l)), (_, n))| (m.to_string(), vec![r, l, n]))
        .collect();
    groups.push(("MixR".into(), vec![d.mixr.relative, d.mixr.location, d.mixr.normalized]));
    svg::bar_chart(title, &series, &groups)
}

fn write_eval(out: &mut OutputDir, title: &str, r: &EvalReport) -> Result<()> {
    out.write("bundles.csv", report::bundles_csv(&r.bundles))?;
    out.write("deltas.csv", report::deltas_csv(&r.deltas))?;
    out.write("deltas.json", report::deltas_json(&r.deltas))?;
    out.write("deltas.svg", delta_chart(title, &r.deltas))?;
    out.write("ranks_real.csv", io::rank_table_csv(&r.ranks.real))?;
    out.write("ranks_ai.csv", io::rank_table_csv(&r.ranks.ai))?;
    out.write("ranks_mixed_real.csv", io::rank_table_csv(&r.ranks.mixed_real))?;
    out.write("ranks_mixed_ai.csv", io::rank_table_csv(&r.ranks.mixed_ai))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Metrics { common, inputs } => {
            let mut s = settings(&common)?;
            apply_inputs(&mut s, &inputs);
            cmd_metrics(&s)
        }
        Command::Interleave {
            common,
            real_ranks,
            ai_ranks,
            seeds,
            ks,
        } => {
            let mut s = settings(&common)?;
            set_path(&mut s, "real_ranks", &real_ranks);
            set_path(&mut s, "ai_ranks", &ai_ranks);
            s.set("seeds", seeds);
            s.set("ks", ks);
            cmd_interleave(&s)
        }
        Command::Ablate { common, inputs, mode } => {
            let mut s = settings(&common)?;
            apply_inputs(&mut s, &inputs);
            s.set("mode", mode);
            cmd_ablate(&s)
        }
        Command::TrainDebias { common, inputs, train } => {
            let mut s = settings(&common)?;
            apply_inputs(&mut s, &inputs);
            s.set("rho", train.rho);
            s.set("lambda", train.lambda);
            s.set("epochs", train.epochs);
            s.set("lr", train.lr);
            s.set("batch_size", train.batch_size);
            s.set("tau", train.tau);
            s.set("holdout", train.holdout);
            cmd_train(&s)
        }
        Command::Pvector { action } => match action {
            PvectorAction::Extract {
                common,
                inputs,
                original,
                debiased,
                target,
                space,
                variant,
            } => {
                let mut s = settings(&common)?;
                apply_inputs(&mut s, &inputs);
                set_path(&mut s, "original", &original);
                set_path(&mut s, "debiased", &debiased);
                s.set("target", target);
                s.set("space", space);
                s.set("variant", variant);
                cmd_pvector_extract(&s)
            }
            PvectorAction::Apply {
                common,
                inputs,
                pvectors,
                params,
                target,
            } => {
                let mut s = settings(&common)?;
                apply_inputs(&mut s, &inputs);
                set_path(&mut s, "pvectors", &pvectors);
                set_path(&mut s, "params", &params);
                s.set("target", target);
                cmd_pvector_apply(&s)
            }
            PvectorAction::Stats {
                common,
                inputs,
                pvectors,
                params,
                target,
            } => {
                let mut s = settings(&common)?;
                apply_inputs(&mut s, &inputs);
                set_path(&mut s, "pvectors", &pvectors);
                set_path(&mut s, "params", &params);
                s.set("target", target);
                cmd_pvector_stats(&s)
            }
        },
        Command::Synth { action } => match action {
            SynthAction::Gen {
                common,
                n_items,
                dim,
                frames,
                alpha,
                beta,
                gamma,
                sigma,
                drift,
                temporal_bias,
            } => {
                let mut s = settings(&common)?;
                s.set("n_items", n_items);
                s.set("dim", dim);
                s.set("frames", frames);
                s.set("alpha", alpha);
                s.set("beta", beta);
                s.set("gamma", gamma);
                s.set("sigma", sigma);
                s.set("drift", drift);
                s.set("temporal_bias", temporal_bias);
                cmd_synth_gen(&s)
            }
            SynthAction::Flows {
                common,
                pairs,
                rows,
                cols,
                ai_spread,
            } => {
                let mut s = settings(&common)?;
                s.set("pairs", pairs);
                s.set("rows", rows);
                s.set("cols", cols);
                s.set("ai_spread", ai_spread);
                cmd_synth_flows(&s)
            }
        },
        Command::Ttest { common, inputs, params } => {
            let mut s = settings(&common)?;
            apply_inputs(&mut s, &inputs);
            set_path(&mut s, "params", &params);
            cmd_ttest(&s)
        }
        Command::Flow {
            common,
            real_flows,
            ai_flows,
            bins,
        } => {
            let mut s = settings(&common)?;
            set_path(&mut s, "real_flows", &real_flows);
            set_path(&mut s, "ai_flows", &ai_flows);
            s.set("bins", bins);
            cmd_flow(&s)
        }
        Command::Report { common, runs } => {
            let s = settings(&common)?;
            cmd_report(&s, &runs)
        }
    }
}

fn cmd_metrics(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "metrics");
    let data = load_all(s)?;
    let pool = pooling(s, Pooling::UniformMean)?;
    let opts = eval_options(s, derived)?;
    let mut out = out_dir(s)?;
    let r = evaluate(&data.real, &data.ai, &data.queries, &data.rel, pool, Some(frames(s)?), &opts)?;
    write_eval(&mut out, "Bias deltas", &r)?;
    out.finish("metrics", s, seed, derived)
}

fn cmd_interleave(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "interleave");
    let real = io::load_rank_table(&s.path("real_ranks")?)?;
    let ai_path = s.path("ai_ranks")?;
    let ai = io::load_rank_table(&ai_path)?;
    if !real.same_queries(&ai) {
        return Err(Error::invalid(&ai_path, srcbias_core::Error::QuerySetMismatch));
    }
    let opts = eval_options(s, derived)?;
    let mut out = out_dir(s)?;
    let first = interleave_seeds(derived, opts.runs)[0];
    let (mixed_real, mixed_ai) = simulate_interleaved(&real, &ai, first)?;
    let location = location_delta(&real, &ai, &opts.ks, derived, opts.runs)?;
    let m = mixr(&location)?;
    out.write("interleaved_real.csv", io::rank_table_csv(&mixed_real))?;
    out.write("interleaved_ai.csv", io::rank_table_csv(&mixed_ai))?;
    out.write("location.csv", report::location_csv(&location, m))?;
    out.write("location.json", report::location_json(&location, m, opts.runs))?;
    out.finish("interleave", s, seed, derived)
}

fn cmd_ablate(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "ablate");
    let data = load_all(s)?;
    let f = frames(s)?;
    let pool = pooling(s, Pooling::PositionalRamp)?;
    let mode = match s.get("mode") {
        Some("shuffle-all") => Ablation::ShuffleAll,
        Some("shuffle-ai") => Ablation::ShuffleAi,
        Some("reverse") => Ablation::Reverse,
        Some("single-frame") => Ablation::SingleFrame(s.parse("frame")?),
        Some(other) => {
            return Err(Error::Config(format!(
                "`mode` = `{other}`: expected shuffle-all, shuffle-ai, reverse or single-frame"
            )))
        }
        None => return Err(Error::Config("missing `mode` (flag --mode or config key)".into())),
    };
    if let Ablation::SingleFrame(Some(k)) = mode {
        if k >= f {
            return Err(Error::Config(format!("`frame` = {k} is out of range for {f} frames")));
        }
    }
    let opts = eval_options(s, derived)?;
    let mut out = out_dir(s)?;
    let real = resample_corpus(&data.real, f)?;
    let ai = resample_corpus(&data.ai, f)?;
    let baseline = evaluate(&real, &ai, &data.queries, &data.rel, pool, None, &opts)?;
    let ab = mode.apply(&real, &ai, pool, f, derived)?;
    if ab.no_op {
        out.warn(format!(
            "`{}` cannot change results under uniform-mean pooling; deltas equal the baseline",
            s.get("mode").unwrap_or_default()
        ));
    }
    let ablated = evaluate(&ab.real, &ab.ai, &data.queries, &data.rel, ab.pooling, None, &opts)?;
    write_eval(&mut out, "Bias deltas after ablation", &ablated)?;
    let summary = serde_json::json!({
        "mode": s.get("mode"),
        "no_op": ab.no_op,
        "baseline": report::deltas_value(&baseline.deltas),
        "ablated": report::deltas_value(&ablated.deltas),
    });
    out.write("ablation.json", report::pretty(&summary))?;
    out.finish("ablate", s, seed, derived)
}

fn train_config(s: &Settings, seed: u64) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    Ok(TrainConfig {
        learning_rate: s.parse_or("lr", d.learning_rate)?,
        epochs: s.parse_or("epochs", d.epochs)?,
        batch_size: s.parse_or("batch_size", d.batch_size)?,
        seed,
        mix_ratio: s.parse_or("rho", d.mix_ratio)?,
        debias_weight: s.parse_or("lambda", d.debias_weight)?,
        tau: s.parse_or("tau", d.tau)?,
        holdout: s.parse_or("holdout", d.holdout)?,
        pooling: pooling(s, d.pooling)?,
        frames: Some(frames(s)?),
    })
}

fn cmd_train(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "train-debias");
    let data = load_all(s)?;
    let cfg = train_config(s, derived)?;
    cfg.validate()?;
    let mut out = out_dir(s)?;
    let (params, history) = train(&cfg, &data.real, &data.ai, &data.queries, &data.rel)?;
    out.write("params.json", io::params_json(&params))?;
    out.write("history.csv", report::history_csv(&history))?;
    let summary = serde_json::json!({
        "epochs": cfg.epochs,
        "initial_normalized_delta_r1": history.initial_normalized_delta_r1,
        "final_normalized_delta_r1": history.epochs.last().map(|e| e.normalized_delta_r1),
    });
    out.write("train.json", report::pretty(&summary))?;
    out.finish("train-debias", s, seed, derived)
}

fn pooled_side(s: &Settings, corpus: &Corpus) -> Result<Vec<PooledEmbedding>> {
    Ok(pool_corpus(corpus, pooling(s, Pooling::UniformMean)?, Some(frames(s)?))?)
}

fn cmd_pvector_extract(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "pvector-extract");
    let side = target(s)?;
    let corpus = load_side(s, side)?;
    let debiased_path = s.path("debiased")?;
    let debiased = io::load_params(&debiased_path)?;
    let original = match s.get("original") {
        Some(_) => load_params_or_identity(s, "original", corpus.dim())?,
        None => ScorerParams::identity(corpus.dim(), debiased.tau)?,
    };
    let space = match s.get("space").unwrap_or("projected") {
        "projected" => EmbeddingSpace::Projected,
        "raw" => EmbeddingSpace::Raw,
        other => return Err(Error::Config(format!("`space` = `{other}`: expected projected or raw"))),
    };
    let (variant, corpus) = match s.get("variant").unwrap_or("standard") {
        "standard" => (PVariant::Standard, corpus),
        "random" => {
            let resampled = resample_corpus(&corpus, frames(s)?)?;
            (PVariant::Random, shuffle_corpus(&resampled, ShuffleMode::Random(derived))?)
        }
        other => return Err(Error::Config(format!("`variant` = `{other}`: expected standard or random"))),
    };
    let mut out = out_dir(s)?;
    let pooled = pooled_side(s, &corpus)?;
    let set = extract_p(&original, &debiased, &pooled, space, variant)
        .map_err(|e| match e {
            srcbias_core::Error::DimensionMismatch { .. } => Error::invalid(&debiased_path, e),
            other => other.into(),
        })?;
    io::save_pvectors(&out.path("pvectors.jsonl"), &set)?;
    out.record("pvectors.jsonl");
    let summary = serde_json::json!({
        "n": set.p.len(),
        "target": side.as_str(),
        "variant": s.get("variant").unwrap_or("standard"),
        "space": s.get("space").unwrap_or("projected"),
        "p_avg_norm": norm(&set.p_avg),
    });
    out.write("pvector.json", report::pretty(&summary))?;
    out.finish("pvector-extract", s, seed, derived)
}

fn shifted(
    real: Vec<PooledEmbedding>,
    ai: Vec<PooledEmbedding>,
    side: Source,
    p_avg: &[f64],
) -> Result<(Vec<PooledEmbedding>, Vec<PooledEmbedding>)> {
    Ok(match side {
        Source::Real => (apply_shift(&real, p_avg)?, ai),
        Source::Ai => (real, apply_shift(&ai, p_avg)?),
    })
}

fn cmd_pvector_apply(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "pvector-apply");
    let data = load_all(s)?;
    let side = target(s)?;
    let p_path = s.path("pvectors")?;
    let set = io::load_pvectors(&p_path)?;
    if set.dim() != data.real.dim() {
        return Err(Error::Config(format!(
            "{}: shift dimension {} does not match corpus dimension {}",
            p_path.display(),
            set.dim(),
            data.real.dim()
        )));
    }
    let params = load_params_or_identity(s, "params", data.real.dim())?;
    let opts = eval_options(s, derived)?;
    let mut out = out_dir(s)?;
    let real = params.project_all(&pooled_side(s, &data.real)?)?;
    let ai = params.project_all(&pooled_side(s, &data.ai)?)?;
    let before = evaluate_pooled(&real, &ai, &data.queries, &data.rel, &opts)?;
    let (real_s, ai_s) = shifted(real, ai, side, &set.p_avg)?;
    let after = evaluate_pooled(&real_s, &ai_s, &data.queries, &data.rel, &opts)?;
    let delta = shift_delta_report(&before.deltas, &after.deltas)?;
    out.write("shift.csv", report::shift_csv(&before.deltas, &after.deltas, &delta))?;
    out.write("shift.json", report::shift_json(&before.deltas, &after.deltas, &delta))?;
    out.write("deltas.json", report::deltas_json(&after.deltas))?;
    let groups: Vec<(String, Vec<f64>)> = before
        .deltas
        .normalized
        .iter()
        .zip(after.deltas.normalized.iter())
        .map(|((m, b), (_, a))| (m.to_string(), vec![b, a]))
        .chain(std::iter::once((
            "MixR".to_string(),
            vec![before.deltas.mixr.normalized, after.deltas.mixr.normalized],
        )))
        .collect();
    out.write(
        "shift.svg",
        svg::bar_chart("Normalized deltas before and after the shift", &["before".into(), "after".into()], &groups),
    )?;
    out.finish("pvector-apply", s, seed, derived)
}

fn cmd_pvector_stats(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "pvector-stats");
    let side = target(s)?;
    let corpus = load_side(s, side)?;
    let p_path = s.path("pvectors")?;
    let set = io::load_pvectors(&p_path)?;
    if set.dim() != corpus.dim() {
        return Err(Error::Config(format!(
            "{}: shift dimension {} does not match corpus dimension {}",
            p_path.display(),
            set.dim(),
            corpus.dim()
        )));
    }
    let params = load_params_or_identity(s, "params", corpus.dim())?;
    let mut out = out_dir(s)?;
    let raw = params.project_all(&pooled_side(s, &corpus)?)?;
    let stats = cluster_stats(&set, &raw)?;
    out.write("cluster.json", report::cluster_json(&stats, norm(&set.p_avg), set.p.len()))?;
    let mut vectors = set.p.clone();
    let mut labels: Vec<(String, String)> = set.ids.iter().map(|id| (id.clone(), "p".to_string())).collect();
    for e in &raw {
        vectors.push(e.vector.clone());
        labels.push((e.video_id.clone(), "h".to_string()));
    }
    let proj = pca_project_2d(&vectors, &labels)?;
    for (axis, degenerate) in proj.degenerate.iter().enumerate() {
        if *degenerate {
            out.warn(format!("principal component {} has zero variance", axis + 1));
        }
    }
    out.write("projection.csv", report::projection_csv(&proj))?;
    let points: Vec<(f64, f64, String)> = proj.points.iter().map(|p| (p.x, p.y, p.label.1.clone())).collect();
    out.write("projection.svg", svg::scatter("Shift vectors (p) and embeddings (h), PCA", &points))?;
    out.finish("pvector-stats", s, seed, derived)
}

fn cmd_synth_gen(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "synth-gen");
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        n_items: s.parse_or("n_items", d.n_items)?,
        dim: s.parse_or("dim", d.dim)?,
        frames: s.parse_or("frames", d.frames)?,
        alpha: s.parse_or("alpha", d.alpha)?,
        beta: s.parse_or("beta", d.beta)?,
        gamma: s.parse_or("gamma", d.gamma)?,
        noise_sigma: s.parse_or("sigma", d.noise_sigma)?,
        drift: s.parse_or("drift", d.drift)?,
        temporal_bias: s.parse_or("temporal_bias", d.temporal_bias)?,
        seed: derived,
    };
    cfg.validate()?;
    let mut out = out_dir(s)?;
    let data = generate_synthetic(&cfg)?;
    io::save_corpus(&out.path("real.jsonl"), &data.real)?;
    io::save_corpus(&out.path("ai.jsonl"), &data.ai)?;
    io::save_queries(&out.path("queries.jsonl"), &data.queries)?;
    io::save_relevance(&out.path("relevance.jsonl"), &data.relevance)?;
    for name in ["real.jsonl", "ai.jsonl", "queries.jsonl", "relevance.jsonl"] {
        out.record(name);
    }
    out.write(
        "bias.json",
        report::pretty(&serde_json::json!({ "bias_direction": data.bias_direction })),
    )?;
    out.write(
        "run.conf",
        "real = real.jsonl\nai = ai.jsonl\nqueries = queries.jsonl\nrelevance = relevance.jsonl\n",
    )?;
    out.finish("synth-gen", s, seed, derived)
}

fn cmd_synth_flows(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "synth-flows");
    let d = FlowSynthConfig::default();
    let cfg = FlowSynthConfig {
        pairs: s.parse_or("pairs", d.pairs)?,
        rows: s.parse_or("rows", d.rows)?,
        cols: s.parse_or("cols", d.cols)?,
        ai_spread: s.parse_or("ai_spread", d.ai_spread)?,
        seed: derived,
    };
    let mut out = out_dir(s)?;
    let (real, ai) = generate_flows(&cfg)?;
    out.write("real_flows.csv", io::flows_csv(&real, "r"))?;
    out.write("ai_flows.csv", io::flows_csv(&ai, "g"))?;
    out.write("flow.conf", "real_flows = real_flows.csv\nai_flows = ai_flows.csv\n")?;
    out.finish("synth-flows", s, seed, derived)
}

fn cmd_ttest(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "ttest");
    let data = load_all(s)?;
    let params = load_params_or_identity(s, "params", data.real.dim())?;
    let mut out = out_dir(s)?;
    let real = pooled_side(s, &data.real)?;
    let ai = pooled_side(s, &data.ai)?;
    let index = |pooled: &[PooledEmbedding]| -> std::collections::HashMap<String, usize> {
        pooled.iter().enumerate().map(|(i, e)| (e.video_id.clone(), i)).collect()
    };
    let (ri, ai_index) = (index(&real), index(&ai));
    let mut a = Vec::with_capacity(data.queries.len());
    let mut b = Vec::with_capacity(data.queries.len());
    let mut csv = String::from("query_id,score_real,score_ai\n");
    for q in &data.queries {
        let vid = data.rel.relevant(&q.id)?;
        let sr = score(&params, &real[ri[vid]], &q.embedding)?;
        let sa = score(&params, &ai[ai_index[vid]], &q.embedding)?;
        csv.push_str(&format!("{},{sr},{sa}\n", q.id));
        a.push(sr);
        b.push(sa);
    }
    let t = paired_t_test(&a, &b)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    out.write("scores.csv", csv)?;
    out.write("ttest.json", report::ttest_json(&t, mean(&a), mean(&b), a.len()))?;
    out.finish("ttest", s, seed, derived)
}

fn cmd_flow(s: &Settings) -> Result<()> {
    let seed = s.seed()?;
    let derived = derive_seed(seed, "flow");
    let real_path = s.path("real_flows")?;
    let ai_path = s.path("ai_flows")?;
    let real = io::load_flows(&real_path)?;
    let ai = io::load_flows(&ai_path)?;
    let bins = s.parse_or("bins", DEFAULT_FLOW_BINS)?;
    if real.len() != ai.len() {
        return Err(Error::Config(format!(
            "{} holds {} grids but {} holds {}",
            real_path.display(),
            real.len(),
            ai_path.display(),
            ai.len()
        )));
    }
    let mut out = out_dir(s)?;
    let grids = |v: &[(String, srcbias_core::stats::FlowGrid)]| v.iter().map(|(_, g)| g.clone()).collect::<Vec<_>>();
    let (entropies, summary) = flow_summary(&grids(&real), &grids(&ai), bins)?;
    let ids: Vec<(String, String)> = real.iter().zip(&ai).map(|((r, _), (a, _))| (r.clone(), a.clone())).collect();
    out.write("flow.csv", report::flow_csv(&ids, &entropies))?;
    out.write("flow.json", report::flow_json(&summary, bins))?;
    out.write(
        "flow.svg",
        svg::bar_chart(
            "Optical-flow entropy (bits)",
            &["real".into(), "ai".into()],
            &[
                ("mean entropy".into(), vec![summary.mean_entropy_real, summary.mean_entropy_ai]),
            ],
        ),
    )?;
    out.finish("flow", s, seed, derived)
}

fn cmd_report(s: &Settings, runs: &[PathBuf]) -> Result<()> {
    let seed = s.seed()?;
    let mut out = out_dir(s)?;
    let mut csv = String::from("run,metric,relative,location,normalized\n");
    let mut names = Vec::new();
    let mut metric_order: Vec<String> = Vec::new();
    let mut normalized: Vec<Vec<(String, f64)>> = Vec::new();
    for dir in runs {
        let path = dir.join("deltas.json");
        let text = std::fs::read_to_string(&path).map_err(|source| Error::Read {
            path: path.clone(),
            source,
        })?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e))?;
        let section = |key: &str| -> Result<serde_json::Map<String, serde_json::Value>> {
            v.get(key)
                .and_then(|x| x.as_object())
                .cloned()
                .ok_or_else(|| Error::parse(&path, 1, format!("missing `{key}` object")))
        };
        let (rel, loc, norm_vals) = (section("relative")?, section("location")?, section("normalized")?);
        let mixr = section("mixr")?;
        let name = dir.display().to_string();
        let mut col = Vec::new();
        let rows = norm_vals
            .iter()
            .map(|(m, n)| (m.clone(), rel.get(m), loc.get(m), n))
            .chain(std::iter::once((
                "MixR".to_string(),
                mixr.get("relative"),
                mixr.get("location"),
                mixr.get("normalized").expect("checked below"),
            )));
        if !mixr.contains_key("normalized") {
            return Err(Error::parse(&path, 1, "missing `mixr.normalized`"));
        }
        for (m, r, l, n) in rows {
            let num = |x: Option<&serde_json::Value>| {
                x.and_then(serde_json::Value::as_f64)
                    .ok_or_else(|| Error::parse(&path, 1, format!("non-numeric entry for `{m}`")))
            };
            let (r, l, n) = (num(r)?, num(l)?, num(Some(n))?);
            csv.push_str(&format!("{name},{m},{r},{l},{n}\n"));
            if !metric_order.contains(&m) {
                metric_order.push(m.clone());
            }
            col.push((m, n));
        }
        names.push(name);
        normalized.push(col);
    }
    let groups: Vec<(String, Vec<f64>)> = metric_order
        .iter()
        .map(|m| {
            let vals = normalized
                .iter()
                .map(|col| col.iter().find(|(k, _)| k == m).map_or(f64::NAN, |(_, v)| *v))
                .collect();
            (m.clone(), vals)
        })
        .collect();
    out.write("report.csv", csv)?;
    out.write("report.svg", svg::bar_chart("Normalized deltas by run", &names, &groups))?;
    out.finish("report", s, seed, seed)
}
