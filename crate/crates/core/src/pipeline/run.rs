use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{
    cross_platform_eval, make_fold_plan, run_benchmark, summarize, write_report_csv, write_sweep_csv, Classifier,
    GnnClassifier, LogisticClassifier, Metrics,
};
use crate::gnn::{write_loss_curve, Propagation};
use crate::graph::io::write_file;
use crate::posthoc::{
    build_snapshots, sticky_labels, target_report, write_community_csv, write_joint_csv, write_trending_csv, Month,
};
use crate::rng::substream;
use crate::synth::generate;
use crate::text::UserCorpus;

use super::config::{DataSource, PipelineConfig};
use super::data::{build_features, Dataset, FeatureModel};
use super::manifest::{hash_inputs, hash_outputs, Manifest};
use super::models::{features_for, fit, walk_features, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Embed,
    Train,
    Benchmark,
    Transfer,
    Posthoc,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Synth,
        Command::Embed,
        Command::Train,
        Command::Benchmark,
        Command::Transfer,
        Command::Posthoc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Embed => "embed",
            Command::Train => "train",
            Command::Benchmark => "benchmark",
            Command::Transfer => "transfer",
            Command::Posthoc => "posthoc",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `command` and writes its artifacts plus `manifest.json` into
/// `config.out`.
pub fn run(command: Command, config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let cfg = config.resolved();
    let out = cfg.out.clone();
    std::fs::create_dir_all(&out)?;
    let mut ctx = Ctx {
        cfg: &cfg,
        out: &out,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    match command {
        Command::Synth => synth(&mut ctx)?,
        Command::Embed => embed(&mut ctx)?,
        Command::Train => train(&mut ctx)?,
        Command::Benchmark => benchmark(&mut ctx)?,
        Command::Transfer => transfer(&mut ctx)?,
        Command::Posthoc => posthoc(&mut ctx)?,
    }
    let manifest = Manifest {
        command: command.name().to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seed: cfg.seed,
        seeds: seeds_of(&cfg),
        config: serde_json::to_value(config)?,
        inputs: hash_inputs(&ctx.inputs)?,
        outputs: hash_outputs(&out, &ctx.outputs)?,
    };
    manifest.write(&out)?;
    Ok(manifest)
}

fn seeds_of(cfg: &PipelineConfig) -> serde_json::Value {
    let mut seeds = serde_json::Map::new();
    if let DataSource::Synth(s) = &cfg.data {
        seeds.insert("synth".into(), s.seed.into());
    }
    if let Some(DataSource::Synth(s)) = &cfg.transfer_target {
        seeds.insert("synth-target".into(), s.seed.into());
    }
    seeds.insert("doc2vec".into(), cfg.features.doc2vec.seed.into());
    seeds.insert("walks".into(), cfg.features.node_embed.walks.seed.into());
    seeds.insert("gnn".into(), cfg.gnn.train.seed.into());
    seeds.insert("logistic".into(), cfg.logistic.seed.into());
    seeds.insert("folds".into(), fold_seed(cfg).into());
    seeds.insert("benchmark".into(), substream(cfg.seed, "benchmark").into());
    serde_json::Value::Object(seeds)
}

fn fold_seed(cfg: &PipelineConfig) -> u64 {
    substream(cfg.seed, "folds")
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    inputs: Vec<std::path::PathBuf>,
    outputs: Vec<String>,
}

impl Ctx<'_> {
    fn load(&mut self, source: &DataSource) -> Result<Dataset> {
        let ds = Dataset::load(source)?;
        self.inputs.extend(ds.inputs.iter().cloned());
        Ok(ds)
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
        write_file(&self.out.join(name), f)?;
        self.outputs.push(name.to_owned());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            std::io::Write::write_all(w, b"\n")?;
            Ok(())
        })
    }

    fn specs(&self) -> Result<Vec<ModelSpec>> {
        self.cfg.models.iter().map(|m| ModelSpec::parse(m, self.cfg)).collect()
    }

    fn features(&mut self, ds: &Dataset) -> Result<(crate::Matrix, FeatureModel)> {
        let (x, model, inputs) = build_features(ds, &self.cfg.features)?;
        self.inputs.extend(inputs);
        Ok((x, model))
    }
}

fn synth(ctx: &mut Ctx) -> Result<()> {
    let DataSource::Synth(cfg) = &ctx.cfg.data else {
        return Err(Error::InvalidInput("`synth` needs a synth data source".into()));
    };
    let written = generate(cfg)?.write(ctx.out)?;
    for p in written {
        let name = p.file_name().expect("file path").to_string_lossy().into_owned();
        ctx.outputs.push(name);
    }
    Ok(())
}

pub const EMBEDDINGS_FILE: &str = "embeddings.bin";

fn embed(ctx: &mut Ctx) -> Result<()> {
    let ds = ctx.load(&ctx.cfg.data.clone())?;
    let (x, model) = ctx.features(&ds)?;
    let container = model.to_container(ds.node_names(), &x)?;
    ctx.write(EMBEDDINGS_FILE, |w| container.write(w))
}

#[derive(Serialize)]
struct TrainReport {
    model: String,
    fold: usize,
    m: f64,
    train_size: usize,
    val_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_epoch: Option<usize>,
    val: Metrics,
}

/// Trains the first configured model on fold 0 at the largest configured
/// fraction, validating on fold 0's held-out nodes.
fn train(ctx: &mut Ctx) -> Result<()> {
    let ds = ctx.load(&ctx.cfg.data.clone())?;
    let spec = ctx.specs()?.remove(0);
    let (x, _) = ctx.features(&ds)?;
    let walks = walk_features(std::slice::from_ref(&spec), &ds.graph, ctx.cfg)?;
    let x = features_for(&spec, &x, &walks);
    let m = ctx.cfg.folds.fractions.iter().copied().fold(f64::MIN, f64::max);
    let plan = make_fold_plan(&ds.labeled, ctx.cfg.folds.k, &[m], fold_seed(ctx.cfg))?;
    let fold = &plan.folds[0];
    let train = fold.train_subset(m).expect("fraction in plan");
    let labels = ds.label_vector();
    let (model, curve) = fit(&spec, ctx.cfg, &ds.graph, x, &labels, train, &fold.test)?;

    let prob = model.predict_proba(&ds.graph, x)?;
    let pred = model.predict(&ds.graph, x)?;
    let truth: Vec<u8> = fold.test.iter().map(|&v| labels[v]).collect();
    let guess: Vec<u8> = fold.test.iter().map(|&v| pred[v]).collect();
    let val = crate::eval::macro_metrics(&truth, &guess)?;

    let ckpt = model.to_checkpoint();
    ctx.write("model.ckpt", |w| ckpt.write(w))?;
    let mut best_epoch = None;
    if let Some((curve, best)) = curve {
        best_epoch = Some(best);
        ctx.write("loss_curve.csv", |w| write_loss_curve(&curve, w))?;
    }
    let names = ds.node_names();
    let mut known = vec![None; ds.num_nodes()];
    for &(v, c) in &ds.labeled {
        known[v] = Some(c);
    }
    ctx.write("predictions.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["user", "label", "predicted", "prob_hateful"])?;
        for v in 0..names.len() {
            let label = known[v].map(|c| c.to_string()).unwrap_or_default();
            out.write_record([names[v].as_str(), &label, &pred[v].to_string(), &prob[v].to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    let report = TrainReport {
        model: spec.name().to_owned(),
        fold: 0,
        m,
        train_size: train.len(),
        val_size: fold.test.len(),
        best_epoch,
        val,
    };
    ctx.write_json("metrics.json", &report)
}

fn benchmark(ctx: &mut Ctx) -> Result<()> {
    let ds = ctx.load(&ctx.cfg.data.clone())?;
    let specs = ctx.specs()?;
    let (x, _) = ctx.features(&ds)?;
    let walks = walk_features(&specs, &ds.graph, ctx.cfg)?;
    let plan = make_fold_plan(&ds.labeled, ctx.cfg.folds.k, &ctx.cfg.folds.fractions, fold_seed(ctx.cfg))?;

    let props: Vec<Option<Propagation>> = specs
        .iter()
        .map(|s| match s {
            ModelSpec::Gnn(v) => Some(Propagation::new(&ds.graph, v)),
            _ => None,
        })
        .collect();
    let mut gnns = Vec::new();
    let mut logistics = Vec::new();
    for (spec, prop) in specs.iter().zip(&props) {
        match (spec, prop) {
            (ModelSpec::Gnn(v), Some(prop)) => gnns.push(GnnClassifier {
                name: spec.name().to_owned(),
                config: ctx.cfg.gnn.config(*v),
                prop,
                features: &x,
            }),
            _ => logistics.push(LogisticClassifier {
                name: spec.name().to_owned(),
                params: ctx.cfg.logistic.clone(),
                features: features_for(spec, &x, &walks),
            }),
        }
    }
    // Keep the configured model order.
    let mut models: Vec<&dyn Classifier> = Vec::new();
    let (mut gi, mut li) = (gnns.iter(), logistics.iter());
    for spec in &specs {
        match spec {
            ModelSpec::Gnn(_) => models.push(gi.next().expect("one per spec")),
            _ => models.push(li.next().expect("one per spec")),
        }
    }

    let result = run_benchmark(&models, &ds.labeled, ds.num_nodes(), &plan, substream(ctx.cfg.seed, "benchmark"))?;
    for f in &result.failures {
        log::warn!("cell {} m={} fold={} failed: {}", f.model, f.m, f.fold, f.error);
    }
    ctx.write("report.csv", |w| write_report_csv(&result.rows, w))?;
    ctx.write("sweep.csv", |w| write_sweep_csv(&result.rows, w))?;
    ctx.write_json(
        "summary.json",
        &serde_json::json!({ "summary": summarize(&result.rows), "failures": result.failures }),
    )?;
    ctx.write_json("folds.json", &plan)
}

#[derive(Serialize)]
struct TransferRow {
    model: String,
    source: Metrics,
    target: Metrics,
}

/// Trains every configured model on all labeled source nodes and scores it on
/// the target without any target supervision. Target features come from the
/// source feature model.
fn transfer(ctx: &mut Ctx) -> Result<()> {
    let Some(target_source) = ctx.cfg.transfer_target.clone() else {
        return Err(Error::InvalidInput("`transfer` needs a `transfer_target` data source".into()));
    };
    let specs = ctx.specs()?;
    if let Some(s) = specs.iter().find(|s| matches!(s, ModelSpec::Walk(_))) {
        return Err(Error::InvalidInput(format!("{} embeddings are tied to one graph and cannot transfer", s.name())));
    }
    let src = ctx.load(&ctx.cfg.data.clone())?;
    let tgt = ctx.load(&target_source)?;
    let (x, feature_model) = ctx.features(&src)?;
    let tx = feature_model.apply(&tgt.corpus)?;
    let labels = src.label_vector();
    let train: Vec<usize> = src.labeled.iter().map(|&(v, _)| v).collect();

    let mut rows = Vec::new();
    for spec in &specs {
        log::info!("transfer: training {}", spec.name());
        let (model, _) = fit(spec, ctx.cfg, &src.graph, &x, &labels, &train, &[])?;
        rows.push(TransferRow {
            model: spec.name().to_owned(),
            source: cross_platform_eval(&model, &src.graph, &x, &src.labeled)?,
            target: cross_platform_eval(&model, &tgt.graph, &tx, &tgt.labeled)?,
        });
    }
    ctx.write("transfer.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["model", "domain", "class", "precision", "recall", "f1", "macro_f1", "accuracy"])?;
        for r in &rows {
            for (domain, m) in [("source", &r.source), ("target", &r.target)] {
                for (class, c) in ["non_hateful", "hateful"].iter().zip(&m.per_class) {
                    out.write_record([
                        r.model.as_str(),
                        domain,
                        class,
                        &c.precision.to_string(),
                        &c.recall.to_string(),
                        &c.f1.to_string(),
                        &m.macro_f1.to_string(),
                        &m.accuracy.to_string(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    })?;
    ctx.write_json("transfer.json", &rows)
}

fn posthoc_months(ctx: &Ctx, ds: &Dataset) -> Result<Vec<Month>> {
    let settings = &ctx.cfg.posthoc;
    let timestamps = || {
        ds.corpus
            .users()
            .iter()
            .flat_map(|u| u.posts.iter().map(|p| p.ts))
            .chain(ds.edge_times.iter().flatten().map(|e| e.ts))
    };
    let start = match (&settings.start_month, &ds.months) {
        (Some(s), _) => Month::parse(s)?,
        (None, Some(m)) if !m.is_empty() => m[0],
        _ => Month::of_timestamp(timestamps().min().ok_or(Error::Empty("no posts or edges to date".into()))?)?,
    };
    let count = match (settings.months, &ds.months) {
        (Some(n), _) => n,
        (None, Some(m)) if settings.start_month.is_none() && !m.is_empty() => m.len(),
        _ => {
            let last = Month::of_timestamp(timestamps().max().unwrap_or(start.start()))?;
            let mut n = 1;
            let mut cur = start;
            while cur < last {
                cur = cur.next();
                n += 1;
            }
            n
        }
    };
    if count == 0 {
        return Err(Error::InvalidInput("posthoc needs at least one month".into()));
    }
    Ok(start.range(count))
}

/// Labels every monthly snapshot with the first configured model, applies
/// sticky labeling and reports target communities and trending hashtags.
fn posthoc(ctx: &mut Ctx) -> Result<()> {
    let ds = ctx.load(&ctx.cfg.data.clone())?;
    let lexicon = ds
        .lexicon
        .clone()
        .ok_or_else(|| Error::InvalidInput("posthoc needs a lexicon".into()))?;
    let edge_times = ds
        .edge_times
        .clone()
        .ok_or_else(|| Error::InvalidInput("posthoc needs timestamped edges".into()))?;
    let spec = ctx.specs()?.remove(0);
    if let ModelSpec::Walk(_) = spec {
        return Err(Error::InvalidInput("posthoc needs a model that can label unseen snapshots".into()));
    }
    let months = posthoc_months(ctx, &ds)?;
    let series = build_snapshots(&ds.corpus, ds.num_nodes(), &edge_times, &months)?;

    let (x, feature_model) = ctx.features(&ds)?;
    let labels = ds.label_vector();
    let train: Vec<usize> = ds.labeled.iter().map(|&(v, _)| v).collect();
    let (model, _) = fit(&spec, ctx.cfg, &ds.graph, &x, &labels, &train, &[])?;

    let names = ds.node_names();
    let mut raw = Vec::with_capacity(series.len());
    for t in 0..series.len() {
        let posts = ds.corpus.users().iter().enumerate().flat_map(|(u, up)| {
            series.posts(t, &ds.corpus, u).iter().map(move |p| crate::text::RawPost {
                user: up.user.clone(),
                ts: p.ts,
                text: p.text.clone(),
            })
        });
        let corpus_t = UserCorpus::from_posts(posts.collect::<Vec<_>>()).with_users(names.iter().map(String::as_str));
        let x_t = feature_model.apply(&corpus_t)?;
        let g_t = series.graph(t)?;
        raw.push(model.predict(&g_t, &x_t)?);
        log::info!("posthoc: labeled {}", months[t]);
    }
    let sticky = sticky_labels(&raw)?;
    let report = target_report(
        &series,
        &ds.corpus,
        &lexicon,
        &sticky,
        &ctx.cfg.posthoc.tracked,
        ctx.cfg.posthoc.trending,
    )?;
    ctx.write("communities.csv", |w| write_community_csv(&report, w))?;
    ctx.write("joint.csv", |w| write_joint_csv(&report, w))?;
    ctx.write("trending.csv", |w| write_trending_csv(&report, w))?;
    ctx.write_json("posthoc.json", &report)
}
