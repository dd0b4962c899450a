use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gslda::cascade::{
    train_cascade, CascadeConfig, CascadeModel, Method, Termination, TrainingPool,
};
use gslda::detect::{
    avg_features_per_window, match_detections, merge_detections, roc_curve, scan_image, Detection,
    GroundTruthBox, MatchResult, RocMode, RocParams, ScanProfile,
};
use gslda::io::{
    load_model, read_pgm, save_model, write_detections, write_roc, DatasetManifest, ModelFile,
    TrainingMetadata,
};
use gslda::synth::{generate_synthetic_faces, SynthSpec};
use gslda::toy::{generate_toy, run_toy_trials, ToyDatasetSpec};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{
    Cli, Command, DetectArgs, EvalArgs, Failure, MethodArg, ModeArg, ScanArgs, SynthArgs,
    ToyArgs, TrainArgs,
};

type CliResult<T = ()> = Result<T, Failure>;

pub fn run(cli: Cli) -> CliResult {
    if let Some(n) = cli.threads {
        set_threads(n)?;
    }
    let config = cli.config.as_deref();
    match cli.command {
        Command::Train(a) => train(a, config, cli.seed),
        Command::Detect(a) => detect(a, config),
        Command::Eval(a) => eval(a, config),
        Command::Toy(a) => toy(a, config, cli.seed),
        Command::Synth(a) => synth(a, config, cli.seed),
    }
}

fn set_threads(n: usize) -> CliResult {
    if n == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(())
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Opens `path` for writing, or standard output when absent.
fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> CliResult {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Failure::Data(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Adaboost => Method::AdaBoost,
        MethodArg::Asymboost => Method::AsymBoost,
        MethodArg::Gslda => Method::Gslda,
        MethodArg::Bgslda1 => Method::Bgslda1,
        MethodArg::Bgslda2 => Method::Bgslda2,
    }
}

fn apply_train_flags(cfg: &mut CascadeConfig, a: &TrainArgs, seed: Option<u64>) {
    if let Some(m) = a.method {
        cfg.method = method_of(m);
    }
    if let Some(v) = a.dmin {
        cfg.goal.d_min = v;
    }
    if let Some(v) = a.fmax {
        cfg.goal.f_max = v;
    }
    if let Some(v) = a.f_target {
        cfg.f_target = v;
    }
    if let Some(v) = a.gamma {
        cfg.node.scatter.gamma = v;
    }
    if let Some(v) = a.asym_k {
        cfg.node.boosting.asym_k = v;
    }
    if let Some(v) = a.prune_eps {
        cfg.node.boosting.prune_epsilon = v;
    }
    if a.dual_pass {
        cfg.node.scatter.dual_pass = true;
    }
    if a.max_stumps.is_some() {
        cfg.goal.max_stumps = a.max_stumps;
    }
    if let Some(v) = a.max_stages {
        cfg.max_stages = v;
    }
    if a.pool_limit.is_some() {
        cfg.features.limit = a.pool_limit;
    }
    if let Some(v) = a.pool_stride {
        cfg.features.stride = v;
    }
    if a.negatives_per_stage.is_some() {
        cfg.negatives_per_stage = a.negatives_per_stage;
    }
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.features.seed = s;
    }
}

fn train(a: TrainArgs, config: Option<&Path>, seed: Option<u64>) -> CliResult {
    let mut cfg: CascadeConfig = load_config(config)?;
    apply_train_flags(&mut cfg, &a, seed);
    cfg.validate().map_err(usage)?;
    if cfg.node.boosting.asym_k <= 0.0 || cfg.node.scatter.gamma < 0.0 {
        return Err(usage("asym-k must be positive and gamma non-negative"));
    }
    if cfg.features.stride == 0 {
        return Err(usage("pool stride must be at least 1"));
    }

    let manifest = DatasetManifest::load(&a.manifest)?;
    let positives = manifest.load_positives()?;
    cfg.features.base_window = positives[0].width();
    let pool = TrainingPool {
        positives,
        negatives: manifest.load_negatives()?,
        reservoir: manifest.load_reservoir()?,
    };
    if pool.negatives.is_empty() && pool.reservoir.is_empty() {
        return Err(Failure::Data("manifest lists no negatives and no reservoir".into()));
    }
    if cfg.f_target >= 1.0 {
        eprintln!("warning: f-target >= 1 is met by the empty cascade; writing a model with no stages");
    }

    let mut log = output(a.log.as_deref())?;
    let mut log_err = None;
    let outcome = train_cascade(&pool, &cfg, |stage| {
        let line = serde_json::to_string(stage).expect("stage log serializes");
        if let Err(e) = writeln!(log, "{line}").and_then(|_| log.flush()) {
            log_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    drop(log);

    let meta = TrainingMetadata {
        method: cfg.method,
        goal: cfg.goal,
        seed: cfg.seed,
        termination: outcome.termination,
    };
    save_model(&a.out, &ModelFile::new(&outcome.model, Some(meta)))?;

    let missed: Vec<usize> = outcome.logs.iter().filter(|l| !l.goal_met).map(|l| l.stage).collect();
    if outcome.termination != Termination::TargetReached {
        let cum = outcome.model.current();
        return Err(Failure::GoalNotMet(format!(
            "training stopped ({:?}) at F = {:.3e}, above the target {:.3e}",
            outcome.termination, cum.false_positive_rate, cfg.f_target
        )));
    }
    if !missed.is_empty() {
        return Err(Failure::GoalNotMet(format!(
            "stages {missed:?} hit the stump cap before meeting the node goal"
        )));
    }
    Ok(())
}

fn scan_params(config: Option<&Path>, s: &ScanArgs) -> CliResult<RocParams> {
    let mut p: RocParams = load_config(config)?;
    if let Some(v) = s.scale_factor {
        p.scale_factor = v;
    }
    if let Some(v) = s.step {
        p.step = v;
    }
    if let Some(v) = s.min_neighbors {
        p.min_neighbors = v;
    }
    if !(p.scale_factor > 1.0) {
        return Err(usage("scale factor must exceed 1"));
    }
    if p.step == 0 {
        return Err(usage("step must be at least 1"));
    }
    Ok(p)
}

fn read_model(path: &Path) -> CliResult<CascadeModel> {
    Ok(load_model(path)?.model())
}

/// Expands directories into their `.pgm` files, sorted by name.
fn expand_inputs(inputs: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = match fs::read_dir(p) {
                Ok(rd) => rd
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
                    .collect(),
                Err(e) => {
                    eprintln!("warning: skipping {}: {e}", p.display());
                    continue;
                }
            };
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    out
}

fn detect(a: DetectArgs, config: Option<&Path>) -> CliResult {
    let params = scan_params(config, &a.scan)?;
    let model = read_model(&a.model)?;
    let files = expand_inputs(&a.inputs);
    let mut detections = Vec::new();
    let mut profile = ScanProfile::default();
    let mut scanned = 0usize;
    for f in &files {
        let image = match read_pgm(f) {
            Ok(img) => img,
            Err(e) => {
                eprintln!("warning: skipping {e}");
                continue;
            }
        };
        scanned += 1;
        let id = DatasetManifest::image_id(f);
        let (windows, p) = scan_image(&model, &image, params.scale_factor, params.step)?;
        profile.add(&p);
        let kept = if a.no_merge { windows } else { merge_detections(&windows, params.min_neighbors) };
        detections.extend(kept.iter().map(|w| Detection::new(id.clone(), w)));
    }
    if scanned == 0 {
        return Err(Failure::Data("no readable input images".into()));
    }
    let mut out = output(a.out.as_deref())?;
    write_detections(&mut out, &detections)?;
    out.flush()?;
    if a.profile {
        let avg = avg_features_per_window(&profile).unwrap_or(0.0);
        eprintln!(
            "images={scanned} windows={} features={} avg_features_per_window={avg:.4} detections={}",
            profile.windows_scanned,
            profile.features_evaluated,
            detections.len()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalSummary {
    mode: RocMode,
    stages: usize,
    images: usize,
    ground_truth: usize,
    detections: usize,
    #[serde(flatten)]
    matched: MatchResult,
    avg_features_per_window: f64,
}

fn eval(a: EvalArgs, config: Option<&Path>) -> CliResult {
    let params = scan_params(config, &a.scan)?;
    let model = read_model(&a.model)?;
    let test = DatasetManifest::load(&a.manifest)?.load_test_set()?;
    if test.images.is_empty() {
        return Err(Failure::Data("manifest lists no test images".into()));
    }
    let mode = match a.mode {
        ModeArg::Depth => RocMode::Depth,
        ModeArg::Threshold => RocMode::Threshold,
    };
    let points = roc_curve(&model, &test, mode, &params)?;

    let mut matched = MatchResult::default();
    let mut profile = ScanProfile::default();
    let mut detections = 0;
    for (id, image) in &test.images {
        let (windows, p) = scan_image(&model, image, params.scale_factor, params.step)?;
        profile.add(&p);
        let dets: Vec<Detection> = merge_detections(&windows, params.min_neighbors)
            .iter()
            .map(|w| Detection::new(id.clone(), w))
            .collect();
        let truths: Vec<GroundTruthBox> = test.truths.iter().filter(|t| &t.image_id == id).cloned().collect();
        matched.add(&match_detections(&dets, &truths));
        detections += dets.len();
    }
    let summary = EvalSummary {
        mode,
        stages: model.depth(),
        images: test.images.len(),
        ground_truth: test.truths.len(),
        detections,
        matched,
        avg_features_per_window: avg_features_per_window(&profile).unwrap_or(0.0),
    };

    let mut out = output(a.out.as_deref())?;
    write_roc(&mut out, &points)?;
    out.flush()?;
    match &a.summary {
        Some(p) => {
            let mut w = output(Some(p))?;
            write_json(&mut w, &summary)?;
            w.flush()?;
        }
        None => write_json(&mut io::stderr(), &summary)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ToyOutput {
    format_version: u32,
    rounds: usize,
    spec: ToyDatasetSpec,
    #[serde(flatten)]
    trials: gslda::toy::ToyTrials,
}

fn toy(a: ToyArgs, config: Option<&Path>, seed: Option<u64>) -> CliResult {
    let mut spec: ToyDatasetSpec = load_config(config)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(n) = a.n_pos {
        spec.n_pos = n;
    }
    if let Some(n) = a.n_neg {
        spec.n_neg = n;
    }
    spec.validate().map_err(usage)?;
    if a.rounds == 0 || a.trials == 0 {
        return Err(usage("rounds and trials must be positive"));
    }
    let trials = run_toy_trials(&spec, a.rounds, a.trials)?;
    if let Some(p) = &a.points {
        let data = generate_toy(&spec)?;
        let mut w = output(Some(p))?;
        writeln!(w, "x,y,label")?;
        for (pt, l) in data.points.iter().zip(&data.labels) {
            writeln!(w, "{},{},{l}", pt[0], pt[1])?;
        }
        w.flush()?;
    }
    let report = ToyOutput {
        format_version: 1,
        rounds: a.rounds,
        spec,
        trials,
    };
    let mut out = output(a.out.as_deref())?;
    write_json(&mut out, &report)?;
    out.flush()?;
    Ok(())
}

fn synth(a: SynthArgs, config: Option<&Path>, seed: Option<u64>) -> CliResult {
    let mut spec: SynthSpec = load_config(config)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(v) = a.n_pos {
        spec.n_pos = v;
    }
    if let Some(v) = a.n_neg {
        spec.n_neg = v;
    }
    if let Some(v) = a.size {
        spec.size = v;
    }
    if let Some(v) = a.n_reservoir {
        spec.n_reservoir = v;
    }
    if let Some(v) = a.n_test {
        spec.n_test = v;
    }
    spec.validate().map_err(usage)?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::Data(format!("{}: {e}", a.out.display())))?;
    generate_synthetic_faces(&spec, &a.out)?;
    eprintln!("wrote {}", a.out.join("manifest.json").display());
    Ok(())
}
