use std::collections::HashSet;
use std::fs;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use claimlens::augment::{
    augment_dataset, AugmentOptions, AugmentScope, FixtureClient, HttpTranslationClient,
    TranslationClient,
};
use claimlens::corpus::{load_dataset, ClaimRecord, Dataset, Format, Label};
use claimlens::eval::{cross_validate, render_report, PipelineSpec, ReportFormat};
use claimlens::explain::{
    build_background, exact_shapley, linear_shap, render_card, sampling_shapley, tree_shap,
    CardFormat, Method, Tier,
};
use claimlens::models::{fit_model, Model, ModelConfig, Optimizer};
use claimlens::synth::{generate, SynthConfig};
use claimlens::teacher::ingest_teacher_targets;
use claimlens::textprep::{tokenize, TokenizerConfig, Vectorizer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::{AugmentArgs, Cli, Command, EvalArgs, ExplainArgs, FitArgs, UsageError};

pub fn run(cli: Cli) -> Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    config.apply_seed(cli.seed);
    match cli.command {
        Command::Ingest { input, format, out } => ingest(&config, &input, format.as_deref(), &out),
        Command::Augment(args) => augment(config, args),
        Command::Train(fit) => {
            let cfg = fit_overrides(&config, &fit)?;
            config.logistic = cfg.clone();
            fit_command(&config, "train", &fit, ModelConfig::Logistic(cfg), None)
        }
        Command::Distill {
            fit,
            teacher,
            alpha,
            temperature,
        } => {
            let mut cfg = fit_overrides(&config, &fit)?;
            if let Some(a) = alpha {
                cfg.distill_weight = a;
            }
            if let Some(t) = temperature {
                cfg.temperature = t;
            }
            config.logistic = cfg.clone();
            fit_command(
                &config,
                "distill",
                &fit,
                ModelConfig::Distilled(cfg),
                Some(&teacher),
            )
        }
        Command::Tree {
            fit,
            max_depth,
            min_leaf,
        } => {
            if let Some(d) = max_depth {
                config.tree.max_depth = d;
            }
            if let Some(m) = min_leaf {
                config.tree.min_leaf = m;
            }
            let model = ModelConfig::Tree(config.tree.clone());
            fit_command(&config, "tree", &fit, model, None)
        }
        Command::Forest {
            fit,
            n_trees,
            max_depth,
            min_leaf,
            feature_fraction,
            no_bootstrap,
        } => {
            let f = &mut config.forest;
            if let Some(n) = n_trees {
                f.n_trees = n;
            }
            if let Some(d) = max_depth {
                f.max_depth = d;
            }
            if let Some(m) = min_leaf {
                f.min_leaf = m;
            }
            if let Some(ff) = feature_fraction {
                f.feature_fraction = ff;
            }
            if no_bootstrap {
                f.bootstrap = false;
            }
            let model = ModelConfig::Forest(config.forest.clone());
            fit_command(&config, "forest", &fit, model, None)
        }
        Command::Explain(args) => explain(config, args),
        Command::Eval(args) => eval(config, args),
        Command::Synth { out, n_claims } => synth(&config, &out, n_claims),
    }
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    Ok(load_dataset(path, Format::from_path(path))?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Manifest location for commands whose output is a single file.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn write_sidecar_manifest(manifest: &Manifest, out: &Path) -> Result<()> {
    let path = sidecar(out, ".manifest.json");
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
}

fn ingest(config: &RunConfig, input: &Path, format: Option<&str>, out: &Path) -> Result<()> {
    let format = match format {
        Some(f) => Format::from_str(f)?,
        None => Format::from_path(input),
    };
    let dataset = load_dataset(input, format)?;
    dataset.save_jsonl(out)?;
    let (fake, truth) = dataset.class_counts();
    let mut manifest = Manifest::new("ingest", config);
    manifest.input("dataset", input)?;
    manifest.output(out.display().to_string());
    write_sidecar_manifest(&manifest, out)?;
    println!(
        "{} claims ({fake} fake, {truth} true) -> {}",
        dataset.len(),
        out.display()
    );
    Ok(())
}

fn augment(mut config: RunConfig, args: AugmentArgs) -> Result<()> {
    let settings = &mut config.augment;
    if let Some(p) = args.pivot {
        settings.pivot = p;
    }
    if let Some(s) = &args.scope {
        settings.scope = AugmentScope::from_str(s)?;
    }
    if let Some(c) = args.max_concurrency {
        settings.max_concurrency = c;
    }
    let dataset = read_dataset(&args.dataset)?;
    let mut manifest = Manifest::new("augment", &config);
    manifest.input("dataset", &args.dataset)?;

    let client: Box<dyn TranslationClient> = match (&args.fixture, &args.endpoint) {
        (Some(fixture), _) => {
            manifest.input("fixture", fixture)?;
            Box::new(FixtureClient::load(fixture, &dataset)?)
        }
        (None, Some(endpoint)) => {
            let token =
                match &args.token_env {
                    Some(var) => Some(std::env::var(var).map_err(|_| {
                        UsageError(format!("environment variable {var} is not set"))
                    })?),
                    None => None,
                };
            let timeout = Duration::from_secs(config.augment.timeout_secs);
            Box::new(HttpTranslationClient::new(
                endpoint.clone(),
                token,
                timeout,
            )?)
        }
        (None, None) => bail!(UsageError(
            "either --fixture or --endpoint is required".into()
        )),
    };
    let settings = &config.augment;
    let options = AugmentOptions {
        max_concurrency: settings.max_concurrency,
    };
    let (augmented, report) = augment_dataset(
        client.as_ref(),
        &dataset,
        &settings.pivot,
        settings.scope,
        options,
    )?;
    augmented.save_jsonl(&args.out)?;
    let report_path = sidecar(&args.out, ".report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("cannot write {}", report_path.display()))?;
    manifest.output(args.out.display().to_string());
    manifest.output(report_path.display().to_string());
    write_sidecar_manifest(&manifest, &args.out)?;
    println!(
        "{} -> {} claims ({} produced, {} identical, {} failed)",
        dataset.len(),
        augmented.len(),
        report.produced,
        report.skipped_identical,
        report.failed
    );
    for f in &report.failures {
        eprintln!("warning: translation failed for {}: {}", f.id, f.error);
    }
    Ok(())
}

fn fit_overrides(config: &RunConfig, fit: &FitArgs) -> Result<claimlens::models::TrainConfig> {
    let mut cfg = config.logistic.clone();
    if let Some(lr) = fit.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(e) = fit.epochs {
        cfg.epochs = e;
    }
    if let Some(l2) = fit.l2 {
        cfg.l2_penalty = l2;
    }
    if let Some(o) = &fit.optimizer {
        cfg.optimizer = Optimizer::from_str(o)?;
    }
    Ok(cfg)
}

fn labels_of(dataset: &Dataset) -> Vec<bool> {
    dataset
        .records()
        .iter()
        .map(|r| r.label == Label::True)
        .collect()
}

fn fit_command(
    config: &RunConfig,
    command: &str,
    fit: &FitArgs,
    model_config: ModelConfig,
    teacher: Option<&Path>,
) -> Result<()> {
    let dataset = read_dataset(&fit.dataset)?;
    dataset.require_both_classes()?;
    let mut manifest = Manifest::new(command, config);
    manifest.input("dataset", &fit.dataset)?;

    let vectorizer = Vectorizer::fit_texts(
        dataset.records().iter().map(|r| r.text.as_str()),
        &config.vectorizer,
    )?;
    let rows: Vec<_> = dataset
        .records()
        .iter()
        .map(|r| vectorizer.transform_text(&r.text))
        .collect();
    let labels = labels_of(&dataset);
    let soft = match teacher {
        Some(path) => {
            manifest.input("teacher", path)?;
            let targets = ingest_teacher_targets(path, &dataset)?;
            Some(targets.for_records(dataset.records())?)
        }
        None => None,
    };
    let model = fit_model(&model_config, &rows, &labels, soft.as_deref())?;

    create_dir(&fit.out)?;
    model.save(&fit.out.join("model.json"))?;
    vectorizer.save(&fit.out.join("vectorizer.json"))?;
    manifest.output("model.json");
    manifest.output("vectorizer.json");
    if let Model::Logistic(m) = &model {
        let mut csv = String::from("epoch,loss\n");
        for (i, loss) in m.training_meta.loss_curve.iter().enumerate() {
            csv.push_str(&format!("{i},{loss}\n"));
        }
        fs::write(fit.out.join("loss_curve.csv"), csv)?;
        manifest.output("loss_curve.csv");
    }
    manifest.write(&fit.out)?;

    let correct = rows
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| (model.proba(*x) >= 0.5) == y)
        .count();
    println!(
        "{} model on {} claims, {} features; training accuracy {:.3} -> {}",
        model.kind(),
        dataset.len(),
        vectorizer.dim(),
        correct as f64 / dataset.len() as f64,
        fit.out.display()
    );
    Ok(())
}

fn explain(mut config: RunConfig, args: ExplainArgs) -> Result<()> {
    let settings = &mut config.explain;
    if let Some(m) = &args.method {
        settings.method = Some(Method::from_str(m)?);
    }
    if let Some(t) = &args.tier {
        settings.tier = Tier::from_str(t)?;
    }
    if let Some(f) = &args.format {
        settings.format = CardFormat::from_str(f)?;
    }
    if let Some(k) = args.top_k {
        settings.top_k = k;
    }
    if let Some(s) = args.samples {
        settings.samples = s;
    }
    if let Some(b) = args.background_size {
        settings.background_size = b;
    }
    let settings = config.explain.clone();

    let model = Model::load(&args.model.join("model.json"))?;
    let vectorizer = Vectorizer::load(&args.model.join("vectorizer.json"))?;
    if vectorizer.dim() != model.dim() {
        bail!(UsageError(format!(
            "model expects {} features but the vectorizer produces {}",
            model.dim(),
            vectorizer.dim()
        )));
    }
    let dataset = read_dataset(&args.dataset)?;
    let claim = match (&args.id, &args.text) {
        (Some(id), _) => dataset.get(id).cloned().ok_or_else(|| {
            UsageError(format!(
                "no claim with id \"{id}\" in {}",
                args.dataset.display()
            ))
        })?,
        (None, Some(text)) => {
            if text.trim().is_empty() {
                bail!(UsageError("--text is empty".into()));
            }
            ClaimRecord::new("input", text.clone(), Label::Fake)
        }
        (None, None) => bail!(UsageError("either --id or --text is required".into())),
    };

    let mut background_idx: Vec<usize> = (0..dataset.len()).collect();
    if settings.background_size == 0 {
        bail!(UsageError("background_size must be positive".into()));
    }
    if dataset.len() > settings.background_size {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        background_idx =
            rand::seq::index::sample(&mut rng, dataset.len(), settings.background_size).into_vec();
        background_idx.sort_unstable();
    }
    let rows = background_idx
        .iter()
        .map(|&i| vectorizer.transform_text(&dataset.records()[i].text))
        .collect();
    let background = build_background(&model, rows)?;
    let x = vectorizer.transform_text(&claim.text);

    let method = settings.method.unwrap_or(match model {
        Model::Logistic(_) => Method::LinearExact,
        _ => Method::TreeInterventional,
    });
    let attribution = match method {
        Method::LinearExact => linear_shap(&model, &x, &background)?,
        Method::BruteForce => exact_shapley(&model, &x, &background)?,
        Method::TreeInterventional => tree_shap(&model, &x, &background)?,
        Method::Sampling => {
            sampling_shapley(&model, &x, &background, settings.samples, config.seed)?
        }
    };
    let texts = std::iter::once(claim.text.as_str())
        .chain(dataset.records().iter().map(|r| r.text.as_str()));
    let labels = surface_labels(&vectorizer, texts);
    let card = render_card(
        &attribution,
        &claim,
        &labels,
        Some(x.indices()),
        settings.tier,
        settings.top_k,
    )?;
    let rendered = match (settings.format, &args.out) {
        (CardFormat::Terminal, None) => card.render_terminal(std::io::stdout().is_terminal()),
        (format, _) => card.render(format)?,
    };

    match &args.out {
        Some(out) => {
            fs::write(out, &rendered).with_context(|| format!("cannot write {}", out.display()))?;
            let mut manifest = Manifest::new("explain", &config);
            manifest.input("model", &args.model.join("model.json"))?;
            manifest.input("vectorizer", &args.model.join("vectorizer.json"))?;
            manifest.input("dataset", &args.dataset)?;
            manifest.output(out.display().to_string());
            write_sidecar_manifest(&manifest, out)?;
        }
        None => print!("{rendered}"),
    }
    Ok(())
}

/// Vocabulary terms, each replaced by its first spelling in `texts`.
/// Earlier texts win, so the claim's own spelling comes first.
fn surface_labels<'a>(
    vectorizer: &Vectorizer,
    texts: impl IntoIterator<Item = &'a str>,
) -> Vec<String> {
    let mut labels = vectorizer.terms().to_vec();
    let cfg = &vectorizer.config().tokenizer;
    let unstemmed = TokenizerConfig {
        stem: false,
        ..cfg.clone()
    };
    let mut named = HashSet::new();
    for text in texts {
        for word in tokenize(text, &unstemmed).iter() {
            let stemmed = tokenize(word, cfg);
            if let [term] = stemmed.tokens.as_slice() {
                if let Some(col) = vectorizer.column(term) {
                    if named.insert(col) {
                        labels[col] = word.to_string();
                    }
                }
            }
        }
        if named.len() == labels.len() {
            break;
        }
    }
    labels
}

fn parse_model(name: &str, config: &RunConfig) -> Result<ModelConfig> {
    Ok(match name.trim().to_ascii_lowercase().as_str() {
        "logistic" => ModelConfig::Logistic(config.logistic.clone()),
        "distilled" => ModelConfig::Distilled(config.logistic.clone()),
        "tree" => ModelConfig::Tree(config.tree.clone()),
        "forest" => ModelConfig::Forest(config.forest.clone()),
        other => bail!(UsageError(format!(
            "unknown model \"{other}\" (expected logistic, distilled, tree or forest)"
        ))),
    })
}

fn eval(mut config: RunConfig, args: EvalArgs) -> Result<()> {
    if let Some(k) = args.k {
        config.eval.k = k as usize;
    }
    if !args.model.is_empty() {
        config.eval.models = args.model.clone();
    }
    if !args.report.is_empty() {
        config.eval.reports = args
            .report
            .iter()
            .map(|r| ReportFormat::from_str(r))
            .collect::<claimlens::Result<_>>()?;
    }
    if let Some(s) = &args.scope {
        config.augment.scope = AugmentScope::from_str(s)?;
    }
    if config.eval.k < 2 {
        bail!(UsageError("k must be at least 2".into()));
    }

    let dataset = read_dataset(&args.dataset)?;
    let mut manifest = Manifest::new("eval", &config);
    manifest.input("dataset", &args.dataset)?;
    let teacher = match &args.teacher {
        Some(path) => {
            manifest.input("teacher", path)?;
            Some(ingest_teacher_targets(path, &dataset)?)
        }
        None => None,
    };

    let mut reports = Vec::new();
    for name in &config.eval.models {
        let model = parse_model(name, &config)?;
        if model.needs_teacher() && teacher.is_none() {
            bail!(UsageError("the distilled model needs --teacher".into()));
        }
        let spec = PipelineSpec {
            name: None,
            vectorizer: config.vectorizer.clone(),
            model,
            augmentation: config.augment.scope,
        };
        reports.push(cross_validate(
            &spec,
            &dataset,
            teacher.as_ref(),
            config.eval.k,
            config.seed,
        )?);
    }

    create_dir(&args.out)?;
    for format in &config.eval.reports {
        let (file, text) = match format {
            ReportFormat::Markdown => ("report.md", render_report(&reports, *format)?),
            ReportFormat::Csv => ("report.csv", render_report(&reports, *format)?),
            ReportFormat::Json => ("report.json", render_report(&reports, *format)? + "\n"),
        };
        fs::write(args.out.join(file), text)?;
        manifest.output(file);
    }
    manifest.write(&args.out)?;
    print!("{}", render_report(&reports, ReportFormat::Markdown)?);
    Ok(())
}

fn synth(config: &RunConfig, out: &Path, n_claims: Option<usize>) -> Result<()> {
    let mut cfg = SynthConfig::default();
    if let Some(n) = n_claims {
        cfg.n_claims = n;
    }
    cfg.seed = config.seed;
    let (dataset, _) = generate(&cfg)?;
    dataset.save_jsonl(out)?;
    let mut manifest = Manifest::new("synth", config);
    manifest.output(out.display().to_string());
    write_sidecar_manifest(&manifest, out)?;
    println!("{} synthetic claims -> {}", dataset.len(), out.display());
    Ok(())
}
