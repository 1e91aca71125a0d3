use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use codeorigin::cleanser::{self, CleanseConfig, JsonlManifest, ManifestSource, ThirdPartyList, YearWindow};
use codeorigin::evaluation::{ablate, evaluate, freq_diff, CvConfig};
use codeorigin::extract::{discover, extract_corpus};
use codeorigin::features::{
    assemble_all, build_vocabulary, read_dataset, read_vocabulary, write_csv, write_jsonl, write_vocabulary,
    DatasetFormat,
};
use codeorigin::harness::{judge_source, load_task_tree, ToolchainConfig};
use codeorigin::synthetic;
use codeorigin::{train, ExtractedFile, FeatureGroup, Label, Language, LanguageProfile, ModelKind, TrainedModel};
use serde_json::json;

use crate::config::RunConfig;
use crate::{Cli, CliError, Command, CorpusArgs};

type Result<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn run(cli: Cli) -> Result {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| usage(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(j) = cfg.jobs {
        if j == 0 {
            return Err(usage("--jobs must be positive"));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match cli.command {
        Command::Extract {
            corpus,
            out,
            vocab,
            vocab_out,
            label,
        } => cmd_extract(&mut cfg, &corpus, &out, vocab.as_deref(), vocab_out.as_deref(), label),
        Command::Train {
            dataset,
            model,
            group,
            out,
        } => cmd_train(&cfg, &dataset, model, group, &out),
        Command::Eval {
            dataset,
            model,
            group,
            out,
            json,
        } => cmd_eval(&cfg, &dataset, &model, group, out.as_deref(), json.as_deref()),
        Command::Ablate {
            corpus,
            folds,
            models,
            groups,
            out,
            json,
        } => {
            if let Some(f) = folds {
                cfg.folds = f;
            }
            let models = models.unwrap_or_else(|| ModelKind::ALL.to_vec());
            let groups = groups.unwrap_or_else(|| FeatureGroup::ALL.to_vec());
            cmd_ablate(&mut cfg, &corpus, &models, &groups, out.as_deref(), json.as_deref())
        }
        Command::Freqdiff {
            a,
            b,
            language,
            category,
            out,
        } => {
            if language.is_some() {
                cfg.language = language;
            }
            cmd_freqdiff(&mut cfg, &a, b.as_deref(), category, out.as_deref())
        }
        Command::Cleanse {
            manifest,
            window,
            third_party,
            max_year,
            out,
        } => cmd_cleanse(&manifest, window.as_deref(), third_party.as_deref(), max_year, &out),
        Command::Judge {
            source,
            tests,
            language,
            toolchain,
            no_timings,
            out,
        } => cmd_judge(&cfg, &source, &tests, language, toolchain.as_deref(), !no_timings, out.as_deref()),
        Command::Synth {
            language,
            per_class,
            out,
        } => {
            let lang = language.or(cfg.language).unwrap_or(Language::Cpp);
            let files = synthetic::generate(lang, per_class, cfg.seed);
            synthetic::write_corpus(&out, &files).with_context(|| format!("cannot write {}", out.display()))?;
            println!("wrote {} files to {}", files.len(), out.display());
            Ok(())
        }
    }
}

/// `--language`, else the config, else whichever language the corpus holds.
fn resolve_language(cfg: &mut RunConfig, flag: Option<Language>, root: &Path) -> Result<Language> {
    if let Some(l) = flag.or(cfg.language) {
        cfg.language = Some(l);
        return Ok(l);
    }
    let mut found = Vec::new();
    for lang in Language::ALL {
        if !discover(root, lang).map_err(|e| usage(e.to_string()))?.is_empty() {
            found.push(lang);
        }
    }
    match found.as_slice() {
        [l] => {
            cfg.language = Some(*l);
            Ok(*l)
        }
        [] => Err(no_files(root)),
        _ => Err(usage(format!(
            "{} holds both C++ and Java files; pass --language",
            root.display()
        ))),
    }
}

fn no_files(root: &Path) -> CliError {
    usage(format!("no C++ or Java source files found in {}", root.display()))
}

fn profile(cfg: &RunConfig, lang: Language) -> Result<LanguageProfile> {
    Ok(match &cfg.profiles {
        Some(dir) => LanguageProfile::load(dir, lang)?,
        None => LanguageProfile::builtin(lang),
    })
}

fn load_corpus(cfg: &mut RunConfig, args: &CorpusArgs, label: Option<Label>) -> Result<(Vec<ExtractedFile>, LanguageProfile)> {
    if !args.corpus.exists() {
        return Err(usage(format!("{} does not exist", args.corpus.display())));
    }
    if let Some(m) = args.min_df {
        cfg.min_doc_freq = m;
    }
    let lang = resolve_language(cfg, args.language, &args.corpus)?;
    let profile = profile(cfg, lang)?;
    let entries = discover(&args.corpus, lang).map_err(|e| usage(e.to_string()))?;
    if entries.is_empty() {
        return Err(usage(format!(
            "no {} files found in {}",
            lang,
            args.corpus.display()
        )));
    }
    let files = extract_corpus(&entries, &profile, label)?;
    for f in &files {
        if f.diagnostics > 0 {
            eprintln!("warning: {}: {} recoverable lexing/parsing issues", f.path, f.diagnostics);
        }
    }
    Ok((files, profile))
}

fn cmd_extract(
    cfg: &mut RunConfig,
    corpus: &CorpusArgs,
    out: &Path,
    vocab: Option<&Path>,
    vocab_out: Option<&Path>,
    label: Option<Label>,
) -> Result {
    let (files, profile) = load_corpus(cfg, corpus, label)?;
    let vocab = match vocab {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            let v = read_vocabulary(BufReader::new(f), &p.display().to_string())?;
            if v.language != profile.language() {
                return Err(usage(format!(
                    "vocabulary {} is for {}, corpus is {}",
                    p.display(),
                    v.language,
                    profile.language()
                )));
            }
            v
        }
        None => build_vocabulary(files.iter().map(|f| &f.lexical), cfg.min_doc_freq, &profile)?,
    };
    if let Some(p) = vocab_out {
        let mut w = create(p)?;
        write_vocabulary(&vocab, &mut w)?;
        w.flush()?;
    }
    let data = assemble_all(&files, &vocab);
    let mut w = create(out)?;
    match DatasetFormat::from_path(out) {
        DatasetFormat::Csv => write_csv(&data, &mut w)?,
        DatasetFormat::Jsonl => write_jsonl(&data, &mut w)?,
    }
    w.flush()?;
    eprintln!("{} files, {} features -> {}", data.len(), data.names.len(), out.display());
    Ok(())
}

fn load_dataset(path: &Path) -> Result<codeorigin::Dataset> {
    if !path.is_file() {
        return Err(usage(format!("{} is not a file", path.display())));
    }
    Ok(read_dataset(path)?)
}

fn cmd_train(cfg: &RunConfig, dataset: &Path, kind: ModelKind, group: FeatureGroup, out: &Path) -> Result {
    let data = load_dataset(dataset)?.select(group);
    let model = train(&cfg.spec(kind), &data)?;
    let mut w = create(out)?;
    w.write_all(model.to_json()?.as_bytes())?;
    w.flush()?;
    eprintln!("trained {} on {} files ({} features) -> {}", kind.display_name(), data.len(), model.n_features, out.display());
    Ok(())
}

fn cmd_eval(
    cfg: &RunConfig,
    dataset: &Path,
    model: &Path,
    group: FeatureGroup,
    out: Option<&Path>,
    json_out: Option<&Path>,
) -> Result {
    let text = fs::read_to_string(model).with_context(|| format!("cannot read {}", model.display()))?;
    let model = TrainedModel::from_json(&text)?;
    let data = load_dataset(dataset)?.select(group);
    let preds = model.predict_dataset(&data)?;
    if let Some(p) = out {
        let mut w = csv::Writer::from_writer(create(p)?);
        w.write_record(["path", "gold", "predicted", "score"])?;
        for (v, pr) in data.vectors.iter().zip(&preds) {
            w.write_record([v.path.as_str(), v.label.id(), pr.label.id(), &format!("{}", pr.score)])?;
        }
        w.flush()?;
    }
    let gold: Vec<Label> = data.labels();
    let metrics = if gold.iter().all(|l| *l != Label::Unlabeled) {
        let predicted: Vec<Label> = preds.iter().map(|p| p.label).collect();
        let m = evaluate(&gold, &predicted)?;
        println!(
            "{} ({}): accuracy {:.4}  precision {:.4}  recall {:.4}  f-measure {:.4}",
            model.kind().display_name(),
            group,
            m.accuracy,
            m.precision,
            m.recall,
            m.f_measure
        );
        Some(m)
    } else {
        let llm = preds.iter().filter(|p| p.label == Label::Llm).count();
        println!("{} files: {} predicted llm, {} predicted human", preds.len(), llm, preds.len() - llm);
        None
    };
    if let Some(p) = json_out {
        write_json(p, &json!({ "config": cfg, "group": group, "model": model.spec, "metrics": metrics }))?;
    }
    Ok(())
}

fn cmd_ablate(
    cfg: &mut RunConfig,
    corpus: &CorpusArgs,
    models: &[ModelKind],
    groups: &[FeatureGroup],
    out: Option<&Path>,
    json_out: Option<&Path>,
) -> Result {
    if cfg.folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }
    let (files, profile) = load_corpus(cfg, corpus, None)?;
    if let Some(f) = files.iter().find(|f| f.label == Label::Unlabeled) {
        return Err(usage(format!(
            "{} is not under human/ or llm/; ablation needs labelled files",
            f.path
        )));
    }
    let specs: Vec<_> = models.iter().map(|&k| cfg.spec(k)).collect();
    let cv = CvConfig {
        folds: cfg.folds,
        seed: cfg.seed,
        min_doc_freq: cfg.min_doc_freq,
    };
    let report = match ablate(&specs, groups, &files, &profile, &cv) {
        Err(e @ codeorigin::evaluation::EvalError::TooFewExamples { .. }) => return Err(usage(e.to_string())),
        r => r?,
    };
    print!("{}", report.to_table());
    if let Some(p) = out {
        let mut w = create(p)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = json_out {
        write_json(p, &json!({ "config": cfg, "report": report }))?;
    }
    Ok(())
}

fn cmd_freqdiff(
    cfg: &mut RunConfig,
    a: &Path,
    b: Option<&Path>,
    category: codeorigin::Category,
    out: Option<&Path>,
) -> Result {
    let language = cfg.language;
    let args = |p: &Path| CorpusArgs {
        corpus: p.to_path_buf(),
        language,
        min_df: None,
    };
    let (files_a, files_b, names) = match b {
        Some(b) => {
            let aa = args(a);
            let (fa, _) = load_corpus(cfg, &aa, None)?;
            let bb = args(b);
            let (fb, _) = load_corpus(cfg, &bb, None)?;
            (fa, fb, (a.display().to_string(), b.display().to_string()))
        }
        None => {
            let aa = args(a);
            let (all, _) = load_corpus(cfg, &aa, None)?;
            let (h, l): (Vec<_>, Vec<_>) = all
                .into_iter()
                .filter(|f| f.label != Label::Unlabeled)
                .partition(|f| f.label == Label::Human);
            (h, l, ("human".to_string(), "llm".to_string()))
        }
    };
    let pa: Vec<_> = files_a.iter().map(|f| &f.lexical).collect();
    let pb: Vec<_> = files_b.iter().map(|f| &f.lexical).collect();
    let report = match freq_diff(&pa, &pb, category) {
        Err(e @ codeorigin::evaluation::EvalError::EmptyCorpus) => return Err(usage(e.to_string())),
        r => r?,
    };
    print!("{}", report.to_table(&short(&names.0), &short(&names.1)));
    if let Some(p) = out {
        let mut w = create(p)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn short(name: &str) -> String {
    let base = Path::new(name)
        .file_name()
        .map_or_else(|| name.to_string(), |n| n.to_string_lossy().into_owned());
    base.chars().take(10).collect()
}

fn cmd_cleanse(
    manifest: &Path,
    window: Option<&str>,
    third_party: Option<&Path>,
    max_year: Option<i32>,
    out: &Path,
) -> Result {
    if !manifest.is_file() {
        return Err(usage(format!("{} is not a file", manifest.display())));
    }
    let mut cfg = CleanseConfig::new(max_year.unwrap_or_else(cleanser::current_year));
    cfg.window = window
        .map(|w| w.parse::<YearWindow>())
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    if let Some(p) = third_party {
        cfg.third_party = ThirdPartyList::load(p)?;
    }
    let records = JsonlManifest {
        path: manifest.to_path_buf(),
    }
    .records()?;
    let (kept, report) = cleanser::cleanse(records, &cfg);
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut w = create(&out.join("manifest.jsonl"))?;
    cleanser::write_manifest(&kept, &mut w)?;
    w.flush()?;
    write_json(&out.join("report.json"), &serde_json::to_value(&report)?)?;
    let text = report.to_text();
    fs::write(out.join("report.txt"), &text)?;
    let copied = cleanser::materialize(&kept, &out.join("files"))?;
    print!("{text}");
    if copied > 0 {
        println!("copied {copied} files to {}", out.join("files").display());
    }
    Ok(())
}

fn cmd_judge(
    cfg: &RunConfig,
    source: &Path,
    tests: &Path,
    language: Option<Language>,
    toolchain: Option<&Path>,
    timings: bool,
    out: Option<&Path>,
) -> Result {
    if !source.is_file() {
        return Err(usage(format!("{} is not a file", source.display())));
    }
    let lang = language
        .or_else(|| Language::from_path(&source.to_string_lossy()))
        .ok_or_else(|| usage(format!("cannot tell the language of {}; pass --language", source.display())))?;
    let mut tc = match toolchain {
        Some(p) => ToolchainConfig::load(p)?,
        None => cfg.toolchain.clone().unwrap_or_else(ToolchainConfig::builtin),
    };
    if let Some(j) = cfg.jobs {
        tc.jobs = j;
    }
    let cases = load_task_tree(tests).map_err(|e| usage(e.to_string()))?;
    let report = judge_source(source, lang, &cases, &tc)?;
    if let Some(d) = &report.diagnostics {
        eprint!("{d}");
    }
    let text = report.to_text(timings);
    print!("{text}");
    let summary: Vec<String> = report.summary().iter().map(|(o, n)| format!("{o} {n}")).collect();
    eprintln!("{}", summary.join(", "));
    if let Some(p) = out {
        let mut w = create(p)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
    }
    let _ = io::stdout().flush();
    Ok(())
}
