use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use codeorigin::evaluation::evaluate;
use codeorigin::features::read_dataset;
use codeorigin::{train, FeatureGroup, Label, ModelKind, ModelSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_codeorigin"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = run(args, cwd);
    assert!(
        out.status.success(),
        "{args:?}: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn three_files(root: &Path) {
    let files = [
        ("human/a.cpp", "int main() {\n\tint x = 1;\n\treturn x;\n}\n"),
        ("llm/b.cpp", "// entry point\nint main() {\n    int totalCount = 0;\n    return totalCount;\n}\n"),
        ("llm/c.cpp", "#include <vector>\nint add(int a, int b) { return a + b; }\n"),
    ];
    for (p, body) in files {
        let path = root.join(p);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, body).unwrap();
    }
}

fn tree_digest(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for e in walkdir(root) {
        out.push((e.display().to_string(), fs::read(&e).unwrap()));
    }
    out.sort();
    out
}

fn walkdir(root: &Path) -> Vec<std::path::PathBuf> {
    let mut stack = vec![root.to_path_buf()];
    let mut files = Vec::new();
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files
}

#[test]
fn extract_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    three_files(&corpus);
    let before = tree_digest(&corpus);
    ok(&["extract", "corpus", "-o", "a.csv", "--min-df", "1"], dir.path());
    ok(&["extract", "corpus", "-o", "b.csv", "--min-df", "1"], dir.path());
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 4);
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert_eq!(before, tree_digest(&corpus));
}

#[test]
fn vocabulary_reuse() {
    let dir = tempfile::tempdir().unwrap();
    three_files(&dir.path().join("corpus"));
    ok(&["extract", "corpus", "-o", "a.jsonl", "--vocab-out", "v.tsv"], dir.path());
    ok(&["extract", "corpus", "-o", "b.jsonl", "--vocab", "v.tsv"], dir.path());
    let a = fs::read(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.jsonl")).unwrap());
}

#[test]
fn empty_directory_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("nothing-here")).unwrap();
    let out = run(&["extract", "nothing-here", "-o", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nothing-here"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn unknown_subcommand() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "no_such_key = 1\n").unwrap();
    let out = run(&["--config", "c.toml", "synth", "-o", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_then_eval_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--seed", "5", "synth", "--per-class", "15", "-o", "corpus"], dir.path());
    ok(&["extract", "corpus", "-o", "d.csv"], dir.path());
    ok(&["--seed", "9", "train", "d.csv", "-m", "logistic", "-g", "layout", "-o", "m.json"], dir.path());
    ok(
        &["eval", "d.csv", "-m", "m.json", "-g", "layout", "-o", "p.csv", "--json", "e.json"],
        dir.path(),
    );

    let data = read_dataset(&dir.path().join("d.csv")).unwrap().select(FeatureGroup::Layout);
    let model = train(&ModelSpec::default_for(ModelKind::Logistic, 9), &data).unwrap();
    let saved = fs::read_to_string(dir.path().join("m.json")).unwrap();
    assert_eq!(model.to_json().unwrap(), saved);
    let preds: Vec<Label> = model.predict_dataset(&data).unwrap().iter().map(|p| p.label).collect();
    let m = evaluate(&data.labels(), &preds).unwrap();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_eq!(report["metrics"]["accuracy"].as_f64().unwrap(), m.accuracy);
    assert_eq!(report["metrics"]["f_measure"].as_f64().unwrap(), m.f_measure);
    let rows = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(rows.lines().count(), data.len() + 1);
}

#[test]
fn eval_rejects_other_feature_group() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--per-class", "5", "-o", "corpus"], dir.path());
    ok(&["extract", "corpus", "-o", "d.csv"], dir.path());
    ok(&["train", "d.csv", "-m", "tree", "-g", "lexical", "-o", "m.json"], dir.path());
    let out = run(&["eval", "d.csv", "-m", "m.json", "-g", "all"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ablate_grid() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--language", "java", "--per-class", "20", "-o", "corpus"], dir.path());
    let out = ok(&["ablate", "corpus", "--folds", "4", "-o", "grid.csv", "--json", "r.json"], dir.path());
    let table = stdout(&out);
    for name in ["Random Forest", "Linear SVM", "Logistic", "Decision Tree"] {
        assert!(table.contains(name), "{table}");
    }
    assert_eq!(table.matches("F-Measure").count(), 3);
    let csv = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["config"]["folds"], 4);
    assert_eq!(r["config"]["language"], "java");
    assert_eq!(r["report"]["cells"].as_array().unwrap().len(), 12);
}

#[test]
fn ablate_too_few_examples() {
    let dir = tempfile::tempdir().unwrap();
    three_files(&dir.path().join("corpus"));
    let out = run(&["ablate", "corpus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("folds"));
}

#[test]
fn freqdiff_two_corpora() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--per-class", "10", "-o", "c"], dir.path());
    let out = ok(
        &["freqdiff", "c/human", "c/llm", "--category", "comments_strings", "-o", "f.csv"],
        dir.path(),
    );
    assert!(stdout(&out).contains("rel.diff"));
    let csv = fs::read_to_string(dir.path().join("f.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",1")), "{csv}");
    let bad = run(&["freqdiff", "c", "--category", "nonsense"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn cleanse_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let h = |n: u32| format!("{n:064x}");
    let lines = [
        format!(r#"{{"id":"u/a","owner_type":"user","fork":false,"created_at":2021,"contributors":1,"files":[{{"path":"a.cpp","sha256":"{}","size":1}}]}}"#, h(1)),
        format!(r#"{{"id":"o/b","owner_type":"organization","fork":false,"created_at":2022,"contributors":1,"files":[]}}"#),
        format!(r#"{{"id":"u/c","owner_type":"user","fork":true,"created_at":2022,"contributors":1,"files":[]}}"#),
    ];
    fs::write(dir.path().join("m.jsonl"), lines.join("\n")).unwrap();
    let out = ok(&["cleanse", "--manifest", "m.jsonl", "--window", "2021:2022", "-o", "out"], dir.path());
    assert!(stdout(&out).contains("fork"));
    let kept = fs::read_to_string(dir.path().join("out/manifest.jsonl")).unwrap();
    assert_eq!(kept.lines().count(), 1);
    assert!(dir.path().join("out/report.json").is_file());
    let bad = run(&["cleanse", "--manifest", "m.jsonl", "--window", "2022", "-o", "o2"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn judge_with_shell_toolchain() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("tc.toml"),
        "[languages.cpp]\ncompile = [\"cp\", \"{source}\", \"{output}\"]\nrun = [\"sh\", \"{output}\"]\ntime_limit_ms = 2000\n",
    )
    .unwrap();
    fs::write(p.join("echo.cpp"), "cat\n").unwrap();
    let t = p.join("tests/echo");
    fs::create_dir_all(&t).unwrap();
    fs::write(t.join("input_1.txt"), "x\n").unwrap();
    fs::write(t.join("expected_1.txt"), "x").unwrap();
    fs::write(t.join("input_2.txt"), "y\n").unwrap();
    fs::write(t.join("expected_2.txt"), "x").unwrap();
    let out = ok(
        &["judge", "--source", "echo.cpp", "--tests", "tests", "--toolchain", "tc.toml", "--no-timings", "-o", "v.tsv"],
        p,
    );
    assert_eq!(stdout(&out), "echo/1\tAC\necho/2\tWA\n");
    assert_eq!(fs::read_to_string(p.join("v.tsv")).unwrap(), stdout(&out));
    let missing = run(&["judge", "--source", "echo.cpp", "--tests", "nowhere"], p);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn synth_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--seed", "1", "synth", "--per-class", "3", "-o", "a"], dir.path());
    ok(&["--seed", "1", "synth", "--per-class", "3", "-o", "b"], dir.path());
    ok(&["--seed", "2", "synth", "--per-class", "3", "-o", "c"], dir.path());
    let a = fs::read(dir.path().join("a/llm/0001.cpp")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/llm/0001.cpp")).unwrap());
    assert_ne!(a, fs::read(dir.path().join("c/llm/0001.cpp")).unwrap());
}
