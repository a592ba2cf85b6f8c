use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn paracomp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paracomp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

const DATA: [&str; 10] = [
    "--corpus",
    "lang/corpus.txt",
    "--clusters",
    "lang/clusters.tsv",
    "--test",
    "lang/test.tsv",
    "--gold",
    "lang/gold.tsv",
    "--set",
    "beta=5",
];

fn with_data<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    extra.iter().copied().chain(DATA.iter().copied()).collect()
}

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = paracomp(dir.path(), &["toylang", "--lemmas", "12", "--sentences", "800", "-o", "lang"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

#[test]
fn stages_compose_to_the_full_run() {
    let dir = toy_dir();
    let full = paracomp(dir.path(), &with_data(&["pipeline", "-o", "full"]));
    assert!(full.status.success(), "{}", String::from_utf8_lossy(&full.stderr));

    for stage in ["cluster", "align", "predict", "inflect", "evaluate"] {
        let mut args = vec![stage];
        args.extend(with_data(&["-o", "staged"]));
        let out = paracomp(dir.path(), &args);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
        if stage == "evaluate" {
            assert_eq!(out.stdout, full.stdout);
        }
    }
    assert_eq!(artifacts(&dir.path().join("full")), artifacts(&dir.path().join("staged")));
    let report = fs::read_to_string(dir.path().join("full/report.txt")).unwrap();
    assert!(report.starts_with("# paracomp config="), "{report}");
    assert!(report.contains("\nbmacc="));
}

#[test]
fn inflectors_write_distinct_artifacts() {
    let dir = toy_dir();
    assert!(paracomp(dir.path(), &with_data(&["pipeline", "-o", "o"])).status.success());
    let out = paracomp(dir.path(), &with_data(&["inflect", "--inflector", "baseline", "-o", "o"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["paradigms.aligned.tsv", "paradigms.baseline.tsv"] {
        let text = fs::read_to_string(dir.path().join("o").join(name)).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).collect();
        assert!(!body.is_empty());
        assert!(body.iter().all(|l| l.split('\t').count() == 3), "{name}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(paracomp(dir.path(), &["pipeline", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(paracomp(dir.path(), &["pipeline", "--set", "alpha=x"]).status.code(), Some(1));
    assert_eq!(paracomp(dir.path(), &["pipeline", "--distance-threshold", "5"]).status.code(), Some(1));

    let missing = paracomp(dir.path(), &["pipeline", "--corpus", "absent.txt", "-o", "o"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("stage 'corpus'"));

    let align = paracomp(dir.path(), &["align", "-o", "o"]);
    assert_eq!(align.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&align.stderr).contains("abstract.tsv"));

    assert_eq!(paracomp(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_with_flag_override() {
    let dir = toy_dir();
    fs::write(
        dir.path().join("run.conf"),
        "corpus=lang/corpus.txt\nclusters=lang/clusters.tsv\nbeta=1000\noutput_dir=conf_out\n",
    )
    .unwrap();
    // beta=1000 filters everything; the flag restores a workable value.
    let failing = paracomp(dir.path(), &["cluster", "-c", "run.conf"]);
    assert_eq!(failing.status.code(), Some(2));
    let ok = paracomp(dir.path(), &["cluster", "-c", "run.conf", "--beta", "5"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("conf_out/abstract.tsv").exists());
}
