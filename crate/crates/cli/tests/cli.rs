use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_namescale");

fn namescale(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("NAMESCALE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Comment line, header, rows.
fn csv(path: &Path) -> (String, String, Vec<String>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(str::to_string);
    (lines.next().unwrap(), lines.next().unwrap(), lines.collect())
}

fn small_corpus(dir: &Path) -> PathBuf {
    fs::write(dir.join("gen.toml"), "n_authors = 1500\nyear_start = 2001\nyear_end = 2005\n").unwrap();
    ok(&namescale(dir, &["gen", "--config", "gen.toml", "--seed", "5", "--out", "corpus.jsonl"]));
    dir.join("corpus.jsonl")
}

#[test]
fn every_subcommand_writes_its_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_corpus(dir);

    let out = namescale(dir, &["ingest", "corpus.jsonl", "--out", "copy.jsonl"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"records\""));
    assert_eq!(fs::read(dir.join("corpus.jsonl")).unwrap(), fs::read(dir.join("copy.jsonl")).unwrap());

    ok(&namescale(dir, &["disambiguate", "corpus.jsonl", "--methods", "aini,fini,truth"]));
    let (comment, header, rows) = csv(&dir.join("disambiguation.csv"));
    assert!(comment.starts_with("# namescale ") && comment.contains("manifest="));
    assert_eq!(header, "paper_id,pos,method,entity_id");
    assert_eq!(rows.len() % 3, 0);

    ok(&namescale(dir, &["accuracy", "corpus.jsonl"]));
    let (_, header, rows) = csv(&dir.join("accuracy.csv"));
    assert_eq!(header, "method,n_clusters,no_error,merged,split,merged_and_split");
    assert_eq!(rows.len(), 2);
    let ratios: f64 = rows[0].split(',').skip(2).map(|v| v.parse::<f64>().unwrap()).sum();
    assert!((ratios - 1.0).abs() < 2e-4);
    assert!(rows[0].split(',').skip(2).all(|v| v.split('.').nth(1).unwrap().len() == 4));

    ok(&namescale(dir, &["netstats", "corpus.jsonl", "--slice", "cum2001-2003", "--histogram", "hist.csv"]));
    let (_, header, rows) = csv(&dir.join("netstats.csv"));
    assert_eq!(header, "method,slice,n_authors,mean_degree,sd_degree");
    assert!(rows[0].starts_with("aini,cum2001-2003,"));
    let (_, header, rows) = csv(&dir.join("hist_fini.csv"));
    assert_eq!(header, "x,count,ccdf");
    assert!(rows[0].ends_with(",1.000000"));

    ok(&namescale(dir, &["fit", "corpus.jsonl", "--methods", "truth"]));
    let (_, header, rows) = csv(&dir.join("fit.csv"));
    assert_eq!(header, "method,slice,fit_method,alpha,r_squared,slope,x_min,ks,n_tail,tail_ratio");
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("truth,all,cdf_ls,"));
    assert!(rows[1].starts_with("truth,all,mle_ks,"));

    ok(&namescale(dir, &["sweep", "corpus.jsonl", "--plan", "window5", "--svg", "sweep.svg"]));
    let (_, _, rows) = csv(&dir.join("sweep.csv"));
    assert_eq!(rows.len(), 2 * 5);
    let svg = fs::read_to_string(dir.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<!-- namescale ") && svg.contains("marker-end"));

    let sim = [
        "simulate", "corpus.jsonl", "--kind", "merge", "--key", "fini", "--ratios", "0:1:0.25", "--seed", "9", "--svg",
        "sim.svg",
    ];
    ok(&namescale(dir, &sim));
    let (_, header, rows) = csv(&dir.join("simulate.csv"));
    assert_eq!(header, "ratio,alpha,r_squared,n_entities,mean_degree");
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("0.0000,") && rows[4].starts_with("1.0000,"));
    let first = fs::read(dir.join("simulate.csv")).unwrap();
    ok(&namescale(dir, &sim));
    assert_eq!(fs::read(dir.join("simulate.csv")).unwrap(), first);
    // the provenance line hashes the arguments, the rows do not depend on them
    ok(&namescale(dir, &sim[..10]));
    let again = fs::read_to_string(dir.join("simulate.csv")).unwrap();
    let first = String::from_utf8(first).unwrap();
    assert_ne!(again.lines().next(), first.lines().next());
    assert!(again.lines().skip(1).eq(first.lines().skip(1)));
}

#[test]
fn exit_codes_name_the_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let out = namescale(dir, &["fit", "missing.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));

    fs::write(dir.join("bad.jsonl"), "{\"paper_id\": \"a\", \"year\": 1, \"mentions\": []}\n").unwrap();
    let out = namescale(dir, &["netstats", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));

    small_corpus(dir);
    let out = namescale(dir, &["simulate", "corpus.jsonl", "--kind", "merge", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = namescale(dir, &["netstats", "corpus.jsonl", "--slice", "cum2005-2001"]);
    assert_eq!(out.status.code(), Some(2));
    let out = namescale(dir, &["fit", "corpus.jsonl", "--hyper", "bogus"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.join("m.toml"), "seed = 1\n[corpus]\npath = \"nowhere.jsonl\"\n").unwrap();
    let out = namescale(dir, &["run", "m.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("manifest") && err.contains("nowhere.jsonl"), "{err}");
}

#[test]
fn out_dir_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_corpus(dir);
    let out = Command::new(BIN)
        .args(["netstats", "corpus.jsonl"])
        .current_dir(dir)
        .env("NAMESCALE_OUT_DIR", dir.join("results"))
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.join("results/netstats.csv").is_file());
}

const MANIFEST: &str = r#"
seed = 77
out_dir = "out"
methods = ["aini", "fini", "truth"]
plans = ["cumulative"]
accuracy = true
svg = true

[corpus.synthetic]
n_authors = 2000
year_start = 2001
year_end = 2004

[[simulate]]
kind = "split"
ratios = "0,0.5,1"
"#;

#[test]
fn manifest_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("run.toml"), MANIFEST).unwrap();
    ok(&namescale(dir, &["run", "run.toml"]));
    let snapshot = |d: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let first = snapshot(&dir.join("out"));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "accuracy.csv",
            "histogram_aini.csv",
            "histogram_fini.csv",
            "histogram_truth.csv",
            "netstats.csv",
            "simulate_split.csv",
            "simulate_split.svg",
            "sweep_cumulative.csv",
            "sweep_cumulative.svg",
        ]
    );
    let (_, _, rows) = csv(&dir.join("out/sweep_cumulative.csv"));
    assert_eq!(rows.len(), 3 * 4);

    fs::remove_dir_all(dir.join("out")).unwrap();
    ok(&namescale(dir, &["run", "run.toml"]));
    assert_eq!(snapshot(&dir.join("out")), first);
}
