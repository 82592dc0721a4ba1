use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use emotrans::harness::read_records;
use emotrans::synth::{ToyConfig, ToyFiles, ToyWorld};

fn toy() -> &'static ToyFiles {
    static FILES: OnceLock<ToyFiles> = OnceLock::new();
    FILES.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-toy");
        let _ = fs::remove_dir_all(&dir);
        ToyWorld::generate(&ToyConfig::default()).write(&dir).unwrap()
    })
}

fn emotrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emotrans"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-scratch").join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn config() -> &'static str {
    toy().config.to_str().unwrap()
}

#[test]
fn transfer_prints_ranked_records() {
    let args = [
        "transfer", "--config", config(), "--preset", "atin", "--target", "joy", "--top", "3",
        "i am sad about the car",
    ];
    let o = emotrans(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = read_records(&stdout(&o)).unwrap();
    assert_eq!(recs.len(), 3);
    for r in &recs {
        assert_eq!(r.input, "i am sad about the car");
        assert_eq!(r.preset, "At+In");
        assert_eq!(r.target.name(), "joy");
    }
    assert!(recs.windows(2).all(|w| w[0].total >= w[1].total));
    let again = emotrans(&args);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn transfer_honours_lambda() {
    let o = emotrans(&[
        "transfer", "--config", config(), "--preset", "atun", "--lambda", "1,0,0", "--target", "anger", "--top",
        "1", "my mother is happy",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &read_records(&stdout(&o)).unwrap()[0];
    assert_eq!(r.total, r.emo);
    assert!(!r.substitutions.is_empty());
}

#[test]
fn usage_errors_exit_1() {
    let bad_lambda = emotrans(&["transfer", "-c", config(), "--lambda", "0.5,0.5,0.5", "-t", "joy", "x"]);
    assert_eq!(bad_lambda.status.code(), Some(1));
    let bad_target = emotrans(&["transfer", "-c", config(), "-t", "boredom", "x"]);
    assert_eq!(bad_target.status.code(), Some(1));
    assert_eq!(emotrans(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(emotrans(&["--help"]).status.code(), Some(0));

    let d = scratch("usage");
    let conf = d.join("run.conf");
    fs::write(&conf, "embeddings = e.txt\nbogus = 1\n").unwrap();
    let o = emotrans(&["transfer", "-c", conf.to_str().unwrap(), "-t", "joy", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn resource_errors_exit_2() {
    let d = scratch("resource");
    let missing = d.join("nope.conf");
    let o = emotrans(&["transfer", "-c", missing.to_str().unwrap(), "-t", "joy", "x"]);
    assert_eq!(o.status.code(), Some(2));

    // Written next to the toy resources so the other relative paths resolve.
    let conf = toy().dir.join("absent-embeddings.conf");
    let text = fs::read_to_string(config()).unwrap().replace("embeddings.txt", "absent.txt");
    fs::write(&conf, text).unwrap();
    let o = emotrans(&["transfer", "-c", conf.to_str().unwrap(), "-t", "joy", "i am sad"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("embeddings"));
}

#[test]
fn data_errors_exit_3() {
    let d = scratch("data");
    let empty = d.join("empty.txt");
    fs::write(&empty, "\n\n").unwrap();
    let o = emotrans(&["eval", "-c", config(), "--corpus", empty.to_str().unwrap(), "--presets", "atwn"]);
    assert_eq!(o.status.code(), Some(3));

    let a = d.join("a.txt");
    fs::write(&a, "1\n1\n1\n").unwrap();
    let o = emotrans(&["spearman", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn eval_then_bws_round_trip() {
    let d = scratch("eval");
    let corpus = d.join("corpus.txt");
    fs::write(&corpus, "i am sad\nthe dog is big\nmy father was angry\n").unwrap();
    let records = d.join("records.jsonl");
    let report = d.join("report.tsv");
    let o = emotrans(&[
        "eval",
        "-c",
        config(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--targets",
        "all",
        "--out",
        records.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = read_records(&fs::read_to_string(&records).unwrap()).unwrap();
    assert_eq!(recs.len(), 3 * 6 * 4);
    assert!(recs.iter().all(|r| r.total == r.emo));
    let table = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("configuration\tanger"));
    assert!(lines[0].contains("\tm\t"));
    for (line, name) in lines[1..].iter().zip(["input", "Bf+WN", "At+WN", "At+Un", "At+In"]) {
        assert!(line.starts_with(name), "{line}");
    }

    let annot = d.join("annotator.tsv");
    let key = d.join("key.tsv");
    let o = emotrans(&[
        "bws-pack",
        "--records",
        records.to_str().unwrap(),
        "-n",
        "3",
        "--annotator",
        annot.to_str().unwrap(),
        "--key",
        key.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let shown = fs::read_to_string(&annot).unwrap();
    assert_eq!(shown.lines().count(), 4);
    for cfg in ["Bf+WN", "At+WN", "At+Un", "At+In"] {
        assert!(!shown.contains(cfg));
    }
    // Tuples 0..3 get targets anger, disgust, fear.
    let keyed = fs::read_to_string(&key).unwrap();
    let targets: Vec<&str> = keyed.lines().skip(1).map(|l| l.split('\t').nth(2).unwrap()).collect();
    assert_eq!(targets, ["anger", "disgust", "fear"]);

    let ann = d.join("ann.tsv");
    fs::write(&ann, "tuple_id\tbest\tworst\n0\tA\tB\n1\tA\tB\n2\tA\tB\n").unwrap();
    let o = emotrans(&[
        "bws-score",
        "--key",
        key.to_str().unwrap(),
        "--annotations",
        ann.to_str().unwrap(),
        "--dimension",
        "similarity",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let scores = stdout(&o);
    assert!(scores.starts_with("configuration\tsimilarity_score"));
    assert_eq!(scores.lines().count(), 5);
    let total: f64 = scores
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!(total.abs() < 1e-9);

    let scores_file = d.join("scores.tsv");
    fs::write(&scores_file, &scores).unwrap();
    let o = emotrans(&["spearman", scores_file.to_str().unwrap(), scores_file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "1.000000");

    fs::write(&ann, "0\tA\tA\n").unwrap();
    let o = emotrans(&["bws-score", "--key", key.to_str().unwrap(), "--annotations", ann.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn spearman_one_swap() {
    let d = scratch("spearman");
    let (a, b) = (d.join("a"), d.join("b"));
    fs::write(&a, "1\n2\n3\n4\n").unwrap();
    fs::write(&b, "1\n3\n2\n4\n").unwrap();
    let o = emotrans(&["spearman", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.800000");
}

#[test]
fn challenge_table_has_36_rows() {
    let o = emotrans(&["challenge", "-c", config(), "--preset", "atin"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#') && !l.starts_with("id ")).collect();
    assert_eq!(rows.len(), 36);
    assert_eq!(rows.iter().filter(|l| l.split_whitespace().nth(1) == Some("Ex")).count(), 12);
    assert_eq!(rows.iter().filter(|l| l.split_whitespace().nth(1) == Some("BR")).count(), 12);
    assert_eq!(rows.iter().filter(|l| l.split_whitespace().nth(1) == Some("Ap")).count(), 12);
    assert!(out.contains("# Tears are running over my face"));
}
