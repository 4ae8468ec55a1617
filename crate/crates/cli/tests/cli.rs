use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn morphlex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphlex"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

const DIC: &str = "4\ntalo/A\nkala/AB\nkissa\nTalo/A\n";
const AFF: &str = "SFX A Y 2\nSFX A 0 ssa .\nSFX A 0 lla/B .\nPFX B Y 1\nPFX B 0 epä .\n";

#[test]
fn ingest_writes_candidates_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.dic"), DIC).unwrap();
    fs::write(dir.path().join("x.aff"), AFF).unwrap();
    let o = morphlex(
        dir.path(),
        &[
            "ingest", "--dic", "x.dic", "--aff", "x.aff", "--out", "c.txt",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["stems"], 4);
    assert_eq!(v["suffix_rules"], 2);
    assert_eq!(v["prefix_rules"], 1);
    let lines: Vec<String> = fs::read_to_string(dir.path().join("c.txt"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    for want in ["talo", "kala", "Talo", "-ssa", "-lla", "epä-"] {
        assert!(
            lines.iter().any(|l| l == want),
            "{want} missing from {lines:?}"
        );
    }
}

#[test]
fn ingest_dic_only() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.dic"), DIC).unwrap();
    let o = morphlex(dir.path(), &["ingest", "--dic", "x.dic", "--out", "c.txt"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("c.txt")).unwrap();
    assert!(!text.contains('-'));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn ingest_missing_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = morphlex(
        dir.path(),
        &["ingest", "--dic", "absent.dic", "--out", "c.txt"],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("absent.dic"));
}

const POOL: &str =
    "talo\nkala\n-ssa\n-ni\n-lla\ntalossa\ntalossani\nkalassa\nkalalla\ntalolla\nkalani\ntaloni\n";
const CFG: &str = r#"{"alphabet": "abcdefghijklmnopqrstuvwxyzäö", "support_m": 0}"#;

fn refine_fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.txt"), POOL).unwrap();
    fs::write(dir.path().join("cfg.json"), CFG).unwrap();
    dir
}

#[test]
fn refine_separates_planted_atoms() {
    let dir = refine_fixture();
    let o = morphlex(
        dir.path(),
        &[
            "refine",
            "--candidates",
            "c.txt",
            "--lang",
            "fi",
            "--config",
            "cfg.json",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lexicon = fs::read_to_string(dir.path().join("out/lexicon.txt")).unwrap();
    assert_eq!(lexicon, "kala\nlla\nni\nssa\ntalo\n");

    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report, json(&o));
    assert_eq!(report["config"]["support_m"], 0);
    assert_eq!(report["pool_sizes_per_stage"]["raw"], 12);
    assert_eq!(report["pool_sizes_per_stage"]["lexicon"], 5);
    assert_eq!(report["stop_reason"], "converged");

    let scores = fs::read_to_string(dir.path().join("out/scores.csv")).unwrap();
    assert!(scores.starts_with("token,score\n"));
    assert_eq!(scores.lines().count(), 13);
}

#[test]
fn refine_flags_override_config() {
    let dir = refine_fixture();
    let o = morphlex(
        dir.path(),
        &[
            "refine",
            "--candidates",
            "c.txt",
            "--lang",
            "fi",
            "--config",
            "cfg.json",
            "--out-dir",
            "out",
            "--max-iterations",
            "1",
        ],
    );
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["config"]["max_iterations"], 1);
    assert_eq!(v["iterations"], 1);
    assert_eq!(v["stop_reason"], "max_iterations");
}

#[test]
fn refine_with_bundled_preset() {
    let dir = refine_fixture();
    let o = morphlex(
        dir.path(),
        &[
            "refine",
            "--candidates",
            "c.txt",
            "--lang",
            "fi",
            "--out-dir",
            "out",
        ],
    );
    // The preset keeps m = 3: talo, kala, ssa and ni survive, lla (2) does not.
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["config"]["support_m"], 3);
    assert_eq!(v["pool_sizes_per_stage"]["support_filtered"], 4);
    let o = morphlex(
        dir.path(),
        &[
            "refine",
            "--candidates",
            "c.txt",
            "--lang",
            "zz",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 4);
}

#[test]
fn refine_empty_pool_exits_3() {
    let dir = refine_fixture();
    fs::write(dir.path().join("c.txt"), "Talo\nNATO\nabc1\n").unwrap();
    let o = morphlex(
        dir.path(),
        &[
            "refine",
            "--candidates",
            "c.txt",
            "--lang",
            "fi",
            "--config",
            "cfg.json",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("no candidates survive filtering"));
}

#[test]
fn refine_zero_iterations_exits_4() {
    let dir = refine_fixture();
    let o = morphlex(
        dir.path(),
        &[
            "refine",
            "--candidates",
            "c.txt",
            "--lang",
            "fi",
            "--config",
            "cfg.json",
            "--out-dir",
            "out",
            "--max-iterations",
            "0",
        ],
    );
    assert_eq!(code(&o), 4);
}

#[test]
fn refine_bad_config_json_exits_2() {
    let dir = refine_fixture();
    fs::write(
        dir.path().join("cfg.json"),
        "{\"alphabet\": \"abc\",\n \"colour\": 1}",
    )
    .unwrap();
    let o = morphlex(
        dir.path(),
        &[
            "refine",
            "--candidates",
            "c.txt",
            "--lang",
            "fi",
            "--config",
            "cfg.json",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cfg.json:2"), "{}", stderr(&o));
}

fn sweep_fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let words = [
        "talossa",
        "talossani",
        "kalassa",
        "kalalla",
        "talolla",
        "kalani",
        "taloni",
        "talo",
    ];
    let corpus: String = (0..40)
        .map(|i| words[i % words.len()].to_string() + " ")
        .collect();
    fs::write(dir.path().join("corpus.txt"), corpus).unwrap();
    fs::write(dir.path().join("lex.txt"), "kala\nlla\nni\nssa\ntalo\n").unwrap();
    dir
}

#[test]
fn sweep_rows_follow_ips_formula() {
    let dir = sweep_fixture();
    let o = morphlex(
        dir.path(),
        &[
            "sweep",
            "--corpus",
            "corpus.txt",
            "--sizes",
            "10,14",
            "--lexicon",
            "lex.txt",
            "--words",
            "corpus.txt",
            "--out",
            "curve.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,lmc,osr,ips"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][0], rows[1][0]), (10.0, 14.0));
    for r in &rows {
        let ips = 1.0 - ((1.0 - r[1]).powi(2) + r[2].powi(2)).sqrt() / 2f64.sqrt();
        assert!((r[3] - ips).abs() < 1e-12);
    }
}

#[test]
fn sweep_rejects_unordered_sizes() {
    let dir = sweep_fixture();
    for sizes in ["14,10", "10,10"] {
        let o = morphlex(
            dir.path(),
            &[
                "sweep",
                "--corpus",
                "corpus.txt",
                "--sizes",
                sizes,
                "--lexicon",
                "lex.txt",
                "--words",
                "corpus.txt",
                "--out",
                "curve.csv",
            ],
        );
        assert_eq!(code(&o), 4, "{sizes}");
    }
}

#[test]
fn sweep_over_imported_models() {
    let dir = sweep_fixture();
    fs::create_dir(dir.path().join("models")).unwrap();
    for k in [10, 12, 14] {
        let o = morphlex(
            dir.path(),
            &[
                "train-bpe",
                "--corpus",
                "corpus.txt",
                "--vocab-size",
                &k.to_string(),
                "--out",
                &format!("models/m{k}.json"),
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(json(&o)["tokens"], k);
    }
    let o = morphlex(
        dir.path(),
        &[
            "sweep",
            "--import-dir",
            "models",
            "--lexicon",
            "lex.txt",
            "--words",
            "corpus.txt",
            "--out",
            "imp.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o2 = morphlex(
        dir.path(),
        &[
            "sweep",
            "--corpus",
            "corpus.txt",
            "--sizes",
            "10,12,14",
            "--lexicon",
            "lex.txt",
            "--words",
            "corpus.txt",
            "--out",
            "trained.csv",
        ],
    );
    assert_eq!(code(&o2), 0);
    assert_eq!(
        fs::read(dir.path().join("imp.csv")).unwrap(),
        fs::read(dir.path().join("trained.csv")).unwrap()
    );
}

#[test]
fn evaluate_reports_metrics() {
    let dir = sweep_fixture();
    let o = morphlex(
        dir.path(),
        &[
            "train-bpe",
            "--corpus",
            "corpus.txt",
            "--vocab-size",
            "14",
            "--out",
            "m.json",
        ],
    );
    assert_eq!(code(&o), 0);
    let o = morphlex(
        dir.path(),
        &[
            "evaluate",
            "--model",
            "m.json",
            "--lexicon",
            "lex.txt",
            "--words",
            "corpus.txt",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = &json(&o)["result"];
    let (lmc, osr) = (r["lmc"].as_f64().unwrap(), r["osr"].as_f64().unwrap());
    assert!((0.0..=1.0).contains(&lmc) && (0.0..=1.0).contains(&osr));
    assert_eq!(r["k"], 14);
}

#[test]
fn evaluate_vocab_without_merges_exits_2() {
    let dir = sweep_fixture();
    fs::write(
        dir.path().join("v.json"),
        r#"{"vocab": {"talo": 0, "ssa": 1}}"#,
    )
    .unwrap();
    let o = morphlex(
        dir.path(),
        &[
            "evaluate",
            "--model",
            "v.json",
            "--lexicon",
            "lex.txt",
            "--words",
            "corpus.txt",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("merge"));
}

#[test]
fn analyze_builtin_hungarian() {
    let dir = tempfile::tempdir().unwrap();
    let o = morphlex(
        dir.path(),
        &["analyze", "--builtin", "hu", "--out", "a.json"],
    );
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["k_elbow"], 80_000);
    assert_eq!(v["k_q90"], 128_000);
    assert_eq!(v["recommended_range"], serde_json::json!([80_000, 128_000]));
    assert_eq!(v["gain_mode"], "absolute_delta");
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), o.stdout);
}

#[test]
fn analyze_per_unit_gain_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = morphlex(
        dir.path(),
        &["analyze", "--builtin", "et", "--gain-mode", "per-unit"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["gain_mode"], "per_unit_delta");
    let o = morphlex(
        dir.path(),
        &["analyze", "--builtin", "et", "--gain-mode", "median"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn analyze_two_points_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.csv"), "k,ips\n8000,0.2\n16000,0.3\n").unwrap();
    let o = morphlex(dir.path(), &["analyze", "--curve", "c.csv"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn analyze_malformed_csv_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.csv"),
        "k,ips\n8000,0.2\n16000,zero\n32000,0.4\n",
    )
    .unwrap();
    let o = morphlex(dir.path(), &["analyze", "--curve", "c.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("c.csv:3"), "{}", stderr(&o));
}
