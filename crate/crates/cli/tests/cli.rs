use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_gprwi");

const COARSE: &str = "\
[simulation]
cell_m = 0.004
width_m = 0.4
antenna_height_m = 0.048
headroom_m = 0.012
trace_step_m = 0.008
";

const TINY_MODEL: &str = "\
[model]
conv_channels = [2]
kernel = [60, 10]
linear_sizes = [6, 12]
flatten_dim = 12152
batch_size = 8
epochs = 3
patience = 0
";

fn gprwi(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("GPRWI_SEED").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(o: &Output) -> serde_json::Value {
    let out = String::from_utf8_lossy(&o.stdout);
    serde_json::from_str(out.lines().last().expect("summary line")).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_writes_scan() {
    let d = tempfile::tempdir().unwrap();
    let scene = write(d.path(), "s.txt", "layer 0.05 6.278\nlayer 0.05 7.584\nlayer 0.05 5.841\n");
    let out = d.path().join("s.bscan");
    let o = gprwi(&["simulate", "--scene", s(&scene), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(&std::fs::read(&out).unwrap()[..4], b"BSCN");
    assert_eq!(summary(&o)["status"], "ok");
}

#[test]
fn simulate_reports_parse_error_line() {
    let d = tempfile::tempdir().unwrap();
    let scene = write(d.path(), "s.txt", "# wall\nlayer 0.05 4\nlayer 0.05\n");
    let out = d.path().join("s.bscan");
    let o = gprwi(&["simulate", "--scene", s(&scene), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert!(!out.exists());
}

#[test]
fn simulate_rejects_grain_outside_wall() {
    let d = tempfile::tempdir().unwrap();
    let scene = write(d.path(), "s.txt", "layer 0.1 4\ngrain 0.5 0.02 0.005 5\n");
    let out = d.path().join("s.bscan");
    let o = gprwi(&["simulate", "--scene", s(&scene), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn missing_input_is_io_error() {
    let d = tempfile::tempdir().unwrap();
    let o = gprwi(&["simulate", "--scene", s(&d.path().join("none.txt")), "--out", s(&d.path().join("x.bscan"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn unknown_flags_fail_fast() {
    let o = gprwi(&["train", "--learning-rate", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_fail() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", "[model]\nlearning_rate = 0.1\n");
    let o = gprwi(&["gen-dataset", "-n", "1", "--out", s(&d.path().join("x")), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.path().join("x").exists());
}

#[test]
fn help_documents_every_flag() {
    let cases: &[(&str, &[&str])] = &[
        ("simulate", &["--scene", "--out", "--config", "--seed"]),
        ("gen-dataset", &["--samples", "--workers", "--out", "--seed", "--config"]),
        ("preprocess", &["--input", "--out", "--cutoff-hz", "--threshold", "--segment-width", "--segments-per-scan", "--seed"]),
        ("train", &["--dataset", "--out", "--epochs", "--split-ratio", "--seed", "--config"]),
        ("finetune", &["--from", "--compare", "--dataset", "--out"]),
        ("predict", &["--model", "--scan", "--format", "--catalog", "--out"]),
        ("evaluate", &["--model", "--dataset", "--catalog", "--out", "--split", "--split-ratio"]),
    ];
    for (cmd, flags) in cases {
        let o = gprwi(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = String::from_utf8_lossy(&o.stdout);
        for f in *flags {
            let lines: Vec<&str> = text.lines().map(str::trim).collect();
            let i = lines
                .iter()
                .position(|l| l.starts_with('-') && l.split([' ', ',']).any(|w| w == *f))
                .unwrap_or_else(|| panic!("{cmd}: {f} missing"));
            // clap puts the description beside the flag or on the next line
            let doc = match lines[i].split_once("  ") {
                Some((_, d)) => d.trim(),
                None => lines.get(i + 1).copied().filter(|l| !l.starts_with('-')).unwrap_or(""),
            };
            assert!(!doc.is_empty(), "{cmd}: {f} undocumented");
        }
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", COARSE);
    let out = d.path().join("ds");
    let o = Command::new(BIN)
        .args(["gen-dataset", "-n", "1", "--out", s(&out), "--config", s(&cfg)])
        .env("GPRWI_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(&o)["seed"], 42);
}

/// Simulate, generate, train, fine-tune, evaluate and predict on 50 samples.
#[test]
fn end_to_end_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "run.toml", &format!("seed = 11\n{COARSE}\n{TINY_MODEL}"));
    let ds = d.path().join("ds");
    let o = gprwi(&["gen-dataset", "-n", "50", "--out", s(&ds), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&o)["samples"], 50);

    let run = d.path().join("run");
    let o = gprwi(&["train", "--dataset", s(&ds), "--out", s(&run), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.ckpt", "report.csv", "losses.csv", "metrics.csv", "report.txt"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let losses = std::fs::read_to_string(run.join("losses.csv")).unwrap();
    assert_eq!(losses.lines().count(), 4);

    let ckpt = run.join("model.ckpt");
    let ev = d.path().join("eval");
    let o = gprwi(&["evaluate", "--model", s(&ckpt), "--dataset", s(&ds), "--out", s(&ev), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = summary(&o);
    let mae = v["thickness_mae_m"].as_f64().unwrap();
    assert!(mae.is_finite() && mae >= 0.0);
    assert_eq!(v["samples"], 10);
    assert!(ev.join("metrics.csv").is_file() && ev.join("report.txt").is_file());

    let ft = d.path().join("ft");
    let o = gprwi(&[
        "finetune", "--from", s(&ckpt), "--dataset", s(&ds), "--out", s(&ft), "--epochs", "1", "--compare", "--seed", "11",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&o)["pretrained"], true);
    assert!(ft.join("comparison.txt").is_file() && ft.join("fresh_losses.csv").is_file());

    let scan = ds.join("scans/000000.bscan");
    let o = gprwi(&["predict", "--model", s(&ckpt), "--scan", s(&scan), "--scan", s(&scan), "--format", "json-lines"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let p: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(p["raw"].as_array().unwrap().len(), 12);
    assert_eq!(lines[0], lines[1]);
}

#[test]
fn preprocess_cuts_segments() {
    let d = tempfile::tempdir().unwrap();
    let n_t = 120;
    let mut csv = String::from("dt=1e-10\n");
    for k in 0..300 {
        let row: Vec<String> = (0..n_t)
            .map(|j| {
                let t = k as f64 - 40.0 - (j % 7) as f64;
                format!("{}", (-(t / 4.0).powi(2)).exp() * (0.3 * t).cos())
            })
            .collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let input = write(d.path(), "scan.csv", &csv);
    let out = d.path().join("seg");
    let o = gprwi(&["preprocess", "--input", s(&input), "--out", s(&out), "--segments-per-scan", "3", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&o)["segments"], 3);
    let first = std::fs::read(out.join("segment_000.bscan")).unwrap();
    let out2 = d.path().join("seg2");
    gprwi(&["preprocess", "--input", s(&input), "--out", s(&out2), "--segments-per-scan", "3", "--seed", "2"]);
    assert_eq!(first, std::fs::read(out2.join("segment_000.bscan")).unwrap());
}
