use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cmc_core::metrics::{FeatureMatrix, ProbMatrix};

fn cmc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmc")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cmc(d, &["gen-corpus", "--n", "2", "--seed", "3", "--out", "c"])), 0);
    assert_eq!(code(&cmc(d, &["train-codebook", "--input", "c/captions.txt", "--out", "cb"])), 0);
    let enc = cmc(d, &["encode", "c/images/000000.ppm", "--codebook", "cb", "--out", "s.cmc"]);
    assert_eq!(code(&enc), 0);
    let dec = cmc(d, &["decode", "s.cmc", "--codebook", "cb", "--out", "r.ppm"]);
    assert_eq!(code(&dec), 0);
    assert_eq!(stdout(&dec).lines().next(), stdout(&enc).lines().next());
    assert_eq!(fs::read(d.join("r.ppm")).unwrap(), fs::read(d.join("c/images/000000.ppm")).unwrap());

    let an = cmc(d, &["analyze", "c/images/000000.ppm", "--out", "s.txt"]);
    assert_eq!(code(&an), 0);
    assert_eq!(fs::read_to_string(d.join("s.txt")).unwrap(), fs::read_to_string(d.join("c/scenes/000000.txt")).unwrap());
    assert_eq!(code(&cmc(d, &["render", "s.txt", "--out", "again.ppm"])), 0);
    assert_eq!(fs::read(d.join("again.ppm")).unwrap(), fs::read(d.join("r.ppm")).unwrap());

    assert_eq!(code(&cmc(d, &["encode", "c/images/000001.ppm", "--quality", "40", "--out", "s.dct"])), 0);
    assert_eq!(code(&cmc(d, &["decode", "s.dct", "--out", "q.ppm"])), 0);
    let m = cmc(d, &["metrics", "--a", "c/images/000001.ppm", "--b", "q.ppm"]);
    assert_eq!(code(&m), 0);
    let db: f64 = stdout(&m).trim().strip_prefix("psnr_db=").unwrap().parse().unwrap();
    assert!(db > 30.0, "{db}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cmc(d, &[])), 2);
    assert_eq!(code(&cmc(d, &["encode"])), 2);
    assert_eq!(code(&cmc(d, &["metrics"])), 2);
    assert_eq!(code(&cmc(d, &["--help"])), 0);

    let bad = cmc(d, &["parse", "a red circle"]);
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("at byte 2"));
    fs::write(d.join("junk.cmc"), b"nope").unwrap();
    assert_eq!(code(&cmc(d, &["decode", "junk.cmc", "--out", "x.ppm"])), 3);
    assert_eq!(code(&cmc(d, &["encode", "missing.ppm", "--out", "x"])), 3);

    // a photo is out of domain for the caption encoder
    fs::write(d.join("photo.ppm"), cmc_core::baseline::photo_like(64, 64, 1).to_ppm_bytes()).unwrap();
    let out = cmc(d, &["encode", "photo.ppm", "--out", "p.cmc"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cmc-encoder"));

    assert_eq!(code(&cmc(d, &["render", "--caption", "a large red circle", "--out", "o.ppm"])), 0);
    assert_eq!(code(&cmc(d, &["encode", "o.ppm", "--seed", "1", "--out", "o.cmc"])), 0);
    let wrong = cmc(d, &["decode", "o.cmc", "--seed", "2", "--out", "x.ppm"]);
    assert_eq!(code(&wrong), 4);
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("entropy-decoder"));
}

#[test]
fn parse_reads_stdin() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_cmc"))
        .args(["parse", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"a small red circle left of a large blue square\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(stdout(&out), "circle red small 1 1\nsquare blue large 2 1\n");
}

#[test]
fn feature_metrics_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let src = FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]]).unwrap();
    let rec = FeatureMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 3.0], vec![2.0, 0.0]]).unwrap();
    fs::write(d.join("src.fmat"), src.to_bytes()).unwrap();
    fs::write(d.join("rec.fmat"), rec.to_bytes()).unwrap();
    let p = ProbMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
    fs::write(d.join("p.pmat"), p.to_bytes()).unwrap();
    let words = FeatureMatrix::from_rows(&[vec![0.6, 0.8]]).unwrap();
    fs::write(d.join("w.fmat"), words.to_bytes()).unwrap();

    let m = cmc(
        d,
        &[
            "metrics", "--features-src", "src.fmat", "--features-rec", "rec.fmat", "--probs", "p.pmat", "--words",
            "w.fmat", "--regions", "w.fmat",
        ],
    );
    assert_eq!(code(&m), 0, "{}", String::from_utf8_lossy(&m.stderr));
    let text = stdout(&m);
    assert!(text.contains("ipd=1.6666666666666667"), "{text}");
    let score: f64 = text.lines().find_map(|l| l.strip_prefix("matching_score=")).unwrap().parse().unwrap();
    assert!((score - 1.0).abs() < 1e-12, "{text}");
    assert!(text.contains("gamma1=5 gamma2=5"), "{text}");
    assert_eq!(code(&cmc(d, &["metrics", "--probs", "p.pmat", "--splits", "4"])), 2);
    fs::write(d.join("bad.pmat"), b"PMAT").unwrap();
    assert_eq!(code(&cmc(d, &["metrics", "--probs", "bad.pmat"])), 3);

    assert_eq!(code(&cmc(d, &["gen-corpus", "--n", "3", "--seed", "1", "--out", "c"])), 0);
    let sweep = cmc(
        d,
        &[
            "sweep", "--corpus", "c", "--out", "r.csv", "--quality", "20,60", "--features-src", "src.fmat",
            "--features-rec", "cmc=rec.fmat", "--features-rec", "q60=src.fmat", "--probs", "q20=p.pmat", "--lambda",
            "0.5",
        ],
    );
    assert_eq!(code(&sweep), 0, "{}", String::from_utf8_lossy(&sweep.stderr));
    assert!(stdout(&sweep).contains("cost"));
    let csv = fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3 + 3);
    let q60: Vec<&str> = csv.lines().find(|l| l.starts_with("dct,60,mean,")).unwrap().split(',').collect();
    assert!(q60[8].parse::<f64>().unwrap() <= 1e-6, "{csv}");
    assert_eq!(q60[9], "0");

    let missing = cmc(d, &["sweep", "--corpus", "c", "--out", "r.csv", "--features-rec", "rec.fmat"]);
    assert_eq!(code(&missing), 2);
    assert_eq!(code(&cmc(d, &["sweep", "--corpus", "nowhere", "--out", "r.csv"])), 3);
}
