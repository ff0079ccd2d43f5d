use std::path::Path;
use std::process::Command;

use rfsliding::harness::csv::read_trace_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rfsliding"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn params_prints_sgs_schedule() {
    let out = bin()
        .args(["params", "--L", "4", "--mu", "1", "--nu", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in ["c=0.666667", "beta=1.333333", "gamma=0.333333", "T_1=5", "T_2=6"] {
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
}

#[test]
fn params_prints_asgs_schedule() {
    let out = bin()
        .args(["params", "--L", "1", "--mu", "1", "--L-eta", "100", "--c", "1.5"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("lambda=1.000000"));
    assert!(text.contains("T=14"));
}

#[test]
fn run_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let cfg = write_config(
        dir.path(),
        "qp.cfg",
        &format!("problem = qp\nN = 30\nsigma = 0\noutput = {}\n", out.display()),
    );
    let status = bin().args(["run", "--config"]).arg(&cfg).output().unwrap().status;
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 31);
    let trace = read_trace_csv(&out).unwrap();
    assert_eq!(trace.len(), 30);
}

#[test]
fn sweep_aggregate_is_columnwise_mean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let cfg = write_config(
        dir.path(),
        "s.cfg",
        &format!(
            "problem = qp\nn = 8\nN = 10\nsigma = 0.3\nseeds = 1,2,3,4,5\noutput = {}\n",
            out.display()
        ),
    );
    assert!(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .status
        .success());
    let traces: Vec<_> = (1..=5)
        .map(|s| read_trace_csv(dir.path().join(format!("s_seed{s}.csv"))).unwrap())
        .collect();
    let agg = std::fs::read_to_string(dir.path().join("s_aggregate.csv")).unwrap();
    let rows: Vec<Vec<f64>> = agg
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        let gaps: Vec<f64> = traces.iter().map(|t| t.records[i].objective_gap.unwrap()).collect();
        let mean = gaps.iter().sum::<f64>() / 5.0;
        assert!((row[2] - mean).abs() <= 1e-12 * (1.0 + mean.abs()));
        let norms: f64 = traces.iter().map(|t| t.records[i].grad_map_norm).sum::<f64>() / 5.0;
        assert!((row[4] - norms).abs() <= 1e-12 * (1.0 + norms.abs()));
    }
}

#[test]
fn tv_run_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tv.cfg",
        &format!(
            "problem = tv\nwidth = 8\nheight = 8\nN = 5\neta = 0.01\nimage_out = {}\noutput = {}\n",
            dir.path().join("img").display(),
            dir.path().join("tv.csv").display()
        ),
    );
    assert!(bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
        .status
        .success());
    for name in ["img_clean.pgm", "img_noisy.pgm", "img_denoised.pgm"] {
        let img = rfsliding::problems::read_pgm(dir.path().join(name)).unwrap();
        assert_eq!((img.width, img.height), (8, 8));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.cfg",
        "problem = qp\nN = 3\nbogus = 1\noutput = x.csv\n",
    );
    assert_eq!(
        bin()
            .args(["run", "--config"])
            .arg(&bad)
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    let missing = dir.path().join("missing.cfg");
    assert_eq!(
        bin()
            .args(["run", "--config"])
            .arg(&missing)
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    assert_eq!(bin().arg("nonsense").output().unwrap().status.code(), Some(1));
    assert_eq!(
        bin()
            .args(["params", "--L", "0", "--mu", "1"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    // the output directory does not exist, so writing the trace fails at run time
    let unwritable = write_config(
        dir.path(),
        "w.cfg",
        &format!(
            "problem = qp\nn = 4\nN = 2\noutput = {}\n",
            dir.path().join("no/such/dir/t.csv").display()
        ),
    );
    assert_eq!(
        bin()
            .args(["run", "--config"])
            .arg(&unwritable)
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}
