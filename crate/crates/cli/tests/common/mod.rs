#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn vfusion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfusion"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn write_csv(path: &Path, headers: &[&str], rows: &[Vec<f64>]) {
    let mut s = headers.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", line.join(",")).unwrap();
    }
    std::fs::write(path, s).unwrap();
}

/// Regression table `x1..xp,y` with `y = X β + σ ε`.
pub fn regression_csv(dir: &Path, name: &str, seed: u64, n: usize, beta: &[f64], sigma: f64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = beta.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let e: f64 = rng.sample(StandardNormal);
            let y = x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + sigma * e;
            x.into_iter().chain([y]).collect()
        })
        .collect();
    let headers: Vec<String> = (1..=p).map(|j| format!("x{j}")).chain(["y".into()]).collect();
    let refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let path = dir.join(name);
    write_csv(&path, &refs, &rows);
    path
}

/// Piecewise-constant signal with jumps of `jump` after each index in `cuts` (1-based).
pub fn signal_csv(dir: &Path, name: &str, seed: u64, n: usize, cuts: &[usize], jump: f64, sigma: f64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (1..=n)
        .map(|i| {
            let level = cuts.iter().filter(|&&c| i > c).count() as f64 * jump;
            let e: f64 = rng.sample(StandardNormal);
            vec![level + sigma * e]
        })
        .collect();
    let path = dir.join(name);
    write_csv(&path, &["signal"], &rows);
    path
}

/// Reads the `boundary_prob` column of a smoothing output (last row excluded).
pub fn boundary_probs(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,observed,fitted,boundary_prob"));
    lines
        .filter_map(|l| l.rsplit(',').next().filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()))
        .collect()
}
