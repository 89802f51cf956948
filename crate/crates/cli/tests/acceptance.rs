//! Acceptance checks, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line on standard error (bypassing the test
//! harness capture) before asserting.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::One;
use symfun::bounds::{ceil_block_bits, coefficient_oracle, fooling_oracle, threshold_case, threshold_powers};
use symfun::graphnet::{min_symmetric_cut_rate, two_opt_check};
use symfun::harness::exhaustive_verify;
use symfun::{Codebook, FunctionSpec, Graph, Scenario, SizeConvention, Starter, TreeNetwork};

fn report(n: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} {detail}");
    assert!(ok, "criterion {n} failed: {detail}");
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn criterion_1_boolean_and() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for starter in [Starter::One, Starter::Two] {
        let s = Scenario::TwoNode {
            m1: 1,
            m2: 1,
            spec: FunctionSpec::threshold(2),
            starter,
        };
        let r = exhaustive_verify::<f64>(&s, 8).unwrap();
        let worst = r.edges[0].measured;
        ok &= r.instances_checked == 65_536 && r.decode_errors == 0 && r.causality_violations == 0 && worst == 13;
        details.push(format!(
            "starter {}: {} pairs, {} errors, worst {worst}",
            starter.node(),
            r.instances_checked,
            r.decode_errors
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    report(1, ok, &format!("{} ({elapsed:.2?})", details.join("; ")));
}

#[test]
fn criterion_2_case_sweep() {
    let start = Instant::now();
    let mut runs = 0;
    let mut failures = Vec::new();
    for m1 in 1..=4u32 {
        for m2 in 1..=4u32 {
            for theta in 1..=m1 + m2 {
                let z = fooling_oracle(theta, m1, m2);
                if z != threshold_case(theta, m1, m2).1 {
                    failures.push(format!("|Z| mismatch at theta={theta} m=({m1},{m2})"));
                }
                for b in 1..=4usize {
                    for starter in [Starter::One, Starter::Two] {
                        let s = Scenario::TwoNode {
                            m1,
                            m2,
                            spec: FunctionSpec::threshold(theta),
                            starter,
                        };
                        let r = exhaustive_verify::<f64>(&s, b).unwrap();
                        runs += 1;
                        let want = ceil_block_bits(z, b);
                        if r.decode_errors != 0 || r.edges[0].measured != want {
                            failures.push(format!(
                                "theta={theta} m=({m1},{m2}) B={b} starter {}: measured {} want {want}",
                                starter.node(),
                                r.edges[0].measured
                            ));
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(300);
    report(
        2,
        ok,
        &format!(
            "{runs} sweeps, {} mismatches ({elapsed:.2?}) {:?}",
            failures.len(),
            failures.first()
        ),
    );
}

#[test]
fn criterion_3_oracle_agreement() {
    let mut checked = 0;
    let mut bad = None;
    for theta in 0..=12u32 {
        for m1 in 0..=12u32 {
            for m2 in 0..=12u32 {
                let direct = u128::from(fooling_oracle(theta, m1, m2));
                let poly = coefficient_oracle(&[m1, m2], &threshold_powers(theta));
                checked += 1;
                if direct != poly && bad.is_none() {
                    bad = Some((theta, m1, m2, direct, poly));
                }
            }
        }
    }
    report(
        3,
        bad.is_none(),
        &format!("{checked} triples, first disagreement {bad:?}"),
    );
}

#[test]
fn criterion_4_star_tree() {
    let start = Instant::now();
    let s = Scenario::Tree {
        tree: TreeNetwork::star(&[2; 5]).unwrap(),
        spec: FunctionSpec::threshold(2),
    };
    let r = exhaustive_verify::<f64>(&s, 4).unwrap();
    let worst: Vec<u64> = r.edges.iter().map(|e| e.measured).collect();
    let elapsed = start.elapsed();
    let ok = r.instances_checked == 1 << 20
        && r.decode_errors == 0
        && r.causality_violations == 0
        && worst.len() == 4
        && worst.iter().all(|&w| w == 8)
        && elapsed < Duration::from_secs(300);
    report(
        4,
        ok,
        &format!(
            "{} assignments, {} errors, leaf edges {worst:?} ({elapsed:.2?})",
            r.instances_checked, r.decode_errors
        ),
    );
}

#[test]
fn criterion_5_non_binary_path() {
    let s = Scenario::Tree {
        tree: TreeNetwork::path(&[1, 2, 3], &[3, 2, 4]).unwrap(),
        spec: FunctionSpec::threshold(3),
    };
    let r = exhaustive_verify::<f64>(&s, 2).unwrap();
    let got: Vec<((u32, u32), u64)> = r.edges.iter().map(|e| (e.edge, e.measured)).collect();
    let want = vec![((1, 2), ceil_block_bits(6, 2)), ((2, 3), ceil_block_bits(7, 2))];
    let ok =
        r.decode_errors == 0 && r.causality_violations == 0 && got == want && want == vec![((1, 2), 6), ((2, 3), 6)];
    report(5, ok, &format!("per-edge worst {got:?}, {} errors", r.decode_errors));
}

#[test]
fn criterion_6_interval_sandwich() {
    let lo = ceil_block_bits(5, 2);
    let hi = ceil_block_bits(9, 2);
    let mut ok = (lo, hi) == (5, 7);
    let mut seen = Vec::new();
    for starter in [Starter::One, Starter::Two] {
        let s = Scenario::TwoNode {
            m1: 4,
            m2: 5,
            spec: FunctionSpec::interval(2, 3).unwrap(),
            starter,
        };
        let r = exhaustive_verify::<f64>(&s, 2).unwrap();
        let w = r.edges[0].measured;
        ok &= r.decode_errors == 0 && lo <= w && w <= hi;
        seen.push(w);
    }
    report(
        6,
        ok,
        &format!("{lo} <= w <= {hi}, measured {seen:?} for starters 1 and 2"),
    );
}

#[test]
fn criterion_7_complete_graph_ratio() {
    let start = Instant::now();
    let k4 = Graph::complete(&[2; 4]).unwrap();
    let spec = FunctionSpec::threshold(2);
    let tol = 1e-9;
    let r_cut = min_symmetric_cut_rate::<f64>(&k4, &spec, SizeConvention::MaxValue)
        .unwrap()
        .rate;
    let mut ok = (r_cut - 2.0 / 3.0).abs() <= tol;
    let mut parts = vec![format!("R_cut {r_cut:.12}")];
    for conv in SizeConvention::BOTH {
        let c = two_opt_check::<f64>(&k4, &spec, conv).unwrap();
        ok &= c.ratio <= 1.5 + tol && c.holds;
        parts.push(format!(
            "{conv:?}: R_ach {:.12} R_cut {:.12} ratio {:.12} <= {}",
            c.r_ach, c.r_cut, c.ratio, c.bound
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    report(7, ok, &format!("{} ({elapsed:.2?})", parts.join("; ")));
}

fn prefix_free(words: &[String]) -> bool {
    let set: std::collections::HashSet<&str> = words.iter().map(String::as_str).collect();
    set.len() == words.len() && words.iter().all(|w| (0..w.len()).all(|p| !set.contains(&w[..p])))
}

#[test]
fn criterion_8_codec_properties() {
    let mut books = 0;
    let mut bad = None;
    for k in 1..=5usize {
        for r in 0..=k {
            for b in 1..=6usize {
                let cb = Codebook::build(k, r, b).unwrap();
                books += 1;
                let words: Vec<String> = (0..cb.block_count())
                    .map(|i| cb.word(i).to_bits().to_string())
                    .collect();
                let mut ok = prefix_free(&words) && cb.kraft_sum() <= BigRational::one();
                for rank in 0..cb.block_count() {
                    let block: Vec<u32> = cb.indices_of_rank(rank).into_iter().map(|i| i as u32).collect();
                    let ambiguous = block.iter().filter(|&&x| (x as usize) < r).count() as u32;
                    ok &= cb.word(rank).len + ambiguous == cb.total_budget();
                    let enc = cb.encode(&block).unwrap();
                    ok &= cb.decode_stream(enc.as_slice()).ok() == Some((block, enc.len()));
                }
                if !ok && bad.is_none() {
                    bad = Some((k, r, b));
                }
            }
        }
    }
    report(
        8,
        bad.is_none(),
        &format!("{books} codebooks, first failing (k, r, B) {bad:?}"),
    );
}

fn run_cli(args: &[&str], out: &Path, jobs: usize) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_symfun"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg(jobs.to_string())
        .status()
        .unwrap();
    assert!(status.success(), "symfun {args:?} exited with {status}");
    std::fs::read(out).unwrap()
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let star5 = data("star5.json");
    let path3 = data("path3.json");
    let path8 = data("path8.json");
    let k4 = data("k4.json");
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "simulate",
            "--two-node",
            "--threshold",
            "2",
            "--m1",
            "1",
            "--m2",
            "1",
            "-B",
            "8",
            "--exhaustive",
        ],
        vec![
            "simulate",
            "--two-node",
            "--threshold",
            "2",
            "--m1",
            "1",
            "--m2",
            "1",
            "-B",
            "8",
            "--starter",
            "2",
        ],
        vec![
            "simulate",
            "--tree",
            star5.to_str().unwrap(),
            "--threshold",
            "2",
            "-B",
            "4",
        ],
        vec![
            "simulate",
            "--tree",
            path3.to_str().unwrap(),
            "--threshold",
            "3",
            "-B",
            "2",
        ],
        vec![
            "simulate",
            "--two-node",
            "--interval",
            "2",
            "3",
            "--m1",
            "4",
            "--m2",
            "5",
            "-B",
            "2",
        ],
        vec![
            "simulate",
            "--tree",
            path8.to_str().unwrap(),
            "--threshold",
            "4",
            "-B",
            "4",
            "--random",
            "--trials",
            "100000",
            "--seed",
            "7",
        ],
        vec!["graph", k4.to_str().unwrap(), "--threshold", "2"],
        vec!["bounds", "--threshold", "3", "--tree", path3.to_str().unwrap()],
        vec!["codebook", "--letters", "3", "--ambiguous", "2", "-B", "3"],
    ];
    let mut files = 0;
    let mut diverged = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        for format in ["json", "csv"] {
            let mut args = cmd.clone();
            args.extend(["--format", format]);
            let reference = run_cli(&args, &dir.path().join(format!("{i}-ref.{format}")), 1);
            for (rep, jobs) in [(1, 1), (2, 4), (3, 4)] {
                let again = run_cli(&args, &dir.path().join(format!("{i}-{rep}.{format}")), jobs);
                files += 1;
                if again != reference {
                    diverged.push(format!("{cmd:?} {format} jobs={jobs}"));
                }
            }
        }
    }
    report(
        9,
        diverged.is_empty(),
        &format!("{files} repeated report files compared, diverged: {diverged:?}"),
    );
}
