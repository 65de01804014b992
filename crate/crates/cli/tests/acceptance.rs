//! Acceptance suite: one PASS / FAIL / SKIPPED line per criterion.
//!
//! Oracles here are written independently of the library: brute-force
//! pairwise intersection for the nerve, a sweep over every pooled value for
//! KS, exact integer arithmetic for hypergeometric tails, and direct distance
//! recomputation for MDS.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use thd_cli::{cmd_run, RunConfig};
use thd_core::classifier::{evaluate, fit_predict, DEFAULT_K_VOTES};
use thd_core::data::{ingest_csv, ingest_reader, label_distribution, median, AnalysisMatrix, Dataset, Group, Schema};
use thd_core::fixtures::TwoBlobs;
use thd_core::geometry::{classical_mds, pairwise_distances, DistanceMatrix, Lens, Metric};
use thd_core::mapper::{assign_bins, build_cover, build_network, cut_by_gap, single_linkage, CoverParams};
use thd_core::report::explain_individual;
use thd_core::stats::{hypergeometric_pmf, hypergeometric_tail, ks_p_value, ks_statistic, StatKind, StatsConfig, Summary};
use thd_core::thd::{run_thd, run_thd_on, trace_point_path, ThdParams, ThdTree};

/// Path to the HELOC challenge CSV; the HELOC criteria are skipped without it.
const HELOC_ENV: &str = "THD_HELOC_CSV";

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn heloc_path() -> Option<PathBuf> {
    std::env::var_os(HELOC_ENV).map(PathBuf::from).filter(|p| p.exists())
}

// ---------------------------------------------------------------------------
// 1, 2: nerve and cover

struct Instance {
    seed: u64,
    matrix: AnalysisMatrix,
    lens: Lens,
    params: CoverParams,
}

fn instances() -> Vec<Instance> {
    let gains = [1.0, 1.5, 2.7];
    (0..100u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..=50);
            let p = rng.random_range(2..=8);
            let centers = rng.random_range(1..=3);
            let normal = Normal::new(0.0, 1.0).unwrap();
            let offsets: Vec<Vec<f64>> =
                (0..centers).map(|_| (0..p).map(|_| rng.random_range(-8.0..8.0)).collect()).collect();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let c = &offsets[rng.random_range(0..centers)];
                    c.iter().map(|o| o + normal.sample(&mut rng)).collect()
                })
                .collect();
            let lens = match seed % 3 {
                0 => Lens::Mds { dims: 1 },
                1 => Lens::Mds { dims: 2 },
                _ => Lens::Nhl { k_neighbors: rng.random_range(2..=15) },
            };
            let params = CoverParams::new(rng.random_range(1..=5), gains[rng.random_range(0..3)]).unwrap();
            Instance { seed, matrix: AnalysisMatrix::from_rows(&rows).unwrap(), lens, params }
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut matched = 0;
    let mut first_bad = None;
    for inst in instances() {
        let d = pairwise_distances(&inst.matrix, Metric::Vne);
        let filter = inst.lens.apply(&d).unwrap();
        let cover = build_cover(&filter, inst.params).unwrap();
        let per_bin: Vec<(usize, Vec<Vec<usize>>)> = assign_bins(&filter, &cover)
            .into_iter()
            .enumerate()
            .filter(|(_, rows)| !rows.is_empty())
            .map(|(b, rows)| {
                let merges = single_linkage(&rows, &d);
                (b, cut_by_gap(&rows, &merges, 10))
            })
            .collect();
        let clusters: Vec<Vec<usize>> = per_bin.iter().flat_map(|(_, cs)| cs.iter().cloned()).collect();
        let net = build_network(per_bin);

        // Oracle: one vertex per cluster, an edge for every intersecting pair.
        let mut oracle = BTreeSet::new();
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let a: BTreeSet<usize> = clusters[i].iter().copied().collect();
                let shared = clusters[j].iter().filter(|r| a.contains(r)).count();
                if shared > 0 {
                    oracle.insert((i, j, shared));
                }
            }
        }
        let got: BTreeSet<(usize, usize, usize)> = net.edges.iter().map(|e| (e.source, e.target, e.weight)).collect();
        let nodes_ok = net.nodes.len() == clusters.len()
            && net.nodes.iter().zip(&clusters).all(|(n, c)| n.rows == *c);
        if nodes_ok && got == oracle {
            matched += 1;
        } else if first_bad.is_none() {
            first_bad = Some(inst.seed);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        matched == 100 && elapsed < Duration::from_secs(10),
        format!(
            "{matched}/100 instances match the pairwise-intersection oracle in {:.2} s{}",
            elapsed.as_secs_f64(),
            first_bad.map(|s| format!(" (first mismatch: seed {s})")).unwrap_or_default()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut covered = 0;
    let mut one_d = 0;
    let mut overlap_ok = 0;
    let mut worst: f64 = 0.0;
    for inst in instances() {
        let d = pairwise_distances(&inst.matrix, Metric::Vne);
        let filter = inst.lens.apply(&d).unwrap();
        let cover = build_cover(&filter, inst.params).unwrap();
        let members = assign_bins(&filter, &cover);
        // Every row sits in some bin, and every bin it is assigned to holds
        // it geometrically (closed box, tolerance for rounding at the edge).
        let all_rows = (0..filter.n).all(|i| {
            let point = filter.point(i);
            let assigned: Vec<usize> = (0..members.len()).filter(|&b| members[b].contains(&i)).collect();
            let inside = |b: usize| {
                let bin = &cover.bins[b];
                (0..cover.dim()).all(|a| {
                    let tol = 1e-12 * (1.0 + bin.half_width[a].abs() + point[a].abs());
                    point[a] >= bin.lower(a) - tol && point[a] <= bin.upper(a) + tol
                })
            };
            let geometric = (0..cover.bins.len()).any(inside);
            !assigned.is_empty() && geometric && assigned.iter().all(|&b| inside(b))
        });
        if all_rows {
            covered += 1;
        }
        let g = inst.params.gain;
        if cover.dim() == 1 && g > 1.0 && cover.bins.len() >= 2 {
            one_d += 1;
            let expected = 1.0 - 1.0 / g;
            let fractions: Vec<f64> = cover
                .bins
                .windows(2)
                .map(|w| (w[0].upper(0) - w[1].lower(0)) / (w[0].upper(0) - w[0].lower(0)))
                .collect();
            let err = fractions.iter().map(|f| (f - expected).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
            if err <= 1e-9 {
                overlap_ok += 1;
            }
        }
    }
    verdict(
        covered == 100 && one_d > 0 && overlap_ok == one_d,
        format!(
            "{covered}/100 covers contain every row; {overlap_ok}/{one_d} 1-D covers with g > 1 have overlap 1 - 1/g (max error {worst:.1e})"
        ),
    )
}

// ---------------------------------------------------------------------------
// 3: KS

/// Largest gap between the two empirical CDFs, evaluated at every pooled
/// value by direct counting.
fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .chain(b)
        .map(|&x| {
            let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
            let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
            (fa - fb).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for i in 0..1000 {
        let (n, m) = (rng.random_range(1..=200), rng.random_range(1..=200));
        let shift = rng.random_range(-1.0..1.0);
        // Every third pair is rounded to one decimal to force ties.
        let mut draw = |k: usize, s: f64| -> Vec<f64> {
            (0..k)
                .map(|_| {
                    let v = normal.sample(&mut rng) + s;
                    if i % 3 == 0 {
                        (v * 10.0).round() / 10.0
                    } else {
                        v
                    }
                })
                .collect()
        };
        let a = draw(n, 0.0);
        let b = draw(m, shift);
        let err = (ks_statistic(&a, &b).unwrap() - ks_oracle(&a, &b)).abs();
        worst = worst.max(err);
        if err <= 1e-12 {
            ok += 1;
        }
    }
    verdict(ok == 1000, format!("{ok}/1000 pairs within 1e-12 of the ECDF oracle (max error {worst:.1e})"))
}

// ---------------------------------------------------------------------------
// 4: hypergeometric

fn criterion_4() -> Outcome {
    const MAX_N: usize = 60;
    // Exact binomial coefficients; C(60, 30) < 2^60.
    let mut binom = vec![vec![0u128; MAX_N + 1]; MAX_N + 1];
    for n in 0..=MAX_N {
        binom[n][0] = 1;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k <= n - 1 { binom[n - 1][k] } else { 0 };
        }
    }
    let tol = BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000u64));
    let mut checked = 0usize;
    let mut failures = 0usize;
    let mut worst_sum: f64 = 0.0;
    let mut worst_rel = BigRational::zero();
    for big_n in 1..=MAX_N {
        for big_k in 0..=big_n {
            for n in 0..=big_n {
                let lo = (n + big_k).saturating_sub(big_n);
                let hi = n.min(big_k);
                let total = binom[big_n][n];
                let term = |i: usize| binom[big_k][i] * binom[big_n - big_k][n - i];
                let mut pmf_sum = 0.0;
                let mut tail_num: u128 = 0;
                for k in (lo..=hi).rev() {
                    tail_num += term(k);
                    pmf_sum += hypergeometric_pmf(big_n as u64, big_k as u64, n as u64, k as u64).unwrap();
                    let got = hypergeometric_tail(big_n as u64, big_k as u64, n as u64, k as u64).unwrap();
                    let exact = BigRational::new(BigInt::from(tail_num), BigInt::from(total));
                    let rel = match BigRational::from_float(got) {
                        Some(g) => (g - &exact).abs() / &exact,
                        None => BigRational::from_integer(BigInt::from(1)),
                    };
                    if rel > tol {
                        failures += 1;
                    }
                    if rel > worst_rel {
                        worst_rel = rel;
                    }
                    checked += 1;
                }
                worst_sum = worst_sum.max((pmf_sum - 1.0).abs());
            }
        }
    }
    let worst = num_traits::ToPrimitive::to_f64(&worst_rel).unwrap_or(f64::INFINITY);
    verdict(
        failures == 0 && worst_sum <= 1e-9,
        format!(
            "{}/{checked} tails within relative 1e-9 of the exact value (max {worst:.1e}); PMF sums within {worst_sum:.1e} of 1",
            checked - failures
        ),
    )
}

// ---------------------------------------------------------------------------
// 5: MDS

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for _ in 0..50 {
        let n = rng.random_range(3..=40);
        let scale = rng.random_range(0.1..100.0);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-scale..scale), rng.random_range(-scale..scale)]).collect();
        let dist = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let square: Vec<Vec<f64>> = pts.iter().map(|&p| pts.iter().map(|&q| dist(p, q)).collect()).collect();
        let d = DistanceMatrix::from_square(&square).unwrap();
        let emb = classical_mds(&d, 2).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (emb.point(i), emb.point(j));
                let e = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                err = err.max((e - square[i][j]).abs() / square[i][j]);
            }
        }
        worst = worst.max(err);
        if err <= 1e-6 {
            ok += 1;
        }
    }
    verdict(ok == 50, format!("{ok}/50 planar sets reproduce all distances within relative 1e-6 (max {worst:.1e})"))
}

// ---------------------------------------------------------------------------
// 6: blob split

fn criterion_6() -> Outcome {
    let mut ok = 0;
    let mut notes = Vec::new();
    let params = ThdParams::default();
    for seed in 0..20 {
        let fx = TwoBlobs { seed, ..Default::default() };
        let d = fx.dataset().unwrap();
        let tree = run_thd(&d, &params).unwrap();
        let (na, nb) = (fx.sizes.0 as f64, fx.sizes.1 as f64);
        let shares: Vec<(f64, f64)> = tree
            .root
            .children
            .iter()
            .map(|c| {
                let a = c.group.rows().iter().filter(|&&r| fx.in_a(r)).count() as f64;
                (a / na, (c.group.len() as f64 - a) / nb)
            })
            .collect();
        let good = shares.len() == 2 && {
            let mostly_a = |s: &(f64, f64)| s.0 >= 0.95 && s.1 <= 0.01;
            let mostly_b = |s: &(f64, f64)| s.1 >= 0.95 && s.0 <= 0.01;
            (mostly_a(&shares[0]) && mostly_b(&shares[1])) || (mostly_b(&shares[0]) && mostly_a(&shares[1]))
        };
        if good {
            ok += 1;
        } else {
            notes.push(format!("seed {seed}: {shares:?}"));
        }
    }
    verdict(
        ok == 20,
        format!("{ok}/20 seeds split into exactly two blob-pure children{}", notes.first().map(|n| format!(" ({n})")).unwrap_or_default()),
    )
}

// ---------------------------------------------------------------------------
// 7: determinism of `cmd_run`

fn blob_config(dir: &Path) -> RunConfig {
    let csv = dir.join("blobs.csv");
    std::fs::write(&csv, TwoBlobs::default().to_csv()).unwrap();
    let p = TwoBlobs::params();
    RunConfig {
        dataset: csv,
        schema: TwoBlobs::schema(),
        lenses: vec![p.lens.clone(), Lens::nhl()],
        max_resolution: p.max_resolution,
        ..RunConfig::default()
    }
}

fn heloc_config(path: &Path) -> RunConfig {
    RunConfig {
        dataset: path.to_path_buf(),
        schema: Schema::heloc(),
        risky_level: Some("Bad".into()),
        ..RunConfig::default()
    }
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, what) = match heloc_path() {
        Some(p) => (heloc_config(&p), "HELOC"),
        None => (blob_config(dir.path()), "blob fixture"),
    };
    let run = |threads: usize, out: &str| {
        let out = dir.path().join(out);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cmd_run(&cfg, &out))
            .unwrap();
        std::fs::read(out.join(thd_cli::commands::MANIFEST)).unwrap()
    };
    let one = run(1, "t1");
    let four = run(4, "t4");
    let again = run(1, "t1-again");
    let files = serde_json::from_slice::<thd_cli::Manifest>(&one).unwrap().files.len();
    verdict(
        one == four && one == again,
        format!("{what}: manifests over {files} files byte-identical for 1 thread, 4 threads, and a rerun"),
    )
}

// ---------------------------------------------------------------------------
// 8: HELOC desk-scale run

struct HelocRun {
    dataset: Dataset,
    trees: Vec<(String, ThdTree, Duration)>,
}

fn heloc_run() -> Option<&'static HelocRun> {
    static CELL: OnceLock<Option<HelocRun>> = OnceLock::new();
    CELL.get_or_init(|| {
        let path = heloc_path()?;
        let dataset = ingest_csv(&path, &Schema::heloc()).unwrap();
        let trees = [Lens::mds(), Lens::nhl()]
            .into_iter()
            .map(|lens| {
                let start = Instant::now();
                let params = ThdParams { lens: lens.clone(), ..ThdParams::default() };
                let tree = run_thd(&dataset, &params).unwrap();
                (lens.name().to_string(), tree, start.elapsed())
            })
            .collect();
        Some(HelocRun { dataset, trees })
    })
    .as_ref()
}

fn criterion_8() -> Outcome {
    let Some(run) = heloc_run() else {
        return Outcome::Skip(format!("HELOC challenge file not available (set {HELOC_ENV} to its path)"));
    };
    let d = &run.dataset;
    let counts = {
        let mut c: BTreeMap<String, usize> = BTreeMap::new();
        for r in 0..d.rows() {
            if let Some(l) = d.label_of(r) {
                *c.entry(l.to_string()).or_default() += 1;
            }
        }
        c
    };
    let bad = label_distribution(d, &Group::all(d)).unwrap().get("Bad").copied().unwrap_or(0.0);
    let mut ok = d.rows() == 10_459
        && counts.get("Good") == Some(&5_000)
        && counts.get("Bad") == Some(&5_459)
        && (bad - 0.522).abs() <= 0.001;
    let mut details = vec![format!("{} rows, {counts:?}, Bad {bad:.4}", d.rows())];
    let total: Duration = run.trees.iter().map(|t| t.2).sum();
    ok &= total < Duration::from_secs(600);
    for (name, tree, took) in &run.trees {
        let nodes = tree.nodes();
        let splits = nodes.iter().filter(|n| !n.children.is_empty()).count();
        let smallest = nodes.iter().skip(1).map(|n| n.group.len()).min().unwrap_or(0);
        ok &= splits >= 2 && nodes.iter().skip(1).all(|n| n.group.len() >= 20);
        details.push(format!("{name}: {} nodes, {splits} splits, smallest child {smallest}, {:.0} s", nodes.len(), took.as_secs_f64()));
    }
    verdict(ok, details.join("; "))
}

// ---------------------------------------------------------------------------
// 9: explanation integrity

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn criterion_9() -> Outcome {
    let owned;
    let (dataset, tree, risky, what) = match heloc_run() {
        Some(run) => (&run.dataset, &run.trees[0].1, "Bad", "HELOC"),
        None => {
            let d = TwoBlobs::default().dataset().unwrap();
            let t = run_thd(&d, &TwoBlobs::params()).unwrap();
            owned = (d, t);
            (&owned.0, &owned.1, "A", "blob fixture")
        }
    };
    let cfg = StatsConfig::default();
    let label = &dataset.features()[dataset.label_index().unwrap()].name;
    let mut rows: Vec<usize> = (0..dataset.rows()).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    rows.truncate(50);

    let (mut paths_ok, mut stats_checked, mut stats_ok, mut clean) = (0, 0, 0, 0);
    for &r in &rows {
        let e = explain_individual(tree, dataset, r, risky, None, &cfg).unwrap();
        let path = trace_point_path(tree, r).unwrap();
        if e.path.iter().map(|h| &h.node_id).eq(path.nodes.iter()) && e.end == path.end {
            paths_ok += 1;
        }
        for hop in &e.path {
            let node = tree.node(&hop.node_id).unwrap();
            let Some(parent) = tree.parent_of(&hop.node_id) else { continue };
            let baseline = parent.group.difference(&node.group);
            for s in &hop.reasons {
                stats_checked += 1;
                let j = dataset.feature_index(&s.feature).unwrap();
                let good = match s.kind {
                    StatKind::Ks => {
                        let a = dataset.present_values(j, node.group.rows());
                        let b = dataset.present_values(j, baseline.rows());
                        let d = ks_oracle(&a, &b);
                        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                        let summary_ok = match (&s.group_summary, &s.baseline_summary) {
                            (
                                Summary::Continuous { count: ca, mean: ma, median: meda },
                                Summary::Continuous { count: cb, mean: mb, median: medb },
                            ) => {
                                *ca == a.len()
                                    && *cb == b.len()
                                    && close(*ma, mean(&a), 1e-9)
                                    && close(*mb, mean(&b), 1e-9)
                                    && close(*meda, median(&a).unwrap(), 1e-9)
                                    && close(*medb, median(&b).unwrap(), 1e-9)
                            }
                            _ => false,
                        };
                        summary_ok
                            && close(s.statistic, d, 1e-9)
                            && close(s.p_value, ks_p_value(d, a.len(), b.len()), 1e-9)
                    }
                    StatKind::Hypergeometric => {
                        let level = s.level.as_deref().unwrap();
                        let code = dataset.levels(j).iter().position(|l| l == level).unwrap() as u32;
                        let count = |rows: &[usize]| {
                            let present: Vec<u32> = rows.iter().filter_map(|&r| dataset.code(j, r)).collect();
                            (present.iter().filter(|&&c| c == code).count() as u64, present.len() as u64)
                        };
                        let ((kg, ng), (kb, nb)) = (count(node.group.rows()), count(baseline.rows()));
                        let fold = (kg as f64 / ng as f64) / ((kg + kb) as f64 / (ng + nb) as f64);
                        let p = if kg as f64 / ng as f64 > kb as f64 / nb as f64 {
                            hypergeometric_tail(ng + nb, kg + kb, ng, kg).unwrap()
                        } else {
                            1.0 - if kg == 0 { 0.0 } else { hypergeometric_tail(ng + nb, kg + kb, ng, kg).unwrap() }
                                + hypergeometric_pmf(ng + nb, kg + kb, ng, kg).unwrap()
                        };
                        close(s.statistic, fold, 1e-9) && close(s.p_value, p.clamp(0.0, 1.0), 1e-9)
                    }
                };
                if good {
                    stats_ok += 1;
                }
            }
        }
        let lower = label.to_lowercase();
        if e.sentences.iter().all(|s| !s.to_lowercase().contains(&lower)) {
            clean += 1;
        }
    }
    verdict(
        paths_ok == 50 && stats_ok == stats_checked && clean == 50 && stats_checked > 0,
        format!(
            "{what}: {paths_ok}/50 paths match, {stats_ok}/{stats_checked} cited statistics recomputed within 1e-9, {clean}/50 explanations free of `{label}`"
        ),
    )
}

// ---------------------------------------------------------------------------
// 10: classifier

fn criterion_10() -> Outcome {
    let params = TwoBlobs::params();
    let (mut correct, mut total) = (0usize, 0usize);
    let mut worst = (1.0f64, 0u64);
    let mut per_seed_ok = 0;
    let (mut blind_checked, mut blind_ok) = (0, 0);
    for seed in 0..100u64 {
        let fx = TwoBlobs { seed, ..Default::default() };
        let d = fx.dataset().unwrap();
        let mut rows: Vec<usize> = (0..d.rows()).collect();
        rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let test = rows.split_off(d.rows() * 4 / 5);
        let (model, preds) = fit_predict(&d, &rows, &test, &params, DEFAULT_K_VOTES).unwrap();
        let truth: BTreeMap<usize, String> = test.iter().map(|&r| (r, d.label_of(r).unwrap().to_string())).collect();
        let acc = evaluate(&preds, &truth).unwrap().accuracy;
        correct += preds.iter().filter(|p| p.label.as_deref() == Some(truth[&p.row_id].as_str())).count();
        total += preds.len();
        if acc >= 0.95 {
            per_seed_ok += 1;
        }
        if acc < worst.0 {
            worst = (acc, seed);
        }
        if seed % 5 == 0 {
            // Same rows with every label removed.
            let csv = fx.to_csv();
            let mut lines = csv.lines();
            let mut text = format!("{}\n", lines.next().unwrap());
            for line in lines {
                text.push_str(&line[..=line.rfind(',').unwrap()]);
                text.push('\n');
            }
            let blind = ingest_reader(text.as_bytes(), &TwoBlobs::schema()).unwrap();
            let tree = run_thd_on(&blind, &Group::all(&blind), &params).unwrap();
            blind_checked += 1;
            if tree.root == model.tree.root && tree.params == model.tree.params {
                blind_ok += 1;
            }
        }
    }
    let pooled = correct as f64 / total as f64;
    verdict(
        pooled >= 0.95 && blind_ok == blind_checked,
        format!(
            "accuracy {pooled:.4} over 100 seeds ({total} held-out rows; {per_seed_ok}/100 seeds individually >= 0.95, lowest {:.2} at seed {}); label-blind tree identical on {blind_ok}/{blind_checked} seeds",
            worst.0, worst.1
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("nerve oracle equivalence", criterion_1),
        ("cover properties", criterion_2),
        ("KS oracle", criterion_3),
        ("hypergeometric oracle", criterion_4),
        ("MDS exactness", criterion_5),
        ("synthetic split recovery", criterion_6),
        ("determinism", criterion_7),
        ("HELOC desk-scale run", criterion_8),
        ("explanation integrity", criterion_9),
        ("classifier sanity", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIPPED", d),
        };
        println!("criterion {:>2} {tag:<7} {name}: {detail} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
