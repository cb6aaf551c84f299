//! One test per acceptance criterion. Each prints a `PASS`/`FAIL` line to
//! stderr, bypassing the test harness capture, and then asserts.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use confgraph::bp::{conditional_survival_at, eval_limit_law, extinction_probability, sample_w};
use confgraph::graph::{
    non_attachment_prob, non_attachment_prob_exact, pair_stubs, DegreeSequence, DEFAULT_TRUNCATION_EPS,
};
use confgraph::spg::grow_spg;
use confgraph::stats::{centering, Conditioning};
use confgraph::{size_biased_offspring, stream, DegreeLaw, LawSpec, Purpose};
use confgraph_cli::{run, ExperimentConfig, Mode, Options, RunManifest, RunOptions};
use serde_json::Value;
use tempfile::TempDir;

fn report(criterion: u32, ok: bool, detail: &str) {
    let line = format!("{} criterion {criterion}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn config(mode: Mode, law: LawSpec, n_values: &[u64], replications: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        mode: Some(mode),
        law,
        n_values: n_values.to_vec(),
        replications,
        seed,
        output: None,
        truncation_eps: DEFAULT_TRUNCATION_EPS,
        conditioning: Conditioning::FiniteOnly,
        oracle_bfs: false,
        options: Options::default(),
    }
}

fn execute(config: &ExperimentConfig, threads: Option<usize>) -> (TempDir, RunManifest) {
    let dir = TempDir::new().unwrap();
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        threads,
    };
    let manifest = run(config, &opts).unwrap();
    (dir, manifest)
}

const PARETO: LawSpec = LawSpec::ParetoCeil { tau: 3.5 };

/// Rows of a CSV file after the header, split on commas.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn survival_curve(path: &Path) -> BTreeMap<i64, f64> {
    rows(path)
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect()
}

fn distance(results: &Value, n1: u64, n2: u64) -> f64 {
    results["shift_distances"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["n1"] == n1 && d["n2"] == n2)
        .unwrap()["distance"]
        .as_f64()
        .unwrap()
}

#[test]
fn criterion_01_centering_constants() {
    let nu = DegreeLaw::pareto_ceil(3.5).unwrap().moments().unwrap().nu;
    let c25 = centering(25_000, nu).unwrap();
    let c75 = centering(75_000, nu).unwrap();
    let c125 = centering(125_000, nu).unwrap();
    let ok = c25.sigma_n == 12
        && c125.sigma_n == 14
        && (c25.a_n + 0.62).abs() <= 0.005
        && (c125.a_n + 0.62).abs() <= 0.005
        && (c75.a_n + 0.99).abs() <= 0.005
        && (nu * nu - 5.0).abs() <= 0.05;
    report(
        1,
        ok,
        &format!(
            "sigma = {}, {}, {}; a = {:.4}, {:.4}, {:.4}; nu^2 = {:.4}",
            c25.sigma_n,
            c75.sigma_n,
            c125.sigma_n,
            c25.a_n,
            c75.a_n,
            c125.a_n,
            nu * nu
        ),
    );
}

#[test]
fn criterion_02_figure_one() {
    let mut c = config(Mode::Fig1, PARETO, &[25_000, 75_000, 125_000], 1000, 1);
    c.options.shift = Some(2);
    let (_dir, m) = execute(&c, None);
    let parallel = distance(&m.results, 25_000, 125_000);
    let low = distance(&m.results, 25_000, 75_000);
    let high = distance(&m.results, 75_000, 125_000);
    let ok = parallel < 0.10 && low > 0.10 && high > 0.10;
    report(
        2,
        ok,
        &format!(
            "shift-2 distances: 25k/125k {parallel:.3} (< 0.10), 25k/75k {low:.3} and 75k/125k {high:.3} (> 0.10)"
        ),
    );
}

#[test]
fn criterion_03_figure_two() {
    let sizes = [5_000, 25_000, 125_000, 625_000];
    let mut c = config(Mode::Fig2, PARETO, &sizes, 1000, 2);
    c.options.shift = Some(2);
    let (_dir, m) = execute(&c, None);
    let distances: Vec<f64> = sizes.windows(2).map(|w| distance(&m.results, w[0], w[1])).collect();
    let ok = distances.len() == 3 && distances.iter().all(|&d| d < 0.10);
    report(
        3,
        ok,
        &format!("consecutive shift-2 distances {distances:.3?} (< 0.10)"),
    );
}

#[test]
fn criterion_04_regular_closed_form() {
    let n = 100_000;
    let c = config(Mode::Hopcount, LawSpec::Regular { r: 3 }, &[n], 2000, 3);
    let (dir, m) = execute(&c, None);
    let sigma = m.summaries[0].sigma_n.unwrap();
    let a = m.summaries[0].a_n.unwrap();
    let curve = survival_curve(&dir.path().join(format!("survival_N{n}.csv")));
    let (first, last) = (*curve.keys().next().unwrap(), *curve.keys().last().unwrap());
    let mut sup: f64 = 0.0;
    for h in first - 5..=last + 5 {
        let empirical = if h < first {
            1.0
        } else if h > last {
            0.0
        } else {
            curve[&h]
        };
        let k = h - sigma;
        let closed = (-3.0 * 2f64.powf(a + k as f64)).exp();
        sup = sup.max((empirical - closed).abs());
    }
    report(
        4,
        sup < 0.06,
        &format!("sup-norm distance to exp(-3 2^(a+k)) is {sup:.4} (< 0.06), a = {a:.4}"),
    );
}

#[test]
fn criterion_05_martingale_and_limit_law() {
    let laws = [
        LawSpec::ParetoCeil { tau: 3.5 },
        LawSpec::ParetoCeil { tau: 5.0 },
        LawSpec::Regular { r: 3 },
        LawSpec::GeometricSizeBiased { p: 0.6 },
        LawSpec::PowerLawExpCutoff {
            gamma: 2.5,
            cutoff: 10.0,
        },
        LawSpec::Empirical {
            probs: vec![0.1, 0.2, 0.3, 0.25, 0.15],
        },
    ];
    let mut worst: f64 = 0.0;
    for (i, spec) in laws.iter().enumerate() {
        let f = DegreeLaw::new(spec.clone()).unwrap();
        let g = size_biased_offspring(&f).unwrap();
        for n in 1..=12 {
            let mut rng = stream(5, (i * 100 + n) as u64, Purpose::Branching);
            let est = sample_w(&f, &g, Some(n), 20_000, &mut rng).unwrap();
            let z = (est.mean() - 1.0).abs() / est.standard_error().max(1e-300);
            if est.standard_error() == 0.0 {
                assert_eq!(est.mean(), 1.0, "{spec:?} n = {n}");
            } else {
                worst = worst.max(z);
            }
        }
    }
    let martingale = worst <= 4.0;

    let f = DegreeLaw::pareto_ceil(3.5).unwrap();
    let g = size_biased_offspring(&f).unwrap();
    let moments = f.moments().unwrap();
    let mut r1 = stream(5, 1000, Purpose::Branching);
    let mut r2 = stream(5, 1001, Purpose::Branching);
    let w1 = sample_w(&f, &g, Some(10), 2000, &mut r1).unwrap().samples;
    let w2 = sample_w(&f, &g, Some(10), 2000, &mut r2).unwrap().samples;
    let pairs: Vec<(f64, f64)> = w1.iter().copied().zip(w2.iter().copied()).collect();
    let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (y, x)).collect();
    let mut monotone = true;
    let mut symmetric = true;
    let mut lattice = true;
    for a in [0.0, -0.25, -0.5, -0.617, -0.99] {
        let curve = eval_limit_law(a, -8..=8, &pairs, &moments).unwrap();
        let mirror = eval_limit_law(a, -8..=8, &swapped, &moments).unwrap();
        monotone &= curve.survival.windows(2).all(|w| w[1] <= w[0]);
        symmetric &= curve.survival == mirror.survival;
        for (k, s) in curve.k.iter().zip(&curve.survival) {
            lattice &= *s == conditional_survival_at(a + *k as f64, &pairs, &moments).unwrap();
        }
    }
    report(
        5,
        martingale && monotone && symmetric && lattice,
        &format!(
            "largest |mean(W_n) - 1| / SE over 6 laws and n <= 12 is {worst:.2} (<= 4); monotone {monotone}, symmetric {symmetric}, lattice {lattice}"
        ),
    );
}

#[test]
fn criterion_06_giant_component() {
    let sizes = [10_000, 30_000, 100_000];
    let c = config(Mode::Components, PARETO, &sizes, 50, 6);
    let (dir, m) = execute(&c, None);
    let f = DegreeLaw::pareto_ceil(3.5).unwrap();
    let q = extinction_probability(&f, &size_biased_offspring(&f).unwrap())
        .unwrap()
        .q;
    let largest: Vec<f64> = rows(&dir.path().join("components_N100000.csv"))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    let worst = largest.iter().map(|x| (x - q).abs()).fold(0.0, f64::max);
    let ratios: Vec<f64> = m.results["sizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["second_largest_over_log_n"].as_f64().unwrap())
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    let spread = hi / lo;
    let ok = largest.len() == 50 && worst <= 0.03 && lo > 0.0 && spread < 4.0;
    report(
        6,
        ok,
        &format!("max |largest fraction - q| over 50 seeds {worst:.4} (q = {q:.4}); second-largest / ln N ratios {ratios:.3?}, max/min {spread:.2} (< 4)"),
    );
}

fn matchings(l: usize) -> Vec<Vec<usize>> {
    fn rec(partner: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(i) = partner.iter().position(|&p| p == usize::MAX) else {
            out.push(partner.clone());
            return;
        };
        for j in i + 1..partner.len() {
            if partner[j] == usize::MAX {
                partner[i] = j;
                partner[j] = i;
                rec(partner, out);
                partner[i] = usize::MAX;
                partner[j] = usize::MAX;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![usize::MAX; l], &mut out);
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn fraction(num: u64, den: u64) -> String {
    let d = gcd(num, den).max(1);
    if den / d == 1 {
        format!("{}", num / d)
    } else {
        format!("{}/{}", num / d, den / d)
    }
}

#[test]
fn criterion_07_pairing_oracle() {
    let mut exact = true;
    let mut cases = 0;
    for l in (2..=10usize).step_by(2) {
        let all = matchings(l);
        for n in 0..=l {
            for m in 0..=l - n {
                let good = all
                    .iter()
                    .filter(|p| (0..n).all(|a| !(n..n + m).contains(&p[a])))
                    .count() as u64;
                let got = non_attachment_prob_exact(n as u64, m as u64, l as u64).unwrap();
                exact &= got.to_string() == fraction(good, all.len() as u64);
                cases += 1;
            }
        }
    }

    let runs = 100_000;
    let mut monte_carlo = true;
    for (n, m, l) in [(3u64, 4u64, 20u64), (5, 5, 50)] {
        let seq = DegreeSequence::new(vec![1; l as usize]).unwrap();
        let mut rng = stream(7, l, Purpose::Pairing);
        let good = (0..runs)
            .filter(|_| {
                let g = pair_stubs(&seq, &mut rng).unwrap();
                (0..n as usize).all(|a| !(n as usize..(n + m) as usize).contains(&g.partner(a)))
            })
            .count();
        let p = non_attachment_prob(n, m, l).unwrap();
        let sigma = (p * (1.0 - p) / runs as f64).sqrt();
        monte_carlo &= (good as f64 / runs as f64 - p).abs() <= 3.0 * sigma;
    }

    let mut sandwich = true;
    for l in (2..=100u64).step_by(2) {
        for n in 0..=10u64 {
            for m in 0..=10u64 {
                if l <= 2 * n || n + m > l {
                    continue;
                }
                let lower: f64 = (0..n).map(|i| 1.0 - m as f64 / (l - 2 * i - 1) as f64).product();
                let upper = lower + (n * n * m) as f64 / ((l - 2 * n) as f64).powi(2);
                let p = non_attachment_prob(n, m, l).unwrap();
                sandwich &= lower <= p + 1e-12 && p <= upper + 1e-12;
            }
        }
    }
    report(
        7,
        exact && monte_carlo && sandwich,
        &format!(
            "exact enumeration over {cases} cases {exact}; Monte Carlo within 3 sigma {monte_carlo}; bounds {sandwich}"
        ),
    );
}

/// Hopcount law from a `hopcounts_N*.csv`, with `inf` as the largest value.
fn hopcount_law(path: &Path) -> BTreeMap<u64, usize> {
    let mut law = BTreeMap::new();
    for r in rows(path) {
        let h = if r[1] == "inf" { u64::MAX } else { r[1].parse().unwrap() };
        *law.entry(h).or_insert(0) += 1;
    }
    law
}

fn ks(a: &BTreeMap<u64, usize>, b: &BTreeMap<u64, usize>) -> f64 {
    let (na, nb) = (a.values().sum::<usize>() as f64, b.values().sum::<usize>() as f64);
    let keys: Vec<u64> = a
        .keys()
        .chain(b.keys())
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let (mut ca, mut cb, mut sup) = (0.0, 0.0, 0.0f64);
    for k in keys {
        ca += a.get(&k).copied().unwrap_or(0) as f64 / na;
        cb += b.get(&k).copied().unwrap_or(0) as f64 / nb;
        sup = sup.max((ca - cb).abs());
    }
    sup
}

fn first_two_generations(seq: &DegreeSequence, partner: &[usize], root: usize) -> (u64, u64) {
    let pairs: Vec<(u64, u64)> = partner
        .iter()
        .enumerate()
        .filter(|(a, b)| a < *b)
        .map(|(a, &b)| (a as u64, b as u64))
        .collect();
    let g = confgraph::graph::StubGraph::from_pairs(seq.clone(), &pairs).unwrap();
    let z1 = g.stubs_of(root).len() as u64;
    let mut neighbours: Vec<usize> = g.neighbors(root).filter(|&v| v != root).collect();
    neighbours.sort_unstable();
    neighbours.dedup();
    let z2 = neighbours
        .iter()
        .map(|&v| g.stubs_of(v).filter(|&s| g.owner(g.partner(s)) != root).count() as u64)
        .sum();
    (z1, z2)
}

#[test]
fn criterion_08_coupling_validity() {
    let mut c = config(Mode::Hopcount, PARETO, &[1000], 10_000, 8);
    let (bilateral_dir, _) = execute(&c, None);
    c.oracle_bfs = true;
    let (bfs_dir, _) = execute(&c, None);
    let file = "hopcounts_N1000.csv";
    let distance = ks(
        &hopcount_law(&bilateral_dir.path().join(file)),
        &hopcount_law(&bfs_dir.path().join(file)),
    );

    let runs = 200_000;
    let mut spg_ok = true;
    for (degrees, root) in [
        (vec![2u64, 1, 2, 1], 0usize),
        (vec![3, 1, 2, 2], 0),
        (vec![2, 2, 2, 2, 1, 1], 0),
        (vec![2, 2, 2, 2, 1, 1], 4),
    ] {
        let seq = DegreeSequence::new(degrees).unwrap();
        let all = matchings(seq.total_stubs() as usize);
        let mut exact: HashMap<(u64, u64), f64> = HashMap::new();
        for p in &all {
            *exact.entry(first_two_generations(&seq, p, root)).or_default() += 1.0 / all.len() as f64;
        }
        let mut rng = stream(8, root as u64, Purpose::Growth);
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        for _ in 0..runs {
            let t = grow_spg(&seq, root, 2, &mut rng);
            *seen.entry((t.z[0], t.z.get(1).copied().unwrap_or(0))).or_default() += 1;
        }
        spg_ok &= seen.keys().all(|o| exact.contains_key(o));
        for (outcome, p) in &exact {
            let freq = seen.get(outcome).copied().unwrap_or(0) as f64 / runs as f64;
            spg_ok &= (freq - p).abs() <= 4.0 * (p * (1.0 - p) / runs as f64).sqrt();
        }
    }

    let mut d = config(Mode::CouplingDiagnostics, PARETO, &[1000, 10_000, 100_000], 100, 8);
    d.options.roots_per_graph = 200;
    let (_dir, m) = execute(&d, None);
    let rates: Vec<f64> = m.results["sizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["coupling_error_rates"][1]["rate"].as_f64().unwrap())
        .collect();
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    report(
        8,
        distance < 0.05 && spg_ok && decreasing,
        &format!("KS bilateral vs BFS {distance:.4} (< 0.05); SPG law matches enumeration {spg_ok}; miscoupling rate at m = 2 for N = 1e3, 1e4, 1e5: {rates:?}"),
    );
}

#[test]
fn criterion_09_connectivity() {
    let c = config(Mode::Hopcount, PARETO, &[100_000], 2000, 9);
    let (_dir, m) = execute(&c, None);
    let dropped = m.summaries[0].dropped_fraction.unwrap();
    let q = m.summaries[0].q.unwrap();
    let target = 1.0 - q * q;
    report(
        9,
        (dropped - target).abs() <= 0.05,
        &format!("dropped fraction {dropped:.4} vs 1 - q^2 = {target:.4}"),
    );
}

/// Every output file, with the manifest's wall time removed.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = fs::read(&path).unwrap();
        if name == confgraph_cli::MANIFEST_FILE {
            let mut v: Value = serde_json::from_slice(&bytes).unwrap();
            v.as_object_mut().unwrap().remove("wall_time_seconds");
            v["config"].as_object_mut().unwrap().remove("output");
            bytes = serde_json::to_vec(&v).unwrap();
        }
        files.insert(name, bytes);
    }
    files
}

#[test]
fn criterion_10_determinism() {
    let mut configs = vec![
        config(Mode::Hopcount, PARETO, &[2000, 5000], 200, 10),
        config(Mode::Fig2, PARETO, &[1000, 5000], 200, 10),
        config(Mode::Components, PARETO, &[3000], 20, 10),
        config(Mode::BpW, PARETO, &[], 300, 10),
        config(Mode::LimitLaw, PARETO, &[25_000], 300, 10),
        config(Mode::CouplingDiagnostics, PARETO, &[2000], 20, 10),
    ];
    let mut bfs = config(Mode::Hopcount, LawSpec::Regular { r: 3 }, &[1000], 100, 10);
    bfs.oracle_bfs = true;
    configs.push(bfs);
    configs[3].options.generations = Some(8);
    configs[4].options.generations = Some(8);
    configs[5].options.roots_per_graph = 10;

    let mut identical = true;
    let mut compared = 0;
    for c in &configs {
        let reference = snapshot(execute(c, Some(1)).0.path());
        for threads in [4, 16] {
            let (dir, _) = execute(c, Some(threads));
            identical &= snapshot(dir.path()) == reference;
        }
        compared += reference.len();
    }
    report(
        10,
        identical,
        &format!(
            "{compared} output files across {} configs identical at 1, 4 and 16 threads: {identical}",
            configs.len()
        ),
    );
}
