use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use confgraph::bp::{
    delayed_w_law, expected_r, extinction_probability, sample_w, unconditional_survival, w_law_fixed_point, WEstimate,
    WGrid,
};
use confgraph::graph::{
    check_well_behaved_with_cap, components, empirical_offspring, hopcount, pair_stubs, sample_degree_sequence,
    truncate_graph, ComponentSummary, DegreeSequence,
};
use confgraph::spg::{
    bilateral_hopcount_capped, default_draw_cap, grow_coupled, CoupledTrace, SearchOutcome, TerminatedReason,
};
use confgraph::stats::{
    centering, empirical_survival, geometric_sizes, shift_distance, theoretical_survival_curve, tightness_report,
    CenteringInfo, Conditioning, SurvivalCurve,
};
use confgraph::{size_biased_offspring, stream, DegreeLaw, MomentSummary, OffspringLaw, Purpose};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Mode};
use crate::error::CliError;

/// Settings that do not change results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the output directory of the config.
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Per-size summary recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n: u64,
    pub mu: f64,
    pub nu: Option<f64>,
    pub sigma_n: Option<i64>,
    pub a_n: Option<f64>,
    pub q: Option<f64>,
    pub dropped_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub summaries: Vec<SizeSummary>,
    pub results: Value,
    /// Data files written, relative to the output directory.
    pub files: Vec<String>,
    pub cap_breaches: usize,
    pub wall_time_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Runs the experiment described by `config` and writes its outputs and
/// manifest.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let law = config.validate()?;
    let mode = config.mode()?;
    let out = opts
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("out-{mode}")));
    fs::create_dir_all(&out)?;
    let mut config = config.clone();
    config.output = Some(out.clone());

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;

    let mut ctx = Context::new(&config, law, out.clone())?;
    let results = pool.install(|| match mode {
        Mode::Hopcount => run_hopcount(&mut ctx, &config.n_values, Pairs::None),
        Mode::Fig1 => run_hopcount(&mut ctx, &config.n_values, Pairs::All),
        Mode::Fig2 => {
            let sizes = match config.options.subsequence {
                Some(count) => geometric_sizes(config.n_values[0], ctx.nu()?.powi(2), count),
                None => config.n_values.clone(),
            };
            run_hopcount(&mut ctx, &sizes, Pairs::Consecutive)
        }
        Mode::Components => run_components(&mut ctx),
        Mode::BpW => run_bp_w(&mut ctx),
        Mode::LimitLaw => run_limit_law(&mut ctx),
        Mode::CouplingDiagnostics => run_diagnostics(&mut ctx),
    })?;

    let (summaries, files, cap_breaches) = (ctx.summaries, ctx.files, ctx.cap_breaches);
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode,
        config,
        summaries,
        results,
        files,
        cap_breaches,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let file = File::create(out.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest).map_err(io::Error::from)?;
    Ok(manifest)
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    law: DegreeLaw,
    offspring: OffspringLaw,
    moments: Option<MomentSummary>,
    q: f64,
    out: PathBuf,
    files: Vec<String>,
    summaries: Vec<SizeSummary>,
    cap_breaches: usize,
}

impl<'a> Context<'a> {
    fn new(config: &'a ExperimentConfig, law: DegreeLaw, out: PathBuf) -> Result<Self, CliError> {
        let offspring = size_biased_offspring(&law)?;
        let moments = law.moments().ok();
        let q = extinction_probability(&law, &offspring)?.q;
        Ok(Context {
            config,
            law,
            offspring,
            moments,
            q,
            out,
            files: Vec::new(),
            summaries: Vec::new(),
            cap_breaches: 0,
        })
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn moments(&self) -> Result<MomentSummary, CliError> {
        self.moments
            .ok_or_else(|| CliError::Config("this mode needs a degree law with finite nu".into()))
    }

    fn nu(&self) -> Result<f64, CliError> {
        Ok(self.moments()?.nu)
    }

    fn supercritical(&self) -> bool {
        self.moments.is_none_or(|m| m.supercritical)
    }

    fn centering(&self, n: u64) -> Option<CenteringInfo> {
        self.moments
            .filter(|m| m.supercritical)
            .and_then(|m| centering(n, m.nu).ok())
    }

    fn summary(&self, n: u64, dropped_fraction: Option<f64>) -> SizeSummary {
        let c = self.centering(n);
        SizeSummary {
            n,
            mu: self.law.mean(),
            nu: self.moments.map(|m| m.nu),
            sigma_n: c.map(|c| c.sigma_n),
            a_n: c.map(|c| c.a_n),
            q: self.supercritical().then_some(self.q),
            dropped_fraction,
        }
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(self.out.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_curve(&mut self, name: &str, curve: &SurvivalCurve) -> Result<(), CliError> {
        self.write(name, |w| curve.write_csv(w))
    }
}

/// Replication index of replication `r` at the `i`-th size.
fn rep_id(size_index: usize, r: usize) -> u64 {
    ((size_index as u64) << 32) | r as u64
}

fn distinct_pair<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    let u = rng.random_range(0..n);
    let mut v = rng.random_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    (u, v)
}

fn degrees(law: &DegreeLaw, n: u64, seed: u64, rep: u64) -> Result<DegreeSequence, CliError> {
    Ok(sample_degree_sequence(
        law,
        n as usize,
        &mut stream(seed, rep, Purpose::Degrees),
    )?)
}

fn one_hopcount(law: &DegreeLaw, n: u64, seed: u64, rep: u64, oracle_bfs: bool) -> Result<SearchOutcome, CliError> {
    let seq = degrees(law, n, seed, rep)?;
    let (u, v) = distinct_pair(seq.n(), &mut stream(seed, rep, Purpose::Auxiliary));
    if oracle_bfs {
        let g = pair_stubs(&seq, &mut stream(seed, rep, Purpose::Pairing))?;
        return Ok(match hopcount(&g, u, v) {
            Some(h) => SearchOutcome::Finite(h),
            None => SearchOutcome::Infinite,
        });
    }
    let cap = default_draw_cap(seq.total_stubs());
    Ok(bilateral_hopcount_capped(
        &seq,
        u,
        v,
        cap,
        &mut stream(seed, rep, Purpose::Growth),
    ))
}

fn outcome_label(o: &SearchOutcome) -> String {
    match o {
        SearchOutcome::Finite(h) => h.to_string(),
        SearchOutcome::Infinite => "inf".into(),
        SearchOutcome::Capped => "capped".into(),
    }
}

/// Which pairs of sizes have their curves compared.
#[derive(Clone, Copy)]
enum Pairs {
    None,
    All,
    Consecutive,
}

struct SizeCurve {
    n: u64,
    sigma_n: Option<i64>,
    curve: SurvivalCurve,
}

fn run_hopcount(ctx: &mut Context, sizes: &[u64], pairs: Pairs) -> Result<Value, CliError> {
    let config = ctx.config;
    let mut per_size = Vec::new();
    let mut curves: Vec<SizeCurve> = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let law = &ctx.law;
        let seed = ctx.seed();
        let outcomes = (0..config.replications)
            .into_par_iter()
            .map(|r| one_hopcount(law, n, seed, rep_id(i, r), config.oracle_bfs))
            .collect::<Result<Vec<_>, _>>()?;
        ctx.cap_breaches += outcomes.iter().filter(|o| **o == SearchOutcome::Capped).count();
        ctx.write(&format!("hopcounts_N{n}.csv"), |w| {
            writeln!(w, "rep,hopcount")?;
            for (r, o) in outcomes.iter().enumerate() {
                writeln!(w, "{r},{}", outcome_label(o))?;
            }
            Ok(())
        })?;
        let hops: Vec<Option<u64>> = outcomes
            .iter()
            .filter_map(|o| match o {
                SearchOutcome::Finite(h) => Some(Some(*h)),
                SearchOutcome::Infinite => Some(None),
                SearchOutcome::Capped => None,
            })
            .collect();
        if hops.is_empty() {
            return Err(CliError::CapBreach(ctx.cap_breaches));
        }
        let curve = empirical_survival(&hops, config.conditioning);
        let center = ctx.centering(n);
        let dropped = hops.iter().filter(|h| h.is_none()).count() as f64 / hops.len() as f64;
        let mut entry = json!({
            "n": n,
            "samples": hops.len(),
            "dropped_fraction": dropped,
            "connectivity_target": 1.0 - ctx.q * ctx.q,
        });
        match curve {
            Ok(curve) => {
                ctx.write_curve(&format!("survival_N{n}.csv"), &curve)?;
                if let Some(c) = center {
                    if let Ok(t) = tightness_report(&hops, &c, &config.options.tightness) {
                        entry["tightness"] = json!(t.fractions);
                    }
                }
                curves.push(SizeCurve {
                    n,
                    sigma_n: center.map(|c| c.sigma_n),
                    curve,
                });
            }
            Err(e) => entry["curve_error"] = json!(e.to_string()),
        }
        per_size.push(entry);
        let summary = ctx.summary(n, Some(dropped));
        ctx.summaries.push(summary);
    }

    let index_pairs: Vec<(usize, usize)> = match pairs {
        Pairs::None => Vec::new(),
        Pairs::All => (0..curves.len())
            .flat_map(|i| (i + 1..curves.len()).map(move |j| (i, j)))
            .collect(),
        Pairs::Consecutive => (1..curves.len()).map(|j| (j - 1, j)).collect(),
    };
    let mut comparisons = Vec::new();
    for (i, j) in index_pairs {
        let (a, b) = (&curves[i], &curves[j]);
        let shift = match (config.options.shift, a.sigma_n, b.sigma_n) {
            (Some(s), _, _) => s,
            (None, Some(sa), Some(sb)) => sb - sa,
            _ => 0,
        };
        let distance = shift_distance(&a.curve, &b.curve, shift)?;
        comparisons.push(json!({ "n1": a.n, "n2": b.n, "shift": shift, "distance": distance }));
    }
    Ok(json!({ "sizes": per_size, "shift_distances": comparisons }))
}

#[derive(Serialize)]
struct ComponentRow {
    largest_fraction: f64,
    second_largest: usize,
    truncated_largest_fraction: f64,
    truncated_second_largest: usize,
    removed_edges: u64,
}

fn run_components(ctx: &mut Context) -> Result<Value, CliError> {
    let config = ctx.config;
    let supercritical = ctx.supercritical();
    let mut per_size = Vec::new();
    for (i, &n) in config.n_values.iter().enumerate() {
        let law = &ctx.law;
        let seed = ctx.seed();
        let results = (0..config.replications)
            .into_par_iter()
            .map(|r| -> Result<(ComponentRow, Option<ComponentSummary>), CliError> {
                let rep = rep_id(i, r);
                let seq = degrees(law, n, seed, rep)?;
                let g = pair_stubs(&seq, &mut stream(seed, rep, Purpose::Pairing))?;
                let full = components(&g);
                let (gt, removed) =
                    truncate_graph(&g, config.truncation_eps, &mut stream(seed, rep, Purpose::Truncation))?;
                let truncated = components(&gt);
                let row = ComponentRow {
                    largest_fraction: full.largest_fraction,
                    second_largest: full.second_largest,
                    truncated_largest_fraction: truncated.largest_fraction,
                    truncated_second_largest: truncated.second_largest,
                    removed_edges: removed,
                };
                Ok((row, (r == 0).then_some(full)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ctx.write(&format!("components_N{n}.csv"), |w| {
            writeln!(
                w,
                "rep,largest_fraction,second_largest,truncated_largest_fraction,truncated_second_largest,removed_edges"
            )?;
            for (r, (row, _)) in results.iter().enumerate() {
                writeln!(
                    w,
                    "{r},{},{},{},{},{}",
                    row.largest_fraction,
                    row.second_largest,
                    row.truncated_largest_fraction,
                    row.truncated_second_largest,
                    row.removed_edges
                )?;
            }
            Ok(())
        })?;
        if let Some(first) = results.first().and_then(|(_, s)| s.as_ref()) {
            ctx.write(&format!("component_sizes_N{n}.csv"), |w| {
                writeln!(w, "rank,size")?;
                for (rank, size) in first.sizes.iter().enumerate() {
                    writeln!(w, "{},{size}", rank + 1)?;
                }
                Ok(())
            })?;
        }
        let reps = results.len() as f64;
        let mean = |f: &dyn Fn(&ComponentRow) -> f64| results.iter().map(|(row, _)| f(row)).sum::<f64>() / reps;
        let mean_largest = mean(&|r| r.largest_fraction);
        let mean_second = mean(&|r| r.second_largest as f64);
        let mut entry = json!({
            "n": n,
            "mean_largest_fraction": mean_largest,
            "mean_second_largest": mean_second,
            "second_largest_over_log_n": mean_second / (n as f64).ln(),
            "mean_truncated_largest_fraction": mean(&|r| r.truncated_largest_fraction),
            "mean_removed_edges": mean(&|r| r.removed_edges as f64),
            "supercritical": supercritical,
        });
        if supercritical {
            entry["q"] = json!(ctx.q);
            entry["largest_minus_q"] = json!(mean_largest - ctx.q);
        }
        per_size.push(entry);
        let summary = ctx.summary(n, None);
        ctx.summaries.push(summary);
    }
    Ok(json!({ "sizes": per_size }))
}

/// `replications` samples of `W_n`, one stream per sample.
fn w_samples(ctx: &Context, stream_offset: u64) -> Result<WEstimate, CliError> {
    let config = ctx.config;
    let (f, g) = (&ctx.law, &ctx.offspring);
    let parts = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(config.seed, stream_offset + r as u64, Purpose::Branching);
            sample_w(f, g, config.options.generations, 1, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n_gen = parts[0].n_gen;
    let samples: Vec<f64> = parts.iter().map(|p| p.samples[0]).collect();
    let zeros = samples.iter().filter(|&&w| w == 0.0).count();
    Ok(WEstimate {
        atom_frequency: zeros as f64 / samples.len() as f64,
        capped_runs: parts.iter().map(|p| p.capped_runs).sum(),
        samples,
        n_gen,
    })
}

fn run_bp_w(ctx: &mut Context) -> Result<Value, CliError> {
    let est = w_samples(ctx, 0)?;
    ctx.write("w_samples.csv", |w| est.write_csv(w))?;
    let mut results = json!({
        "n_gen": est.n_gen,
        "mean": est.mean(),
        "standard_error": est.standard_error(),
        "atom_frequency": est.atom_frequency,
        "extinction_target": 1.0 - ctx.q,
        "capped_runs": est.capped_runs,
    });
    let o = &ctx.config.options;
    if o.fixed_point {
        let grid = WGrid {
            points_per_unit: o.grid_points_per_unit,
            upper: o.grid_upper,
        };
        let w_prime = w_law_fixed_point(&ctx.offspring, &grid, 1000)?;
        let w = delayed_w_law(&ctx.law, &w_prime)?;
        ctx.write("w_law.csv", |out| w.write_csv(out))?;
        results["fixed_point"] = json!({
            "converged": w_prime.converged,
            "iterations": w_prime.iterations,
            "total_mass": w.total_mass(),
            "mean": w.mean(),
            "overflow_mass": w.overflow_mass,
        });
    }
    Ok(results)
}

const EXPECTED_R_WINDOW: i64 = 60;

fn run_limit_law(ctx: &mut Context) -> Result<Value, CliError> {
    let moments = ctx.moments()?;
    let first = w_samples(ctx, 0)?;
    let second = w_samples(ctx, 1 << 40)?;
    let pairs: Vec<(f64, f64)> = first
        .samples
        .iter()
        .copied()
        .zip(second.samples.iter().copied())
        .collect();
    let config = ctx.config;
    let o = &config.options;
    let mut per_size = Vec::new();
    for &n in &config.n_values {
        let center = centering(n, moments.nu)?;
        let curve = match config.conditioning {
            Conditioning::FiniteOnly => theoretical_survival_curve(&center, &pairs, &moments, o.k_min..=o.k_max)?,
            Conditioning::Unconditional => {
                let survival = (o.k_min..=o.k_max)
                    .map(|k| unconditional_survival(center.a_n, k, &pairs, &moments))
                    .collect::<Result<Vec<_>, _>>()?;
                SurvivalCurve {
                    k: (o.k_min..=o.k_max).collect(),
                    survival,
                    sample_count: pairs.len(),
                    conditioning: Conditioning::Unconditional,
                    dropped_fraction: 0.0,
                    below: None,
                    above: None,
                }
            }
        };
        ctx.write_curve(&format!("limit_law_N{n}.csv"), &curve)?;
        let mean = expected_r(center.a_n, &pairs, &moments, EXPECTED_R_WINDOW)
            .map(|e| json!(e))
            .unwrap_or_else(|e| json!({ "error": e.to_string() }));
        per_size.push(json!({ "n": n, "a_n": center.a_n, "expected_r": mean }));
        let summary = ctx.summary(n, None);
        ctx.summaries.push(summary);
    }
    Ok(json!({
        "pairs": pairs.len(),
        "surviving_pairs": pairs.iter().filter(|(a, b)| a * b > 0.0).count(),
        "sizes": per_size,
    }))
}

struct DiagnosticRow {
    ln_deviation: f64,
    p_n: f64,
    nu_gap: f64,
    cond1_deviation: f64,
    cond1: bool,
    cond2: bool,
    cap: bool,
    traces: Vec<(usize, CoupledTrace)>,
}

fn run_diagnostics(ctx: &mut Context) -> Result<Value, CliError> {
    let config = ctx.config;
    let o = &config.options;
    let nu = ctx.moments.map(|m| m.nu);
    let mu = ctx.law.mean();
    let mut per_size = Vec::new();
    for (i, &n) in config.n_values.iter().enumerate() {
        let law = &ctx.law;
        let seed = ctx.seed();
        let rows = (0..config.replications)
            .into_par_iter()
            .map(|r| -> Result<DiagnosticRow, CliError> {
                let rep = rep_id(i, r);
                let seq = degrees(law, n, seed, rep)?;
                let emp = empirical_offspring(&seq, law)?;
                let report = check_well_behaved_with_cap(&seq, law, o.well_behaved_eps, config.truncation_eps)?;
                let mut pick = stream(seed, rep, Purpose::Auxiliary);
                let mut grow = stream(seed, rep, Purpose::Growth);
                let traces = (0..o.roots_per_graph)
                    .map(|_| {
                        let root = pick.random_range(0..seq.n());
                        (root, grow_coupled(&seq, root, o.coupling_generations, &mut grow))
                    })
                    .collect();
                Ok(DiagnosticRow {
                    ln_deviation: seq.total_stubs() as f64 / (mu * n as f64) - 1.0,
                    p_n: emp.p_n,
                    nu_gap: nu.map_or(f64::INFINITY, |nu| (emp.nu_n - nu).abs()),
                    cond1_deviation: report.cond1_deviation,
                    cond1: report.cond1_pass,
                    cond2: report.cond2_pass,
                    cap: report.cap_pass,
                    traces,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        ctx.write(&format!("diagnostics_N{n}.csv"), |w| {
            writeln!(w, "rep,ln_deviation,p_n,nu_gap,cond1_deviation,cond1,cond2,cap")?;
            for (r, d) in rows.iter().enumerate() {
                writeln!(
                    w,
                    "{r},{},{},{},{},{},{},{}",
                    d.ln_deviation, d.p_n, d.nu_gap, d.cond1_deviation, d.cond1, d.cond2, d.cap
                )?;
            }
            Ok(())
        })?;
        ctx.write(&format!("coupling_N{n}.csv"), |w| {
            writeln!(w, "rep,root,miscoupling_generation,label2_draws,label3_draws")?;
            for (r, d) in rows.iter().enumerate() {
                for (root, t) in &d.traces {
                    let gen = t.miscoupling_generation.map_or("none".to_string(), |g| g.to_string());
                    writeln!(w, "{r},{root},{gen},{},{}", t.label2_draws, t.label3_draws)?;
                }
            }
            Ok(())
        })?;
        let traces: Vec<CoupledTrace> = rows
            .iter()
            .flat_map(|d| d.traces.iter().map(|(_, t)| t.clone()))
            .collect();
        ctx.cap_breaches += traces
            .iter()
            .filter(|t| t.terminated_reason == TerminatedReason::Cap)
            .count();
        let reps = rows.len() as f64;
        let frac = |f: &dyn Fn(&DiagnosticRow) -> bool| rows.iter().filter(|d| f(d)).count() as f64 / reps;
        let rates: Vec<Value> = (1..=o.coupling_generations)
            .map(|m| json!({ "m": m, "rate": confgraph::spg::coupling_error_rate(&traces, m) }))
            .collect();
        per_size.push(json!({
            "n": n,
            "mean_abs_ln_deviation": rows.iter().map(|d| d.ln_deviation.abs()).sum::<f64>() / reps,
            "mean_p_n": rows.iter().map(|d| d.p_n).sum::<f64>() / reps,
            "fraction_p_n_below_0_05": frac(&|d| d.p_n < 0.05),
            "mean_nu_gap": rows.iter().map(|d| d.nu_gap).sum::<f64>() / reps,
            "fraction_cond1": frac(&|d| d.cond1),
            "fraction_cond2": frac(&|d| d.cond2),
            "fraction_cap": frac(&|d| d.cap),
            "fraction_well_behaved": frac(&|d| d.cond1 && d.cond2 && d.cap),
            "coupling_error_rates": rates,
        }));
        let summary = ctx.summary(n, None);
        ctx.summaries.push(summary);
    }
    Ok(json!({ "sizes": per_size }))
}

/// Reads a manifest written by [`run`].
pub fn read_manifest(dir: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(io::Error::from(e)))
}
