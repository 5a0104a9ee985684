//! Monte Carlo experiments: paired trials under both hypotheses, ROC/AUC,
//! histograms and their CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::clique::{detect, AlgoParams};
use crate::combinatorics::binom_u128;
use crate::error::{Error, Result};
use crate::exact::{
    decide, enumerate_max_score, exact_evaluation_count, threshold_mse, threshold_overlap, Decision,
    ExactBudget, DEFAULT_BUDGET,
};
use crate::model::{generate_pair, mapping_size_m, sample_subgraphs, Hypothesis};
use crate::rng;
use crate::similarity::SimilarityKernel;

fn default_budget() -> u64 {
    DEFAULT_BUDGET as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorConfig {
    Exact {
        #[serde(default = "default_budget")]
        budget: u64,
    },
    Clique {
        k1: usize,
        k2: usize,
        n1: usize,
        n2: usize,
        /// Lower `n1` (and `n2` with it) to the number of distinct
        /// `k1`-subsets when the sample is too small to supply `n1` of them.
        #[serde(default)]
        cap_to_available: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub s: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub trials_per_hypothesis: usize,
    pub detector: DetectorConfig,
    pub kernel: SimilarityKernel,
    /// Overrides `floor((1 - epsilon) s^2 / n)`.
    #[serde(default)]
    pub m: Option<usize>,
    /// Defaults to the closed-form threshold of the kernel when `m >= 2`.
    #[serde(default)]
    pub tau: Option<f64>,
    pub root_seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

/// What a validated config actually runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRun {
    pub m: usize,
    pub tau: f64,
    pub detector: ResolvedDetector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedDetector {
    Exact(ExactBudget),
    Clique { k1: usize, k2: usize, n1: usize, n2: usize },
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks every parameter and fills in `m`, `tau` and clamped clique
    /// counts.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.n < 2 {
            return Err(Error::invalid(format!("need n >= 2, got {}", self.n)));
        }
        if self.s > self.n {
            return Err(Error::invalid(format!("need s <= n, got s = {}, n = {}", self.s, self.n)));
        }
        if self.s < 2 {
            return Err(Error::SampleTooSmall(format!("s = {} has no edges", self.s)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid(format!("rho must lie in (0,1), got {}", self.rho)));
        }
        if self.trials_per_hypothesis == 0 {
            return Err(Error::invalid("trials_per_hypothesis must be positive"));
        }
        self.kernel.validate()?;
        let m = match self.m {
            Some(m) => {
                if m == 0 || m > self.s {
                    return Err(Error::invalid(format!("m = {m} must lie in [1, s = {}]", self.s)));
                }
                m
            }
            None => mapping_size_m(self.n, self.s, self.epsilon)?,
        };
        let tau = match self.tau {
            Some(t) if t.is_nan() => return Err(Error::invalid("tau is NaN")),
            Some(t) => t,
            None => match self.kernel {
                SimilarityKernel::Overlap if m >= 2 => threshold_overlap(m, self.rho)?,
                SimilarityKernel::NegHalfSqDiff if m >= 2 => threshold_mse(m, self.rho)?,
                _ => {
                    return Err(Error::invalid(format!(
                        "no default threshold for kernel {} with m = {m}; set tau",
                        self.kernel.name()
                    )))
                }
            },
        };
        let detector = match self.detector {
            DetectorConfig::Exact { budget } => {
                let budget = ExactBudget::new(budget as u128)?;
                if m < 2 {
                    return Err(Error::SampleTooSmall(format!("exact search needs m >= 2, got {m}")));
                }
                let required = exact_evaluation_count(self.s, self.s, m);
                if required > budget.max_evaluations {
                    return Err(Error::Infeasible {
                        what: format!("exact search with s = {}, m = {m}", self.s),
                        required,
                        budget: budget.max_evaluations,
                    });
                }
                ResolvedDetector::Exact(budget)
            }
            DetectorConfig::Clique {
                k1,
                k2,
                mut n1,
                mut n2,
                cap_to_available,
            } => {
                let available = binom_u128(self.s, k1.min(self.s));
                if cap_to_available && available < n1 as u128 {
                    n1 = available as usize;
                    n2 = n2.min(n1);
                }
                let params = AlgoParams {
                    k1,
                    k2,
                    n1,
                    n2,
                    m,
                    kernel: self.kernel,
                    tau,
                    seed: 0,
                };
                params.validate(self.s, self.s)?;
                if available < n1 as u128 {
                    return Err(Error::NotEnoughCliques {
                        requested: n1,
                        available,
                    });
                }
                ResolvedDetector::Clique { k1, k2, n1, n2 }
            }
        };
        Ok(ResolvedRun { m, tau, detector })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub hypothesis: Hypothesis,
    pub statistic: f64,
    pub decision: Decision,
    pub wall_time_s: f64,
}

impl TrialRecord {
    /// Equality on everything except the wall time.
    pub fn same_outcome(&self, other: &TrialRecord) -> bool {
        self.trial == other.trial
            && self.hypothesis == other.hypothesis
            && self.statistic.to_bits() == other.statistic.to_bits()
            && self.decision == other.decision
    }
}

/// Seed of one trial, independent across hypotheses and trial indices.
pub fn trial_seed(root_seed: u64, hypothesis: Hypothesis, trial: usize) -> u64 {
    rng::derive(root_seed, hypothesis.as_str(), trial as u64)
}

/// Runs a single trial: fresh pair, fresh samples, configured detector.
pub fn run_trial(
    config: &ExperimentConfig,
    run: &ResolvedRun,
    hypothesis: Hypothesis,
    trial: usize,
) -> Result<TrialRecord> {
    let seed = trial_seed(config.root_seed, hypothesis, trial);
    let start = Instant::now();
    let pair = generate_pair(config.n, config.rho, hypothesis, rng::derive(seed, "pair", 0))?;
    let sample = sample_subgraphs(&pair, config.s, rng::derive(seed, "sample", 0))?;
    let statistic = match run.detector {
        ResolvedDetector::Exact(budget) => {
            enumerate_max_score(&sample.sub1, &sample.sub2, run.m, config.kernel, budget)?.0
        }
        ResolvedDetector::Clique { k1, k2, n1, n2 } => {
            let params = AlgoParams {
                k1,
                k2,
                n1,
                n2,
                m: run.m,
                kernel: config.kernel,
                tau: run.tau,
                seed: rng::derive(seed, "detector", 0),
            };
            detect(&sample.sub1, &sample.sub2, &params)?.statistic
        }
    };
    if !statistic.is_finite() {
        return Err(Error::Invariant(format!(
            "trial {trial} ({}) produced statistic {statistic}",
            hypothesis.as_str()
        )));
    }
    Ok(TrialRecord {
        trial,
        hypothesis,
        statistic,
        decision: decide(statistic, run.tau),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs `trials_per_hypothesis` trials under each hypothesis. Records come
/// back null first, then alt, each by trial index. The first failing trial
/// in that order aborts the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let run = config.resolve()?;
    let jobs: Vec<(Hypothesis, usize)> = [Hypothesis::Null, Hypothesis::Alt]
        .into_iter()
        .flat_map(|h| (0..config.trials_per_hypothesis).map(move |t| (h, t)))
        .collect();
    let one = |&(h, t): &(Hypothesis, usize)| run_trial(config, &run, h, t);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<TrialRecord>> = jobs.par_iter().map(one).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<TrialRecord>> = jobs.iter().map(one).collect();

    let failed = results.iter().filter(|r| r.is_err()).count();
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                if failed > 1 {
                    eprintln!("{failed} of {} trials failed; first error follows", jobs.len());
                }
                return Err(e);
            }
        }
    }
    Ok(records)
}

/// Splits statistics by hypothesis: `(null, alt)`.
pub fn split_scores(records: &[TrialRecord]) -> (Vec<f64>, Vec<f64>) {
    let pick = |h| {
        records
            .iter()
            .filter(|r| r.hypothesis == h)
            .map(|r| r.statistic)
            .collect()
    };
    (pick(Hypothesis::Null), pick(Hypothesis::Alt))
}

fn check_scores(null: &[f64], alt: &[f64]) -> Result<()> {
    if null.is_empty() || alt.is_empty() {
        return Err(Error::invalid("need at least one score under each hypothesis"));
    }
    if null.iter().chain(alt).any(|x| x.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Probability that an alt score beats a null score, ties counting half.
pub fn auc(null: &[f64], alt: &[f64]) -> Result<f64> {
    check_scores(null, alt)?;
    let ns = sorted(null);
    // twice the Mann-Whitney U, kept integral
    let mut u2: u64 = 0;
    for &a in alt {
        let below = ns.partition_point(|&x| x < a);
        let not_above = ns.partition_point(|&x| x <= a);
        u2 += 2 * below as u64 + (not_above - below) as u64;
    }
    Ok(u2 as f64 / (2.0 * null.len() as f64 * alt.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// From threshold `+inf` at `(0, 0)` down to `-inf` at `(1, 1)`.
    pub points: Vec<RocPoint>,
    /// Trapezoidal area under `points`.
    pub auc: f64,
}

/// Sweeps the threshold over every distinct score (reject when
/// `score >= threshold`).
pub fn roc_points(null: &[f64], alt: &[f64]) -> Result<RocCurve> {
    check_scores(null, alt)?;
    let ns = sorted(null);
    let as_ = sorted(alt);
    let mut thresholds: Vec<f64> = ns.iter().chain(&as_).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let (nn, na) = (ns.len(), as_.len());
    let at_or_above = |v: &[f64], t: f64| v.len() - v.partition_point(|&x| x < t);
    let mut counts = vec![(f64::INFINITY, 0usize, 0usize)];
    for &t in &thresholds {
        if t.is_infinite() && t > 0.0 {
            continue;
        }
        counts.push((t, at_or_above(&ns, t), at_or_above(&as_, t)));
    }
    if counts.last().map(|c| c.0) != Some(f64::NEG_INFINITY) {
        counts.push((f64::NEG_INFINITY, nn, na));
    }

    // trapezoids in integer units of 1 / (2 nn na)
    let mut twice_area: u64 = 0;
    for w in counts.windows(2) {
        let (_, f0, t0) = w[0];
        let (_, f1, t1) = w[1];
        twice_area += ((f1 - f0) * (t0 + t1)) as u64;
    }
    let points = counts
        .into_iter()
        .map(|(threshold, f, t)| RocPoint {
            threshold,
            fpr: f as f64 / nn as f64,
            tpr: t as f64 / na as f64,
        })
        .collect();
    Ok(RocCurve {
        points,
        auc: twice_area as f64 / (2.0 * nn as f64 * na as f64),
    })
}

pub const DEFAULT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`; the maximum lands in the last bin.
pub fn histogram(scores: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot bin an empty score list"));
    }
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            bin_left: lo + i as f64 * width,
            count: 0,
        })
        .collect();
    for &x in scores {
        let i = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        out[i].count += 1;
    }
    Ok(out)
}

pub const TRIAL_HEADER: &str = "trial,hypothesis,statistic,decision,wall_time_s";
pub const ROC_HEADER: &str = "threshold,fpr,tpr";
pub const HISTOGRAM_HEADER: &str = "bin_left,count";

pub fn trials_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TRIAL_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.trial,
            r.hypothesis.as_str(),
            r.statistic,
            r.decision.as_str(),
            r.wall_time_s
        );
    }
    out
}

pub fn roc_to_csv(curve: &RocCurve) -> String {
    let mut out = String::from(ROC_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    let _ = writeln!(out, "# auc={}", curve.auc);
    out
}

pub fn histogram_to_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for b in bins {
        let _ = writeln!(out, "{},{}", b.bin_left, b.count);
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Data rows of a CSV with the given header, as `(line number, fields)`.
fn csv_rows<'a>(
    path: &Path,
    text: &'a str,
    header: &str,
) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("expected header {header:?}"),
            })
        }
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("bad {name} {raw:?}"),
    })
}

pub fn trials_from_csv(path: impl AsRef<Path>, text: &str) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    csv_rows(path, text, TRIAL_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(TrialRecord {
                trial: field(path, line, "trial", f[0])?,
                hypothesis: field(path, line, "hypothesis", f[1])?,
                statistic: field(path, line, "statistic", f[2])?,
                decision: field(path, line, "decision", f[3])?,
                wall_time_s: field(path, line, "wall_time_s", f[4])?,
            })
        })
        .collect()
}

pub fn read_trials(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    trials_from_csv(path, &text)
}

/// Parses a ROC file; the `auc` comes from the `# auc=` row.
pub fn roc_from_csv(path: impl AsRef<Path>, text: &str) -> Result<RocCurve> {
    let path = path.as_ref();
    let points = csv_rows(path, text, ROC_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(RocPoint {
                threshold: field(path, line, "threshold", f[0])?,
                fpr: field(path, line, "fpr", f[1])?,
                tpr: field(path, line, "tpr", f[2])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let auc_line = text
        .lines()
        .enumerate()
        .find_map(|(i, l)| l.trim().strip_prefix("# auc=").map(|v| (i + 1, v.trim())));
    let auc = match auc_line {
        Some((line, v)) => field(path, line, "auc", v)?,
        None => {
            return Err(Error::Data {
                path: path.to_path_buf(),
                msg: "missing '# auc=' row".into(),
            })
        }
    };
    Ok(RocCurve { points, auc })
}

pub fn histogram_from_csv(path: impl AsRef<Path>, text: &str) -> Result<Vec<HistogramBin>> {
    let path = path.as_ref();
    csv_rows(path, text, HISTOGRAM_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(HistogramBin {
                bin_left: field(path, line, "bin_left", f[0])?,
                count: field(path, line, "count", f[1])?,
            })
        })
        .collect()
}
