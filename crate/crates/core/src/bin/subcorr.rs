use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use subcorr::clique::{detect, AlgoParams};
use subcorr::exact::{enumerate_max_score, threshold_mse, threshold_overlap, ExactBudget, DEFAULT_BUDGET};
use subcorr::harness::{
    self, histogram, histogram_to_csv, read_trials, roc_points, roc_to_csv, split_scores,
    trials_to_csv, write_text, ExperimentConfig, DEFAULT_BINS,
};
use subcorr::model::{
    common_vertex_sets, generate_pair, load_graph_from_edge_list, sample_subgraphs, write_graph_csv,
    Hypothesis,
};
use subcorr::theory::{
    core_set_tail_check, hypergeom_pmf, mc_component_expectation, mc_likelihood_ratio_mean,
    mc_mgf_mse, mc_mgf_overlap, mc_overlap_law, mgf_mse, mgf_overlap, total_variation,
    ComponentKind, McEstimate,
};
use subcorr::{Error, Result, SimilarityKernel};

#[derive(Parser)]
#[command(name = "subcorr", version, about = "Correlation detection between sampled subgraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Overlap,
    Mse,
    Mle,
}

#[derive(Clone, Copy, ValueEnum)]
enum HypothesisArg {
    Null,
    Alt,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a graph pair, sample s vertices from each side and write the
    /// induced subgraphs.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum)]
        hypothesis: HypothesisArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for g1.csv, g2.csv and meta.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the clique-seeded detector on two edge lists.
    Detect {
        #[arg(long)]
        g1: PathBuf,
        #[arg(long)]
        g2: PathBuf,
        #[arg(long, value_enum)]
        kernel: KernelArg,
        /// Correlation used by the mle kernel and the default threshold.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        k1: usize,
        #[arg(long, default_value_t = 3)]
        k2: usize,
        #[arg(long, default_value_t = 10_000)]
        n1: usize,
        #[arg(long, default_value_t = 500)]
        n2: usize,
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive search over every injection of size m.
    Exact {
        #[arg(long)]
        g1: PathBuf,
        #[arg(long)]
        g2: PathBuf,
        #[arg(long, value_enum)]
        kernel: KernelArg,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET as u64)]
        budget: u64,
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
    },
    /// Run a Monte Carlo experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo checks of the probabilistic identities.
    TheoryCheck {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// ROC curve (and optional histograms) from a trial CSV.
    Roc {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Histogram of the null statistics.
        #[arg(long)]
        hist_null: Option<PathBuf>,
        /// Histogram of the alternative statistics.
        #[arg(long)]
        hist_alt: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
}

fn kernel(arg: KernelArg, rho: Option<f64>) -> Result<SimilarityKernel> {
    match arg {
        KernelArg::Overlap => Ok(SimilarityKernel::Overlap),
        KernelArg::Mse => Ok(SimilarityKernel::NegHalfSqDiff),
        KernelArg::Mle => match rho {
            Some(r) => SimilarityKernel::mle(r),
            None => Err(Error::InvalidParameter("the mle kernel needs --rho".into())),
        },
    }
}

fn threshold(f: SimilarityKernel, m: usize, rho: Option<f64>, tau: Option<f64>) -> Result<Option<f64>> {
    if tau.is_some() {
        return Ok(tau);
    }
    match (f, rho) {
        (SimilarityKernel::Overlap, Some(r)) => threshold_overlap(m, r).map(Some),
        (SimilarityKernel::NegHalfSqDiff, Some(r)) => threshold_mse(m, r).map(Some),
        _ => Ok(None),
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn gen(n: usize, s: usize, rho: f64, hyp: Hypothesis, seed: u64, out: &Path) -> Result<()> {
    let pair = generate_pair(n, rho, hyp, seed)?;
    let sample = sample_subgraphs(&pair, s, seed)?;
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    write_graph_csv(&sample.sub1, out.join("g1.csv"))?;
    write_graph_csv(&sample.sub2, out.join("g2.csv"))?;
    let common = pair
        .latent_perm
        .as_ref()
        .map(|p| common_vertex_sets(&sample.idx1, &sample.idx2, p).0.len());
    let meta = json!({
        "n": n,
        "s": s,
        "rho": pair.rho,
        "hypothesis": hyp,
        "seed": seed,
        "idx1": sample.idx1,
        "idx2": sample.idx2,
        "latent_perm": pair.latent_perm,
        "common_vertices": common,
    });
    write_text(out.join("meta.json"), &serde_json::to_string_pretty(&meta).expect("meta serializes"))
}

fn experiment(path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(path)?;
    let records = harness::run_experiment(&cfg)?;
    let csv = trials_to_csv(&records);
    match &cfg.output_path {
        Some(p) => write_text(p, &csv)?,
        None => print!("{csv}"),
    }
    let (null, alt) = split_scores(&records);
    let reject = |h| {
        let of_h: Vec<_> = records.iter().filter(|r| r.hypothesis == h).collect();
        of_h.iter().filter(|r| r.decision == subcorr::Decision::RejectNull).count() as f64
            / of_h.len() as f64
    };
    eprintln!(
        "auc={:.4} type_i={:.3} power={:.3}",
        harness::auc(&null, &alt)?,
        reject(Hypothesis::Null),
        reject(Hypothesis::Alt)
    );
    Ok(())
}

struct Check {
    name: String,
    value: f64,
    target: f64,
    pass: bool,
}

fn mc_check(name: &str, est: McEstimate, target: f64) -> Check {
    Check {
        name: format!("{name} (z={:+.2})", est.z_score(target)),
        value: est.mean,
        target,
        pass: est.within(target, 3.0),
    }
}

fn theory_check(trials: usize, seed: u64) -> Result<bool> {
    if trials < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 trials, got {trials}")));
    }
    let mut checks = Vec::new();

    let law = mc_overlap_law(20, 8, trials, seed)?;
    let pmf = (0..=8).map(|t| hypergeom_pmf(20, 8, t)).collect::<Result<Vec<_>>>()?;
    let tv = total_variation(&law, &pmf);
    checks.push(Check {
        name: "overlap law TV, n=20 s=8".into(),
        value: tv,
        target: 0.02,
        pass: tv < 0.02,
    });

    let rho = 0.5;
    for kind in [ComponentKind::Path(2), ComponentKind::Cycle(1), ComponentKind::Cycle(2)] {
        let est = mc_component_expectation(kind, rho, trials, seed)?;
        checks.push(mc_check(&format!("{kind:?} at rho=0.5"), est, kind.expectation(rho)));
    }
    checks.push(mc_check("E exp(0.3 XY)", mc_mgf_overlap(0.3, trials, seed), mgf_overlap(0.3)?));
    checks.push(mc_check("E exp(-0.75 (X-Y)^2)", mc_mgf_mse(1.5, trials, seed), mgf_mse(1.5)?));
    checks.push(mc_check(
        "E likelihood ratio at rho=0.5",
        mc_likelihood_ratio_mean(rho, trials, seed)?,
        1.0,
    ));
    for t in [1, 2] {
        let c = core_set_tail_check(10, 4, t, trials, seed)?;
        checks.push(Check {
            name: format!("P(|core| = {t}), n=10 s=4"),
            value: c.frequency,
            target: c.bound,
            pass: !c.violated,
        });
    }

    println!("{:<40} {:>12} {:>12}  result", "check", "value", "target");
    for c in &checks {
        println!(
            "{:<40} {:>12.6} {:>12.6}  {}",
            c.name,
            c.value,
            c.target,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn roc(input: &Path, out: &Path, hist: [(Hypothesis, Option<&PathBuf>); 2], bins: usize) -> Result<()> {
    let records = read_trials(input)?;
    let (null, alt) = split_scores(&records);
    let curve = roc_points(&null, &alt)?;
    write_text(out, &roc_to_csv(&curve))?;
    for (h, path) in hist {
        if let Some(p) = path {
            let scores = if h == Hypothesis::Null { &null } else { &alt };
            write_text(p, &histogram_to_csv(&histogram(scores, bins)?))?;
        }
    }
    println!("auc={}", curve.auc);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen {
            n,
            s,
            rho,
            hypothesis,
            seed,
            out,
        } => {
            let hyp = match hypothesis {
                HypothesisArg::Null => Hypothesis::Null,
                HypothesisArg::Alt => Hypothesis::Alt,
            };
            gen(n, s, rho, hyp, seed, &out)?;
        }
        Command::Detect {
            g1,
            g2,
            kernel: k,
            rho,
            m,
            k1,
            k2,
            n1,
            n2,
            tau,
            seed,
        } => {
            let f = kernel(k, rho)?;
            let sub1 = load_graph_from_edge_list(&g1)?;
            let sub2 = load_graph_from_edge_list(&g2)?;
            let tau = threshold(f, m, rho, tau)?.ok_or_else(|| {
                Error::InvalidParameter("no default threshold for this kernel; pass --tau".into())
            })?;
            let params = AlgoParams {
                k1,
                k2,
                n1,
                n2,
                m,
                kernel: f,
                tau,
                seed,
            };
            let d = detect(&sub1, &sub2, &params)?;
            print_json(&json!({
                "statistic": d.statistic,
                "tau": tau,
                "decision": d.decision,
                "mapping": d.mapping,
                "seed_mapping": d.seed.pi0,
                "seed_avg_score": d.seed.avg_score,
            }));
        }
        Command::Exact {
            g1,
            g2,
            kernel: k,
            rho,
            m,
            budget,
            tau,
        } => {
            let f = kernel(k, rho)?;
            let budget = ExactBudget::new(budget as u128)?;
            let sub1 = load_graph_from_edge_list(&g1)?;
            let sub2 = load_graph_from_edge_list(&g2)?;
            let (score, pi) = enumerate_max_score(&sub1, &sub2, m, f, budget)?;
            let tau = threshold(f, m, rho, tau)?;
            print_json(&json!({
                "statistic": score,
                "tau": tau,
                "decision": tau.map(|t| subcorr::decide(score, t)),
                "mapping": pi,
            }));
        }
        Command::Experiment { config } => experiment(&config)?,
        Command::TheoryCheck { trials, seed } => return theory_check(trials, seed),
        Command::Roc {
            input,
            out,
            hist_null,
            hist_alt,
            bins,
        } => roc(
            &input,
            &out,
            [(Hypothesis::Null, hist_null.as_ref()), (Hypothesis::Alt, hist_alt.as_ref())],
            bins,
        )?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
