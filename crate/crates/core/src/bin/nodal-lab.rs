use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use nodal_lab::cascade::lln_j0;
use nodal_lab::doubling::{doubling_index, tilde_index, verify_subdivision_lemma};
use nodal_lab::eigen::{lift, Eigenfunction};
use nodal_lab::field::TrigPolyField;
use nodal_lab::geometry::{CubeSpec, ManifoldId};
use nodal_lab::nodal::{extract_nodal_2d, extract_nodal_3d, min_resolution_2d, min_resolution_3d, NodalOptions, Region2};
use nodal_lab::runner::sweep::{self, NODAL_MEASURE};
use nodal_lab::runner::{
    df_doubling_sweep, df_ratio_spread, fit_exponent, pipeline_2d_upper, pipeline_3d_lower, read_records,
    run_lifted_cascade, summarize, sweep_nodal_measure, write_summary_csv, ExperimentConfig, RecordStore,
};
use nodal_lab::wavescale::{geometric_eigenvalues, weak_max_sweep};
use nodal_lab::Result;

#[derive(Parser)]
#[command(name = "nodal-lab", version, about = "Doubling indices and nodal sets of Laplace eigenfunctions")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    lambda_max: Option<f64>,
    /// Overrides the config seed and NODAL_LAB_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Fixed grid cells per axis for nodal extraction.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Nodal,
    Df,
    Pipeline2d,
    Pipeline3d,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the configured eigenvalues and write records.
    Sweep {
        #[arg(long, value_enum, default_value = "nodal")]
        kind: SweepKind,
    },
    /// Run the subdivision cascade on one lifted random eigenfunction.
    Cascade {
        #[arg(long)]
        lambda: u64,
    },
    /// Doubling index `N` and `Ñ` of a random eigenfunction on one cube.
    Doubling {
        #[arg(long)]
        lambda: u64,
        #[arg(long, value_delimiter = ',')]
        center: Vec<f64>,
        #[arg(long)]
        half_side: f64,
        /// Use the lift `u·e^{√λ t}`; the center then includes `t`.
        #[arg(long)]
        lifted: bool,
    },
    /// Extract the nodal set of one random eigenfunction.
    Nodal {
        #[arg(long)]
        lambda: u64,
        /// Also write the elements as text.
        #[arg(long)]
        elements: Option<PathBuf>,
    },
    /// Quick checks of the release-blocking invariants.
    Verify,
    /// Fit `measure ≈ C·λ^s` to a record file.
    Fit {
        input: PathBuf,
        #[arg(long, default_value = NODAL_MEASURE)]
        quantity: String,
    },
    /// CSV summaries (λ, median, quartiles) of every quantity in a record file.
    Report { input: PathBuf },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let mut c = ExperimentConfig::default();
            c.apply_env()?;
            c
        }
    };
    if let Some(l) = cli.lambda_max {
        cfg.lambda_max = l;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(r) = cli.resolution {
        cfg.resolution.fixed = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn store(cfg: &ExperimentConfig, name: &str) -> Result<RecordStore> {
    fs::create_dir_all(&cfg.out_dir)?;
    RecordStore::open(cfg.out_dir.join(format!("{name}.jsonl")))
}

fn write_summaries(cfg: &ExperimentConfig, s: &RecordStore, quantity: &str) -> Result<PathBuf> {
    let path = cfg.out_dir.join(format!("{quantity}.csv"));
    write_summary_csv(BufWriter::new(fs::File::create(&path)?), &summarize(s.records(), quantity))?;
    Ok(path)
}

fn run_sweep(cfg: &ExperimentConfig, kind: SweepKind) -> Result<bool> {
    match kind {
        SweepKind::Nodal => {
            let mut s = store(cfg, "nodal_measure")?;
            let rows = sweep_nodal_measure(cfg, &mut s)?;
            let csv = write_summaries(cfg, &s, NODAL_MEASURE)?;
            let fit = fit_exponent(&sweep::rows_to_points(&rows)).ok();
            print(&json!({ "records": s.path(), "summary": csv, "rows": rows.len(), "fit": fit }));
        }
        SweepKind::Df => {
            let mut s = store(cfg, "df_doubling")?;
            let pts = df_doubling_sweep(cfg, &mut s)?;
            write_summaries(cfg, &s, sweep::DF_TILDE_LIFT)?;
            write_summaries(cfg, &s, sweep::DF_TILDE_BASE)?;
            let (per, spread) = df_ratio_spread(&pts, false);
            let (_, base_spread) = df_ratio_spread(&pts, true);
            print(&json!({ "records": s.path(), "ratios": per, "spread": spread, "base_spread": base_spread }));
        }
        SweepKind::Pipeline2d | SweepKind::Pipeline3d => {
            let mut out = Vec::new();
            for l in cfg.eigenvalues() {
                for m in sweep::ensemble(cfg, l) {
                    let u = m.u?;
                    let v = if matches!(kind, SweepKind::Pipeline2d) {
                        let r = pipeline_2d_upper(&u, cfg)?;
                        json!({ "lambda": l, "seed": m.seed, "max_constant": r.max_constant,
                                "sum_sqrt_tilde": r.sum_sqrt_tilde, "group_bound": r.group_bound,
                                "total_length": r.total_length, "squares": r.squares.len() })
                    } else {
                        let t = nodal_lab::runner::good_threshold(cfg, l);
                        let r = pipeline_3d_lower(&u, cfg, t)?;
                        json!({ "lambda": l, "seed": m.seed, "good_area": r.good_area, "good": r.good,
                                "cubes": r.cubes.len(), "no_zero": r.no_zero, "min_constant": r.min_constant,
                                "partition_mismatch": r.partition_mismatch })
                    };
                    out.push(v);
                }
            }
            fs::create_dir_all(&cfg.out_dir)?;
            let name = if matches!(kind, SweepKind::Pipeline2d) { "pipeline_2d" } else { "pipeline_3d" };
            let path = cfg.out_dir.join(format!("{name}.jsonl"));
            let mut w = BufWriter::new(fs::File::create(&path)?);
            for v in &out {
                writeln!(w, "{v}")?;
            }
            print(&json!({ "records": path, "rows": out.len() }));
        }
    }
    Ok(true)
}

fn verify(cfg: &ExperimentConfig) -> Result<bool> {
    let mut ok = true;
    let lambdas = geometric_eigenvalues(ManifoldId::Torus2, 100.0, 10_000.0, 5);
    let wm = weak_max_sweep(ManifoldId::Torus2, &lambdas, 100, &cfg.wavescale)?;
    ok &= wm.violations == 0;
    let mut provable_failures = 0;
    let mut literal_failures = 0;
    for seed in 0..20 {
        let f = TrigPolyField::random(2, 4, 6, 1.0, cfg.seed.wrapping_add(seed));
        let q = CubeSpec::new(vec![0.3, -0.2], 0.8)?;
        let r = verify_subdivision_lemma(&f, &q, 2, &cfg.doubling)?;
        if !r.vacuous {
            provable_failures += usize::from(!r.holds_provable);
            literal_failures += usize::from(!r.holds_literal);
        }
    }
    ok &= provable_failures == 0;
    let j0 = [2u64, 16, 625].map(|y| (y, lln_j0(y).j0));
    print(&json!({
        "weak_max": wm,
        "subdivision": { "literal_failures": literal_failures, "provable_failures": provable_failures },
        "lln_j0": j0,
        "ok": ok,
    }));
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Sweep { kind } => run_sweep(&cfg, *kind),
        Command::Cascade { lambda } => {
            let r = run_lifted_cascade(&cfg, *lambda, cfg.seed)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let path = cfg.out_dir.join(format!("cascade_{lambda}_{}.jsonl", cfg.seed));
            r.write_jsonl(BufWriter::new(fs::File::create(&path)?))?;
            print(&json!({ "records": path, "n0": r.n0, "threshold": r.threshold, "good_fraction": r.good_fraction,
                           "vacuous": r.vacuous, "findings": r.findings }));
            Ok(r.good_fraction >= 0.5)
        }
        Command::Doubling { lambda, center, half_side, lifted } => {
            let u = Eigenfunction::synth_random(cfg.manifold, *lambda, cfg.seed)?;
            let q = CubeSpec::new(center.clone(), *half_side)?;
            let (n, t) = if *lifted {
                let h = lift(&u)?;
                (doubling_index(&h, &q, &cfg.doubling)?, tilde_index(&h, &q, &cfg.doubling)?)
            } else {
                (doubling_index(&u, &q, &cfg.doubling)?, tilde_index(&u, &q, &cfg.doubling)?)
            };
            print(&json!({ "lambda": lambda, "seed": cfg.seed, "index": n, "tilde": t }));
            Ok(true)
        }
        Command::Nodal { lambda, elements } => {
            let u = Eigenfunction::synth_random(cfg.manifold, *lambda, cfg.seed)?;
            let opts = NodalOptions { keep_elements: elements.is_some(), ..cfg.nodal };
            let m = match cfg.manifold {
                ManifoldId::Torus3 => extract_nodal_3d(&u, cfg.resolution.resolve(min_resolution_3d(&u)), &opts)?,
                ManifoldId::Torus2 => {
                    extract_nodal_2d(&u, &Region2::Torus, cfg.resolution.resolve(min_resolution_2d(&u)), &opts)?
                }
                ManifoldId::Sphere2 => {
                    extract_nodal_2d(&u, &Region2::Sphere, cfg.resolution.resolve(min_resolution_2d(&u)), &opts)?
                }
            };
            if let Some(p) = elements {
                m.write_text(BufWriter::new(fs::File::create(p)?))?;
            }
            print(&json!({ "manifold": cfg.manifold, "lambda": lambda, "seed": cfg.seed,
                           "measure": m.total_measure, "elements": m.element_count, "resolution": m.resolution }));
            Ok(true)
        }
        Command::Verify => verify(&cfg),
        Command::Fit { input, quantity } => {
            let pts: Vec<(f64, f64)> = read_records(input)?
                .iter()
                .filter(|r| &r.quantity == quantity)
                .filter_map(|r| r.value.map(|v| (r.lambda as f64, v)))
                .collect();
            let fit = fit_exponent(&pts)?;
            print(&json!({ "fit": fit, "c_075": sweep::power_law_constant(&pts, 0.75) }));
            Ok(true)
        }
        Command::Report { input } => {
            let records = read_records(input)?;
            let mut quantities: Vec<&str> = records.iter().map(|r| r.quantity.as_str()).collect();
            quantities.sort_unstable();
            quantities.dedup();
            fs::create_dir_all(&cfg.out_dir)?;
            let mut written = Vec::new();
            for q in quantities {
                let path = cfg.out_dir.join(format!("{q}.csv"));
                write_summary_csv(BufWriter::new(fs::File::create(&path)?), &summarize(&records, q))?;
                written.push(path);
            }
            print(&json!({ "summaries": written }));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
