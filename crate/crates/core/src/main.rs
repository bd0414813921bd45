use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use motion_memory::geom::ProblemClass;
use motion_memory::harness::io::{self, Cluster};
use motion_memory::harness::{
    augment_class, experience_class, generate_test_problems, run_ablation, run_benchmark, run_experience_sweep,
    train_store, BenchmarkConfig, CostMeasure, ExperienceSet, HarnessError, IntegrationMode, Report,
};
use motion_memory::planners::PlannerKind;
use motion_memory::seed::stage_seed;

#[derive(Parser)]
#[command(name = "motion-memory", version, about = "Plan retrieval benchmark for kinodynamic planners")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed of every stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// curves, random, trap or all (all three plus the combined condition).
    #[arg(long, global = true, default_value = "all")]
    class: String,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// 1000 environments per plan and 10,000 test problems.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Planner time limit in seconds.
    #[arg(long, global = true)]
    time_limit: Option<f64>,
    /// Retrieval sizes of the memory modes, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_values_t = [1usize, 5])]
    k: Vec<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Report tree expansions instead of wall time; makes reports reproducible.
    #[arg(long, global = true)]
    iterations_as_cost: bool,
    /// Expansion budget per query (default 20000 with --iterations-as-cost).
    #[arg(long, global = true)]
    max_iterations: Option<u64>,
    /// Planners to evaluate, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    planners: Option<Vec<PlannerKind>>,
    #[arg(long, global = true)]
    n_experience: Option<usize>,
    /// Environments per cluster, the original included.
    #[arg(long, global = true)]
    n_augment: Option<usize>,
    #[arg(long, global = true)]
    n_test: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    steps_per_epoch: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    /// Adds the negative cluster (problems no stored plan solves).
    #[arg(long, global = true)]
    include_negative: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Writes fresh test problems to <out>/problems/<class>/.
    GenProblems,
    /// Solves experience problems and writes them to <out>/experience/<class>/.
    MakeExperience,
    /// Hallucinates clusters from <out>/experience into <out>/dataset/<class>/.
    Augment,
    /// Trains the encoder on <out>/dataset and writes <out>/model/<class>.mmw.
    Train,
    /// Runs the whole benchmark and writes <out>/report.csv and charts.
    Eval,
    /// Closed-box GUST on Curves with 20 to 100 experience plans.
    SweepExperience,
    /// Retrieved against randomly chosen plans, open-box GUST on Curves.
    Ablate,
    /// Draws charts for an existing report.
    Plot {
        #[arg(long)]
        input: PathBuf,
    },
}

impl Global {
    fn classes(&self) -> Result<(Vec<ProblemClass>, bool), HarnessError> {
        if self.class == "all" {
            return Ok((ProblemClass::ALL.to_vec(), true));
        }
        let c = self
            .class
            .parse::<ProblemClass>()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok((vec![c], false))
    }

    fn config(&self) -> Result<BenchmarkConfig, HarnessError> {
        let mut cfg = if self.paper_scale {
            BenchmarkConfig::paper_scale()
        } else {
            BenchmarkConfig::default()
        };
        let (classes, combined) = self.classes()?;
        cfg.classes = classes;
        cfg.include_combined = combined;
        cfg.seed = self.seed;
        cfg.jobs = self.jobs;
        cfg.include_negative = self.include_negative;
        if let Some(t) = self.time_limit {
            cfg.planner.time_limit = t;
        }
        cfg.planner.max_iterations = self.max_iterations;
        if self.iterations_as_cost {
            cfg.cost = CostMeasure::Iterations;
        }
        if let Some(p) = &self.planners {
            cfg.planners = p.clone();
        }
        cfg.modes = vec![IntegrationMode::Baseline];
        for &k in &self.k {
            cfg.modes.push(IntegrationMode::ClosedBox { k });
        }
        for &k in &self.k {
            cfg.modes.push(IntegrationMode::OpenBox { k });
        }
        if let Some(&k) = self.k.iter().max() {
            cfg.sweep_k = k;
        }
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),*) => {
                $(if let Some(v) = self.$src { cfg.$($dst).+ = v; })*
            };
        }
        set!(n_experience => n_experience, n_augment => n_augment, n_test => n_test,
             epochs => train.epochs, batch_size => train.batch_size);
        if self.steps_per_epoch.is_some() {
            cfg.train.steps_per_epoch = self.steps_per_epoch;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn class_seed(cfg: &BenchmarkConfig, stage: &str, class: ProblemClass) -> u64 {
    stage_seed(cfg.seed, &format!("{stage}/{class}"))
}

fn class_dir(out: &Path, what: &str, class: ProblemClass) -> PathBuf {
    out.join(what).join(class.as_str())
}

fn gen_problems(cfg: &BenchmarkConfig, out: &Path) -> Result<(), HarnessError> {
    for &class in &cfg.classes {
        let tests = generate_test_problems(cfg, class, class_seed(cfg, "test", class), &HashSet::new())?;
        let dir = class_dir(out, "problems", class);
        for (i, e) in tests.iter().enumerate() {
            io::save_env(&dir.join(format!("p{i}.mmenv")), e)?;
        }
        println!("{class}: {} problems in {}", tests.len(), dir.display());
    }
    Ok(())
}

fn make_experience(cfg: &BenchmarkConfig, out: &Path) -> Result<(), HarnessError> {
    for &class in &cfg.classes {
        let exp = experience_class(cfg, class, class_seed(cfg, "experience", class))?;
        let clusters: Vec<Cluster> = exp
            .envs
            .into_iter()
            .zip(exp.plans)
            .map(|(e, plan)| Cluster { plan, envs: vec![e] })
            .collect();
        let dir = class_dir(out, "experience", class);
        io::save_dataset(&dir, &clusters)?;
        println!("{class}: {} solved problems in {}", clusters.len(), dir.display());
    }
    Ok(())
}

fn augment(cfg: &BenchmarkConfig, out: &Path) -> Result<(), HarnessError> {
    for &class in &cfg.classes {
        let loaded = io::load_dataset(&class_dir(out, "experience", class))?;
        let exp = ExperienceSet {
            envs: loaded.iter().map(|c| c.envs[0].clone()).collect(),
            plans: loaded.into_iter().map(|c| c.plan).collect(),
        };
        let clusters = augment_class(cfg, &exp, class_seed(cfg, "augment", class))?;
        let dir = class_dir(out, "dataset", class);
        io::save_dataset(&dir, &clusters)?;
        let n: usize = clusters.iter().map(|c| c.envs.len()).sum();
        println!("{class}: {} clusters, {n} environments in {}", clusters.len(), dir.display());
    }
    Ok(())
}

fn train(cfg: &BenchmarkConfig, out: &Path) -> Result<(), HarnessError> {
    for &class in &cfg.classes {
        let clusters = io::load_dataset(&class_dir(out, "dataset", class))?;
        let s = train_store(cfg, &clusters, class_seed(cfg, "memory", class))?;
        let model = out.join("model");
        io::save_weights(&model.join(format!("{class}.mmw")), &s.store.encoder)?;
        let mut loss = String::from("epoch,mean_loss\n");
        for (i, l) in s.history.iter().enumerate() {
            let _ = writeln!(loss, "{i},{l:.6}");
        }
        io::write_text(&model.join(format!("{class}_loss.csv")), &loss)?;
        println!(
            "{class}: loss {:.4} -> {:.4}, held-out top-1 {:.3}, top-5 {:.3} (n = {})",
            s.history.first().copied().unwrap_or(f64::NAN),
            s.history.last().copied().unwrap_or(f64::NAN),
            s.retrieval.top1,
            s.retrieval.top5,
            s.retrieval.n
        );
    }
    Ok(())
}

fn emit(report: &Report, dir: &Path) -> Result<(), HarnessError> {
    for p in report.emit(dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let g = &cli.global;
    if let Command::Plot { input } = &cli.command {
        let text = std::fs::read_to_string(input).map_err(|e| HarnessError::Io {
            path: input.display().to_string(),
            source: e,
        })?;
        let report = Report::from_csv(&text)?;
        for (class, svg) in report.svg_charts() {
            let path = g.out.join(format!("{class}.svg"));
            io::write_text(&path, &svg)?;
            println!("wrote {}", path.display());
        }
        return Ok(());
    }
    let cfg = g.config()?;
    let out = &g.out;
    match cli.command {
        Command::GenProblems => gen_problems(&cfg, out),
        Command::MakeExperience => make_experience(&cfg, out),
        Command::Augment => augment(&cfg, out),
        Command::Train => train(&cfg, out),
        Command::Eval => {
            let o = run_benchmark(&cfg)?;
            for (label, r) in &o.retrieval {
                println!("{label}: held-out top-1 {:.3}, top-5 {:.3}", r.top1, r.top5);
            }
            emit(&o.report, out)
        }
        Command::SweepExperience => emit(&run_experience_sweep(&cfg)?, &out.join("sweep")),
        Command::Ablate => emit(&run_ablation(&cfg)?, &out.join("ablation")),
        Command::Plot { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
