use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use seqbid::schema::{
    AdditiveRootFile, EvalReportFile, InstanceFile, LoadedStrategy, McReportFile, StrategyFile,
};
use seqbid::{
    exact_eval, monte_carlo, solve_additive_with_cap, solve_prorated, solve_quasilinear,
    AdditiveBidCap, Instance64, Money, MoneyUtility, TrivialPolicy, UtilityMode,
};
use seqbid_cli::bench::{run_bench, rows_to_csv, BenchConfig};
use seqbid_cli::gen::{gen_substitutes, gen_three_bundles};

#[derive(Parser)]
#[command(
    name = "seqbid",
    about = "Bidding-strategy solvers for sequential first-price sealed-bid auctions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the strategy as JSON.
    Solve(SolveArgs),
    /// Evaluate a solved strategy against an instance.
    Eval(EvalArgs),
    /// Generate a benchmark-family instance file.
    Gen {
        #[command(subcommand)]
        family: GenCommand,
    },
    /// Run a benchmark config and write a CSV of the measurements.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    instance: PathBuf,
    /// Endowment for the additive mode; defaults to the instance's.
    #[arg(long)]
    endowment: Option<u64>,
    /// Budget for the prorated and trivial modes; defaults to the instance's.
    #[arg(long)]
    budget: Option<u64>,
    /// Bid search cap for the additive solver (the solution is identical;
    /// only the search work differs).
    #[arg(long, value_enum, default_value_t = BidCapArg::MaxSupport)]
    bid_cap: BidCapArg,
    /// For the additive mode: write only the initial state's value and bid
    /// instead of the full table.
    #[arg(long)]
    root_only: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Quasilinear,
    Additive,
    Prorated,
    Trivial,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BidCapArg {
    MaxSupport,
    FullValuation,
}

impl From<BidCapArg> for AdditiveBidCap {
    fn from(cap: BidCapArg) -> Self {
        match cap {
            BidCapArg::MaxSupport => AdditiveBidCap::MaxSupport,
            BidCapArg::FullValuation => AdditiveBidCap::FullValuation,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    strategy: PathBuf,
    /// Exact expected utility by enumerating all outcome paths.
    #[arg(long, conflicts_with = "mc")]
    exact: bool,
    /// Seeded Monte Carlo estimate.
    #[arg(long)]
    mc: bool,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Even n items; the odd-position and even-position bundles are
    /// substitutes worth 100 * n / 2 each.
    Substitutes {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nine items in three disjoint bundles worth 300 each.
    ThreeBundles {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    csv: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Eval(args) => eval(args),
        Command::Gen { family } => gen(family),
        Command::Bench(args) => bench(args),
    }
}

fn solve(args: SolveArgs) -> Result<(), String> {
    let instance = read_instance(&args.instance)?;
    if args.root_only && args.mode != Mode::Additive {
        return Err("--root-only only applies to --mode additive".into());
    }

    match args.mode {
        Mode::Quasilinear => {
            let strategy = solve_quasilinear(&instance).map_err(stringify)?;
            write_out(&args.out, &StrategyFile::from_quasilinear(&strategy).to_json())?;
            println!(
                "mode=quasilinear items={} root_value={} root_bid={}",
                instance.item_count(),
                strategy.root_value(),
                strategy.root_bid()
            );
        }
        Mode::Additive => {
            let m = args
                .endowment
                .map(Money)
                .or(instance.endowment)
                .ok_or("additive mode needs --endowment or an instance endowment")?;
            let strategy = solve_additive_with_cap(
                &instance,
                m,
                &instance.money_utility,
                args.bid_cap.into(),
            )
            .map_err(stringify)?;
            if args.root_only {
                let root = AdditiveRootFile {
                    mode: "additive".into(),
                    endowment: m.0,
                    root_value: strategy.root_value(),
                    root_bid: strategy.root_bid().0,
                };
                let json =
                    serde_json::to_string_pretty(&root).expect("root summary serializes");
                write_out(&args.out, &json)?;
            } else {
                write_out(&args.out, &StrategyFile::from_additive(&strategy).to_json())?;
            }
            println!(
                "mode=additive items={} endowment={} root_value={} root_bid={}",
                instance.item_count(),
                m,
                strategy.root_value(),
                strategy.root_bid()
            );
        }
        Mode::Prorated => {
            let budget = require_budget(&args, &instance)?;
            let pi = solve_quasilinear(&instance).map_err(stringify)?;
            let strategy = solve_prorated(&instance, &pi, budget).map_err(stringify)?;
            write_out(&args.out, &StrategyFile::from_prorated(&strategy).to_json())?;
            println!(
                "mode=prorated items={} budget={} root_value={} root_bid={} \
                 certified_max_payment={}",
                instance.item_count(),
                budget,
                strategy.root_value(),
                strategy.bid(0, 0),
                strategy.certified_max_payment()
            );
        }
        Mode::Trivial => {
            let budget = require_budget(&args, &instance)?;
            let pi = solve_quasilinear(&instance).map_err(stringify)?;
            write_out(&args.out, &StrategyFile::from_trivial(&pi, budget).to_json())?;
            println!(
                "mode=trivial items={} budget={} root_bid={}",
                instance.item_count(),
                budget,
                pi.root_bid().min(budget)
            );
        }
    }
    Ok(())
}

fn require_budget(args: &SolveArgs, instance: &Instance64) -> Result<Money, String> {
    args.budget
        .map(Money)
        .or(instance.budget)
        .ok_or_else(|| "this mode needs --budget or an instance budget".to_string())
}

fn eval(args: EvalArgs) -> Result<(), String> {
    if args.exact == args.mc {
        return Err("pass exactly one of --exact or --mc".into());
    }
    let instance = read_instance(&args.instance)?;
    let text = read_file(&args.strategy)?;
    let loaded = StrategyFile::from_json(&text)
        .and_then(|f| f.load())
        .map_err(stringify)?;
    if loaded.item_count() != instance.item_count() {
        return Err(format!(
            "strategy covers {} items but the instance has {}",
            loaded.item_count(),
            instance.item_count()
        ));
    }

    // Borrow the loaded tables for as long as the policy runs.
    let trivial_holder;
    let (policy, mode): (&dyn seqbid::ExecutionPolicy, UtilityMode<f64>) = match &loaded {
        LoadedStrategy::Quasilinear { bids } => (bids, UtilityMode::QuasiLinear),
        LoadedStrategy::Prorated { bids, .. } => (bids, UtilityMode::QuasiLinear),
        LoadedStrategy::Trivial { budget, base_bids } => {
            trivial_holder = TrivialPolicy::new(base_bids, *budget);
            (&trivial_holder, UtilityMode::QuasiLinear)
        }
        LoadedStrategy::Additive { endowment, table } => (
            table,
            UtilityMode::Additive {
                endowment: *endowment,
                utility: MoneyUtility::Identity,
            },
        ),
    };

    if args.exact {
        let report = exact_eval(&instance, policy, &mode).map_err(stringify)?;
        let file = EvalReportFile::from_report(&report);
        println!(
            "kind=exact expected_utility={} max_payment={} path_count={}",
            file.expected_utility, file.max_payment, file.path_count
        );
        if let Some(out) = &args.out {
            write_out(out, &file.to_json())?;
        }
    } else {
        let report =
            monte_carlo(&instance, policy, &mode, args.samples, args.seed).map_err(stringify)?;
        let file = McReportFile::from_report(&report);
        println!(
            "kind=mc mean={} std_error={} samples={} seed={}",
            file.mean, file.std_error, file.samples, file.seed
        );
        if let Some(out) = &args.out {
            write_out(out, &file.to_json())?;
        }
    }
    Ok(())
}

fn gen(command: GenCommand) -> Result<(), String> {
    match command {
        GenCommand::Substitutes { n, out } => {
            let instance: Instance64 = gen_substitutes(n).map_err(stringify)?;
            write_out(&out, &InstanceFile::from_instance(&instance).to_json())?;
            println!("family=substitutes items={n} out={}", out.display());
        }
        GenCommand::ThreeBundles { out } => {
            let instance: Instance64 = gen_three_bundles();
            write_out(&out, &InstanceFile::from_instance(&instance).to_json())?;
            println!("family=three-bundles items=9 out={}", out.display());
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), String> {
    let text = read_file(&args.config)?;
    let config = BenchConfig::from_json(&text).map_err(stringify)?;
    let rows = run_bench(&config).map_err(stringify)?;
    write_out(&args.csv, &rows_to_csv(&rows))?;
    println!("rows={} csv={}", rows.len(), args.csv.display());
    Ok(())
}

fn read_instance(path: &Path) -> Result<Instance64, String> {
    let text = read_file(path)?;
    let instance: Instance64 = InstanceFile::from_json(&text)
        .and_then(|f| f.to_instance())
        .map_err(stringify)?;
    let violations = instance.validate();
    if !violations.is_empty() {
        let mut message = format!("{} fails validation:", path.display());
        for v in violations {
            message.push_str(&format!("\n  {v}"));
        }
        return Err(message);
    }
    Ok(instance)
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_out(path: &Path, content: &str) -> Result<(), String> {
    let mut text = content.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn stringify(error: seqbid::Error) -> String {
    error.to_string()
}
