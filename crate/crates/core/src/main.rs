use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use poolsim::criteria::{self, CriterionReport, CRITERIA, SCENARIO_PRESETS};
use poolsim::engine::{replay, EngineConfig, MigrationStrategy, Recipient, RunManifest, UnitPplns};
use poolsim::oracles;
use poolsim::sim::{run_scenario, write_bundle, Estimate, RunOutput, ScenarioConfig, Schedule};
use poolsim::stochastic::{
    self, generate_stream, read_replay_log, write_replay_log, MinerSpec, RngStream,
};
use poolsim::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "poolsim", version, about = "Mining-pool reward system simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, a scenario preset or a criterion preset.
    Run(RunArgs),
    /// Evaluate an analytic oracle.
    Oracle {
        #[command(subcommand)]
        oracle: Oracle,
        /// Print a CSV header and row instead of `key: value` lines.
        #[arg(long, global = true)]
        csv: bool,
    },
    /// Rebuild a ledger snapshot from a replay log.
    Replay {
        log: PathBuf,
        /// Engine config: a JSON file or an inline JSON object.
        engine: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a log through unit PPLNS, change (f, X) and print the timeline.
    Migrate(MigrateArgs),
    /// Generate a replay log from miner hashrates and schedules.
    GenLog(GenLogArgs),
    /// List scenario and criterion presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MigrateArgs {
    log: PathBuf,
    #[arg(long)]
    f: f64,
    #[arg(long)]
    x: f64,
    #[arg(long = "to-f")]
    to_f: f64,
    #[arg(long = "to-x")]
    to_x: f64,
    #[arg(long, value_enum, default_value_t = Strategy::Scale)]
    strategy: Strategy,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Scale,
    KeepUnits,
}

#[derive(Args)]
struct GenLogArgs {
    /// Comma-separated hashrate weights; miner ids are their positions.
    #[arg(long, value_delimiter = ',', required = true)]
    miners: Vec<f64>,
    /// `D` or `start:D,start:D,...`.
    #[arg(long)]
    difficulty: String,
    /// `B` or `start:B,start:B,...`.
    #[arg(long, default_value = "50")]
    reward: String,
    #[arg(long)]
    shares: u64,
    #[arg(long, default_value_t = criteria::DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Oracle {
    /// Exponential integral E1(x).
    E1 {
        #[arg(long)]
        x: f64,
    },
    /// exp(x) E1(x), the proportional share amplification at round age x.
    PropAmplification {
        #[arg(long)]
        x: f64,
    },
    /// Round age where proportional shares stop being worth pB.
    PropHopThreshold,
    /// Hopper amplification among m proportional pools.
    Hop {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        fallback: bool,
    },
    /// Amplification table for m = 1..m-max.
    HopTable {
        #[arg(long = "m-max", default_value_t = 25)]
        m_max: u32,
    },
    /// Honest payout fraction against saturating hoppers.
    PropHonestLoss,
    /// Proportional per-share mean and variance.
    PropShareVariance {
        #[arg(long)]
        p: f64,
        #[arg(long = "B")]
        b: f64,
    },
    /// PPS reserve for lifetime ruin probability delta.
    PpsReserve {
        #[arg(long = "B")]
        b: f64,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        delta: f64,
    },
    /// PPS lifetime ruin probability with reserve R.
    PpsRuin {
        #[arg(long = "B")]
        b: f64,
        #[arg(long)]
        f: f64,
        #[arg(long = "R")]
        r: f64,
    },
    /// Geometric method statistics.
    GeometricStats {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 0.0)]
        f: f64,
        #[arg(long = "B")]
        b: f64,
    },
    /// Expected MPPS loss fraction over n expected blocks.
    MppsLoss {
        #[arg(long)]
        n: u64,
    },
    /// SMPPS maturity in blocks for a constant buffer R < 0.
    SmppsMaturity {
        #[arg(long = "R")]
        r: f64,
        #[arg(long = "B")]
        b: f64,
    },
    /// Hopping-immune reward table f(I, N).
    Immunity {
        #[arg(long)]
        p: f64,
        #[arg(long = "n-max")]
        n_max: usize,
        #[arg(long, default_value_t = 1.0)]
        total: f64,
    },
    /// Hopping amplification under a sinusoidal hashrate.
    Fluctuation {
        #[arg(long)]
        lambda0: f64,
        #[arg(long = "lambda-bar")]
        lambda_bar: f64,
        #[arg(long = "C")]
        c: f64,
    },
    /// Lie-in-wait optimal ambush and amplification.
    Liw {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        h: f64,
        #[arg(long = "H0")]
        h0: f64,
        #[arg(long = "T0")]
        t0: f64,
        #[arg(long)]
        p: f64,
        #[arg(long = "B")]
        b: f64,
    },
    /// Amplification from choosing share difficulty after the hash is known.
    PosteriorDifficulty {
        /// Increasing list ending in `inf`.
        #[arg(long, value_delimiter = ',', required = true)]
        difficulties: Vec<f64>,
    },
    /// Expected blocks for hashrate h over t seconds.
    ExpectedBlocks {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        t: f64,
        #[arg(long = "D")]
        d: f64,
    },
    /// Solo mining payout statistics.
    SoloStats {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        t: f64,
        #[arg(long = "D")]
        d: f64,
        #[arg(long = "B")]
        b: f64,
    },
    /// Poisson probability mass.
    PoissonPmf {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        k: u64,
    },
    /// Geometric probability mass P(first success at N).
    GeometricPmf {
        #[arg(long)]
        p: f64,
        #[arg(long = "N")]
        n: u64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::Schedule(_)
            | Error::Replay { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let oracle_name = std::env::args().nth(1).as_deref() == Some("oracle");
            if e.kind() == ErrorKind::InvalidSubcommand && oracle_name {
                eprintln!("{}", e.render().to_string().lines().next().unwrap_or("unknown oracle"));
                eprintln!("available oracles: {}", oracle_names().join(", "));
                return ExitCode::from(EXIT_CONFIG);
            }
            // clap exits 0 for --help/--version and 2 for usage errors.
            e.exit();
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle { oracle, csv } => cmd_oracle(oracle, csv),
        Command::Replay { log, engine, out } => cmd_replay(&log, &engine, out.as_deref()),
        Command::Migrate(args) => cmd_migrate(args),
        Command::GenLog(args) => cmd_gen_log(args),
        Command::Presets => cmd_presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn oracle_names() -> Vec<String> {
    use clap::CommandFactory;
    Cli::command()
        .find_subcommand("oracle")
        .map(|c| c.get_subcommands().map(|s| s.get_name().to_string()).collect())
        .unwrap_or_default()
}

/// `%g`-style formatting with six significant digits.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp).max(0) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(runtime)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> CmdResult {
    if let Some(n) = criteria::criterion_by_preset(&args.scenario) {
        if args.replicas.is_some() || args.horizon.is_some() {
            return Err(Failure::Config(
                "--replicas and --horizon do not apply to criterion presets".into(),
            ));
        }
        let seed = args.seed.unwrap_or(criteria::DEFAULT_SEED);
        let report = criteria::run_criterion(n, seed)?;
        print_report(&report);
        if let Some(dir) = &args.out {
            write_report(dir, &report, seed)?;
        }
        return Ok(());
    }

    let mut cfg = if SCENARIO_PRESETS.contains(&args.scenario.as_str()) {
        criteria::preset_scenario(&args.scenario, args.seed.unwrap_or(criteria::DEFAULT_SEED))?
    } else {
        let path = Path::new(&args.scenario);
        if !path.exists() {
            return Err(Failure::Config(format!(
                "`{}` is neither a file nor a preset (see `poolsim presets`)",
                args.scenario
            )));
        }
        ScenarioConfig::from_json(&read_text(path)?)?
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.replicas {
        cfg.replicas = r;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;

    let out = run_scenario(&cfg)?;
    print_summary(&cfg, &out);
    if let Some(dir) = &args.out {
        write_bundle(dir, &cfg, &out)?;
    }
    Ok(())
}

fn ci(e: &Option<Estimate>) -> String {
    match e {
        Some(e) => format!("{} ± {}", sig6(e.mean), sig6(e.half_width)),
        None => "-".into(),
    }
}

fn print_summary(cfg: &ScenarioConfig, out: &RunOutput) {
    let s = &out.summary;
    println!(
        "{}: {} replicas x {} steps, seed {}",
        cfg.name.as_deref().unwrap_or("scenario"),
        s.replicas,
        cfg.horizon,
        cfg.seed
    );
    for a in &s.agents {
        println!(
            "  agent {} ({}): payout/share {}, relative {}, variance/share {}, maturity {}",
            a.name,
            a.policy,
            ci(&a.payout_per_share),
            ci(&a.relative_payout),
            ci(&a.variance_per_share),
            ci(&a.maturity)
        );
    }
    for p in &s.pools {
        println!(
            "  pool {} ({}): operator net {}, blocks {}, conservation failures {}",
            p.name,
            p.method,
            ci(&p.operator_net),
            ci(&p.blocks),
            p.conservation_failures
        );
    }
}

fn print_report(r: &CriterionReport) {
    println!("criterion {} ({}): {}", r.number, r.preset, r.title);
    for c in &r.checks {
        println!("  {c}");
    }
    println!("{}", if r.passed() { "PASS" } else { "FAIL" });
}

fn write_report(dir: &Path, r: &CriterionReport, seed: u64) -> CmdResult {
    fs::create_dir_all(dir).map_err(runtime)?;
    let mut w = csv::Writer::from_path(dir.join("checks.csv")).map_err(runtime)?;
    w.write_record(["id", "description", "measured", "expected", "tolerance", "relation", "passed"])
        .map_err(runtime)?;
    for c in &r.checks {
        let relation = serde_json::to_value(c.relation).map_err(runtime)?;
        w.write_record([
            c.id.clone(),
            c.description.clone(),
            c.measured.to_string(),
            c.expected.to_string(),
            c.tolerance.to_string(),
            relation.as_str().unwrap_or_default().to_string(),
            c.passed.to_string(),
        ])
        .map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    for t in &r.tables {
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", t.name))).map_err(runtime)?;
        w.write_record(&t.header).map_err(runtime)?;
        for row in &t.rows {
            w.write_record(row).map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }
    let manifest = serde_json::json!({"preset": r.preset, "criterion": r.number});
    let f = File::create(dir.join("manifest.json")).map_err(runtime)?;
    RunManifest::new(&manifest, Some(seed))?.write(BufWriter::new(f))?;
    Ok(())
}

fn emit(fields: &[(&str, f64)], csv: bool) -> CmdResult {
    let mut out = io::stdout().lock();
    if csv {
        let names: Vec<&str> = fields.iter().map(|f| f.0).collect();
        let values: Vec<String> = fields.iter().map(|f| f.1.to_string()).collect();
        writeln!(out, "{}\n{}", names.join(","), values.join(",")).map_err(runtime)
    } else if let [(_, v)] = fields {
        writeln!(out, "{}", sig6(*v)).map_err(runtime)
    } else {
        for (k, v) in fields {
            writeln!(out, "{k}: {}", sig6(*v)).map_err(runtime)?;
        }
        Ok(())
    }
}

fn cmd_oracle(oracle: Oracle, csv: bool) -> CmdResult {
    match oracle {
        Oracle::E1 { x } => emit(&[("e1", oracles::exp_integral_e1(x)?)], csv),
        Oracle::PropAmplification { x } => {
            emit(&[("amplification", oracles::prop_amplification(x)?)], csv)
        }
        Oracle::PropHopThreshold => emit(&[("x0", oracles::prop_hop_threshold()?)], csv),
        Oracle::Hop { m, fallback } => {
            emit(&[("amplification", oracles::hop_amplification(m, fallback)?)], csv)
        }
        Oracle::HopTable { m_max } => {
            let rows = oracles::hop_table(m_max)?;
            let mut out = io::stdout().lock();
            let w = |out: &mut io::StdoutLock, s: String| writeln!(out, "{s}").map_err(runtime);
            w(&mut out, "m,with_fallback,without_fallback".into())?;
            for r in rows {
                let line = if csv {
                    format!("{},{},{}", r.m, r.amp_with_fallback, r.amp_without_fallback)
                } else {
                    format!("{},{},{}", r.m, sig6(r.amp_with_fallback), sig6(r.amp_without_fallback))
                };
                w(&mut out, line)?;
            }
            Ok(())
        }
        Oracle::PropHonestLoss => {
            let l = oracles::prop_honest_loss()?;
            emit(&[("integral", l.integral), ("closed_form", l.closed_form)], csv)
        }
        Oracle::PropShareVariance { p, b } => {
            let v = oracles::prop_share_variance(p, b)?;
            emit(
                &[
                    ("mean", v.mean),
                    ("variance", v.variance),
                    ("solo_variance", v.solo_variance),
                    ("improvement", v.improvement),
                ],
                csv,
            )
        }
        Oracle::PpsReserve { b, f, delta } => {
            emit(&[("reserve", oracles::pps_reserve(b, f, delta)?)], csv)
        }
        Oracle::PpsRuin { b, f, r } => {
            emit(&[("ruin_probability", oracles::pps_ruin_probability(b, f, r)?)], csv)
        }
        Oracle::GeometricStats { p, c, f, b } => {
            let g = oracles::geometric_stats(p, c, f, b)?;
            emit(
                &[
                    ("mean", g.mean),
                    ("variance", g.variance),
                    ("maturity", g.maturity),
                    ("fee_mean", g.fee_mean),
                    ("fee_variance", g.fee_variance),
                ],
                csv,
            )
        }
        Oracle::MppsLoss { n } => emit(&[("loss", oracles::mpps_expected_loss(n)?)], csv),
        Oracle::SmppsMaturity { r, b } => {
            emit(&[("maturity_blocks", oracles::smpps_maturity(r, b)?)], csv)
        }
        Oracle::Immunity { p, n_max, total } => {
            let t = oracles::immunity_solve(p, n_max, total)?;
            let mut out = io::stdout().lock();
            writeln!(out, "N,I,f").map_err(runtime)?;
            for n in 1..=t.n_max() {
                for i in 1..=n {
                    let v = t.get(i, n);
                    let v = if csv { v.to_string() } else { sig6(v) };
                    writeln!(out, "{n},{i},{v}").map_err(runtime)?;
                }
            }
            Ok(())
        }
        Oracle::Fluctuation { lambda0, lambda_bar, c } => emit(
            &[("amplification", oracles::fluctuation_amplification(lambda0, lambda_bar, c)?)],
            csv,
        ),
        Oracle::Liw { m, h, h0, t0, p, b } => {
            let l = oracles::liw_optimum(m, h, h0, t0, p, b)?;
            emit(
                &[
                    ("t_opt", l.t_opt),
                    ("amplification", l.amplification),
                    ("gain_per_block", l.gain_per_block),
                ],
                csv,
            )
        }
        Oracle::PosteriorDifficulty { difficulties } => emit(
            &[("amplification", oracles::posterior_difficulty_amplification(&difficulties)?)],
            csv,
        ),
        Oracle::ExpectedBlocks { h, t, d } => {
            emit(&[("blocks", stochastic::expected_blocks(h, t, d)?)], csv)
        }
        Oracle::SoloStats { h, t, d, b } => {
            let s = stochastic::solo_payout_stats(h, t, d, b)?;
            emit(
                &[
                    ("mean", s.mean),
                    ("variance", s.variance),
                    ("rel_stddev", s.rel_stddev),
                    ("p_any_payment", s.p_any_payment),
                ],
                csv,
            )
        }
        Oracle::PoissonPmf { lambda, k } => {
            emit(&[("pmf", stochastic::pmf_poisson(lambda, k)?)], csv)
        }
        Oracle::GeometricPmf { p, n } => {
            emit(&[("pmf", stochastic::pmf_geometric(p, n)?)], csv)
        }
    }
}

fn read_log(path: &Path) -> Result<Vec<stochastic::ShareEvent>, Failure> {
    let f = File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    read_replay_log(BufReader::new(f)).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn engine_config(spec: &str) -> Result<EngineConfig, Failure> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        read_text(Path::new(spec))?
    };
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: EngineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        Failure::Config(format!("engine config at `{}`: {}", e.path(), e.inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_replay(log: &Path, engine: &str, out: Option<&Path>) -> CmdResult {
    let cfg = engine_config(engine)?;
    let events = read_log(log)?;
    let (engine, ledger) = replay(&events, &cfg)?;
    ledger.snapshot(&engine).write_csv(open_out(out)?)?;
    Ok(())
}

fn cmd_migrate(args: MigrateArgs) -> CmdResult {
    let events = read_log(&args.log)?;
    let cfg = EngineConfig::PplnsUnit { f: args.f, x: args.x };
    cfg.validate()?;
    let (mut engine, _) = replay(&events, &cfg)?;
    let before = engine.pending_all();
    let strategy = match args.strategy {
        Strategy::Scale => MigrationStrategy::Scale,
        Strategy::KeepUnits => MigrationStrategy::KeepUnits,
    };
    let at = events.last().map_or(0, |e| e.index + 1);
    let unit = engine
        .method_mut::<UnitPplns>()
        .ok_or_else(|| Failure::Runtime("engine is not unit PPLNS".into()))?;
    let paid = unit.migrate(args.to_f, args.to_x, strategy, at)?;
    unit.write_timeline(open_out(args.out.as_deref())?)?;

    let mut worst: f64 = 0.0;
    for (m, v) in &before {
        let immediate: f64 = paid
            .iter()
            .filter(|p| p.recipient == Recipient::Miner(*m))
            .map(|p| p.amount)
            .sum();
        worst = worst.max((engine.pending(*m) + immediate - v).abs());
    }
    let immediate: f64 = paid.iter().map(|p| p.amount).sum();
    eprintln!("paid at migration: {}; max pending change: {:e}", sig6(immediate), worst);
    Ok(())
}

fn parse_schedule(name: &str, text: &str) -> Result<Schedule, Failure> {
    let bad = || Failure::Config(format!("`--{name}` expects V or start:V,start:V,..., got `{text}`"));
    if !text.contains(':') {
        return text.trim().parse().map(Schedule::Constant).map_err(|_| bad());
    }
    text.split(',')
        .map(|seg| {
            let (s, v) = seg.split_once(':').ok_or_else(bad)?;
            Ok((s.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Schedule::Segments)
}

fn cmd_gen_log(args: GenLogArgs) -> CmdResult {
    let difficulty = parse_schedule("difficulty", &args.difficulty)?.difficulty()?;
    let reward = parse_schedule("reward", &args.reward)?.reward()?;
    let miners: Vec<MinerSpec> = args
        .miners
        .iter()
        .enumerate()
        .map(|(i, &h)| MinerSpec::new(i as _, h))
        .collect();
    let mut rng = RngStream::new(args.seed, 0);
    let events = generate_stream(&mut rng, &difficulty, &reward, &miners, args.shares)?;
    write_replay_log(&events, open_out(args.out.as_deref())?)?;
    Ok(())
}

fn cmd_presets() -> CmdResult {
    let mut out = io::stdout().lock();
    let mut text = String::from("scenario presets:\n");
    for p in SCENARIO_PRESETS {
        text += &format!("  {p}\n");
    }
    text += "criterion presets:\n";
    for (n, p, title) in CRITERIA {
        text += &format!("  {p:<22} criterion {n}: {title}\n");
    }
    out.write_all(text.as_bytes()).map_err(runtime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formats() {
        assert_eq!(sig6(3453.877639), "3453.88");
        assert_eq!(sig6(1.281494), "1.28149");
        assert_eq!(sig6(0.1251100357), "0.12511");
        assert_eq!(sig6(2.0), "2");
        assert_eq!(sig6(1.5e-9), "1.5e-9");
        assert_eq!(sig6(-1234567.0), "-1.23457e6");
    }

    #[test]
    fn schedules_parse() {
        assert_eq!(parse_schedule("d", "1000").ok(), Some(Schedule::Constant(1000.0)));
        assert_eq!(
            parse_schedule("d", "0:1000,500:2000").ok(),
            Some(Schedule::Segments(vec![(0, 1000.0), (500, 2000.0)]))
        );
        assert!(parse_schedule("d", "0:x").is_err());
    }

    #[test]
    fn cli_definition_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        assert!(oracle_names().contains(&"pps-reserve".to_string()));
    }
}
