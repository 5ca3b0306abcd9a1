use std::path::PathBuf;
use std::process::ExitCode;

use bell_core::{prop_bound, szk_bound, tail_probability, CoefficientScheme, PropKind, LOG_BASE};
use bell_harness::{
    emit_results, run_campaign, CampaignConfig, CampaignKind, HarnessError, OutputFormat, Result, StateSelector,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bellmc",
    version,
    about = "Monte Carlo campaigns for random Bell operator norms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coplanar max-norm of random-sign operators against 9 sqrt(rn ln n).
    CoplanarMc {
        #[command(flatten)]
        common: Common,
        /// Also record the classical value of every trial.
        #[arg(long)]
        with_lhv: bool,
    },
    /// Werner-Wolf operators of random sign functions against 13 sqrt(n).
    WwMc {
        #[command(flatten)]
        common: Common,
        /// Sweep every sign function (n <= 4).
        #[arg(long)]
        exhaustive: bool,
    },
    /// max |<phi|Q|phi>| over directions against 36 sqrt(rn ln n).
    ExpectationMc {
        #[command(flatten)]
        common: Common,
        /// ghz, random or eigen.
        #[arg(long, value_parser = parse_state)]
        state: Option<StateSelector>,
    },
    /// Classical (local hidden variable) values of random-sign operators.
    Lhv {
        #[command(flatten)]
        common: Common,
        /// Restarts for the heuristic used when rn > 24.
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Mermin-Klyshko operators for 2..=n at their optimal directions.
    MkBaseline {
        #[command(flatten)]
        common: Common,
    },
    /// Print the closed-form bounds for (n, r).
    Bound {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// uniform, random or random:<seed>.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<CoefficientScheme>,
    /// Optimizer starts per trial (ww-mc: 0 evaluates at fixed random directions).
    #[arg(long)]
    starts: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// JSON campaign config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exit with status 4 when the empirical pass fraction falls below the guaranteed one.
    #[arg(long)]
    assert_bounds: bool,
    /// Record per-trial wall time (makes outputs run-dependent).
    #[arg(long)]
    timing: bool,
}

fn parse_scheme(s: &str) -> std::result::Result<CoefficientScheme, String> {
    match s.split_once(':') {
        None if s == "uniform" => Ok(CoefficientScheme::Uniform),
        None if s == "random" => Ok(CoefficientScheme::RandomNormalized { seed: 0 }),
        Some(("random", seed)) => seed
            .parse()
            .map(|seed| CoefficientScheme::RandomNormalized { seed })
            .map_err(|e| format!("bad scheme seed {seed:?}: {e}")),
        _ => Err(format!(
            "unknown scheme {s:?}; expected uniform, random or random:<seed>"
        )),
    }
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        _ => Err(format!("unknown format {s:?}; expected csv or json")),
    }
}

fn parse_state(s: &str) -> std::result::Result<StateSelector, String> {
    match s {
        "ghz" => Ok(StateSelector::Ghz),
        "random" => Ok(StateSelector::Random),
        "eigen" => Ok(StateSelector::Eigen),
        _ => Err(format!("unknown state {s:?}; expected ghz, random or eigen")),
    }
}

impl Common {
    fn build(self, kind: CampaignKind) -> Result<(CampaignConfig, bool)> {
        let mut cfg = match &self.config {
            Some(path) => CampaignConfig::from_json_file(path)?,
            None => CampaignConfig::default(),
        };
        cfg.kind = kind;
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = self.starts {
            cfg.optimizer.starts = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        if let Some(v) = self.out {
            cfg.output_path = Some(v);
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if self.timing {
            cfg.record_timing = true;
        }
        Ok((cfg, self.assert_bounds))
    }
}

fn print_bounds(n: usize, r: usize) -> Result<()> {
    let prop3 = match prop_bound(PropKind::Prop3, n, r) {
        Ok(v) => Some(v),
        Err(bell_core::BellError::Unsupported(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let report = serde_json::json!({
        "n": n,
        "r": r,
        "prop1": prop_bound(PropKind::Prop1, n, r)?,
        "prop2": prop_bound(PropKind::Prop2, n, r)?,
        "prop3": prop3,
        "szk_bound": szk_bound(r * n, n, 1.0)?,
        "tail_probability": tail_probability(n, r)?,
        "log_base": LOG_BASE,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (kind, common, tweak): (CampaignKind, Common, Box<dyn FnOnce(&mut CampaignConfig)>) = match cli.command {
        Command::Bound { n, r } => {
            if n < 2 || r < 1 {
                return Err(HarnessError::Config(format!(
                    "bounds need n >= 2 and r >= 1, got n = {n}, r = {r}"
                )));
            }
            print_bounds(n, r)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::CoplanarMc { common, with_lhv } => (
            CampaignKind::CoplanarMc,
            common,
            Box::new(move |c| c.with_lhv |= with_lhv),
        ),
        Command::WwMc { common, exhaustive } => (
            CampaignKind::WwMc,
            common,
            Box::new(move |c| c.exhaustive |= exhaustive),
        ),
        Command::ExpectationMc { common, state } => (
            CampaignKind::ExpectationMc,
            common,
            Box::new(move |c| {
                if let Some(s) = state {
                    c.state = s;
                }
            }),
        ),
        Command::Lhv { common, restarts } => (
            CampaignKind::LhvSweep,
            common,
            Box::new(move |c| {
                if let Some(v) = restarts {
                    c.lhv_restarts = v;
                }
            }),
        ),
        Command::MkBaseline { common } => (CampaignKind::MkBaseline, common, Box::new(|_| {})),
    };
    let (mut cfg, assert_bounds) = common.build(kind)?;
    tweak(&mut cfg);
    let output = run_campaign(&cfg)?;
    emit_results(&output, cfg.format, cfg.output_path.as_deref())?;
    let s = &output.summary;
    eprintln!(
        "{:?}: {}/{} passed (empirical {:.6}, guaranteed {}), max estimate {:.6}, bound {:.6}",
        s.kind,
        s.passed,
        s.trials,
        s.empirical_pass_fraction,
        s.paper_bound_fraction.map_or("n/a".to_string(), |p| format!("{p:.6}")),
        s.quantiles.max,
        s.bound
    );
    if assert_bounds && !s.bounds_hold() {
        eprintln!("bound check failed");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
