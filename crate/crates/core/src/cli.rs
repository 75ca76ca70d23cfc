//! Command-line front end. Commands render their whole output to strings so
//! runs are byte-reproducible and testable without a process boundary.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::adversary::{run_with_attack, CampaignConfig, Protocol};
use crate::bits::BitString;
use crate::channel::ChannelNoise;
use crate::config::{Format, RunConfig};
use crate::efficiency::efficiency;
use crate::error::{Error, Result};
use crate::fidelity::{dispatch, verify_all_formulas, Trips, VERIFY_TOLERANCE};
use crate::grid::{all_kind_pairs, fidelity_grid, to_csv, GridSpec};
use crate::osb::{run_osb, OsbConfig};
use crate::rng::RunContext;
use crate::sqpc::{run_sqpc, SqpcConfig};
use crate::state::BellState;
use crate::transcript::{Transcript, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ABORTED: i32 = 2;
pub const EXIT_FORMULA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qpc", version, about = "Quantum private comparison simulator and noise analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one protocol execution and write its transcript.
    Run(Flags),
    /// Emit closed-form vs. oracle fidelity surfaces as CSV.
    FidelityGrid(Flags),
    /// Run an attack campaign and report detection statistics.
    Attack(Flags),
    /// Print the resource ledger and efficiency per protocol and N.
    Efficiency(Flags),
    /// Check every closed-form fidelity against Kraus evolution.
    VerifyFormulas(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Run(f)
            | Command::FidelityGrid(f)
            | Command::Attack(f)
            | Command::Efficiency(f)
            | Command::VerifyFormulas(f) => f,
        }
    }
}

/// Flags shared by every command; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// File of key=value lines applied before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// osb or sqpc.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Message length in bits.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Alice's message as hex.
    #[arg(long)]
    pub ma: Option<String>,
    /// Bob's message as hex.
    #[arg(long)]
    pub mb: Option<String>,
    /// Noise on Alice's arm, kind:p (e.g. bf:1.0).
    #[arg(long)]
    pub noise_a: Option<String>,
    /// Noise on Bob's arm, kind:p.
    #[arg(long)]
    pub noise_b: Option<String>,
    /// oneway or roundtrip.
    #[arg(long)]
    pub trips: Option<String>,
    /// Kind pair filter for grids, e.g. AD-DC.
    #[arg(long)]
    pub kinds: Option<String>,
    /// name[:fraction], e.g. intercept-resend:0.5.
    #[arg(long)]
    pub attack: Option<String>,
    #[arg(long)]
    pub tolerance: Option<String>,
    /// Fraction of OSB message pairs sacrificed to the parity check.
    #[arg(long)]
    pub check_fraction: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    /// Grid step; must divide 1.
    #[arg(long)]
    pub step: Option<String>,
    /// Comma-separated N values for efficiency tables.
    #[arg(long)]
    pub ns: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// csv or log.
    #[arg(long)]
    pub format: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("protocol", &self.protocol),
            ("n", &self.n),
            ("seed", &self.seed),
            ("ma", &self.ma),
            ("mb", &self.mb),
            ("noise_a", &self.noise_a),
            ("noise_b", &self.noise_b),
            ("trips", &self.trips),
            ("kinds", &self.kinds),
            ("attack", &self.attack),
            ("tolerance", &self.tolerance),
            ("check_fraction", &self.check_fraction),
            ("trials", &self.trials),
            ("step", &self.step),
            ("ns", &self.ns),
            ("out", &self.out),
            ("format", &self.format),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_text(&text)
                .map_err(|e| Error::Parse(format!("{}: {}", path.display(), e)))?;
        }
        for (k, v) in self.overrides() {
            cfg.set(k, v).map_err(|e| Error::Parse(format!("--{}: {e}", k.replace('_', "-"))))?;
        }
        Ok(cfg)
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    /// Main artifact, written to `--out` when given and to stdout otherwise.
    pub artifact: String,
}

pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Run(_) => cmd_run(cfg),
        Command::FidelityGrid(_) => cmd_fidelity_grid(cfg),
        Command::Attack(_) => cmd_attack(cfg),
        Command::Efficiency(_) => cmd_efficiency(cfg),
        Command::VerifyFormulas(_) => cmd_verify_formulas(cfg),
    }
}

fn messages(cfg: &RunConfig) -> Result<(BitString, BitString)> {
    if cfg.n == 0 {
        return Err(Error::ZeroCount);
    }
    let m = |hex: &Option<String>| BitString::from_hex(hex.as_deref().unwrap_or("0"), cfg.n);
    Ok((m(&cfg.ma)?, m(&cfg.mb)?))
}

fn noise(cfg: &RunConfig) -> Result<ChannelNoise> {
    ChannelNoise::new(cfg.noise_a, cfg.noise_b)
}

pub fn cmd_run(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.format == Some(Format::Csv) {
        return Err(Error::Parse("run writes a line-delimited log; csv is not supported".into()));
    }
    let (m_a, m_b) = messages(cfg)?;
    let ctx = RunContext::new(cfg.seed);
    let (verdict, transcript, attempts): (Verdict, Transcript, u64) = match cfg.protocol {
        Protocol::Osb => {
            let run = run_osb(
                &OsbConfig {
                    n: cfg.n,
                    m_a,
                    m_b,
                    tolerance: cfg.tolerance,
                    check_fraction: cfg.check_fraction,
                    noise: noise(cfg)?,
                    attack: cfg.attack,
                },
                ctx,
            )?;
            (run.verdict, run.transcript, 1)
        }
        Protocol::Sqpc => {
            let run = run_sqpc(
                &SqpcConfig {
                    n: cfg.n,
                    m_a,
                    m_b,
                    tolerance: cfg.tolerance,
                    noise: noise(cfg)?,
                    attack: cfg.attack,
                },
                ctx,
            )?;
            (run.verdict, run.transcript, run.attempts)
        }
    };
    let code = if verdict.is_aborted() { EXIT_ABORTED } else { EXIT_OK };
    Ok(Outcome {
        code,
        stdout: format!(
            "protocol={} n={} seed={} attempts={} verdict={verdict}\n",
            cfg.protocol, cfg.n, cfg.seed, attempts
        ),
        stderr: String::new(),
        artifact: transcript.to_log(),
    })
}

pub fn cmd_fidelity_grid(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.format == Some(Format::Log) {
        return Err(Error::Parse("fidelity-grid writes csv only".into()));
    }
    let spec = GridSpec {
        step: cfg.step,
        trips: cfg.trips.map_or_else(|| Trips::ALL.to_vec(), |t| vec![t]),
        kind_pairs: cfg.kinds.map_or_else(all_kind_pairs, |k| vec![k]),
    };
    let rows = fidelity_grid(&spec)?;
    let mut stderr = String::new();
    let mut worst = 0.0f64;
    for r in &rows {
        worst = worst.max(r.abs_deviation);
        if r.abs_deviation.is_nan() || r.abs_deviation >= VERIFY_TOLERANCE {
            let initial = if r.parity { BellState::PhiPlus } else { BellState::PsiPlus };
            let family = dispatch(r.kinds.0, r.kinds.1, initial, r.trips).family;
            let _ = writeln!(
                stderr,
                "formula mismatch: {family} at p1={} p2={} deviation={}",
                r.p1, r.p2, r.abs_deviation
            );
        }
    }
    Ok(Outcome {
        code: if stderr.is_empty() { EXIT_OK } else { EXIT_FORMULA },
        stdout: format!("rows={} max_abs_deviation={worst}\n", rows.len()),
        stderr,
        artifact: to_csv(&rows),
    })
}

pub fn cmd_attack(cfg: &RunConfig) -> Result<Outcome> {
    let campaign = CampaignConfig {
        protocol: cfg.protocol,
        n: cfg.n,
        strategy: cfg.attack,
        trials: cfg.trials,
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        check_fraction: cfg.check_fraction,
        noise: noise(cfg)?,
    };
    let stats = run_with_attack(&campaign)?;
    let artifact = match cfg.format {
        Some(Format::Csv) => {
            let by_stage: Vec<String> = stats
                .detections_by_stage
                .iter()
                .map(|(s, c)| format!("{s}:{c}"))
                .collect();
            format!(
                "protocol,attack,n,trials,detections,detection_rate,by_stage,check_pairs,check_errors,check_error_rate,corrupted,corruption_rate,mean_key_bits_recovered\n\
                 {},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                stats.protocol,
                stats.strategy,
                stats.n,
                stats.trials,
                stats.detections,
                stats.detection_rate(),
                by_stage.join(";"),
                stats.check_pairs,
                stats.check_errors,
                stats.check_error_rate(),
                stats.verdict_corruptions,
                stats.corruption_rate(),
                stats.mean_key_bits_recovered()
            )
        }
        _ => format!("{}\n", stats.to_record()),
    };
    Ok(Outcome {
        code: EXIT_OK,
        stdout: String::new(),
        stderr: String::new(),
        artifact,
    })
}

pub fn cmd_efficiency(cfg: &RunConfig) -> Result<Outcome> {
    let csv = cfg.format == Some(Format::Csv);
    let mut out = String::new();
    if csv {
        out.push_str("protocol,n,c,q,b,eta,eta_percent\n");
    }
    for &n in &cfg.ns {
        for p in [Protocol::Osb, Protocol::Sqpc] {
            let l = efficiency(p, n)?;
            if csv {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{:.4}",
                    p,
                    n,
                    l.c,
                    l.q(),
                    l.b(),
                    l.eta(),
                    100.0 * l.eta_f64()
                );
            } else {
                let _ = writeln!(out, "{}", l.to_record());
            }
        }
    }
    Ok(Outcome {
        code: EXIT_OK,
        artifact: out,
        ..Default::default()
    })
}

pub fn cmd_verify_formulas(cfg: &RunConfig) -> Result<Outcome> {
    let report = verify_all_formulas(cfg.step)?;
    let mut out = String::new();
    for f in &report.families {
        let _ = writeln!(
            out,
            "family={} source={:?} max_deviation={:e} printed_max_deviation={:e} worst_p1={} worst_p2={} evaluations={}",
            f.family,
            f.source,
            f.max_deviation,
            f.printed_max_deviation,
            f.worst_point.0,
            f.worst_point.1,
            f.evaluations
        );
    }
    let _ = writeln!(
        out,
        "step={} tolerance={:e} oneway_families={} roundtrip_families={} passed={}",
        report.grid_step,
        report.tolerance,
        report.count(Trips::OneWay),
        report.count(Trips::RoundTrip),
        report.passed()
    );
    let stderr: String = report
        .failures()
        .map(|f| format!("formula mismatch: {} max_deviation={:e}\n", f.family, f.max_deviation))
        .collect();
    Ok(Outcome {
        code: if report.passed() { EXIT_OK } else { EXIT_FORMULA },
        stdout: String::new(),
        stderr,
        artifact: out,
    })
}

/// Parses, runs, and writes. Returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = cli
        .command
        .flags()
        .resolve()
        .and_then(|cfg| execute(&cli.command, &cfg).map(|o| (cfg, o)));
    let (cfg, outcome) = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.artifact) {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => {
            let _ = stdout.write_all(outcome.artifact.as_bytes());
        }
    }
    let _ = stdout.write_all(outcome.stdout.as_bytes());
    let _ = stderr.write_all(outcome.stderr.as_bytes());
    outcome.code
}
