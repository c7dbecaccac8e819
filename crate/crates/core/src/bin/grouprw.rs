use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use grouprw::experiments::acceptance::{acceptance_suite_with, Tolerances, CRITERIA};
use grouprw::experiments::{
    evaluate, load_cocycle, run, series_csv, Budget, ExperimentConfig, ExperimentKind, Params, ResultRecord,
};
use grouprw::measure::DiskCache;
use grouprw::{Error, Result};

/// Random-walk experiments on finitely generated groups.
///
/// Set GROUPRW_CACHE to a directory to cache convolution powers.
/// Exit codes: 0 success, 1 io or failed acceptance criteria, 2 invalid
/// input, 3 budget exceeded (partial results are still printed).
#[derive(Parser)]
#[command(name = "grouprw", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Exact or truncated convolution power mu^n.
    Conv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        /// Comma separated elements to report (default: identity).
        #[arg(long, value_delimiter = ',')]
        g: Option<Vec<String>>,
    },
    /// Monte Carlo walk statistics.
    Walk {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value = "escape")]
        stat: String,
        #[arg(long, value_delimiter = ',')]
        c: Option<Vec<f64>>,
    },
    /// Drift exponent of a harmonic cocycle.
    Beta {
        #[command(flatten)]
        common: Common,
        /// Catalog name or cocycle file.
        #[arg(long)]
        cocycle: String,
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Limit law of |b(w_n)|/sqrt(n) against the walk.
    Chi {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cocycle: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Thinness scores rho_n(g) and alpha_n.
    Thin {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
        /// Norm exponent, a number >= 1 or `card`.
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        g: Option<Vec<String>>,
    },
    /// Concentration ratio of the m-step residual at time n.
    #[command(name = "thmB")]
    ThmB {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Sufficient conditions for property H_FD.
    Hfd {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
        #[arg(long)]
        cond: u8,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        c: Option<Vec<f64>>,
    },
    /// Return-probability ratio diagnostic.
    Kesten {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
    },
    /// Runs the acceptance criteria.
    Accept {
        #[arg(long, default_value_t = 20240611)]
        seed: u64,
        /// Comma separated criterion ids (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
        #[arg(long)]
        json: bool,
    },
    /// Runs a TOML experiment config and writes its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Args)]
struct Common {
    /// Group id, e.g. `Z^d:d=2`, `F:k=2`, `grigorchuk`, `product:Z^d:d=2|F:k=2`.
    #[arg(long)]
    group: Option<String>,
    /// Step measure: srw, lazy, lazy:<p>, uniform:<elems>, weights:<g>=<w>,..., product:<a>|<b>.
    #[arg(long, default_value = "srw")]
    mu: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "exact")]
    backend: String,
    /// Per-step truncation threshold (float backend only).
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long)]
    max_support: Option<usize>,
    /// Also write config, record and CSVs under <out>/<config hash>/.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Range {
    #[arg(long)]
    nmin: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Explicit subsequence n_1,n_2,...; overrides nmin/nmax.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Range {
    fn apply(self, p: &mut Params) {
        p.nmin = self.nmin;
        p.nmax = self.nmax;
        p.ns = self.ns;
    }
}

fn config(kind: ExperimentKind, common: &Common, group: String, params: Params) -> ExperimentConfig {
    let mut budget = Budget {
        eps: common.eps,
        ..Budget::default()
    };
    if let Some(m) = common.max_support {
        budget.max_support = m;
    }
    ExperimentConfig {
        kind,
        group,
        mu: common.mu.clone(),
        seed: common.seed,
        backend: common.backend.clone(),
        params,
        budget,
    }
}

fn need_group(common: &Common) -> Result<String> {
    common.group.clone().ok_or_else(|| Error::Validation {
        field: "group".into(),
        message: "--group is required".into(),
    })
}

fn print_csv(record: &ResultRecord, out: &mut impl Write) -> std::io::Result<()> {
    if record.series.is_empty() {
        writeln!(out, "metric,value,err_lo,err_hi")?;
        for m in &record.metrics {
            writeln!(out, "{},{:e},{:e},{:e}", m.name, m.value, m.err_lo, m.err_hi)?;
        }
        return Ok(());
    }
    for (name, rows) in &record.series {
        if record.series.len() > 1 {
            writeln!(out, "# {name}")?;
        }
        write!(out, "{}", series_csv(rows))?;
    }
    Ok(())
}

fn emit(record: &ResultRecord, format: Format) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(record).expect("records serialize"))?,
        Format::Csv => print_csv(record, &mut out)?,
    }
    if record.incomplete {
        log::warn!("budget exceeded; results are partial");
    }
    Ok(())
}

fn execute(cfg: ExperimentConfig, out: Option<PathBuf>, format: Format) -> Result<ExitCode> {
    let cache = DiskCache::from_env();
    let record = match out {
        Some(root) => {
            let (record, dir) = run(&cfg, &root, cache.as_ref())?;
            log::info!("wrote {}", dir.display());
            record
        }
        None => evaluate(&cfg, cache.as_ref())?,
    };
    emit(&record, format)?;
    Ok(if record.incomplete { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn accept(seed: u64, only: Option<Vec<u8>>, json: bool) -> Result<ExitCode> {
    let ids = only.unwrap_or_else(|| CRITERIA.iter().map(|c| c.0).collect());
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(Error::Validation {
            field: "only".into(),
            message: format!("no criterion {bad}"),
        });
    }
    let report = acceptance_suite_with(seed, &Tolerances::default(), &ids);
    let mut out = std::io::stdout().lock();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("reports serialize"))?;
    } else {
        for line in report.lines() {
            writeln!(out, "{line}")?;
        }
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    use ExperimentKind as K;
    let (cfg, common) = match cli.verb {
        Verb::Accept { seed, only, json } => return accept(seed, only, json),
        Verb::Run { config, out, format } => {
            let cfg = ExperimentConfig::load(&config)?;
            let default = default_format(cfg.kind);
            return execute(cfg, Some(out), format.unwrap_or(default));
        }
        Verb::Conv { common, n, g } => {
            let params = Params {
                n: Some(n),
                elements: g,
                ..Params::default()
            };
            (config(K::Conv, &common, need_group(&common)?, params), common)
        }
        Verb::Walk { common, n, trials, stat, c } => {
            let params = Params {
                n: Some(n),
                trials,
                stat: Some(stat),
                c,
                ..Params::default()
            };
            (config(K::Walk, &common, need_group(&common)?, params), common)
        }
        Verb::Beta { common, cocycle, mode, n, trials } => {
            let group = match &common.group {
                Some(g) => g.clone(),
                None => load_cocycle(&cocycle)?.group().id().to_string(),
            };
            let params = Params {
                n: Some(n),
                trials,
                cocycle: Some(cocycle),
                mode: Some(mode),
                ..Params::default()
            };
            (config(K::Beta, &common, group, params), common)
        }
        Verb::Chi { common, cocycle, n, trials } => {
            let group = match &common.group {
                Some(g) => g.clone(),
                None => load_cocycle(&cocycle)?.group().id().to_string(),
            };
            let params = Params {
                n: Some(n),
                trials,
                cocycle: Some(cocycle),
                ..Params::default()
            };
            (config(K::Chi, &common, group, params), common)
        }
        Verb::Thin { common, range, p, q, g } => {
            let mut params = Params {
                p: Some(p),
                q,
                elements: g,
                ..Params::default()
            };
            range.apply(&mut params);
            (config(K::Thin, &common, need_group(&common)?, params), common)
        }
        Verb::ThmB { common, m, n, trials } => {
            let params = Params {
                m: Some(m),
                n: Some(n),
                trials,
                ..Params::default()
            };
            (config(K::Concentration, &common, need_group(&common)?, params), common)
        }
        Verb::Hfd { common, range, cond, delta, c } => {
            let mut params = Params {
                cond: Some(cond),
                delta,
                c,
                ..Params::default()
            };
            range.apply(&mut params);
            (config(K::Hfd, &common, need_group(&common)?, params), common)
        }
        Verb::Kesten { common, range } => {
            let mut params = Params::default();
            range.apply(&mut params);
            (config(K::Kesten, &common, need_group(&common)?, params), common)
        }
    };
    let format = common.format.unwrap_or(default_format(cfg.kind));
    execute(cfg, common.out, format)
}

fn default_format(kind: ExperimentKind) -> Format {
    match kind {
        ExperimentKind::Thin | ExperimentKind::Concentration | ExperimentKind::Hfd | ExperimentKind::Kesten => Format::Csv,
        _ => Format::Json,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
