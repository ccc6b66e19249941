//! Command-line harness: `simulate`, `sweep` and `compare-filters`.
//!
//! Settings resolve in three layers: per-circuit defaults, then an optional
//! `key=value` file (`--config`), then flags. Every output directory gets a
//! `manifest` listing every resolved key; feeding it back through
//! `--config` reproduces the outputs byte for byte.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::codec::FilterSpec;
use crate::error::{Error, Result};
use crate::link::{
    run_link, sweep_noise, sweep_plot_data, sweep_runs_csv, sweep_summary_csv, Circuit, LinkConfig,
    LinkResult,
};
use crate::oscillators::LorenzForm;
use crate::signals::{format_number, traces_to_csv, write_atomic, Trace};

/// Environment variable capping sweep worker threads.
pub const THREADS_ENV: &str = "CHAOSCOMM_THREADS";

/// Trace CSVs are decimated to at most this many rows unless a stride is set.
pub const MAX_TRACE_ROWS: usize = 200_000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "chaoscomm",
    version,
    about = "Simulate chaotic-masking communication links under channel noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one link and write its traces, report and manifest.
    Simulate(CommonArgs),
    /// Run a seeded noise-amplitude sweep.
    Sweep(CommonArgs),
    /// Run one scenario under every receiver filter.
    CompareFilters {
        #[command(flatten)]
        common: CommonArgs,
        /// Allow circuits other than A.
        #[arg(long)]
        any_circuit: bool,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// a | b | ca | cb
    #[arg(long)]
    pub circuit: Option<String>,
    /// Noise standard deviation as a percentage of the mean signal amplitude.
    #[arg(long)]
    pub noise_pct: Option<String>,
    /// sync | info | both | shared
    #[arg(long)]
    pub noise_target: Option<String>,
    /// 1 | 2 | 3 | none
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long)]
    pub kappa: Option<String>,
    /// Integration step in seconds.
    #[arg(long)]
    pub dt: Option<String>,
    /// Run length in seconds.
    #[arg(long)]
    pub duration: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub repeats: Option<String>,
    /// Comma-separated noise amplitudes in percent.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitudes: Option<String>,
    /// Key=value settings file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "chaoscomm-out")]
    pub out: PathBuf,
    /// Override any settings key, e.g. `--set warmup=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl CommonArgs {
    fn flag_entries(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (key, value) in [
            ("circuit", &self.circuit),
            ("noise_pct", &self.noise_pct),
            ("noise_target", &self.noise_target),
            ("filter", &self.filter),
            ("kappa", &self.kappa),
            ("dt", &self.dt),
            ("duration", &self.duration),
            ("seed", &self.seed),
            ("repeats", &self.repeats),
            ("amplitudes", &self.amplitudes),
        ] {
            if let Some(v) = value {
                out.push((key.to_string(), v.clone()));
            }
        }
        for item in &self.set {
            out.push(split_entry(item)?);
        }
        Ok(out)
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub link: LinkConfig,
    pub repeats: usize,
    pub amplitudes: Vec<f64>,
    /// Keep every `n`-th sample in trace CSVs; chosen from the run length
    /// when absent.
    pub trace_stride: Option<usize>,
}

impl Settings {
    pub fn for_circuit(circuit: Circuit) -> Self {
        let amplitudes = match circuit {
            Circuit::A => vec![0.01, 0.1, 1.0, 5.0, 10.0, 20.0, 50.0],
            _ => vec![0.01, 0.1, 1.0, 5.0, 10.0],
        };
        Settings {
            link: LinkConfig::for_circuit(circuit),
            repeats: 10,
            amplitudes,
            trace_stride: None,
        }
    }

    /// Builds settings from `key=value` pairs; later pairs win.
    pub fn resolve(entries: &[(String, String)]) -> Result<Self> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        let mut order: Vec<&str> = Vec::new();
        for (k, v) in entries {
            if map.insert(k.as_str(), v.as_str()).is_none() {
                order.push(k.as_str());
            }
        }
        let circuit = match map.get("circuit") {
            Some(c) => c.parse()?,
            None => Circuit::A,
        };
        let mut settings = Settings::for_circuit(circuit);
        // Seed first so an explicit noise seed is not overwritten by it.
        let mut keys = order;
        keys.sort_by_key(|k| *k != "seed");
        for key in keys {
            if key != "circuit" {
                settings.apply(key, map[key])?;
            }
        }
        Ok(settings)
    }

    /// Sets one key. Unknown keys and unparsable values are errors.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.link;
        let num = || parse_f64(key, value);
        match key {
            "circuit" => c.circuit = value.parse()?,
            "noise_pct" => c.noise.amplitude_percent = num()?,
            "noise_target" => c.noise.placement = value.parse()?,
            "noise_seed" => c.noise.seed = parse_u64(key, value)?,
            "filter" => c.filter = value.parse()?,
            "kappa" => c.codec.kappa = num()?,
            "vo" => c.codec.vo = num()?,
            "mask_high" => c.codec.mask_high = num()?,
            "decode_threshold" => c.codec.decode_threshold = num()?,
            "vsat" => c.codec.vsat = num()?,
            "dt" => c.dt = num()?,
            "duration" => c.duration = num()?,
            "warmup" => c.warmup = num()?,
            "seed" => *c = c.clone().with_seed(parse_u64(key, value)?),
            "guard" => c.guard = num()?,
            "tx_initial" => c.tx_initial = parse_state(key, value)?,
            "rx_initial" => c.rx_initial = parse_state(key, value)?,
            "message_frequency" => c.message.frequency = num()?,
            "message_low" => c.message.low_level = num()?,
            "message_high" => c.message.high_level = num()?,
            "message_duty" => c.message.duty = num()?,
            "message_phase" => c.message.phase = num()?,
            "a_r" => c.circuit_a.r = num()?,
            "a_rs" => c.circuit_a.rs = num()?,
            "a_rf" => c.circuit_a.rf = num()?,
            "a_c" => c.circuit_a.c = num()?,
            "a_vsat" => c.circuit_a.vsat = num()?,
            "chua_c1" => c.chua.c1 = num()?,
            "chua_c2" => c.chua.c2 = num()?,
            "chua_l" => c.chua.l = num()?,
            "chua_pot_fraction" => c.chua.pot_fraction = num()?,
            "chua_pot_max" => c.chua.pot_max = num()?,
            "chua_ra" => c.chua.ra = num()?,
            "chua_rb" => c.chua.rb = num()?,
            "chua_rg1" => c.chua.rg1 = num()?,
            "chua_rg2" => c.chua.rg2 = num()?,
            "chua_esat" => c.chua.esat = num()?,
            "chua_saturation" => c.chua.saturation_segments = parse_bool(key, value)?,
            "lorenz_r" => c.lorenz.r = num()?,
            "lorenz_r50" => c.lorenz.r50 = num()?,
            "lorenz_rx" => c.lorenz.rx = num()?,
            "lorenz_r200" => c.lorenz.r200 = num()?,
            "lorenz_r30" => c.lorenz.r30 = num()?,
            "lorenz_r3" => c.lorenz.r3 = num()?,
            "lorenz_r6" => c.lorenz.r6 = num()?,
            "lorenz_c" => c.lorenz.c = num()?,
            "lorenz_form" => c.lorenz.form = parse_form(value)?,
            "repeats" => {
                self.repeats = usize::try_from(parse_u64(key, value)?)
                    .map_err(|_| Error::Config(format!("`{key}` is too large")))?
            }
            "amplitudes" => self.amplitudes = parse_list(key, value)?,
            "trace_stride" => {
                self.trace_stride =
                    match value.trim() {
                        "auto" => None,
                        v => Some(v.parse::<usize>().ok().filter(|s| *s > 0).ok_or_else(|| {
                            bad_value(key, value, "a positive integer or `auto`")
                        })?),
                    }
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.link;
        let f = |x: f64| format_number(x);
        let state = |s: &Option<Vec<f64>>| match s {
            Some(v) => v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(","),
            None => "seeded".to_string(),
        };
        vec![
            ("circuit", c.circuit.to_string()),
            ("noise_pct", f(c.noise.amplitude_percent)),
            ("noise_target", c.noise.placement.to_string()),
            ("seed", c.seed.to_string()),
            ("noise_seed", c.noise.seed.to_string()),
            ("filter", c.filter.to_string()),
            ("kappa", f(c.codec.kappa)),
            ("vo", f(c.codec.vo)),
            ("mask_high", f(c.codec.mask_high)),
            ("decode_threshold", f(c.codec.decode_threshold)),
            ("vsat", f(c.codec.vsat)),
            ("dt", f(c.dt)),
            ("duration", f(c.duration)),
            ("warmup", f(c.warmup)),
            ("guard", f(c.guard)),
            ("tx_initial", state(&c.tx_initial)),
            ("rx_initial", state(&c.rx_initial)),
            ("message_frequency", f(c.message.frequency)),
            ("message_low", f(c.message.low_level)),
            ("message_high", f(c.message.high_level)),
            ("message_duty", f(c.message.duty)),
            ("message_phase", f(c.message.phase)),
            ("a_r", f(c.circuit_a.r)),
            ("a_rs", f(c.circuit_a.rs)),
            ("a_rf", f(c.circuit_a.rf)),
            ("a_c", f(c.circuit_a.c)),
            ("a_vsat", f(c.circuit_a.vsat)),
            ("chua_c1", f(c.chua.c1)),
            ("chua_c2", f(c.chua.c2)),
            ("chua_l", f(c.chua.l)),
            ("chua_pot_fraction", f(c.chua.pot_fraction)),
            ("chua_pot_max", f(c.chua.pot_max)),
            ("chua_ra", f(c.chua.ra)),
            ("chua_rb", f(c.chua.rb)),
            ("chua_rg1", f(c.chua.rg1)),
            ("chua_rg2", f(c.chua.rg2)),
            ("chua_esat", f(c.chua.esat)),
            ("chua_saturation", c.chua.saturation_segments.to_string()),
            ("lorenz_r", f(c.lorenz.r)),
            ("lorenz_r50", f(c.lorenz.r50)),
            ("lorenz_rx", f(c.lorenz.rx)),
            ("lorenz_r200", f(c.lorenz.r200)),
            ("lorenz_r30", f(c.lorenz.r30)),
            ("lorenz_r3", f(c.lorenz.r3)),
            ("lorenz_r6", f(c.lorenz.r6)),
            ("lorenz_c", f(c.lorenz.c)),
            (
                "lorenz_form",
                match c.lorenz.form {
                    LorenzForm::AsPrinted => "as_printed",
                    LorenzForm::Consistent => "consistent",
                }
                .to_string(),
            ),
            ("repeats", self.repeats.to_string()),
            (
                "amplitudes",
                self.amplitudes
                    .iter()
                    .map(|a| f(*a))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            (
                "trace_stride",
                self.trace_stride
                    .map_or_else(|| "auto".to_string(), |s| s.to_string()),
            ),
        ]
    }
}

fn bad_value(key: &str, value: &str, expected: &str) -> Error {
    Error::Config(format!("`{key}`: expected {expected}, got `{value}`"))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad_value(key, value, "a finite number"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .trim()
        .parse::<u64>()
        .map_err(|_| bad_value(key, value, "a non-negative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    value
        .trim()
        .parse::<bool>()
        .map_err(|_| bad_value(key, value, "true or false"))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let value = value.trim();
    if value.is_empty() {
        return Err(Error::Config(format!("`{key}` is empty")));
    }
    value.split(',').map(|item| parse_f64(key, item)).collect()
}

fn parse_state(key: &str, value: &str) -> Result<Option<Vec<f64>>> {
    match value.trim() {
        "seeded" => Ok(None),
        v => parse_list(key, v).map(Some),
    }
}

fn parse_form(value: &str) -> Result<LorenzForm> {
    match value.trim() {
        "as_printed" => Ok(LorenzForm::AsPrinted),
        "consistent" => Ok(LorenzForm::Consistent),
        _ => Err(bad_value("lorenz_form", value, "as_printed or consistent")),
    }
}

fn split_entry(line: &str) -> Result<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got `{line}`")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("missing key in `{line}`")));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// Parses a `key=value` file. Blank lines and lines starting with `#` are
/// skipped; a key may appear once.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) =
            split_entry(line).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{k}`",
                i + 1
            )));
        }
        out.push((k, v));
    }
    Ok(out)
}

/// Reads and resolves a settings file on its own.
pub fn load_config(path: &Path) -> Result<Settings> {
    Settings::resolve(&read_config(path)?)
}

fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text)
}

fn resolve_args(args: &CommonArgs) -> Result<Settings> {
    let mut entries = match &args.config {
        Some(path) => read_config(path)?,
        None => Vec::new(),
    };
    entries.extend(args.flag_entries()?);
    let settings = Settings::resolve(&entries)?;
    settings.link.validate()?;
    Ok(settings)
}

fn manifest_text(settings: &Settings, command: &str, outputs: &[PathBuf]) -> String {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = String::new();
    let _ = writeln!(text, "# chaoscomm {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "# command: {command}");
    let _ = writeln!(text, "# timestamp_unix: {timestamp}");
    for p in outputs {
        let _ = writeln!(text, "# output: {}", p.display());
    }
    for (k, v) in settings.entries() {
        let _ = writeln!(text, "{k}={v}");
    }
    text
}

fn write_manifest(
    dir: &Path,
    settings: &Settings,
    command: &str,
    outputs: &[PathBuf],
) -> Result<()> {
    write_atomic(
        &dir.join("manifest"),
        manifest_text(settings, command, outputs).as_bytes(),
    )
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn decimate(traces: Vec<(String, Trace)>, stride: usize) -> Vec<(String, Trace)> {
    if stride <= 1 {
        return traces;
    }
    traces
        .into_iter()
        .map(|(name, tr)| {
            let samples = tr.samples().iter().step_by(stride).copied().collect();
            let dt = tr.dt() * stride as f64;
            (
                name,
                Trace::new(dt, tr.t0(), samples).expect("finite samples"),
            )
        })
        .collect()
}

fn auto_stride(steps: usize) -> usize {
    steps.div_ceil(MAX_TRACE_ROWS).max(1)
}

const REPORT_HEADER: &str =
    "circuit,placement,amplitude_pct,seed,ber,ber_polarity_agnostic,sync_rms,corr,antisync,alignment_lag_s,glitches";

fn report_csv(cfg: &LinkConfig, result: &LinkResult) -> String {
    let r = &result.report;
    format!(
        "{REPORT_HEADER}\n{},{},{},{},{},{},{},{},{},{},{}\n",
        cfg.circuit,
        cfg.noise.placement,
        format_number(cfg.noise.amplitude_percent),
        cfg.seed,
        format_number(r.ber),
        format_number(r.ber_polarity_agnostic),
        format_number(r.sync_rms),
        format_number(r.correlation),
        r.antisync,
        format_number(r.alignment_lag),
        r.glitches
    )
}

/// `simulate`: one run, writing `traces.csv`, `report.csv` and `manifest`.
pub fn cmd_simulate(args: &CommonArgs) -> Result<()> {
    let settings = resolve_args(args)?;
    let cfg = &settings.link;
    let result = run_link(cfg)?;
    prepare_dir(&args.out)?;
    let stride = settings
        .trace_stride
        .unwrap_or_else(|| auto_stride(cfg.steps()));
    let traces = decimate(result.named_traces(), stride);
    let traces_path = args.out.join("traces.csv");
    let report_path = args.out.join("report.csv");
    write_atomic(&traces_path, &traces_to_csv(&traces)?)?;
    let report = report_csv(cfg, &result);
    write_atomic(&report_path, report.as_bytes())?;
    write_manifest(
        &args.out,
        &settings,
        "simulate",
        &[traces_path, report_path],
    )?;
    print!("{report}");
    Ok(())
}

/// `sweep`: every amplitude times every repeat, plus summary and plot data.
pub fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    let settings = resolve_args(args)?;
    configure_threads();
    let outcome = sweep_noise(&settings.link, &settings.amplitudes, settings.repeats)?;
    prepare_dir(&args.out)?;
    let cfg = &settings.link;
    let runs_path = args.out.join("sweep.csv");
    let summary_path = args.out.join("sweep_summary.csv");
    let plot_path = args
        .out
        .join(format!("ber_{}_{}.dat", cfg.circuit, cfg.noise.placement));
    write_atomic(&runs_path, &sweep_runs_csv(&outcome.runs))?;
    let summary = sweep_summary_csv(&outcome.summary);
    write_atomic(&summary_path, &summary)?;
    write_atomic(&plot_path, &sweep_plot_data(&outcome.summary))?;
    write_manifest(
        &args.out,
        &settings,
        "sweep",
        &[runs_path, summary_path, plot_path],
    )?;
    print!("{}", String::from_utf8_lossy(&summary));
    Ok(())
}

pub const FILTERS_HEADER: &str =
    "filter,ber,ber_polarity_agnostic,glitches,alignment_lag_s,sync_rms";

/// `compare-filters`: the same seeded scenario under each receiver filter.
pub fn cmd_compare_filters(args: &CommonArgs, any_circuit: bool) -> Result<()> {
    let settings = resolve_args(args)?;
    if settings.link.circuit != Circuit::A && !any_circuit {
        return Err(Error::Config(
            "filter comparison targets circuit a; pass --any-circuit to override".into(),
        ));
    }
    let mut table = format!("{FILTERS_HEADER}\n");
    for filter in FilterSpec::ALL {
        let cfg = LinkConfig {
            filter,
            ..settings.link.clone()
        };
        let r = run_link(&cfg)?.report;
        let _ = writeln!(
            table,
            "{filter},{},{},{},{},{}",
            format_number(r.ber),
            format_number(r.ber_polarity_agnostic),
            r.glitches,
            format_number(r.alignment_lag),
            format_number(r.sync_rms)
        );
    }
    prepare_dir(&args.out)?;
    let path = args.out.join("filters.csv");
    write_atomic(&path, table.as_bytes())?;
    write_manifest(&args.out, &settings, "compare-filters", &[path])?;
    print!("{table}");
    Ok(())
}

fn configure_threads() {
    let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    else {
        return;
    };
    // Fails only when the pool already exists, e.g. on a second call.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::Io { .. } => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::CompareFilters {
            common,
            any_circuit,
        } => cmd_compare_filters(common, *any_circuit),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn later_circuit_wins_and_sets_defaults() {
        let s = Settings::resolve(&entries(&[("circuit", "a"), ("circuit", "b")])).unwrap();
        assert_eq!(s.link.circuit, Circuit::B);
        assert_eq!(s.link.filter, FilterSpec::Filter1);
    }

    #[test]
    fn dt_is_seconds() {
        let s = Settings::resolve(&entries(&[("dt", "1e-7")])).unwrap();
        assert_eq!(s.link.dt, 1e-7);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = Settings::resolve(&entries(&[("dtt", "1e-7")])).unwrap_err();
        assert!(err.to_string().contains("dtt"));
    }

    #[test]
    fn type_mismatch_rejected() {
        assert!(Settings::resolve(&entries(&[("dt", "fast")])).is_err());
        assert!(Settings::resolve(&entries(&[("seed", "-1")])).is_err());
        assert!(Settings::resolve(&entries(&[("amplitudes", "")])).is_err());
    }

    #[test]
    fn explicit_noise_seed_survives_seed() {
        let s = Settings::resolve(&entries(&[("noise_seed", "5"), ("seed", "9")])).unwrap();
        assert_eq!((s.link.seed, s.link.noise.seed), (9, 5));
    }

    #[test]
    fn entries_round_trip() {
        let mut s = Settings::for_circuit(Circuit::Cb);
        s.link.noise.amplitude_percent = 3.5;
        s.link.tx_initial = Some(vec![0.01, -0.02, 0.03]);
        s.trace_stride = Some(4);
        let back: Vec<(String, String)> = s
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        assert_eq!(Settings::resolve(&back).unwrap(), s);
    }

    #[test]
    fn config_text_rules() {
        let parsed = parse_config_text("# note\n\ncircuit = b\ndt=1e-7\n").unwrap();
        assert_eq!(parsed, entries(&[("circuit", "b"), ("dt", "1e-7")]));
        assert!(parse_config_text("circuit=a\ncircuit=b\n").is_err());
        assert!(parse_config_text("circuit\n").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&Error::Diverged {
                time: 0.0,
                guard: 1.0
            }),
            EXIT_DIVERGED
        );
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
    }

    #[test]
    fn stride_keeps_rows_bounded() {
        assert_eq!(auto_stride(200_000), 1);
        assert_eq!(auto_stride(2_000_000), 10);
    }
}
