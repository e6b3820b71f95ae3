//! Command-line driver: validates configured systems and runs the pressure,
//! dimension, Gibbs, spectral-scan, counting, series, report and length
//! probes over them.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use thermoform_cli::csv::{emit_series, fmt_sig};
use thermoform_cli::{load_system, System};
use thermoform_core as core;
use thermoform_core::{CountKind, CountQuery, Target, ThermoProfile, VerdictKind};

#[derive(Parser)]
#[command(
    name = "thermoform",
    about = "Counting machinery for subshifts of finite type: pressure, Gibbs states, spectra and orbit counts"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Path to the JSON system configuration.
    config: PathBuf,
    /// Directory for file artifacts; stdout only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the counting enumeration.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Accept overlapping IFS images with a warning.
    #[arg(long)]
    allow_overlap: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate the configured subshift and print its witness data.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the pressure on a grid of parameters.
    Pressure {
        #[command(flatten)]
        common: Common,
        /// Grid: comma list "0,0.5,1" or range "lo:hi:count".
        #[arg(long)]
        x: String,
    },
    /// Solve the pressure equation for the critical exponent.
    Dimension {
        #[command(flatten)]
        common: Common,
    },
    /// Gibbs data at the critical exponent with an observed-constant scan.
    Gibbs {
        #[command(flatten)]
        common: Common,
        /// Cylinder scan depth for the observed constant.
        #[arg(long, default_value_t = core::GIBBS_SCAN_DEPTH)]
        maxlen: usize,
    },
    /// Scan the critical line for eigenvalue-1 crossings.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ymax: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
    },
    /// Evaluate one counting function.
    Count {
        #[command(flatten)]
        common: Common,
        /// One of plain|initial-block|fixed-length|periodic|periodic-fixed-length (aliases a,c,d,e,g).
        #[arg(long)]
        kind: String,
        #[arg(long = "T")]
        t: f64,
        /// Word length for the fixed-length kinds.
        #[arg(long)]
        length: Option<usize>,
        /// Named target from the config; whole space when absent.
        #[arg(long)]
        target: Option<String>,
        /// Cross-check against the brute-force oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Emit the jump series of the counting function over a window as CSV.
    Series {
        #[command(flatten)]
        common: Common,
        /// Window "lo:hi".
        #[arg(long)]
        window: String,
        #[arg(long)]
        target: Option<String>,
    },
    /// Full asymptotic verification report over a window.
    Report {
        #[command(flatten)]
        common: Common,
        /// Window "lo:hi".
        #[arg(long)]
        window: String,
        #[arg(long)]
        target: Option<String>,
    },
    /// Length statistics: extremal contributing lengths and per-length shares.
    ProbeLength {
        #[command(flatten)]
        common: Common,
        #[arg(long = "T")]
        t: f64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(cli: Cli) -> Result<ExitCode, AnyError> {
    match cli.cmd {
        Cmd::Validate { common } => {
            let sys = load(&common)?;
            print_validation(&sys);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Pressure { common, x } => {
            let sys = load(&common)?;
            let grid = parse_grid(&x)?;
            println!("x,pressure");
            for xv in grid {
                let p = core::pressure(&sys.subshift, &sys.potential, xv)?;
                println!("{},{}", fmt_sig(xv, 15), fmt_sig(p, 15));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Dimension { common } => {
            let sys = load(&common)?;
            let delta = core::find_delta(&sys.subshift, &sys.potential)?;
            println!("{}", fmt_sig(delta, 15));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Gibbs { common, maxlen } => {
            let sys = load(&common)?;
            let profile =
                ThermoProfile::compute_with_scan(&sys.subshift, &sys.potential, maxlen)?;
            print_gibbs(&sys, &profile)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Spectrum {
            common,
            ymax,
            points,
        } => {
            let sys = load(&common)?;
            let ok = run_spectrum(&sys, ymax, points, &common)?;
            Ok(verdict_code(ok))
        }
        Cmd::Count {
            common,
            kind,
            t,
            length,
            target,
            oracle,
        } => {
            let sys = load(&common)?;
            let query = build_query(&sys, &kind, t, length, target.as_deref())?;
            let n =
                core::count_with_threads(&sys.subshift, &sys.potential, &query, common.threads)?;
            if oracle {
                let m =
                    core::count_oracle(&sys.subshift, &sys.potential, &query, core::ORACLE_CAP)?;
                println!("count {n}");
                println!("oracle {m}");
                if n != m {
                    eprintln!("verdict: pruned count and oracle disagree");
                    return Ok(verdict_code(false));
                }
                println!("verdict: counts agree");
            } else {
                println!("{n}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Series {
            common,
            window,
            target,
        } => {
            let sys = load(&common)?;
            let (lo, hi) = parse_window(&window)?;
            let query = plain_query(&sys, target.as_deref(), hi)?;
            let delta = core::find_delta(&sys.subshift, &sys.potential)?;
            let series = core::count_series(
                &sys.subshift,
                &sys.potential,
                &query,
                lo,
                hi,
                delta,
                common.threads,
            )?;
            if series.jumps.is_empty() {
                return Err(format!("no jumps inside window [{lo}, {hi}]").into());
            }
            let text = emit_series(&series);
            print!("{text}");
            if let Some(dir) = &common.out {
                write_artifact(dir, &format!("{}_series.csv", sys.name), &text)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report {
            common,
            window,
            target,
        } => {
            let sys = load(&common)?;
            let (lo, hi) = parse_window(&window)?;
            let target_kind = resolve_target(&sys, target.as_deref())?;
            let report = core::asymptotic_report(
                &sys.subshift,
                &sys.potential,
                &sys.tail,
                &target_kind,
                lo,
                hi,
                common.threads,
            )?;
            let wrapped = ReportEnvelope {
                system: &sys.name,
                target: target.as_deref().unwrap_or("all"),
                report: &report,
            };
            let json = serde_json::to_string_pretty(&wrapped)?;
            println!("{json}");
            if let Some(dir) = &common.out {
                write_artifact(dir, &format!("{}_report.json", sys.name), &json)?;
                let query = plain_query(&sys, target.as_deref(), hi)?;
                let series = core::count_series(
                    &sys.subshift,
                    &sys.potential,
                    &query,
                    lo,
                    hi,
                    report.delta,
                    common.threads,
                )?;
                write_artifact(
                    dir,
                    &format!("{}_ratios.csv", sys.name),
                    &emit_series(&series),
                )?;
            }
            Ok(verdict_code(report.pass))
        }
        Cmd::ProbeLength { common, t } => {
            let sys = load(&common)?;
            probe_length(&sys, t, common.threads)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct ReportEnvelope<'a> {
    system: &'a str,
    target: &'a str,
    report: &'a core::AsymptoticReport,
}

fn load(common: &Common) -> Result<System, AnyError> {
    let sys = load_system(&common.config, common.allow_overlap)?;
    if let Some(w) = &sys.osc_warning {
        eprintln!("warning: {w}");
    }
    Ok(sys)
}

fn verdict_code(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_validation(sys: &System) {
    let n = sys.subshift.len();
    println!(
        "system {}: {} symbols, alpha {}, potential depth {}",
        sys.name,
        n,
        fmt_sig(sys.subshift.alpha(), 15),
        sys.potential.depth()
    );
    println!("irreducible: yes (validated)");
    for e in 0..n {
        for b in 0..n {
            let w = sys.subshift.connecting_word(e, b);
            let shown: String = if w.is_empty() {
                "(direct)".into()
            } else {
                w.iter().map(|&s| sys.subshift.symbol_name(s)).collect()
            };
            println!(
                "witness {} -> {}: {}",
                sys.subshift.symbol_name(e),
                sys.subshift.symbol_name(b),
                shown
            );
        }
    }
    for name in sys.targets.keys() {
        println!("target {name}: ok");
    }
}

fn print_gibbs(sys: &System, profile: &ThermoProfile) -> Result<(), AnyError> {
    #[derive(Serialize)]
    struct SymbolRow<'a> {
        symbol: &'a str,
        m: f64,
        h: f64,
        mu: f64,
    }
    #[derive(Serialize)]
    struct GibbsOut<'a> {
        system: &'a str,
        delta: f64,
        chi: f64,
        q_observed: f64,
        symbols: Vec<SymbolRow<'a>>,
    }
    let rec = profile.recoding();
    let rows = (0..rec.subshift.len())
        .map(|e| SymbolRow {
            symbol: rec.subshift.symbol_name(e),
            m: profile.gibbs.m[e],
            h: profile.gibbs.h[e],
            mu: profile.gibbs.mu[e],
        })
        .collect();
    let out = GibbsOut {
        system: &sys.name,
        delta: profile.delta,
        chi: profile.chi,
        q_observed: profile.gibbs.q_observed,
        symbols: rows,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run_spectrum(sys: &System, ymax: f64, points: usize, common: &Common) -> Result<bool, AnyError> {
    let seed = std::env::var("THERMOFORM_SEED")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or(0);
    let rec = core::block_recode(&sys.subshift, &sys.potential)?;
    let delta = core::find_delta(&sys.subshift, &sys.potential)?;
    let verdict = core::d_generic_test(&rec.subshift, &rec.potential, core::GCD_DEFAULT_TOL)?;
    let scan = core::critical_line_scan(&rec.subshift, &rec.potential, delta, ymax, points, seed)?;
    // Consistency of the two detectors: a lattice gap predicts the first
    // crossing at 2 pi / gap; a D-generic verdict predicts none at all.
    let consistent = match verdict.kind {
        VerdictKind::Lattice => {
            if verdict.y_1 <= ymax {
                scan.crossings
                    .first()
                    .is_some_and(|&y| (y - verdict.y_1).abs() < 1e-6)
            } else {
                scan.crossings.is_empty()
            }
        }
        VerdictKind::DGeneric => scan.crossings.is_empty(),
    };
    let modulus_ok = scan.max_modulus <= 1.0 + 1e-9;
    #[derive(Serialize)]
    struct SpectrumOut<'a> {
        system: &'a str,
        delta: f64,
        verdict: &'a core::SpectralVerdict,
        crossings: &'a [f64],
        max_modulus: f64,
        failures: usize,
        detectors_consistent: bool,
        modulus_within_bound: bool,
    }
    let out = SpectrumOut {
        system: &sys.name,
        delta,
        verdict: &verdict,
        crossings: &scan.crossings,
        max_modulus: scan.max_modulus,
        failures: scan.failures,
        detectors_consistent: consistent,
        modulus_within_bound: modulus_ok,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(dir) = &common.out {
        let mut text = String::from("y,re,im,modulus,flagged\n");
        for p in &scan.points {
            let (re, im) = p.lambda.unwrap_or((f64::NAN, f64::NAN));
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_sig(p.y, 15),
                fmt_sig(re, 15),
                fmt_sig(im, 15),
                fmt_sig(p.modulus, 15),
                p.flagged
            ));
        }
        write_artifact(dir, &format!("{}_scan.csv", sys.name), &text)?;
    }
    Ok(consistent && modulus_ok)
}

fn build_query(
    sys: &System,
    kind: &str,
    t: f64,
    length: Option<usize>,
    target: Option<&str>,
) -> Result<CountQuery, AnyError> {
    let target_kind = resolve_target(sys, target)?;
    let need_len = || -> Result<usize, AnyError> {
        length.ok_or_else(|| "--length is required for fixed-length kinds".into())
    };
    let q = match kind {
        "plain" | "a" => CountQuery::plain(sys.tail.clone(), target_kind, t)?,
        "initial-block" | "c" => {
            let set = match target_kind {
                Target::Set(s) => s,
                Target::All => {
                    return Err("initial-block kind requires --target".into());
                }
            };
            CountQuery::initial_block(sys.tail.clone(), set, t)?
        }
        "fixed-length" | "d" => {
            CountQuery::fixed_length(sys.tail.clone(), target_kind, need_len()?, t)?
        }
        "periodic" | "e" => CountQuery::periodic(target_kind, t)?,
        "periodic-fixed-length" | "g" => {
            CountQuery::periodic_fixed_length(target_kind, need_len()?, t)?
        }
        other => {
            return Err(format!(
                "unknown kind {other:?}; use plain|initial-block|fixed-length|periodic|periodic-fixed-length"
            )
            .into())
        }
    };
    Ok(q)
}

fn plain_query(sys: &System, target: Option<&str>, threshold: f64) -> Result<CountQuery, AnyError> {
    Ok(CountQuery {
        kind: CountKind::Plain,
        tail: Some(sys.tail.clone()),
        target: resolve_target(sys, target)?,
        threshold,
    })
}

fn resolve_target(sys: &System, target: Option<&str>) -> Result<Target, AnyError> {
    Ok(match target {
        None => Target::All,
        Some(name) => Target::Set(sys.target(name)?.clone()),
    })
}

fn probe_length(sys: &System, t: f64, threads: usize) -> Result<(), AnyError> {
    let (m_t, big_m) = core::length_extremes(&sys.subshift, &sys.potential, &sys.tail, t)?;
    if big_m > 30 {
        return Err(format!(
            "maximal contributing length {big_m} too large for the per-length probe; lower T"
        )
        .into());
    }
    let profile = ThermoProfile::compute(&sys.subshift, &sys.potential)?;
    let total = core::count_with_threads(
        &sys.subshift,
        &sys.potential,
        &CountQuery::plain(sys.tail.clone(), Target::All, t)?,
        threads,
    )?;
    println!("# T {}", fmt_sig(t, 15));
    println!("# m(T) {m_t}");
    println!("# M(T) {big_m}");
    println!("# T/chi {}", fmt_sig(t / profile.chi, 15));
    println!("# N(T) {total}");
    println!("length,count,total_over_count");
    for len in m_t.max(1)..=big_m {
        let c = core::count_with_threads(
            &sys.subshift,
            &sys.potential,
            &CountQuery::fixed_length(sys.tail.clone(), Target::All, len, t)?,
            threads,
        )?;
        let ratio = if c > 0 {
            fmt_sig(total as f64 / c as f64, 15)
        } else {
            "inf".into()
        };
        println!("{len},{c},{ratio}");
    }
    Ok(())
}

fn parse_window(s: &str) -> Result<(f64, f64), AnyError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(format!("window {s:?} must be lo:hi").into());
    }
    let lo: f64 = parts[0].parse()?;
    let hi: f64 = parts[1].parse()?;
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(format!("window {s:?} must have lo < hi").into());
    }
    Ok((lo, hi))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, AnyError> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid {s:?} must be lo:hi:count or a comma list").into());
        }
        let lo: f64 = parts[0].parse()?;
        let hi: f64 = parts[1].parse()?;
        let n: usize = parts[2].parse()?;
        if n < 2 || hi.is_nan() || lo.is_nan() || hi <= lo {
            return Err(format!("grid {s:?} needs lo < hi and count >= 2").into());
        }
        Ok((0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect())
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| -> AnyError { e.into() }))
            .collect()
    }
}

fn write_artifact(dir: &Path, name: &str, text: &str) -> Result<(), AnyError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
