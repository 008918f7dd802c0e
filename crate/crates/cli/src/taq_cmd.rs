//! `taq`: trade-file statistics, per-day Epps curves and k-skip verdicts.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use epps_core::estimators::Method;
use epps_core::experiments::presets::dt_grid;
use epps_core::experiments::{
    discriminate, epps_curve_from_pairs, experiment_k_skip_ensemble, EppsCurve, VerdictThresholds,
};
use epps_core::par::Execution;
use epps_core::taq::{
    day_pairs, interarrival_stats, parse_trades_file, saturation_scale, InterarrivalStats, ParsedTrades, Session,
    TradeRecord, SESSION_LENGTH,
};
use epps_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::exit::usage;
use crate::manifest::OutputDir;
use crate::{command_line, read_config, TaqArgs, TaqCommand};

pub const DEFAULT_K_MAX: usize = 50;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaqFile {
    files: Option<Vec<PathBuf>>,
    pair: Option<Vec<String>>,
    kmax: Option<usize>,
    dt_grid: Option<Vec<f64>>,
    session_open: Option<f64>,
    session_length: Option<f64>,
    confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Resolved {
    command: TaqCommand,
    files: Vec<PathBuf>,
    pair: Option<[String; 2]>,
    k_max: usize,
    dt_grid: Vec<f64>,
    session: Session,
    confidence: f64,
}

fn resolve(args: &TaqArgs) -> Result<Resolved> {
    let (file, base) = match &args.config {
        Some(path) => {
            let table = read_config(path)?;
            let file: TaqFile = toml::Value::Table(table).try_into().context("taq config")?;
            (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (TaqFile::default(), PathBuf::new()),
    };
    let files = if args.files.is_empty() {
        file.files.unwrap_or_default().into_iter().map(|f| base.join(f)).collect()
    } else {
        args.files.clone()
    };
    if files.is_empty() {
        return Err(usage("no trade files: pass --files or set `files` in the config"));
    }
    let pair = match args.pair.clone().or(file.pair) {
        None => None,
        Some(v) => match <[String; 2]>::try_from(v) {
            Ok(p) if p[0] != p[1] => Some(p),
            _ => return Err(usage("--pair takes two distinct tickers, e.g. A,B")),
        },
    };
    if args.command != TaqCommand::Stats && pair.is_none() {
        return Err(usage("--pair is required for taq epps and taq kskip"));
    }
    let session = Session {
        open: args.session_open.or(file.session_open).unwrap_or(0.0),
        length: file.session_length.unwrap_or(SESSION_LENGTH),
    };
    if !(session.open >= 0.0 && session.length > 0.0 && session.close() <= 86_400.0) {
        return Err(usage("session must lie within one day"));
    }
    Ok(Resolved {
        command: args.command,
        files,
        pair,
        k_max: args.kmax.or(file.kmax).unwrap_or(DEFAULT_K_MAX),
        dt_grid: args.dt_grid.clone().or(file.dt_grid).unwrap_or_else(dt_grid),
        session,
        confidence: args.confidence.or(file.confidence).unwrap_or(0.95),
    })
}

fn load(files: &[PathBuf], out: &mut OutputDir) -> Result<ParsedTrades> {
    let mut all = ParsedTrades::default();
    for path in files {
        let parsed = parse_trades_file(path)?;
        for w in &parsed.warnings {
            let message = format!("{}: {w} (row skipped)", path.display());
            eprintln!("warning: {message}");
            out.note(message);
        }
        all.merge(parsed);
    }
    if all.book.is_empty() {
        return Err(Error::EmptyInput("no valid trade rows".into()).into());
    }
    Ok(all)
}

fn session_records(records: &[TradeRecord], session: Session) -> Vec<TradeRecord> {
    records
        .iter()
        .filter(|r| r.timestamp >= session.open && r.timestamp <= session.close())
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TickerStats {
    ticker: String,
    #[serde(flatten)]
    stats: InterarrivalStats,
}

fn stats(trades: &ParsedTrades, cfg: &Resolved, out: &mut OutputDir) -> Result<()> {
    let tickers: Vec<String> = match &cfg.pair {
        Some(p) => p.to_vec(),
        None => trades.tickers().into_iter().map(String::from).collect(),
    };
    let mut rows = Vec::new();
    for ticker in tickers {
        let days: Vec<Vec<TradeRecord>> = trades
            .dates(&ticker)
            .into_iter()
            .filter_map(|d| trades.records(&ticker, d))
            .map(|r| session_records(r, cfg.session))
            .collect();
        match interarrival_stats(days.iter().map(Vec::as_slice)) {
            Ok(stats) => rows.push(TickerStats { ticker, stats }),
            Err(e) => {
                let message = format!("{ticker}: {e}");
                eprintln!("warning: {message}");
                out.note(message);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("no ticker with two or more trades in a session".into()).into());
    }
    let mut csv = String::from("ticker,mean,sd,intervals,days\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.ticker, r.stats.mean, r.stats.sd, r.stats.intervals, r.stats.days
        ));
    }
    out.write("stats.csv", csv.as_bytes())?;
    out.write_json("stats.json", &rows)
}

fn write_curve(out: &mut OutputDir, stem: &str, curve: &EppsCurve) -> Result<()> {
    out.write_with(&format!("{stem}.csv"), |buf| curve.write_csv(buf))?;
    out.write_json(&format!("{stem}.json"), curve)
}

fn paired(trades: &ParsedTrades, cfg: &Resolved, execution: Execution, out: &mut OutputDir) -> Result<()> {
    let [a, b] = cfg.pair.as_ref().expect("pair checked in resolve");
    let (pairs, skipped) = day_pairs(trades, a, b, cfg.session);
    for (date, reason) in &skipped {
        let message = format!("day {date} skipped: {reason}");
        eprintln!("warning: {message}");
        out.note(message);
    }
    let used: Vec<&str> = pairs.iter().map(|p| p.date.as_str()).collect();
    out.write_json(
        "days.json",
        &json!({
            "used": used,
            "skipped": skipped.iter().map(|(d, r)| json!({"date": d, "skip": r})).collect::<Vec<_>>(),
        }),
    )?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput(format!("no usable day for {a},{b}")).into());
    }
    let ticks: Vec<_> = pairs.into_iter().map(|p| (p.first, p.second)).collect();
    match cfg.command {
        TaqCommand::Epps => {
            let estimators = [Method::Measured, Method::FlatTrade, Method::Overlap, Method::HayashiYoshida];
            let curve = epps_curve_from_pairs(&ticks, &cfg.dt_grid, &estimators, cfg.confidence, None, execution)?;
            write_curve(out, "curve", &curve)?;
            match saturation_scale(&curve) {
                Ok(scaled) => write_curve(out, "curve_scaled", &scaled)?,
                Err(e) => {
                    let message = format!("saturation scaling skipped: {e}");
                    eprintln!("warning: {message}");
                    out.note(message);
                }
            }
        }
        TaqCommand::Kskip => {
            let curve = experiment_k_skip_ensemble(&ticks, cfg.k_max, cfg.confidence, execution)?;
            write_curve(out, "curve", &curve)?;
            let verdict = discriminate(&curve, Method::HayashiYoshida.label(), VerdictThresholds::default())?;
            eprintln!("verdict: {} (gap {:.4})", verdict.classification, verdict.gap);
            out.write_json("verdict.json", &verdict)?;
        }
        TaqCommand::Stats => unreachable!("stats handled separately"),
    }
    Ok(())
}

pub fn run(args: &TaqArgs, execution: Execution) -> Result<()> {
    let cfg = resolve(args)?;
    let mut out = OutputDir::create(&args.out)?;
    let trades = load(&cfg.files, &mut out)?;
    match cfg.command {
        TaqCommand::Stats => stats(&trades, &cfg, &mut out)?,
        TaqCommand::Epps | TaqCommand::Kskip => paired(&trades, &cfg, execution, &mut out)?,
    }
    out.finish(&command_line(), json!(cfg), None)?;
    Ok(())
}
