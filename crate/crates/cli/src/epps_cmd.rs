//! `epps` and `verdict`: replicated curves from figure recipes and their classification.

use anyhow::{Context, Result};
use epps_core::experiments::presets::{run_recipe, Recipe, DEFAULT_SEED};
use epps_core::experiments::{discriminate, EppsCurve, VerdictThresholds};
use epps_core::par::Execution;
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::exit::usage;
use crate::manifest::OutputDir;
use crate::{command_line, read_config, EppsArgs, VerdictArgs};

/// Values a figure-based config file may override.
#[derive(Debug, Default)]
struct Overrides {
    seed: Option<u64>,
    dt_grid: Option<Vec<f64>>,
    rates: Option<Vec<f64>>,
    kmax: Option<usize>,
    replications: Option<usize>,
}

impl Overrides {
    fn from_args(args: &EppsArgs) -> Self {
        Overrides {
            seed: args.seed,
            dt_grid: args.dt_grid.clone(),
            rates: args.rates.clone(),
            kmax: args.kmax,
            replications: args.replications,
        }
    }

    /// Fills unset values from `fallback`.
    fn or(self, fallback: Overrides) -> Self {
        Overrides {
            seed: self.seed.or(fallback.seed),
            dt_grid: self.dt_grid.or(fallback.dt_grid),
            rates: self.rates.or(fallback.rates),
            kmax: self.kmax.or(fallback.kmax),
            replications: self.replications.or(fallback.replications),
        }
    }

    fn apply(self, recipe: &mut Recipe) -> Result<()> {
        if let Some(seed) = self.seed {
            recipe.set_seed(seed);
        }
        if let Some(grid) = self.dt_grid {
            recipe.set_dt_grid(grid)?;
        }
        if let Some(rates) = self.rates {
            recipe.set_rates(rates)?;
        }
        if let Some(k) = self.kmax {
            recipe.set_k_max(k)?;
        }
        if let Some(n) = self.replications {
            recipe.set_replications(n)?;
        }
        Ok(())
    }
}

fn take<T: DeserializeOwned>(table: &mut toml::Table, key: &str) -> Result<Option<T>> {
    table
        .remove(key)
        .map(|v| v.try_into::<T>().with_context(|| format!("config field `{key}`")))
        .transpose()
}

/// A config file either names a figure plus overrides, or spells out a whole recipe.
fn recipe_from_table(mut table: toml::Table) -> Result<(Recipe, Overrides)> {
    let Some(figure) = take::<String>(&mut table, "figure")? else {
        let recipe = toml::Value::Table(table).try_into::<Recipe>().context("recipe")?;
        return Ok((recipe, Overrides::default()));
    };
    let overrides = Overrides {
        seed: take(&mut table, "seed")?,
        dt_grid: take(&mut table, "dt_grid")?,
        rates: take(&mut table, "rates")?,
        kmax: take(&mut table, "kmax")?,
        replications: take(&mut table, "replications")?,
    };
    if let Some(key) = table.keys().next() {
        return Err(usage(format!("unknown config field `{key}` next to `figure`")));
    }
    Ok((Recipe::figure(&figure, DEFAULT_SEED)?, overrides))
}

pub fn resolve(args: &EppsArgs) -> Result<Recipe> {
    let flags = Overrides::from_args(args);
    let (mut recipe, overrides) = match (&args.figure, &args.config) {
        (Some(id), None) => (Recipe::figure(id, DEFAULT_SEED)?, flags),
        (None, Some(path)) => {
            let (recipe, file) = recipe_from_table(read_config(path)?)?;
            (recipe, flags.or(file))
        }
        _ => return Err(usage("give exactly one of --figure or --config")),
    };
    overrides.apply(&mut recipe)?;
    Ok(recipe)
}

pub fn run(args: &EppsArgs, execution: Execution) -> Result<()> {
    let recipe = resolve(args)?;
    let mut out = OutputDir::create(&args.out)?;
    let result = run_recipe(&recipe, execution)?;
    out.write_with("curve.csv", |buf| result.curve.write_csv(buf))?;
    out.write_json("curve.json", &result.curve)?;
    if let Some(verdict) = &result.verdict {
        out.write_json("verdict.json", verdict)?;
        eprintln!("verdict: {} (gap {:.4})", verdict.classification, verdict.gap);
    }
    for note in &result.curve.notes {
        out.note(note.clone());
    }
    let seed = recipe.seed();
    out.finish(&command_line(), json!(recipe), Some(seed))?;
    Ok(())
}

pub fn run_verdict(args: &VerdictArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.curve).with_context(|| format!("cannot read {}", args.curve.display()))?;
    let curve: EppsCurve = serde_json::from_str(&text).with_context(|| format!("{} is not a curve", args.curve.display()))?;
    let thresholds = VerdictThresholds::default();
    let verdict = discriminate(&curve, &args.estimator, thresholds)?;
    let mut out = OutputDir::create(&args.out)?;
    out.write_json("verdict.json", &verdict)?;
    println!("{}", verdict.classification);
    let config = json!({
        "curve": args.curve.display().to_string(),
        "estimator": args.estimator,
        "thresholds": thresholds,
    });
    out.finish(&command_line(), config, None)?;
    Ok(())
}
