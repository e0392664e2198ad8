//! Run configuration: a TOML key/value file merged with builtin defaults and
//! command-line overrides. The effective settings are echoed into every
//! output so a result file records how it was produced.

use anyhow::{bail, Context, Result};
use molpolish::student::StudentConfig;
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;

/// Optional overrides as they appear in the config file. Anything absent
/// falls back to the builtin default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub hidden: Option<usize>,
    pub mpn_rounds: Option<usize>,
    pub seed: Option<u64>,
    pub learning_rate: Option<f64>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub anneal: Option<bool>,
    pub loss_weights: Option<[f64; 5]>,
    pub decode_budget: Option<usize>,
    pub assembly_cap: Option<usize>,
    pub fp_radius: Option<u32>,
    pub fp_width: Option<usize>,
    /// Metric range overrides, keyed `[metrics.m1.qed]` (or `[metrics.m4]`
    /// for the dataset-independent improvement metrics).
    #[serde(default)]
    pub metrics: toml::Table,
}

pub fn load_file(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

/// Fully resolved settings for one command invocation.
#[derive(Debug, Clone)]
pub struct EffectiveConfig {
    pub student: StudentConfig,
    pub fp_radius: u32,
    pub fp_width: usize,
    pub config_path: Option<String>,
}

impl EffectiveConfig {
    /// One-line `key=value` rendering used in output headers.
    pub fn echo(&self) -> String {
        let s = &self.student;
        let mut line = String::new();
        let _ = write!(
            line,
            "hidden={} mpn_rounds={} seed={} learning_rate={} batch={} epochs={} anneal={} \
             loss_weights=[{}] decode_budget={} assembly_cap={} fp_radius={} fp_width={}",
            s.hidden,
            s.mpn_rounds,
            s.seed,
            s.learning_rate,
            s.batch_size,
            s.epochs,
            s.anneal,
            s.loss_weights.map(|w| w.to_string()).join(","),
            s.decode_budget,
            s.assembly_cap,
            self.fp_radius,
            self.fp_width,
        );
        if let Some(p) = &self.config_path {
            let _ = write!(line, " config={p}");
        }
        line
    }
}

/// Command-line overrides shared by the model-facing commands.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct ModelFlags {
    /// Random seed (overrides config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training epochs (overrides config).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hidden width (overrides config).
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Batch size (overrides config).
    #[arg(long)]
    pub batch: Option<usize>,
    /// Multiply the learning rate by 0.9 each epoch.
    #[arg(long)]
    pub anneal: bool,
}

pub fn resolve(file: &FileConfig, flags: &ModelFlags, config_path: Option<&Path>) -> EffectiveConfig {
    let d = StudentConfig::default();
    let student = StudentConfig {
        hidden: flags.hidden.or(file.hidden).unwrap_or(d.hidden),
        mpn_rounds: file.mpn_rounds.unwrap_or(d.mpn_rounds),
        seed: flags.seed.or(file.seed).unwrap_or(d.seed),
        learning_rate: file.learning_rate.unwrap_or(d.learning_rate),
        batch_size: flags.batch.or(file.batch).unwrap_or(d.batch_size),
        epochs: flags.epochs.or(file.epochs).unwrap_or(d.epochs),
        anneal: flags.anneal || file.anneal.unwrap_or(d.anneal),
        loss_weights: file.loss_weights.unwrap_or(d.loss_weights),
        decode_budget: file.decode_budget.unwrap_or(d.decode_budget),
        assembly_cap: file.assembly_cap.unwrap_or(d.assembly_cap),
    };
    EffectiveConfig {
        student,
        fp_radius: file.fp_radius.unwrap_or(2),
        fp_width: file.fp_width.unwrap_or(2048),
        config_path: config_path.map(|p| p.display().to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMode {
    SuccessRate,
    MeanImprovement,
}

/// One evaluation metric: a similarity window, a property window (success
/// metrics only), and the aggregation mode.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub name: String,
    pub dataset: Option<String>,
    pub similarity: (f64, f64),
    /// Absent for the improvement metrics; upper bound may be +inf.
    pub property: Option<(f64, f64)>,
    pub mode: MetricMode,
}

impl MetricSpec {
    pub fn describe(&self) -> String {
        let mode = match self.mode {
            MetricMode::SuccessRate => "success-rate",
            MetricMode::MeanImprovement => "mean-improvement",
        };
        let mut line = format!(
            "name={} dataset={} mode={mode} similarity=[{:.6},{:.6}]",
            self.name,
            self.dataset.as_deref().unwrap_or("-"),
            self.similarity.0,
            self.similarity.1,
        );
        if let Some((lo, hi)) = self.property {
            if hi.is_infinite() {
                let _ = write!(line, " property=[{lo:.6},+inf)");
            } else {
                let _ = write!(line, " property=[{lo:.6},{hi:.6}]");
            }
        }
        line
    }
}

/// Builtin ranges for the success metrics, per dataset.
fn builtin_ranges(metric: &str, dataset: &str) -> Option<((f64, f64), (f64, f64))> {
    let inf = f64::INFINITY;
    let table = match metric {
        "m1" => match dataset {
            "qed" => ((0.3, 1.0), (0.6, 1.0)),
            "drd2" => ((0.3, 1.0), (0.6, 1.0)),
            "logp4" | "logp6" => ((0.4, 1.0), (0.8, inf)),
            _ => return None,
        },
        "m2" => match dataset {
            "qed" => ((0.4, 1.0), (0.8, 1.0)),
            "drd2" => ((0.4, 1.0), (0.8, 1.0)),
            "logp4" | "logp6" => ((0.4, 1.0), (1.2, inf)),
            _ => return None,
        },
        "m3" => match dataset {
            "qed" => ((0.4, 1.0), (0.9, 1.0)),
            "drd2" => ((0.4, 1.0), (0.5, 1.0)),
            "logp4" | "logp6" => ((0.4, 1.0), (0.6, inf)),
            _ => return None,
        },
        _ => return None,
    };
    Some(table)
}

fn range_from_toml(value: &toml::Value, key: &str) -> Result<Option<(f64, f64)>> {
    let Some(arr) = value.get(key) else { return Ok(None) };
    let arr = arr
        .as_array()
        .with_context(|| format!("config metric field `{key}` must be an array"))?;
    let nums: Vec<f64> = arr
        .iter()
        .map(|v| {
            v.as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .with_context(|| format!("config metric field `{key}` holds a non-number"))
        })
        .collect::<Result<_>>()?;
    let (lo, hi) = match nums.as_slice() {
        [lo] => (*lo, f64::INFINITY),
        [lo, hi] => (*lo, *hi),
        _ => bail!("config metric field `{key}` needs one or two numbers"),
    };
    if lo > hi {
        bail!("config metric field `{key}` has lo > hi");
    }
    Ok(Some((lo, hi)))
}

/// Resolves a metric by name and dataset: builtin table first, then any
/// overrides from the config file.
pub fn metric_spec(file: &FileConfig, metric: &str, dataset: Option<&str>) -> Result<MetricSpec> {
    let name = metric.to_ascii_lowercase();
    let dataset = dataset.map(|d| d.to_ascii_lowercase());
    let improvement = matches!(name.as_str(), "m4" | "m5");

    let mut spec = if improvement {
        let threshold = if name == "m4" { 0.3 } else { 0.4 };
        MetricSpec {
            name: name.to_ascii_uppercase(),
            dataset: dataset.clone(),
            similarity: (threshold, 1.0),
            property: None,
            mode: MetricMode::MeanImprovement,
        }
    } else {
        let ds = dataset
            .clone()
            .context("--dataset is required for the success metrics (M1..M3)")?;
        let (sim, prop) = builtin_ranges(&name, &ds)
            .with_context(|| format!("no builtin ranges for metric {name} on dataset {ds}"))?;
        MetricSpec {
            name: name.to_ascii_uppercase(),
            dataset: Some(ds),
            similarity: sim,
            property: Some(prop),
            mode: MetricMode::SuccessRate,
        }
    };

    // Config overrides: `[metrics.m1.qed]` or dataset-independent `[metrics.m4]`.
    let node = file.metrics.get(&name).and_then(|m| {
        if let Some(ds) = &spec.dataset {
            m.get(ds.as_str()).or(Some(m))
        } else {
            Some(m)
        }
    });
    if let Some(node) = node {
        if let Some(sim) = range_from_toml(node, "similarity")? {
            spec.similarity = sim;
        }
        if let Some(prop) = range_from_toml(node, "property")? {
            if improvement {
                bail!("metric {} takes only a similarity threshold", spec.name);
            }
            spec.property = Some(prop);
        }
    }
    if spec.similarity.0 > spec.similarity.1 {
        bail!("metric {} similarity range has lo > hi", spec.name);
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_is_loaded_verbatim() {
        let file = FileConfig::default();
        let m1 = metric_spec(&file, "M1", Some("qed")).unwrap();
        assert_eq!(m1.similarity, (0.3, 1.0));
        assert_eq!(m1.property, Some((0.6, 1.0)));
        let m2 = metric_spec(&file, "m2", Some("logp4")).unwrap();
        assert_eq!(m2.property.unwrap().0, 1.2);
        assert!(m2.property.unwrap().1.is_infinite());
        let m3 = metric_spec(&file, "m3", Some("drd2")).unwrap();
        assert_eq!(m3.property, Some((0.5, 1.0)));
        let m4 = metric_spec(&file, "m4", None).unwrap();
        assert_eq!(m4.mode, MetricMode::MeanImprovement);
        assert_eq!(m4.similarity.0, 0.3);
        let m5 = metric_spec(&file, "m5", None).unwrap();
        assert_eq!(m5.similarity.0, 0.4);
    }

    #[test]
    fn config_overrides_replace_builtin_ranges() {
        let file: FileConfig = toml::from_str(
            "[metrics.m1.qed]\nsimilarity = [0.25, 1.0]\nproperty = [0.7, 0.95]\n",
        )
        .unwrap();
        let m1 = metric_spec(&file, "M1", Some("QED")).unwrap();
        assert_eq!(m1.similarity, (0.25, 1.0));
        assert_eq!(m1.property, Some((0.7, 0.95)));
        // Other rows keep their builtin values.
        let m2 = metric_spec(&file, "m2", Some("qed")).unwrap();
        assert_eq!(m2.property, Some((0.8, 1.0)));
    }

    #[test]
    fn flags_beat_config_beat_defaults() {
        let file: FileConfig = toml::from_str("hidden = 32\nepochs = 7\n").unwrap();
        let flags = ModelFlags { hidden: Some(16), ..ModelFlags::default() };
        let eff = resolve(&file, &flags, None);
        assert_eq!(eff.student.hidden, 16);
        assert_eq!(eff.student.epochs, 7);
        assert_eq!(eff.student.batch_size, 32);
    }
}
