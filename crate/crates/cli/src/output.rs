//! Experiment directory layout:
//!
//! ```text
//! <out>/config.echo
//! <out>/traces/<scheme>-<run>.trace
//! <out>/aggregate.<scheme>.txt
//! <out>/plots/*.dat
//! ```
//!
//! A sweep writes one such tree per value under `<out>/<var>-<value>/` and
//! the sweep curves under `<out>/plots/`. Everything is staged in a sibling
//! directory and renamed into place once complete.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use uavnet::engine::Trace;
use uavnet::experiment::SweepVar;
use uavnet::metrics::{aggregate, render_scheme_document, ExperimentAggregate, LikelihoodParams};
use uavnet::{ExperimentSpec, Scheme, SimConfig};

/// Writes `contents` to a temporary sibling, then renames it over `path`.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn staging_dir(out: &Path) -> Result<PathBuf> {
    if out.exists() {
        let empty = out.is_dir() && fs::read_dir(out)?.next().is_none();
        if !empty {
            bail!("output directory {} already exists and is not empty", out.display());
        }
    }
    let name = out.file_name().and_then(|n| n.to_str()).context("output path has no final component")?;
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    let stage = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir(&stage).with_context(|| format!("creating {}", stage.display()))?;
    Ok(stage)
}

/// Runs the experiment and writes its directory. Nothing is left behind on error.
pub fn write_experiment(out: &Path, spec: &ExperimentSpec) -> Result<()> {
    let stage = staging_dir(out)?;
    let result = fill(&stage, spec).and_then(|()| {
        if out.exists() {
            fs::remove_dir(out)?;
        }
        fs::rename(&stage, out).with_context(|| format!("moving results to {}", out.display()))
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&stage);
    }
    result
}

fn fill(dir: &Path, spec: &ExperimentSpec) -> Result<()> {
    let mut echo = spec.base.to_kv();
    let _ = writeln!(echo, "# runs = {}", spec.runs);
    let _ = writeln!(echo, "# schemes = {}", names(&spec.schemes));
    if let Some(key) = spec.sweep.key() {
        let _ = writeln!(echo, "# sweep = {key}: {}", spec.values.join(","));
    }
    write_atomic(&dir.join("config.echo"), &echo)?;

    let points = spec.execute()?;
    match spec.sweep {
        SweepVar::None => {
            let point = points.into_iter().next().context("experiment produced no results")?;
            write_point(dir, &point.traces, &LikelihoodParams::from_config(&point.config))?;
        }
        var => {
            let mut rows = Vec::new();
            for p in &points {
                let value = p.value.clone().unwrap_or_default();
                let sub = dir.join(format!("{}-{value}", var.key().unwrap_or("value")));
                fs::create_dir(&sub)?;
                write_atomic(&sub.join("config.echo"), &p.config.config().to_kv())?;
                let agg = write_point(&sub, &p.traces, &LikelihoodParams::from_config(&p.config))?;
                rows.push((value, agg));
            }
            write_sweep_plots(dir, var, &spec.schemes, &rows)?;
        }
    }
    Ok(())
}

fn names(schemes: &[Scheme]) -> String {
    schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
}

fn trace_file(t: &Trace<f64>) -> String {
    format!("{}-{:04}.trace", t.scheme, t.run)
}

fn write_point(dir: &Path, traces: &[Trace<f64>], params: &LikelihoodParams<f64>) -> Result<ExperimentAggregate<f64>> {
    let tdir = dir.join("traces");
    fs::create_dir_all(&tdir)?;
    for t in traces {
        write_atomic(&tdir.join(trace_file(t)), &t.to_text())?;
    }
    write_aggregates(dir, traces, params)
}

fn write_aggregates(dir: &Path, traces: &[Trace<f64>], params: &LikelihoodParams<f64>) -> Result<ExperimentAggregate<f64>> {
    let agg = aggregate(traces, params)?;
    for s in &agg.schemes {
        write_atomic(&dir.join(format!("aggregate.{}.txt", s.scheme)), &render_scheme_document(&agg, s))?;
    }
    let plots = dir.join("plots");
    fs::create_dir_all(&plots)?;
    write_atomic(&plots.join("reselections_per_cluster.dat"), &per_cluster_table(&agg))?;
    write_atomic(&plots.join("cumulative_reselections.dat"), &cumulative_table(&agg))?;
    write_atomic(&plots.join("summary.dat"), &summary_table(&agg))?;
    Ok(agg)
}

fn header(first: &str, agg: &ExperimentAggregate<f64>) -> String {
    let cols: Vec<&str> = agg.schemes.iter().map(|s| s.scheme.name()).collect();
    format!("# {first} {}\n", cols.join(" "))
}

fn per_cluster_table(agg: &ExperimentAggregate<f64>) -> String {
    let mut out = header("cluster", agg);
    let n = agg.schemes.iter().map(|s| s.mean_per_cluster.len()).max().unwrap_or(0);
    for c in 0..n {
        let row: Vec<String> = agg.schemes.iter().map(|s| format!("{}", s.mean_per_cluster.get(c).copied().unwrap_or(0.0))).collect();
        let _ = writeln!(out, "{c} {}", row.join(" "));
    }
    out
}

fn cumulative_table(agg: &ExperimentAggregate<f64>) -> String {
    let mut out = header("time_s", agg);
    let series = agg.normalized_cumulative();
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    for k in 0..len {
        let row: Vec<String> = series.iter().map(|s| format!("{}", s[k].1)).collect();
        let _ = writeln!(out, "{} {}", series[0][k].0, row.join(" "));
    }
    out
}

fn summary_table(agg: &ExperimentAggregate<f64>) -> String {
    let mut out = header("metric", agg);
    type Col = fn(&uavnet::metrics::SchemeSummary<f64>) -> f64;
    let rows: [(&str, Col); 5] = [
        ("mean_total_reselections", |s| s.total.mean),
        ("normalized_reselections", |s| s.normalized_reselections),
        ("mean_ch_member_snr", |s| s.snr.map_or(f64::NAN, |c| c.mean)),
        ("normalized_snr", |s| s.normalized_snr),
        ("robustness_likelihood", |s| s.likelihood),
    ];
    for (name, f) in rows {
        let vals: Vec<String> = agg.schemes.iter().map(|s| format!("{}", f(s))).collect();
        let _ = writeln!(out, "{name} {}", vals.join(" "));
    }
    out
}

fn write_sweep_plots(
    dir: &Path,
    var: SweepVar,
    schemes: &[Scheme],
    rows: &[(String, ExperimentAggregate<f64>)],
) -> Result<()> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots)?;
    let key = var.key().unwrap_or("value");
    let cols: Vec<&str> = schemes.iter().map(|s| s.name()).collect();
    type Col = fn(&uavnet::metrics::SchemeSummary<f64>) -> f64;
    let files: [(&str, Col); 3] = [
        ("total_reselections", |s| s.total.mean),
        ("normalized_snr", |s| s.normalized_snr),
        ("robustness_likelihood", |s| s.likelihood),
    ];
    for (name, f) in files {
        let mut out = format!("# {key} {}\n", cols.join(" "));
        for (value, agg) in rows {
            let vals: Vec<String> =
                schemes.iter().map(|s| agg.scheme(*s).map_or("nan".to_string(), |x| format!("{}", f(x)))).collect();
            let _ = writeln!(out, "{value} {}", vals.join(" "));
        }
        write_atomic(&plots.join(format!("sweep_{key}_{name}.dat")), &out)?;
    }
    Ok(())
}

fn read_traces(tdir: &Path) -> Result<Vec<Trace<f64>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(tdir)
        .with_context(|| format!("reading {}", tdir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "trace"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            Trace::parse(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

/// Likelihood parameters from the directory's `config.echo`, or the defaults.
fn echoed_params(dir: &Path) -> Result<LikelihoodParams<f64>> {
    let path = dir.join("config.echo");
    let cfg = match fs::read_to_string(&path) {
        Ok(text) => SimConfig::parse(&text).with_context(|| format!("in {}", path.display()))?,
        Err(_) => SimConfig::default(),
    };
    Ok(LikelihoodParams::from_config(&cfg.validate()?))
}

/// Rebuilds aggregates and plots from the traces already on disk.
pub fn reaggregate(dir: &Path) -> Result<()> {
    let tdir = dir.join("traces");
    if tdir.is_dir() {
        write_aggregates(dir, &read_traces(&tdir)?, &echoed_params(dir)?)?;
        return Ok(());
    }
    let mut subs: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("traces").is_dir())
        .collect();
    if subs.is_empty() {
        bail!("no traces/ directory under {}", dir.display());
    }
    subs.sort();
    for s in subs {
        write_aggregates(&s, &read_traces(&s.join("traces"))?, &echoed_params(&s)?)?;
    }
    Ok(())
}
