//! Evaluation quantities derived from event traces: CH re-selection counts,
//! CH-to-member SNR, and the clustering robustness likelihood.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::domain::{Scheme, ValidConfig};
use crate::engine::{EventKind, Payload, Trace};
use crate::error::DomainError;
use crate::scalar::{mean, Scalar};

/// Divides every value by the maximum.
pub fn normalize<F: Scalar>(values: &[F]) -> Result<Vec<F>, DomainError> {
    let max = values.iter().copied().fold(F::neg_infinity(), F::max);
    if !(max > F::zero()) {
        return Err(DomainError::NothingPositive);
    }
    Ok(values.iter().map(|v| *v / max).collect())
}

/// Negative log Poisson likelihood of a (possibly fractional) normalized
/// count `r`: `rate - r ln(rate) + ln Γ(r + 1)`.
pub fn lambda_r<F: Scalar>(r: F, rate: F) -> Result<F, DomainError> {
    if !(r >= F::zero()) {
        return Err(DomainError::NegativeCount(r.as_f64()));
    }
    if !(rate > F::zero()) {
        return Err(DomainError::NonPositiveRate(rate.as_f64()));
    }
    let ln_fact = F::lit(statrs::function::gamma::ln_gamma(r.as_f64() + 1.0));
    Ok(rate - r * rate.ln() + ln_fact)
}

/// Negative log Gaussian density of `s`.
pub fn lambda_s<F: Scalar>(s: F, mu: F, var: F) -> Result<F, DomainError> {
    if !(var > F::zero()) {
        return Err(DomainError::NonPositiveVariance(var.as_f64()));
    }
    let two = F::lit(2.0);
    Ok((two * F::PI() * var).ln() / two + (s - mu).powi(2) / (two * var))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodParams<F> {
    pub w_r: F,
    pub w_s: F,
    pub rate: F,
    pub mu: F,
    pub var: F,
}

impl<F: Scalar> LikelihoodParams<F> {
    pub fn from_config(cfg: &ValidConfig<F>) -> Self {
        Self { w_r: cfg.w_r, w_s: cfg.w_snr, rate: cfg.lambda_r, mu: cfg.snr_mean, var: cfg.snr_var }
    }
}

impl LikelihoodParams<f64> {
    pub const DEFAULT: Self = Self { w_r: 0.6, w_s: 0.4, rate: 0.5, mu: 1.0, var: 0.1 };
}

/// `exp(-(w_R λ_R + w_S λ_S))`.
pub fn robustness_likelihood<F: Scalar>(r: F, s: F, p: &LikelihoodParams<F>) -> Result<F, DomainError> {
    let lr = lambda_r(r, p.rate)?;
    let ls = lambda_s(s, p.mu, p.var)?;
    Ok((-(p.w_r * lr + p.w_s * ls)).exp())
}

/// Metrics of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics<F> {
    pub scheme: Scheme,
    pub run: usize,
    pub per_cluster: Vec<usize>,
    pub total: usize,
    /// Cumulative re-selections at `k * sample_interval`, `k = 0..=duration / sample_interval`.
    pub cumulative: Vec<(F, usize)>,
    /// Mean over CH tenures of the tenure-mean CH-to-member SNR.
    pub mean_snr: Option<F>,
    pub degraded: usize,
    pub tenures: usize,
}

/// Folds one trace into its [`RunMetrics`].
pub fn run_metrics<F: Scalar>(trace: &Trace<F>) -> RunMetrics<F> {
    let mut per_cluster = vec![0usize; trace.clusters];
    let mut degraded = 0;
    let mut open: BTreeMap<u32, Vec<F>> = BTreeMap::new();
    let mut tenure_means = Vec::new();
    let close = |samples: Option<Vec<F>>, out: &mut Vec<F>| {
        if let Some(m) = samples.and_then(mean) {
            out.push(m);
        }
    };
    let mut reselection_times = Vec::new();

    for e in &trace.events {
        let c = e.cluster.map(|c| c.0);
        match e.kind {
            EventKind::ClusteringRound => {
                for (_, s) in std::mem::take(&mut open) {
                    close(Some(s), &mut tenure_means);
                }
            }
            EventKind::ChSelected | EventKind::ChReplacedFromBackup | EventKind::ChReselectedFull => {
                let c = c.unwrap_or_default();
                close(open.remove(&c), &mut tenure_means);
                open.insert(c, Vec::new());
                if e.kind.is_reselection() {
                    if let Some(slot) = per_cluster.get_mut(c as usize) {
                        *slot += 1;
                    }
                    reselection_times.push(e.time);
                }
                if matches!(e.payload, Payload::Selection { degraded: true }) {
                    degraded += 1;
                }
            }
            EventKind::ChDeparted => close(open.remove(&c.unwrap_or_default()), &mut tenure_means),
            EventKind::CamBatch => {
                if let (Payload::Cams { snr: Some(s), .. }, Some(c)) = (&e.payload, c) {
                    if let Some(samples) = open.get_mut(&c) {
                        samples.push(*s);
                    }
                }
            }
            _ => {}
        }
    }
    for (_, s) in open {
        close(Some(s), &mut tenure_means);
    }

    let steps = (trace.duration / trace.sample_interval).round().to_usize().unwrap_or(0);
    let tol = F::lit(1e-9);
    let mut cumulative = Vec::with_capacity(steps + 1);
    let mut seen = 0;
    for k in 0..=steps {
        let t = trace.sample_interval * F::from_usize(k).unwrap_or_else(F::zero);
        while seen < reselection_times.len() && reselection_times[seen] <= t + tol * t.max(F::one()) {
            seen += 1;
        }
        cumulative.push((t, seen));
    }

    RunMetrics {
        scheme: trace.scheme,
        run: trace.run,
        total: per_cluster.iter().sum(),
        per_cluster,
        cumulative,
        tenures: tenure_means.len(),
        mean_snr: mean(tenure_means),
        degraded,
    }
}

/// Mean and 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi<F> {
    pub mean: F,
    pub half_width: F,
    pub n: usize,
}

pub fn mean_ci<F: Scalar>(values: &[F]) -> Option<MeanCi<F>> {
    let n = values.len();
    let m = mean(values.iter().copied())?;
    let half_width = if n < 2 {
        F::infinity()
    } else {
        let nf = F::from_usize(n)?;
        let var = values.iter().map(|v| (*v - m).powi(2)).sum::<F>() / (nf - F::one());
        F::lit(1.96) * (var / nf).sqrt()
    };
    Some(MeanCi { mean: m, half_width, n })
}

/// Paired difference `a[i] - b[i]` over run indices present in both.
pub fn paired_difference<F: Scalar>(a: &[(usize, F)], b: &[(usize, F)]) -> Option<MeanCi<F>> {
    let bm: BTreeMap<usize, F> = b.iter().copied().collect();
    let diffs: Vec<F> = a.iter().filter_map(|(i, x)| bm.get(i).map(|y| *x - *y)).collect();
    mean_ci(&diffs)
}

/// Running sums for one scheme. `merge` is associative and commutative up to
/// floating-point rounding; [`aggregate`] always folds in (scheme, run) order.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeAccumulator<F> {
    pub runs: Vec<usize>,
    pub totals: Vec<F>,
    pub snrs: Vec<F>,
    pub per_cluster_sum: Vec<F>,
    pub cumulative_sum: Vec<(F, F)>,
    pub degraded_sum: F,
}

impl<F: Scalar> SchemeAccumulator<F> {
    pub fn from_run(m: &RunMetrics<F>) -> Self {
        let f = |n: usize| F::from_usize(n).unwrap_or_else(F::zero);
        Self {
            runs: vec![m.run],
            totals: vec![f(m.total)],
            snrs: m.mean_snr.into_iter().collect(),
            per_cluster_sum: m.per_cluster.iter().map(|n| f(*n)).collect(),
            cumulative_sum: m.cumulative.iter().map(|(t, n)| (*t, f(*n))).collect(),
            degraded_sum: f(m.degraded),
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.runs.extend(other.runs);
        self.totals.extend(other.totals);
        self.snrs.extend(other.snrs);
        for (a, b) in self.per_cluster_sum.iter_mut().zip(other.per_cluster_sum) {
            *a = *a + b;
        }
        for (a, b) in self.cumulative_sum.iter_mut().zip(other.cumulative_sum) {
            a.1 = a.1 + b.1;
        }
        self.degraded_sum = self.degraded_sum + other.degraded_sum;
        self
    }
}

/// Per-scheme means across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary<F> {
    pub scheme: Scheme,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub mean_per_cluster: Vec<F>,
    pub total: MeanCi<F>,
    pub mean_cumulative: Vec<(F, F)>,
    pub snr: Option<MeanCi<F>>,
    pub mean_degraded: F,
    /// Per-run (run index, total re-selections) for paired comparisons.
    pub run_totals: Vec<(usize, F)>,
    pub run_snrs: Vec<(usize, F)>,
    pub normalized_reselections: F,
    pub normalized_snr: F,
    pub likelihood: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentAggregate<F> {
    pub digest: String,
    pub schemes: Vec<SchemeSummary<F>>,
}

impl<F: Scalar> ExperimentAggregate<F> {
    pub fn scheme(&self, s: Scheme) -> Option<&SchemeSummary<F>> {
        self.schemes.iter().find(|x| x.scheme == s)
    }

    /// Mean cumulative series of every scheme divided by the largest value overall.
    pub fn normalized_cumulative(&self) -> Vec<Vec<(F, F)>> {
        let max = self
            .schemes
            .iter()
            .flat_map(|s| s.mean_cumulative.iter().map(|(_, v)| *v))
            .fold(F::zero(), F::max);
        let scale = if max > F::zero() { max } else { F::one() };
        self.schemes.iter().map(|s| s.mean_cumulative.iter().map(|(t, v)| (*t, *v / scale)).collect()).collect()
    }
}

/// Aggregates traces of one experiment family into per-scheme summaries and
/// cross-scheme normalized likelihoods. `R` is each scheme's mean total
/// re-selections over the largest such mean, `S` its mean SNR over the
/// largest mean SNR.
pub fn aggregate<F: Scalar>(traces: &[Trace<F>], params: &LikelihoodParams<F>) -> Result<ExperimentAggregate<F>, DomainError> {
    let first = traces.first().ok_or(DomainError::NoTraces)?;
    if let Some(t) = traces.iter().find(|t| t.digest != first.digest) {
        return Err(DomainError::MixedConfig(first.digest.clone(), t.digest.clone()));
    }
    let mut ordered: Vec<&Trace<F>> = traces.iter().collect();
    ordered.sort_by_key(|t| (t.scheme, t.run));

    type Group<F> = (SchemeAccumulator<F>, Vec<u64>, Vec<(usize, F)>);
    let mut by_scheme: BTreeMap<Scheme, Group<F>> = BTreeMap::new();
    for t in ordered {
        let m = run_metrics(t);
        let acc = SchemeAccumulator::from_run(&m);
        let snr = m.mean_snr.map(|s| (m.run, s));
        match by_scheme.remove(&t.scheme) {
            Some((a, mut seeds, mut snrs)) => {
                seeds.push(t.streams.mobility);
                snrs.extend(snr);
                by_scheme.insert(t.scheme, (a.merge(acc), seeds, snrs));
            }
            None => {
                by_scheme.insert(t.scheme, (acc, vec![t.streams.mobility], snr.into_iter().collect()));
            }
        }
    }

    let mut schemes: Vec<SchemeSummary<F>> = by_scheme
        .into_iter()
        .map(|(scheme, (acc, seeds, run_snrs))| {
            let n = F::from_usize(acc.runs.len()).unwrap_or_else(F::one);
            SchemeSummary {
                scheme,
                runs: acc.runs.len(),
                seeds,
                mean_per_cluster: acc.per_cluster_sum.iter().map(|s| *s / n).collect(),
                total: mean_ci(&acc.totals).expect("at least one run"),
                mean_cumulative: acc.cumulative_sum.iter().map(|(t, s)| (*t, *s / n)).collect(),
                snr: mean_ci(&acc.snrs),
                mean_degraded: acc.degraded_sum / n,
                run_totals: acc.runs.iter().copied().zip(acc.totals.iter().copied()).collect(),
                run_snrs,
                normalized_reselections: F::zero(),
                normalized_snr: F::zero(),
                likelihood: F::zero(),
            }
        })
        .collect();

    let totals: Vec<F> = schemes.iter().map(|s| s.total.mean).collect();
    let r = normalize(&totals).unwrap_or_else(|_| vec![F::zero(); totals.len()]);
    let snrs: Vec<F> = schemes.iter().map(|s| s.snr.map_or(F::zero(), |c| c.mean)).collect();
    let s = normalize(&snrs).unwrap_or_else(|_| vec![F::zero(); snrs.len()]);
    for (i, sum) in schemes.iter_mut().enumerate() {
        sum.normalized_reselections = r[i];
        sum.normalized_snr = s[i];
        sum.likelihood = robustness_likelihood(r[i], s[i], params)?.min(F::one());
    }
    Ok(ExperimentAggregate { digest: first.digest.clone(), schemes })
}

/// Plain-text aggregate document for one scheme (`key = value` lines).
pub fn render_scheme_document<F: Scalar>(agg: &ExperimentAggregate<F>, s: &SchemeSummary<F>) -> String {
    let list = |v: &[F]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    let _ = writeln!(out, "scheme = {}", s.scheme);
    let _ = writeln!(out, "config_digest = {}", agg.digest);
    let _ = writeln!(out, "runs = {}", s.runs);
    let _ = writeln!(out, "mobility_seeds = {}", s.seeds.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
    let _ = writeln!(out, "mean_total_reselections = {}", s.total.mean);
    let _ = writeln!(out, "ci95_total_reselections = {}", s.total.half_width);
    let _ = writeln!(out, "mean_reselections_per_cluster = {}", list(&s.mean_per_cluster));
    match s.snr {
        Some(c) => {
            let _ = writeln!(out, "mean_ch_member_snr = {}", c.mean);
            let _ = writeln!(out, "ci95_ch_member_snr = {}", c.half_width);
        }
        None => {
            let _ = writeln!(out, "mean_ch_member_snr = -");
            let _ = writeln!(out, "ci95_ch_member_snr = -");
        }
    }
    let _ = writeln!(out, "mean_degraded_selections = {}", s.mean_degraded);
    let _ = writeln!(out, "normalized_reselections = {}", s.normalized_reselections);
    let _ = writeln!(out, "normalized_snr = {}", s.normalized_snr);
    let _ = writeln!(out, "robustness_likelihood = {}", s.likelihood);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2.0, 4.0, 8.0]).unwrap(), vec![0.25, 0.5, 1.0]);
        assert_eq!(normalize(&[3.5]).unwrap(), vec![1.0]);
        assert_eq!(normalize(&[0.0, 0.0]), Err(DomainError::NothingPositive));
    }

    #[test]
    fn lambda_r_reference_values() {
        assert_relative_eq!(lambda_r(0.0, 0.5).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(lambda_r(0.0, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert!(lambda_r(-0.1, 0.5).is_err());
    }

    #[test]
    fn lambda_s_is_zero_at_unit_peak_density() {
        let var = 1.0 / (2.0 * std::f64::consts::PI);
        assert!(lambda_s(3.0, 3.0, var).unwrap().abs() < 1e-15);
        assert!(lambda_s(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mean_ci_basics() {
        let c = mean_ci(&[1.0, 3.0]).unwrap();
        assert_eq!(c.mean, 2.0);
        assert_relative_eq!(c.half_width, 1.96 * (2.0f64 / 2.0).sqrt(), max_relative = 1e-12);
        assert!(mean_ci(&[5.0f64]).unwrap().half_width.is_infinite());
        assert!(mean_ci::<f64>(&[]).is_none());
    }
}
