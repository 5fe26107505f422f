//! Seeded campaigns over link-failure probabilities.
//!
//! Replicate `r` of a campaign with base seed `S0` uses seed `S0 + r`. Rows
//! are sorted by `(gamma, seed)` before output, so the thread count never
//! changes the bytes written.

use std::io::Write;

use accelnet_core::engine::{run_alg2, run_unaccelerated, RunOptions};
use accelnet_core::model::ProblemInstance;
use accelnet_core::stepsize::StepsizeTable;
use accelnet_core::NetworkModel;
use rayon::prelude::*;

use crate::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Accelerated,
    Unaccelerated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub gammas: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub eps: f64,
    pub max_iters: usize,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicate {
    pub gamma: f64,
    pub seed: u64,
    pub iters: usize,
    pub converged: bool,
}

/// Box-plot statistics of the iteration counts for one `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub gamma: f64,
    pub min: usize,
    pub p25: usize,
    pub median: usize,
    pub p75: usize,
    pub max: usize,
}

/// Nearest-rank percentile: the `⌈p/100 · n⌉`-th smallest value.
pub fn nearest_rank(sorted: &[usize], percent: f64) -> usize {
    assert!(!sorted.is_empty());
    let rank = (percent / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn run_campaign(
    instance: &ProblemInstance,
    steps: &StepsizeTable,
    campaign: &Campaign,
) -> Result<Vec<Replicate>, FormatError> {
    let jobs: Vec<(f64, u64)> = campaign
        .gammas
        .iter()
        .flat_map(|&g| (0..campaign.runs as u64).map(move |r| (g, campaign.seed.wrapping_add(r))))
        .collect();
    let options = RunOptions::new(campaign.max_iters, campaign.eps).without_dual();
    let mut reps = jobs
        .par_iter()
        .map(|&(gamma, seed)| {
            let net = NetworkModel::build(instance, gamma, seed)?;
            let trace = match campaign.variant {
                Variant::Accelerated => run_alg2(instance, steps, &net, &options)?,
                Variant::Unaccelerated => run_unaccelerated(instance, steps, &net, &options)?,
            };
            Ok(Replicate {
                gamma,
                seed,
                iters: trace.iterations(),
                converged: trace.converged,
            })
        })
        .collect::<Result<Vec<_>, accelnet_core::Error>>()?;
    reps.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.seed.cmp(&b.seed)));
    Ok(reps)
}

/// One summary per distinct `gamma`, in ascending order.
pub fn summarize(reps: &[Replicate]) -> Vec<Summary> {
    let mut gammas: Vec<f64> = reps.iter().map(|r| r.gamma).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    gammas
        .into_iter()
        .map(|gamma| {
            let mut iters: Vec<usize> = reps
                .iter()
                .filter(|r| r.gamma == gamma)
                .map(|r| r.iters)
                .collect();
            iters.sort_unstable();
            Summary {
                gamma,
                min: iters[0],
                p25: nearest_rank(&iters, 25.0),
                median: nearest_rank(&iters, 50.0),
                p75: nearest_rank(&iters, 75.0),
                max: iters[iters.len() - 1],
            }
        })
        .collect()
}

pub fn write_replicates<W: Write>(reps: &[Replicate], out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma", "seed", "iters", "converged"])?;
    for r in reps {
        w.write_record([
            r.gamma.to_string(),
            r.seed.to_string(),
            r.iters.to_string(),
            r.converged.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary<W: Write>(summary: &[Summary], out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma", "min", "p25", "median", "p75", "max"])?;
    for s in summary {
        w.write_record([
            s.gamma.to_string(),
            s.min.to_string(),
            s.p25.to_string(),
            s.median.to_string(),
            s.p75.to_string(),
            s.max.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_values() {
        let v: Vec<usize> = (1..=10).collect();
        assert_eq!(nearest_rank(&v, 25.0), 3);
        assert_eq!(nearest_rank(&v, 50.0), 5);
        assert_eq!(nearest_rank(&v, 75.0), 8);
        assert_eq!(nearest_rank(&v, 100.0), 10);
        assert_eq!(nearest_rank(&v, 0.0), 1);
        assert_eq!(nearest_rank(&[7], 50.0), 7);
        assert_eq!(nearest_rank(&[1, 2, 3, 4], 50.0), 2);
    }

    #[test]
    fn summary_groups_by_gamma() {
        let rep = |gamma, seed, iters| Replicate { gamma, seed, iters, converged: true };
        let reps = [rep(0.0, 0, 5), rep(0.0, 1, 5), rep(0.3, 0, 9), rep(0.3, 1, 4), rep(0.3, 2, 6)];
        let s = summarize(&reps);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].min, s[0].median, s[0].max), (5, 5, 5));
        assert_eq!((s[1].min, s[1].p25, s[1].median, s[1].p75, s[1].max), (4, 4, 6, 9, 9));
    }
}
