//! Leave-one-domain-out evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::micro_macro_f1;
use super::model::predict;
use super::train::train;
use super::{DomainDataset, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub seed: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    /// Held-out domain tag; training used every other domain.
    pub target_domain: String,
    pub runs: Vec<RunScores>,
    pub mean_micro_f1: f64,
    pub std_micro_f1: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tasks: Vec<TaskReport>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub config: TrainConfig,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn run_task(dataset: &DomainDataset, target: usize, config: &TrainConfig) -> Result<RunScores> {
    let sources: Vec<_> = dataset
        .graphs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, g)| g.clone())
        .collect();
    let outcome = train(&sources, dataset.num_classes, config)?;
    let target_graph = &dataset.graphs[target];
    let pred = predict(&outcome.model, target_graph, config.propagation_k)?;
    let truth = target_graph.labels().expect("dataset validated");
    let scores = micro_macro_f1(&pred, truth, dataset.num_classes)?;
    Ok(RunScores {
        seed: config.seed,
        micro_f1: scores.micro_f1,
        macro_f1: scores.macro_f1,
        accuracy: scores.accuracy,
    })
}

/// One task per held-out domain, trained with `config.seed` alone.
pub fn leave_one_domain_out(dataset: &DomainDataset, config: &TrainConfig) -> Result<MetricsReport> {
    leave_one_domain_out_seeds(dataset, config, &[config.seed], 1)
}

/// Leave-one-domain-out over several training seeds; `jobs > 1` runs the
/// independent (task, seed) pairs on a rayon pool of that size. Results are
/// identical regardless of `jobs`.
pub fn leave_one_domain_out_seeds(
    dataset: &DomainDataset,
    config: &TrainConfig,
    seeds: &[u64],
    jobs: usize,
) -> Result<MetricsReport> {
    if dataset.num_domains() < 2 {
        return Err(Error::Config(format!(
            "leave-one-domain-out needs at least 2 domains, got {}",
            dataset.num_domains()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    config.validate()?;

    let work: Vec<(usize, u64)> = (0..dataset.num_domains())
        .flat_map(|t| seeds.iter().map(move |&s| (t, s)))
        .collect();
    let run_one = |&(target, seed): &(usize, u64)| -> Result<(usize, RunScores)> {
        let cfg = TrainConfig {
            seed,
            ..config.clone()
        };
        Ok((target, run_task(dataset, target, &cfg)?))
    };
    let results: Vec<(usize, RunScores)> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| work.par_iter().map(run_one).collect::<Result<_>>())?
    } else {
        work.iter().map(run_one).collect::<Result<_>>()?
    };

    let mut tasks = Vec::with_capacity(dataset.num_domains());
    for target in 0..dataset.num_domains() {
        let runs: Vec<RunScores> = results
            .iter()
            .filter(|(t, _)| *t == target)
            .map(|(_, r)| *r)
            .collect();
        let micro: Vec<f64> = runs.iter().map(|r| r.micro_f1).collect();
        let mac: Vec<f64> = runs.iter().map(|r| r.macro_f1).collect();
        let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let (mean_micro_f1, std_micro_f1) = mean_std(&micro);
        let (mean_macro_f1, std_macro_f1) = mean_std(&mac);
        let (mean_accuracy, std_accuracy) = mean_std(&acc);
        tasks.push(TaskReport {
            target_domain: dataset.graphs[target].domain_tag().to_string(),
            runs,
            mean_micro_f1,
            std_micro_f1,
            mean_macro_f1,
            std_macro_f1,
            mean_accuracy,
            std_accuracy,
        });
    }
    Ok(MetricsReport {
        tasks,
        seeds: seeds.to_vec(),
        epochs: config.epochs,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{synthesize_ood_benchmark, SynthConfig};

    fn dataset(jitter: Vec<f64>, seed: u64) -> DomainDataset {
        synthesize_ood_benchmark(&SynthConfig {
            num_domains: jitter.len(),
            nodes_per_domain: 60,
            num_classes: 3,
            feature_dim: 4,
            intra_p: 0.2,
            inter_p: 0.02,
            structure_jitter: jitter,
            seed,
        })
        .unwrap()
    }

    fn fast_config() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 120,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn three_domains_give_three_tasks() {
        let ds = dataset(vec![0.0, 0.1, 0.2], 3);
        let report = leave_one_domain_out(&ds, &fast_config()).unwrap();
        assert_eq!(report.tasks.len(), 3);
        let tags: Vec<_> = report
            .tasks
            .iter()
            .map(|t| t.target_domain.as_str())
            .collect();
        assert_eq!(tags, vec!["domain0", "domain1", "domain2"]);
    }

    #[test]
    fn rejects_single_domain() {
        let ds = dataset(vec![0.0], 3);
        assert!(leave_one_domain_out(&ds, &fast_config()).is_err());
    }

    #[test]
    fn identical_domains_match_in_domain_metrics() {
        // Three copies of one graph: the held-out prediction is literally
        // the same computation as predicting on a training source.
        let base = dataset(vec![0.0], 9).graphs.remove(0);
        let ds = DomainDataset::new(vec![base.clone(), base.clone(), base.clone()], 3).unwrap();
        for seed in 0..5u64 {
            let cfg = TrainConfig {
                seed,
                ..fast_config()
            };
            let report = leave_one_domain_out(&ds, &cfg).unwrap();
            let held_out = report.tasks[0].runs[0];

            let sources = [ds.graphs[1].clone(), ds.graphs[2].clone()];
            let outcome = train(&sources, ds.num_classes, &cfg).unwrap();
            let pred = predict(&outcome.model, &sources[0], cfg.propagation_k).unwrap();
            let in_domain =
                micro_macro_f1(&pred, sources[0].labels().unwrap(), ds.num_classes).unwrap();

            assert!((held_out.macro_f1 - in_domain.macro_f1).abs() < 0.02);
            assert!((held_out.micro_f1 - in_domain.micro_f1).abs() < 0.02);
        }
    }

    #[test]
    fn parallel_jobs_match_sequential() {
        let ds = dataset(vec![0.0, 0.3], 4);
        let cfg = TrainConfig {
            epochs: 40,
            learning_rate: 0.5,
            ..TrainConfig::default()
        };
        let seq = leave_one_domain_out_seeds(&ds, &cfg, &[0, 1, 2], 1).unwrap();
        let par = leave_one_domain_out_seeds(&ds, &cfg, &[0, 1, 2], 4).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn multi_seed_aggregates() {
        let ds = dataset(vec![0.0, 0.3], 4);
        let cfg = TrainConfig {
            epochs: 30,
            learning_rate: 0.5,
            augment: Some(crate::eval::AugmentPlan::RandomDrop {
                keep_prob: 0.7,
                seed: 0,
            }),
            ..TrainConfig::default()
        };
        let report = leave_one_domain_out_seeds(&ds, &cfg, &[0, 1, 2, 3], 1).unwrap();
        for task in &report.tasks {
            assert_eq!(task.runs.len(), 4);
            assert!(task.std_macro_f1 >= 0.0);
            assert!((0.0..=1.0).contains(&task.mean_macro_f1));
        }
    }
}
