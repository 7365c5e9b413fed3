//! Grid execution over (epsilon, fairness) cells and seeds.
//!
//! Each seed in the grid maps to a run seed `mix_seed(master_seed, seed)`
//! shared by every cell with that seed, so cells along the epsilon and
//! fairness axes differ only in their specification and not in their noise.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::run::{
    public_votes, run_baseline_placement, run_fairdpsgd, run_fairpate, train_teachers, DpSgdConfig, PateConfig,
    RunOutput,
};
use crate::domain::{Framework, VoteHistogram};
use crate::error::{Error, Result};
use crate::rng::mix_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub framework: Framework,
    pub eps_values: Vec<f64>,
    /// Disparity margins for the PATE family, DPL weights for fair DP-SGD.
    pub fairness_values: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub pate: PateConfig,
    #[serde(default)]
    pub dpsgd: DpSgdConfig,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.eps_values.is_empty() {
            return Err(Error::Empty("eps_values"));
        }
        if self.fairness_values.is_empty() {
            return Err(Error::Empty("fairness_values"));
        }
        if self.seeds.is_empty() {
            return Err(Error::Empty("seeds"));
        }
        Ok(())
    }

    /// Cells in row-major order: epsilon, then fairness value, then seed.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for &eps in &self.eps_values {
            for &fairness in &self.fairness_values {
                for &seed in &self.seeds {
                    cells.push(GridCell {
                        index: cells.len(),
                        eps,
                        fairness,
                        seed,
                    });
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub eps: f64,
    pub fairness: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: GridCell,
    pub output: RunOutput,
}

/// Applies `f` to every item on up to `jobs` threads; results keep item order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|slot| slot.expect("every item is processed"))
        .collect()
}

/// Runs every cell of `spec` on `data`.
pub fn run_grid(data: &Dataset, spec: &GridSpec, master_seed: u64, jobs: usize) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();

    let votes: Vec<(u64, Vec<VoteHistogram>)> = if spec.framework == Framework::Fairdpsgd {
        Vec::new()
    } else {
        parallel_map(&seeds, jobs, |&s| {
            let run_seed = mix_seed(master_seed, s);
            let teachers = train_teachers(data, &spec.pate, run_seed)?;
            Ok((s, public_votes(data, &teachers, &spec.pate)?))
        })?
    };
    let votes_for = |seed: u64| -> &[VoteHistogram] {
        votes
            .iter()
            .find(|(s, _)| *s == seed)
            .map(|(_, v)| v.as_slice())
            .unwrap_or(&[])
    };

    let cells = spec.cells();
    let outputs = parallel_map(&cells, jobs, |cell| {
        let run_seed = mix_seed(master_seed, cell.seed);
        match spec.framework {
            Framework::Fairpate => run_fairpate(data, votes_for(cell.seed), &spec.pate, cell.eps, cell.fairness, run_seed),
            Framework::Fairdpsgd => run_fairdpsgd(data, &spec.dpsgd, cell.eps, cell.fairness, run_seed),
            placement => run_baseline_placement(
                placement,
                data,
                votes_for(cell.seed),
                &spec.pate,
                cell.eps,
                cell.fairness,
                run_seed,
            ),
        }
    })?;
    Ok(cells
        .into_iter()
        .zip(outputs)
        .map(|(cell, output)| CellResult { cell, output })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order_and_errors() {
        let items: Vec<u32> = (0..50).collect();
        let out = parallel_map(&items, 4, |&x| Ok(x * 2)).unwrap();
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
        let err = parallel_map(&items, 3, |&x| if x == 7 { Err(Error::Empty("x")) } else { Ok(x) });
        assert!(err.is_err());
        assert!(parallel_map(&Vec::<u32>::new(), 4, |&x| Ok(x)).unwrap().is_empty());
    }

    #[test]
    fn cell_order() {
        let spec = GridSpec {
            framework: Framework::Fairpate,
            eps_values: vec![1.0, 2.0],
            fairness_values: vec![0.1, 0.2, 0.3],
            seeds: vec![7, 8],
            pate: Default::default(),
            dpsgd: Default::default(),
        };
        let cells = spec.cells();
        assert_eq!(cells.len(), 12);
        assert_eq!((cells[0].eps, cells[0].fairness, cells[0].seed), (1.0, 0.1, 7));
        assert_eq!((cells[1].eps, cells[1].fairness, cells[1].seed), (1.0, 0.1, 8));
        assert_eq!((cells[11].eps, cells[11].fairness, cells[11].seed), (2.0, 0.3, 8));
    }
}
