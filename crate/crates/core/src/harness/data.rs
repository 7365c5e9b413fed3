//! Synthetic Gaussian-mixture data with a sensitive attribute.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::LabeledExample;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub public: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            public: 0.1,
            test: 0.1,
        }
    }
}

/// Mixture with one Gaussian component per (group, class): the component mean
/// is a class direction plus a group offset, shared isotropic noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub groups: usize,
    pub classes: usize,
    pub n: usize,
    /// Probability of each group.
    pub group_weights: Vec<f64>,
    /// Row `z` is the class distribution within group `z`.
    pub class_given_group: Vec<Vec<f64>>,
    /// Exact (group, class) counts; overrides `n` and the weights.
    pub exact_counts: Option<Vec<Vec<usize>>>,
    pub class_separation: f64,
    pub group_shift: f64,
    pub noise_scale: f64,
    pub split: SplitFractions,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// Two groups with opposite class balance, 20 features, 20000 points.
    fn default() -> Self {
        Self {
            dim: 20,
            groups: 2,
            classes: 2,
            n: 20_000,
            group_weights: vec![0.6, 0.4],
            class_given_group: vec![vec![0.7, 0.3], vec![0.35, 0.65]],
            exact_counts: None,
            class_separation: 2.0,
            group_shift: 1.5,
            noise_scale: 1.0,
            split: SplitFractions::default(),
            seed: 0,
        }
    }
}

/// Group/class counts of the three-group, two-class variant-comparison task.
pub const VARIANT_TASK_COUNTS: [[usize; 2]; 3] = [[324, 287], [420, 274], [445, 250]];

impl SyntheticSpec {
    /// The three-group, two-class distribution with exactly
    /// [`VARIANT_TASK_COUNTS`] points per (group, class).
    pub fn variant_task(seed: u64) -> Self {
        let counts: Vec<Vec<usize>> = VARIANT_TASK_COUNTS.iter().map(|r| r.to_vec()).collect();
        let n = counts.iter().flatten().sum();
        Self {
            dim: 2,
            groups: 3,
            classes: 2,
            n,
            group_weights: vec![1.0 / 3.0; 3],
            class_given_group: vec![vec![0.5, 0.5]; 3],
            exact_counts: Some(counts),
            class_separation: 2.0,
            group_shift: 1.0,
            noise_scale: 1.0,
            split: SplitFractions::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.groups == 0 || self.classes < 2 {
            return Err(Error::param("dims", "need d >= 1, Z >= 1, K >= 2"));
        }
        let close_to_one = |row: &[f64]| (row.iter().sum::<f64>() - 1.0).abs() < 1e-9 && row.iter().all(|&p| p >= 0.0);
        if self.group_weights.len() != self.groups || !close_to_one(&self.group_weights) {
            return Err(Error::param("group_weights", "need Z nonnegative weights summing to 1"));
        }
        if self.class_given_group.len() != self.groups
            || self
                .class_given_group
                .iter()
                .any(|r| r.len() != self.classes || !close_to_one(r))
        {
            return Err(Error::param("class_given_group", "need Z rows of K probabilities summing to 1"));
        }
        if let Some(counts) = &self.exact_counts {
            if counts.len() != self.groups || counts.iter().any(|r| r.len() != self.classes) {
                return Err(Error::param("exact_counts", "need a Z x K table"));
            }
        } else if self.n < self.groups * self.classes {
            return Err(Error::param("n", format!("need n >= Z*K = {}", self.groups * self.classes)));
        }
        let s = self.split;
        if s.train < 0.0 || s.public < 0.0 || s.test < 0.0 || (s.train + s.public + s.test - 1.0).abs() > 1e-9 {
            return Err(Error::param("split", "fractions must be nonnegative and sum to 1"));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::param("noise_scale", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub dim: usize,
    pub groups: usize,
    pub classes: usize,
    pub train: Vec<LabeledExample>,
    pub public: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

impl Dataset {
    pub fn all(&self) -> impl Iterator<Item = &LabeledExample> {
        self.train.iter().chain(&self.public).chain(&self.test)
    }
}

fn categorical(rng: &mut SeededRng, weights: &[f64]) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn random_direction(rng: &mut SeededRng, dim: usize, scale: f64) -> Result<Vec<f64>> {
    let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    Ok(v.into_iter().map(|x| scale * x / norm).collect())
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let class_dirs = (0..spec.classes)
        .map(|_| random_direction(&mut rng, spec.dim, spec.class_separation))
        .collect::<Result<Vec<_>>>()?;
    let group_dirs = (0..spec.groups)
        .map(|_| random_direction(&mut rng, spec.dim, spec.group_shift))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = match &spec.exact_counts {
        Some(counts) => {
            let mut cells = Vec::new();
            for (z, row) in counts.iter().enumerate() {
                for (k, &c) in row.iter().enumerate() {
                    cells.extend(std::iter::repeat_n((z, k), c));
                }
            }
            rng.shuffle(&mut cells);
            cells
        }
        None => (0..spec.n)
            .map(|_| {
                let z = categorical(&mut rng, &spec.group_weights);
                (z, categorical(&mut rng, &spec.class_given_group[z]))
            })
            .collect(),
    };

    let examples: Vec<LabeledExample> = cells
        .into_iter()
        .map(|(z, k)| {
            let features = (0..spec.dim)
                .map(|j| class_dirs[k][j] + group_dirs[z][j] + spec.noise_scale * rng.standard_normal())
                .collect();
            LabeledExample::new(features, z, k)
        })
        .collect();

    let n = examples.len();
    let n_train = (spec.split.train * n as f64).round() as usize;
    let n_public = ((spec.split.public * n as f64).round() as usize).min(n - n_train);
    let mut rest = examples;
    let test = rest.split_off(n_train + n_public);
    let mut public = rest.split_off(n_train);
    for e in &mut public {
        e.is_public = true;
    }
    Ok(Dataset {
        dim: spec.dim,
        groups: spec.groups,
        classes: spec.classes,
        train: rest,
        public,
        test,
    })
}

/// `shards` contiguous, disjoint, exhaustive shards whose sizes differ by at
/// most one.
pub fn partition_teachers(data: &[LabeledExample], shards: usize) -> Result<Vec<&[LabeledExample]>> {
    if shards == 0 || shards > data.len() {
        return Err(Error::param(
            "teachers",
            format!("need 1 <= B <= {} examples, got {shards}", data.len()),
        ));
    }
    let base = data.len() / shards;
    let extra = data.len() % shards;
    let mut out = Vec::with_capacity(shards);
    let mut start = 0;
    for i in 0..shards {
        let len = base + usize::from(i < extra);
        out.push(&data[start..start + len]);
        start += len;
    }
    Ok(out)
}

/// Writes examples as CSV: `group,label,x0,...,x{d-1}`.
pub fn write_examples_csv<W: Write>(writer: W, data: &[LabeledExample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let dim = data.first().map_or(0, |e| e.features.len());
    let mut header = vec!["group".to_string(), "label".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    out.write_record(&header)?;
    for e in data {
        let mut row = vec![e.group.to_string(), e.label.to_string()];
        row.extend(e.features.iter().map(|v| format!("{v:?}")));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_examples_csv<R: Read>(reader: R, is_public: bool) -> Result<Vec<LabeledExample>> {
    let mut input = csv::Reader::from_reader(reader);
    let mut data = Vec::new();
    for (i, row) in input.records().enumerate() {
        let row = row?;
        let field = |j: usize| row.get(j).unwrap_or_default();
        let parse_err = |column: usize, message: String| Error::Parse {
            line: i + 2,
            column: column + 1,
            message,
        };
        let group = field(0).parse().map_err(|e| parse_err(0, format!("group: {e}")))?;
        let label = field(1).parse().map_err(|e| parse_err(1, format!("label: {e}")))?;
        let features = (2..row.len())
            .map(|j| field(j).parse::<f64>().map_err(|e| parse_err(j, format!("feature: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut e = LabeledExample::new(features, group, label);
        e.is_public = is_public;
        data.push(e);
    }
    Ok(data)
}

/// Writes `train.csv`, `public.csv` and `test.csv` into `dir`.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, split) in [("train", &data.train), ("public", &data.public), ("test", &data.test)] {
        let file = std::fs::File::create(dir.join(format!("{name}.csv")))?;
        write_examples_csv(std::io::BufWriter::new(file), split)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n: 2000,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn exact_counts_are_reproduced() {
        let data = generate(&SyntheticSpec::variant_task(3)).unwrap();
        let mut counts = [[0usize; 2]; 3];
        for e in data.all() {
            counts[e.group][e.label] += 1;
        }
        assert_eq!(counts, VARIANT_TASK_COUNTS);
    }

    #[test]
    fn uniform_weights_give_uniform_rates() {
        let spec = SyntheticSpec {
            n: 20_000,
            group_weights: vec![0.5, 0.5],
            class_given_group: vec![vec![0.5, 0.5]; 2],
            ..Default::default()
        };
        let data = generate(&spec).unwrap();
        for z in 0..2 {
            let members: Vec<_> = data.all().filter(|e| e.group == z).collect();
            let rate = members.iter().filter(|e| e.label == 1).count() as f64 / members.len() as f64;
            assert!((rate - 0.5).abs() < 3.0 / (members.len() as f64).sqrt());
        }
    }

    #[test]
    fn deterministic_and_split() {
        let a = generate(&small(9)).unwrap();
        let b = generate(&small(9)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(&small(10)).unwrap());
        assert_eq!((a.train.len(), a.public.len(), a.test.len()), (1600, 200, 200));
        assert!(a.public.iter().all(|e| e.is_public));
        let mut buf = Vec::new();
        write_examples_csv(&mut buf, &a.test).unwrap();
        assert_eq!(read_examples_csv(buf.as_slice(), false).unwrap(), a.test);
    }

    #[test]
    fn invalid_specs() {
        let mut s = small(0);
        s.group_weights = vec![0.5, 0.6];
        assert!(generate(&s).is_err());
        let mut s = small(0);
        s.n = 3;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn shards() {
        let data = generate(&small(1)).unwrap().train;
        assert_eq!(partition_teachers(&data, 1).unwrap()[0].len(), data.len());
        let parts = partition_teachers(&data, 7).unwrap();
        let sizes: Vec<_> = parts.iter().map(|p| p.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), data.len());
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let joined: Vec<_> = parts.concat();
        assert_eq!(joined, data);
        assert!(partition_teachers(&data, data.len() + 1).is_err());
        let big: Vec<_> = (0..20_000).map(|i| LabeledExample::new(vec![i as f64], 0, 0)).collect();
        assert!(partition_teachers(&big, 200).unwrap().iter().all(|s| s.len() == 100));
    }

    #[test]
    fn bad_csv_reports_position() {
        let text = "group,label,x0\n0,1,0.5\n1,x,0.2\n";
        match read_examples_csv(text.as_bytes(), false) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
