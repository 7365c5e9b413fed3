//! Single experiment runs: FairPATE, fair DP-SGD and the plain-PATE
//! placements with pre-processing or in-processing.

use serde::{Deserialize, Serialize};

use super::data::{partition_teachers, Dataset};
use crate::accounting::{calibrate_noise_multiplier, default_orders, BudgetTracker};
use crate::aggregation::{collect_votes, confident_fair_gnmax, confident_gnmax, AggregatorParams};
use crate::domain::{ExperimentRecord, Framework, GroupClassCounter, LabeledExample, PrivacyBudget, VoteHistogram};
use crate::error::{Error, Result};
use crate::fairness::{
    disparity_matrix, max_abs_disparity, postprocess_stream, preprocess_stream, DisparityVariant, GateLogEntry,
    GateParams,
};
use crate::learners::{
    fair_dp_sgd_train, student_train, student_train_regularized, Architecture, DpSgdParams, FairRegParams, Model,
    PublicPoint, TrainConfig,
};
use crate::rng::SeededRng;

const TEACHER_STREAM: u64 = 1;
const QUERY_STREAM: u64 = 2;
const STUDENT_STREAM: u64 = 3;
const DPSGD_STREAM: u64 = 4;

pub const FLAG_NO_ANSWERED_QUERIES: &str = "no_answered_queries";
pub const FLAG_NO_ACCEPTED_TEST: &str = "no_accepted_test_predictions";
pub const FLAG_DISPARITY_UNDEFINED: &str = "disparity_undefined";
pub const FLAG_BUDGET_HALTED: &str = "budget_halted";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PateConfig {
    pub teachers: usize,
    pub teacher_training: TrainConfig,
    pub student_training: TrainConfig,
    pub threshold: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Cold-start length `M` of every fairness gate.
    pub min_count: u64,
    pub variant: DisparityVariant,
    pub delta: f64,
    pub public_queries: usize,
    pub charge_fairness_rejected: bool,
    /// DPL weight of the in-processing placement.
    pub in_processing_weight: f64,
    pub temperature: f64,
}

impl Default for PateConfig {
    fn default() -> Self {
        let base = AggregatorParams::default();
        Self {
            teachers: 200,
            teacher_training: TrainConfig {
                epochs: 20,
                batch_size: 16,
                ..TrainConfig::default()
            },
            student_training: TrainConfig::default(),
            threshold: base.threshold,
            sigma1: base.sigma1,
            sigma2: base.sigma2,
            min_count: 50,
            variant: DisparityVariant::default(),
            delta: 1e-5,
            public_queries: 1000,
            charge_fairness_rejected: true,
            in_processing_weight: 1.0,
            temperature: 0.1,
        }
    }
}

impl PateConfig {
    pub fn gate(&self, gamma: f64) -> Result<GateParams> {
        Ok(GateParams::new(gamma, self.min_count)?.with_variant(self.variant))
    }

    pub fn aggregator(&self, gamma: f64) -> Result<AggregatorParams> {
        let params = AggregatorParams {
            threshold: self.threshold,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            gate: self.gate(gamma)?,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpSgdConfig {
    pub architecture: Architecture,
    pub learning_rate: f64,
    pub expected_batch: usize,
    pub clip_norm: f64,
    pub steps: u64,
    pub delta: f64,
    pub temperature: f64,
    pub variant: DisparityVariant,
    pub absolute: bool,
    /// Margin of the inference-time post-processor.
    pub post_rho: f64,
    pub min_count: u64,
}

impl Default for DpSgdConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::SoftmaxRegression,
            learning_rate: 0.5,
            expected_batch: 256,
            clip_norm: 1.0,
            steps: 300,
            delta: 1e-5,
            temperature: 0.1,
            variant: DisparityVariant::default(),
            absolute: false,
            post_rho: 0.1,
            min_count: 50,
        }
    }
}

/// Everything a run produces besides its record.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: ExperimentRecord,
    pub tracker: Option<BudgetTracker>,
    /// Gate decisions of the query phase, in order.
    pub query_gate_log: Vec<GateLogEntry>,
    /// Gate decisions of the inference-time post-processor, in order.
    pub test_gate_log: Vec<GateLogEntry>,
    pub student: Option<Model>,
    /// Labels the student was trained on.
    pub training_labels: usize,
    /// Post-processor acceptance rate on the test set.
    pub test_acceptance: f64,
    /// Disparity of all test predictions, before the post-processor.
    pub raw_max_disparity: Option<f64>,
}

/// Trains `cfg.teachers` teachers on disjoint shards of the training split.
pub fn train_teachers(data: &Dataset, cfg: &PateConfig, seed: u64) -> Result<Vec<Model>> {
    let mut rng = SeededRng::new(seed).derive(TEACHER_STREAM);
    let training = TrainConfig {
        classes: data.classes,
        ..cfg.teacher_training
    };
    partition_teachers(&data.train, cfg.teachers)?
        .into_iter()
        .map(|shard| {
            let pairs: Vec<_> = shard.iter().map(|e| (e.features.clone(), e.label)).collect();
            student_train(&pairs, &training, &mut rng)
        })
        .collect()
}

/// Teacher votes on the first `cfg.public_queries` public points.
pub fn public_votes(data: &Dataset, teachers: &[Model], cfg: &PateConfig) -> Result<Vec<VoteHistogram>> {
    data.public
        .iter()
        .take(cfg.public_queries)
        .map(|e| collect_votes(teachers, &e.features))
        .collect()
}

struct QueryPhase {
    /// `(public index, released label)` of the answered queries.
    answered: Vec<(usize, usize)>,
    tracker: BudgetTracker,
    gate_log: Vec<GateLogEntry>,
    budget_halted: bool,
}

fn query_phase(
    data: &Dataset,
    votes: &[VoteHistogram],
    params: &AggregatorParams,
    fair: bool,
    eps: f64,
    cfg: &PateConfig,
    rng: &mut SeededRng,
) -> Result<QueryPhase> {
    let mut tracker = BudgetTracker::new(PrivacyBudget::new(eps, cfg.delta)?, default_orders())?;
    tracker.charge_fairness_rejected = cfg.charge_fairness_rejected;
    if let Some(first) = votes.first() {
        params.check_threshold(first.teacher_count());
    }
    let mut m = GroupClassCounter::new(data.groups, data.classes);
    let mut phase = QueryPhase {
        answered: Vec::new(),
        tracker,
        gate_log: Vec::new(),
        budget_halted: false,
    };
    for (i, hist) in votes.iter().enumerate() {
        if phase.tracker.would_exceed(hist, params)? {
            phase.budget_halted = true;
            break;
        }
        let group = data.public[i].group;
        let outcome = if fair {
            confident_fair_gnmax(hist, group, &mut m, params, rng)?
        } else {
            confident_gnmax(hist, params, rng)?
        };
        phase.tracker.charge_query(&outcome, hist, params, Some(group))?;
        if let (Some(decision), Some(class)) = (outcome.gate_decision, outcome.noisy_label) {
            phase.gate_log.push(GateLogEntry {
                group,
                class,
                decision,
                value: outcome.gate_value,
            });
        }
        if let Some(label) = outcome.result.class() {
            phase.answered.push((i, label));
        }
    }
    Ok(phase)
}

struct Evaluation {
    accuracy: Option<f64>,
    max_disparity: Option<f64>,
    raw_max_disparity: Option<f64>,
    acceptance: f64,
    log: Vec<GateLogEntry>,
}

fn evaluate(model: &Model, data: &Dataset, gate: GateParams) -> Result<Evaluation> {
    let test = &data.test;
    let preds = test
        .iter()
        .map(|e| model.predict(&e.features))
        .collect::<Result<Vec<_>>>()?;
    let groups: Vec<usize> = test.iter().map(|e| e.group).collect();
    let disparity = |preds: &[usize], groups: &[usize]| -> Result<Option<f64>> {
        let matrix = disparity_matrix(preds, groups, data.groups, data.classes, DisparityVariant::default())?;
        Ok(if matrix.is_all_undefined() {
            None
        } else {
            Some(max_abs_disparity(&matrix)?)
        })
    };
    let raw_max_disparity = disparity(&preds, &groups)?;
    let queries: Vec<_> = groups.iter().copied().zip(preds.iter().copied()).collect();
    let (released, log) = postprocess_stream(&queries, data.groups, data.classes, gate)?;
    let mut kept_preds = Vec::new();
    let mut kept_groups = Vec::new();
    let mut correct = 0usize;
    for (e, p) in test.iter().zip(&released) {
        if let Some(k) = p.class() {
            kept_preds.push(k);
            kept_groups.push(e.group);
            correct += usize::from(k == e.label);
        }
    }
    let accepted = kept_preds.len();
    Ok(Evaluation {
        accuracy: (accepted > 0).then(|| correct as f64 / accepted as f64),
        max_disparity: disparity(&kept_preds, &kept_groups)?,
        raw_max_disparity,
        acceptance: if test.is_empty() { 0.0 } else { accepted as f64 / test.len() as f64 },
        log,
    })
}

fn public_points(data: &Dataset) -> Vec<PublicPoint> {
    data.public
        .iter()
        .map(|e| PublicPoint {
            features: e.features.clone(),
            group: e.group,
        })
        .collect()
}

struct Assembled {
    framework: Framework,
    eps_spec: f64,
    fairness_spec: f64,
    eps_achieved: f64,
    coverage: f64,
    seed: u64,
    flags: Vec<String>,
}

fn finish(
    a: Assembled,
    student: Option<Model>,
    data: &Dataset,
    gate: GateParams,
    tracker: Option<BudgetTracker>,
    query_gate_log: Vec<GateLogEntry>,
    training_labels: usize,
) -> Result<RunOutput> {
    let mut flags = a.flags;
    let (accuracy, max_disparity, eval) = match &student {
        Some(model) => {
            let eval = evaluate(model, data, gate)?;
            if eval.accuracy.is_none() {
                flags.push(FLAG_NO_ACCEPTED_TEST.into());
            }
            if eval.max_disparity.is_none() {
                flags.push(FLAG_DISPARITY_UNDEFINED.into());
            }
            (eval.accuracy.unwrap_or(0.0), eval.max_disparity.unwrap_or(1.0), Some(eval))
        }
        None => {
            flags.push(FLAG_NO_ANSWERED_QUERIES.into());
            (0.0, 1.0, None)
        }
    };
    let record = ExperimentRecord {
        framework: a.framework,
        eps_spec: a.eps_spec,
        fairness_spec: a.fairness_spec,
        eps_achieved: a.eps_achieved,
        max_disparity,
        accuracy,
        coverage: a.coverage,
        seed: a.seed,
        flags,
    }
    .rounded();
    Ok(RunOutput {
        record,
        tracker,
        query_gate_log,
        test_acceptance: eval.as_ref().map_or(0.0, |e| e.acceptance),
        raw_max_disparity: eval.as_ref().and_then(|e| e.raw_max_disparity),
        test_gate_log: eval.map(|e| e.log).unwrap_or_default(),
        student,
        training_labels,
    })
}

fn train_student(
    pairs: &[(Vec<f64>, usize)],
    data: &Dataset,
    cfg: &PateConfig,
    fair: Option<&FairRegParams>,
    seed: u64,
) -> Result<Option<Model>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let training = TrainConfig {
        classes: data.classes,
        ..cfg.student_training
    };
    let mut rng = SeededRng::new(seed).derive(STUDENT_STREAM);
    Ok(Some(match fair {
        Some(f) => student_train_regularized(pairs, &training, f, &mut rng)?,
        None => student_train(pairs, &training, &mut rng)?,
    }))
}

/// FairPATE: Confident&Fair-GNMax queries under a running budget, a student
/// fit to the answered queries, and the post-processor at inference, all with
/// margin `gamma`.
///
/// Coverage is the fraction of the query stream that received a label;
/// consensus, fairness and budget rejections all count against it.
pub fn run_fairpate(
    data: &Dataset,
    votes: &[VoteHistogram],
    cfg: &PateConfig,
    eps: f64,
    gamma: f64,
    seed: u64,
) -> Result<RunOutput> {
    let params = cfg.aggregator(gamma)?;
    let mut rng = SeededRng::new(seed).derive(QUERY_STREAM);
    let phase = query_phase(data, votes, &params, true, eps, cfg, &mut rng)?;
    let pairs: Vec<_> = phase
        .answered
        .iter()
        .map(|&(i, y)| (data.public[i].features.clone(), y))
        .collect();
    let student = train_student(&pairs, data, cfg, None, seed)?;
    let mut flags = Vec::new();
    if phase.budget_halted {
        flags.push(FLAG_BUDGET_HALTED.to_string());
    }
    finish(
        Assembled {
            framework: Framework::Fairpate,
            eps_spec: eps,
            fairness_spec: gamma,
            eps_achieved: phase.tracker.current_epsilon(),
            coverage: coverage(pairs.len(), votes.len()),
            seed,
            flags,
        },
        student,
        data,
        params.gate,
        Some(phase.tracker),
        phase.gate_log,
        pairs.len(),
    )
}

fn coverage(answered: usize, stream: usize) -> f64 {
    if stream == 0 {
        0.0
    } else {
        answered as f64 / stream as f64
    }
}

/// Plain Confident-GNMax queries followed by fairness pre-processing of the
/// student set ([`Framework::PatePre`]) or a DPL-regularized student
/// ([`Framework::PateIn`]); both use the post-processor at inference.
pub fn run_baseline_placement(
    placement: Framework,
    data: &Dataset,
    votes: &[VoteHistogram],
    cfg: &PateConfig,
    eps: f64,
    gamma: f64,
    seed: u64,
) -> Result<RunOutput> {
    let params = cfg.aggregator(gamma)?;
    let mut rng = SeededRng::new(seed).derive(QUERY_STREAM);
    let phase = query_phase(data, votes, &params, false, eps, cfg, &mut rng)?;
    let labeled: Vec<LabeledExample> = phase
        .answered
        .iter()
        .map(|&(i, y)| LabeledExample::new(data.public[i].features.clone(), data.public[i].group, y))
        .collect();
    let (pairs, fair) = match placement {
        Framework::PatePre => {
            let kept = preprocess_stream(&labeled, data.groups, data.classes, params.gate)?;
            (kept.into_iter().map(|e| (e.features, e.label)).collect::<Vec<_>>(), None)
        }
        Framework::PateIn => {
            let mut fair = FairRegParams::new(cfg.in_processing_weight, cfg.temperature, public_points(data))?;
            fair.variant = cfg.variant;
            (labeled.into_iter().map(|e| (e.features, e.label)).collect(), Some(fair))
        }
        other => {
            return Err(Error::param("placement", format!("{other} is not a baseline placement")));
        }
    };
    let student = train_student(&pairs, data, cfg, fair.as_ref(), seed)?;
    let mut flags = Vec::new();
    if phase.budget_halted {
        flags.push(FLAG_BUDGET_HALTED.to_string());
    }
    finish(
        Assembled {
            framework: placement,
            eps_spec: eps,
            fairness_spec: gamma,
            eps_achieved: phase.tracker.current_epsilon(),
            coverage: coverage(pairs.len(), votes.len()),
            seed,
            flags,
        },
        student,
        data,
        params.gate,
        Some(phase.tracker),
        Vec::new(),
        pairs.len(),
    )
}

/// Fair DP-SGD on the training split with the noise multiplier calibrated to
/// `eps`, followed by the post-processor. Coverage is the post-processor's
/// acceptance rate on the test set.
pub fn run_fairdpsgd(data: &Dataset, cfg: &DpSgdConfig, eps: f64, reg_weight: f64, seed: u64) -> Result<RunOutput> {
    let q = cfg.expected_batch as f64 / data.train.len() as f64;
    let sigma = calibrate_noise_multiplier(q, cfg.steps, cfg.delta, eps, &default_orders())?;
    let dp = DpSgdParams {
        learning_rate: cfg.learning_rate,
        noise_multiplier: sigma,
        expected_batch: cfg.expected_batch,
        clip_norm: cfg.clip_norm,
        steps: cfg.steps,
        delta: cfg.delta,
    };
    let mut fair = FairRegParams::new(reg_weight, cfg.temperature, public_points(data))?;
    fair.variant = cfg.variant;
    fair.absolute = cfg.absolute;
    let mut rng = SeededRng::new(seed).derive(DPSGD_STREAM);
    let trained = fair_dp_sgd_train(&data.train, cfg.architecture, data.classes, &dp, &fair, &mut rng)?;
    let gate = GateParams::new(cfg.post_rho, cfg.min_count)?.with_variant(cfg.variant);
    let mut out = finish(
        Assembled {
            framework: Framework::Fairdpsgd,
            eps_spec: eps,
            fairness_spec: reg_weight,
            eps_achieved: trained.epsilon,
            coverage: 0.0,
            seed,
            flags: Vec::new(),
        },
        Some(trained.model),
        data,
        gate,
        None,
        Vec::new(),
        data.train.len(),
    )?;
    out.record.coverage = crate::domain::round6(out.test_acceptance);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::replay_gate_log;
    use crate::harness::data::{generate, SyntheticSpec};

    fn setup() -> (Dataset, PateConfig, Vec<VoteHistogram>) {
        let data = generate(&SyntheticSpec {
            n: 6000,
            seed: 5,
            ..Default::default()
        })
        .unwrap();
        let cfg = PateConfig {
            teachers: 60,
            threshold: 40.0,
            sigma1: 30.0,
            sigma2: 8.0,
            public_queries: 400,
            min_count: 20,
            ..Default::default()
        };
        let teachers = train_teachers(&data, &cfg, 1).unwrap();
        let votes = public_votes(&data, &teachers, &cfg).unwrap();
        (data, cfg, votes)
    }

    #[test]
    fn fairpate_run_is_sound_and_within_budget() {
        let (data, cfg, votes) = setup();
        let out = run_fairpate(&data, &votes, &cfg, 2.0, 0.05, 3).unwrap();
        assert!(out.record.eps_achieved <= 2.0 + 1e-9);
        let gate = cfg.gate(0.05).unwrap();
        let replay = replay_gate_log(&out.query_gate_log, data.groups, data.classes, &gate).unwrap();
        assert!(replay.is_sound());
        assert_eq!(replay.counter_total as usize, out.training_labels);
        let test_replay = replay_gate_log(&out.test_gate_log, data.groups, data.classes, &gate).unwrap();
        assert!(test_replay.is_sound());
        assert!(out.record.coverage > 0.0 && out.record.coverage <= 1.0);
    }

    #[test]
    fn vacuous_margin_matches_plain_pate() {
        let (data, cfg, votes) = setup();
        let fair = run_fairpate(&data, &votes, &cfg, 5.0, 1.0, 4).unwrap();
        let plain = run_baseline_placement(Framework::PatePre, &data, &votes, &cfg, 5.0, 1.0, 4).unwrap();
        assert_eq!(fair.student, plain.student);
        let mut a = fair.record.clone();
        a.framework = Framework::PatePre;
        assert_eq!(a, plain.record);
    }

    #[test]
    fn tiny_budget_yields_flagged_record() {
        let (data, cfg, votes) = setup();
        let out = run_fairpate(&data, &votes, &cfg, 1e-3, 0.05, 4).unwrap();
        assert_eq!(out.record.coverage, 0.0);
        assert!(out.record.flags.iter().any(|f| f == FLAG_NO_ANSWERED_QUERIES));
        assert!(out.student.is_none());
    }

    #[test]
    fn in_processing_runs() {
        let (data, cfg, votes) = setup();
        let out = run_baseline_placement(Framework::PateIn, &data, &votes, &cfg, 3.0, 0.1, 4).unwrap();
        assert!(out.record.accuracy > 0.5);
        assert!(run_baseline_placement(Framework::Fairpate, &data, &votes, &cfg, 3.0, 0.1, 4).is_err());
    }

    #[test]
    fn fairdpsgd_meets_budget() {
        let (data, _, _) = setup();
        let cfg = DpSgdConfig {
            steps: 60,
            ..Default::default()
        };
        let a = run_fairdpsgd(&data, &cfg, 2.0, 0.0, 1).unwrap();
        let b = run_fairdpsgd(&data, &cfg, 2.0, 1.0, 1).unwrap();
        assert!(a.record.eps_achieved <= 2.0 + 1e-9);
        assert_eq!(a.record.eps_achieved, b.record.eps_achieved);
        assert!(a.record.accuracy > 0.6);
    }
}
