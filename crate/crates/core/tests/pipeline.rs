use fairfront_core::aggregation::{confident_gnmax, AggregatorParams};
use fairfront_core::domain::Framework;
use fairfront_core::SeededRng;
use fairfront_core::harness::{
    generate, public_votes, run_baseline_placement, run_fairdpsgd, run_grid, train_teachers, Dataset,
    DpSgdConfig, FrontierDocument, GridSpec, PateConfig, SyntheticSpec,
};
use fairfront_core::learners::{evaluate_accuracy, load_checkpoint, save_checkpoint, student_train, TrainConfig};
use fairfront_core::pareto::{frontier, frontier_query, ObjectiveSpec, QueryObjective};

fn dataset(n: usize, seed: u64) -> Dataset {
    generate(&SyntheticSpec {
        n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn small_pate() -> PateConfig {
    PateConfig {
        teachers: 50,
        threshold: 30.0,
        sigma1: 25.0,
        sigma2: 8.0,
        public_queries: 500,
        min_count: 20,
        ..Default::default()
    }
}

#[test]
fn noise_free_ensemble_teaches_an_accurate_student() {
    let data = generate(&SyntheticSpec {
        n: 10_000,
        class_separation: 6.0,
        group_shift: 0.5,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let cfg = small_pate();
    let teachers = train_teachers(&data, &cfg, 2).unwrap();
    let votes = public_votes(&data, &teachers, &cfg).unwrap();
    let noise_free = AggregatorParams {
        threshold: 25.0,
        sigma1: 0.0,
        sigma2: 0.0,
        ..Default::default()
    };
    let mut rng = SeededRng::new(3);
    let answered: Vec<_> = votes
        .iter()
        .zip(&data.public)
        .filter_map(|(hist, e)| {
            let out = confident_gnmax(hist, &noise_free, &mut rng).unwrap();
            out.result.class().map(|k| (e.features.clone(), k))
        })
        .collect();
    assert!(answered.len() > 400);
    let student = student_train(&answered, &TrainConfig::default(), &mut rng).unwrap();
    let test: Vec<_> = data.test.iter().map(|e| (e.features.clone(), e.label)).collect();
    assert!(evaluate_accuracy(&student, &test).unwrap() >= 0.95);
}

#[test]
fn student_on_true_labels_matches_supervised_baseline() {
    let data = dataset(6000, 4);
    let public: Vec<_> = data.public.iter().map(|e| (e.features.clone(), e.label)).collect();
    let test: Vec<_> = data.test.iter().map(|e| (e.features.clone(), e.label)).collect();
    let cfg = TrainConfig::default();
    let student = student_train(&public, &cfg, &mut SeededRng::new(5)).unwrap();
    let train: Vec<_> = data.train.iter().map(|e| (e.features.clone(), e.label)).collect();
    let baseline = student_train(&train, &cfg, &mut SeededRng::new(5)).unwrap();
    let (a, b) = (evaluate_accuracy(&student, &test).unwrap(), evaluate_accuracy(&baseline, &test).unwrap());
    assert!((a - b).abs() < 0.03, "student {a} vs baseline {b}");
}

#[test]
fn regularizer_sweep_lowers_disparity_at_fixed_cost() {
    let data = dataset(6000, 6);
    let cfg = DpSgdConfig {
        steps: 150,
        ..Default::default()
    };
    let runs: Vec<_> = [0.0, 1.0, 10.0]
        .iter()
        .map(|&w| run_fairdpsgd(&data, &cfg, 2.0, w, 7).unwrap())
        .collect();
    let raw: Vec<f64> = runs.iter().map(|r| r.raw_max_disparity.unwrap()).collect();
    assert!(raw.windows(2).all(|w| w[1] <= w[0]), "raw disparities {raw:?}");
    assert!(runs.iter().all(|r| r.record.eps_achieved == runs[0].record.eps_achieved));
}

#[test]
fn in_processing_beats_pre_processing_on_raw_disparity() {
    let data = dataset(6000, 8);
    let cfg = small_pate();
    let teachers = train_teachers(&data, &cfg, 9).unwrap();
    let votes = public_votes(&data, &teachers, &cfg).unwrap();
    let pre = run_baseline_placement(Framework::PatePre, &data, &votes, &cfg, 4.0, 0.05, 10).unwrap();
    let inp = run_baseline_placement(Framework::PateIn, &data, &votes, &cfg, 4.0, 0.05, 10).unwrap();
    assert!(inp.raw_max_disparity.unwrap() < pre.raw_max_disparity.unwrap());
}

#[test]
fn grid_is_deterministic_and_bounded_by_budget() {
    let data = dataset(5000, 11);
    let spec = GridSpec {
        framework: Framework::Fairpate,
        eps_values: vec![0.5, 1.5],
        fairness_values: vec![0.02, 0.2],
        seeds: vec![1, 2],
        pate: small_pate(),
        dpsgd: Default::default(),
    };
    let a = run_grid(&data, &spec, 99, 4).unwrap();
    let b = run_grid(&data, &spec, 99, 1).unwrap();
    let ra: Vec<_> = a.iter().map(|c| c.output.record.clone()).collect();
    let rb: Vec<_> = b.iter().map(|c| c.output.record.clone()).collect();
    assert_eq!(ra, rb);
    assert!(ra.iter().all(|r| r.eps_achieved <= r.eps_spec + 1e-9));
    let doc = FrontierDocument::new("synthetic", "t", 99, ra.clone());
    assert_eq!(doc.to_json().unwrap(), FrontierDocument::new("synthetic", "t", 99, rb).to_json().unwrap());
}

#[test]
fn frontier_document_round_trips_through_disk() {
    let data = dataset(4000, 12);
    let spec = GridSpec {
        framework: Framework::PatePre,
        eps_values: vec![1.0, 3.0],
        fairness_values: vec![0.05, 0.1],
        seeds: vec![0],
        pate: small_pate(),
        dpsgd: Default::default(),
    };
    let records: Vec<_> = run_grid(&data, &spec, 1, 2)
        .unwrap()
        .into_iter()
        .map(|c| c.output.record)
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frontier.json");
    let doc = FrontierDocument::new("synthetic", "t", 1, records.clone());
    doc.save(&path).unwrap();
    let loaded = FrontierDocument::load(&path).unwrap();
    assert_eq!(loaded, doc);
    let front = frontier(&loaded.records, &ObjectiveSpec::default());
    assert!(!front.is_empty());
    let loose = frontier_query(&loaded.records, 10.0, 1.0, QueryObjective::Coverage).unwrap().unwrap();
    assert_eq!(
        loaded.records[loose].coverage,
        records.iter().map(|r| r.coverage).fold(f64::NEG_INFINITY, f64::max)
    );
}

#[test]
fn checkpoint_round_trips_through_disk() {
    let data = dataset(3000, 13);
    let pairs: Vec<_> = data.train.iter().map(|e| (e.features.clone(), e.label)).collect();
    let model = student_train(&pairs, &TrainConfig::default(), &mut SeededRng::new(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("student.ckpt");
    save_checkpoint(std::fs::File::create(&path).unwrap(), &model, 3).unwrap();
    let (header, loaded) = load_checkpoint(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(header.seed, 3);
    assert_eq!(loaded, model);
}
