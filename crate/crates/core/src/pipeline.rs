//! End-to-end estimation: trajectory -> (infective, susceptible) dataset ->
//! cluster-wise cooperative networks and polynomial baselines -> prediction
//! errors and rate-of-spread series.
//!
//! The cooperative model partitions the standardized training pairs with
//! k-means and trains one network per partition. At prediction time only the
//! infective value is known, so an input is routed to the cluster whose
//! centroid is nearest along the infective coordinate.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::clustering::{
    self, ClusterError, ClusterModel, KMeansConfig, KSelection, Point, StandardizationParams,
};
use crate::integrate::{self, IntegrationConfig, IntegrationError, Trajectory};
use crate::math::{pow_nonneg, sqrt};
use crate::model::{self, AdmissibilityReport, ModelParams, State};
use crate::neuralnet::{self, MlpConfig, MlpModel, OutputActivation, TrainConfig, TrainError};
use crate::regression::{self, PolyModel, RegressionError};
use crate::seed::{self, Stream};

/// Column index of the infective count (network input).
pub const INFECTIVE: usize = 0;
/// Column index of the susceptible count (network target).
pub const SUSCEPTIBLE: usize = 1;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("inadmissible model parameters ({} violation(s))", .0.violations.len())]
    Inadmissible(AdmissibilityReport),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error("too few samples: {0}")]
    TooFewSamples(usize),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
}

/// Where a dataset came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    pub params: ModelParams,
    pub init: State,
    pub integration: IntegrationConfig,
}

/// `(infective, susceptible)` pairs, raw and standardized.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub raw: Vec<(f64, f64)>,
    pub standardized: Vec<(f64, f64)>,
    /// Feature [`INFECTIVE`] and feature [`SUSCEPTIBLE`].
    pub standardization: StandardizationParams,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    /// Standardizes `raw` with its own mean and sample standard deviation.
    pub fn from_raw(raw: Vec<(f64, f64)>) -> Result<Self, PipelineError> {
        let rows: Vec<Point> = raw.iter().map(|&(x2, x1)| vec![x2, x1]).collect();
        let (_, standardization) = clustering::standardize(&rows)?;
        Ok(Self::with_standardization(raw, standardization))
    }

    /// Uses an existing standardization (e.g. the parent's, for a split).
    pub fn with_standardization(
        raw: Vec<(f64, f64)>,
        standardization: StandardizationParams,
    ) -> Self {
        let standardized = raw
            .iter()
            .map(|&(x2, x1)| {
                (
                    standardization.apply_feature(INFECTIVE, x2),
                    standardization.apply_feature(SUSCEPTIBLE, x1),
                )
            })
            .collect();
        Dataset {
            raw,
            standardized,
            standardization,
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        let raw = indices.iter().map(|&i| self.raw[i]).collect();
        let mut d = Dataset::with_standardization(raw, self.standardization.clone());
        d.provenance = self.provenance;
        d
    }
}

/// Integrates the model and turns every sample into an
/// `(infective, susceptible)` pair.
pub fn generate_dataset(
    params: &ModelParams,
    init: State,
    config: &IntegrationConfig,
) -> Result<(Trajectory, Dataset), PipelineError> {
    let report = model::validate_params(params);
    if !report.is_admissible() {
        return Err(PipelineError::Inadmissible(report));
    }
    let traj = integrate::integrate(params, init, config)?;
    let raw = traj.states.iter().map(|s| (s.x2, s.x1)).collect();
    let mut dataset = Dataset::from_raw(raw)?;
    dataset.provenance = Some(Provenance {
        params: *params,
        init,
        integration: *config,
    });
    Ok((traj, dataset))
}

/// Seeded random partition into train and test parts. Each part keeps the
/// original sample order and the parent standardization.
pub fn split(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), PipelineError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(PipelineError::InvalidFraction(train_fraction));
    }
    let n = dataset.len();
    let n_train = crate::math::round(train_fraction * n as f64) as usize;
    if n_train == 0 || n_train >= n {
        return Err(PipelineError::TooFewSamples(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    let (train, test) = idx.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(train), dataset.subset(test)))
}

/// Which standardized coordinates k-means sees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ClusterFeatures {
    /// Infective only; clusters are then exactly the routing cells.
    #[default]
    Infective,
    /// Infective and susceptible.
    Both,
}

impl ClusterFeatures {
    /// Clustering coordinates of a standardized `(infective, susceptible)` pair.
    pub fn point(self, (z2, z1): (f64, f64)) -> Point {
        match self {
            ClusterFeatures::Infective => vec![z2],
            ClusterFeatures::Both => vec![z2, z1],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KChoice {
    Fixed(usize),
    /// Highest mean silhouette among the candidates.
    Auto(Vec<usize>),
}

impl Default for KChoice {
    fn default() -> Self {
        KChoice::Fixed(3)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CooperativeConfig {
    pub k: KChoice,
    pub features: ClusterFeatures,
    /// Clusters smaller than this are merged into their nearest neighbour.
    pub min_cluster_size: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub hidden_units: usize,
    pub init_scale: f64,
    pub output_activation: OutputActivation,
    pub train: TrainConfig,
}

impl Default for CooperativeConfig {
    fn default() -> Self {
        CooperativeConfig {
            k: KChoice::default(),
            features: ClusterFeatures::default(),
            min_cluster_size: 6,
            kmeans_restarts: 10,
            kmeans_max_iter: 300,
            hidden_units: 5,
            init_scale: 0.5,
            output_activation: OutputActivation::Identity,
            train: TrainConfig::default(),
        }
    }
}

/// One trained network per cluster plus the centroid routing table.
#[derive(Clone, Debug, PartialEq)]
pub struct CooperativeModel {
    pub clusters: ClusterModel,
    pub networks: Vec<MlpModel>,
    pub standardization: StandardizationParams,
    pub features: ClusterFeatures,
    /// Silhouette table when `k` was chosen automatically.
    pub selection: Option<KSelection>,
    /// Clusters merged away for being too small.
    pub merged: usize,
}

impl CooperativeModel {
    pub fn k(&self) -> usize {
        self.networks.len()
    }

    /// Cluster whose centroid is nearest along the infective coordinate;
    /// ties go to the lowest index.
    pub fn route(&self, z_infective: f64) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.clusters.centroids.iter().enumerate() {
            let d = (c[INFECTIVE] - z_infective).abs();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

/// Merges clusters below `min_size` into the nearest remaining centroid,
/// then re-runs Lloyd iterations from the surviving centroids.
fn merge_small_clusters(
    points: &[Point],
    mut model: ClusterModel,
    min_size: usize,
    max_iter: usize,
) -> Result<(ClusterModel, usize), PipelineError> {
    let mut merged = 0;
    loop {
        let sizes = model.cluster_sizes();
        let small = sizes
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s < min_size)
            .min_by_key(|&(i, &s)| (s, i))
            .map(|(i, &s)| (i, s));
        let Some((victim, size)) = small else { break };
        if model.k == 1 {
            break;
        }
        log::warn!(
            "cluster {victim} has {size} points (< {min_size}); merging into nearest cluster"
        );
        let mut centroids = model.centroids.clone();
        centroids.remove(victim);
        let standardization = model.standardization.take();
        model = clustering::refine(points, centroids, max_iter)?;
        model.standardization = standardization;
        merged += 1;
    }
    Ok((model, merged))
}

/// Clusters the standardized training pairs and trains one network per
/// cluster on that cluster's pairs only.
pub fn train_cooperative(
    train: &Dataset,
    config: &CooperativeConfig,
    seed: u64,
) -> Result<CooperativeModel, PipelineError> {
    if train.is_empty() {
        return Err(PipelineError::TooFewSamples(0));
    }
    let points: Vec<Point> = train
        .standardized
        .iter()
        .map(|&p| config.features.point(p))
        .collect();
    let cluster_seed = seed::derive(seed, Stream::Clustering, 0);
    let (k, selection) = match &config.k {
        KChoice::Fixed(k) => (*k, None),
        KChoice::Auto(candidates) => {
            let sel = clustering::select_k(&points, candidates, cluster_seed)?;
            (sel.k, Some(sel))
        }
    };
    let kcfg = KMeansConfig {
        k,
        max_iter: config.kmeans_max_iter,
        restarts: config.kmeans_restarts,
        seed: cluster_seed,
    };
    let clusters = clustering::kmeans(&points, &kcfg)?;
    let features = match config.features {
        ClusterFeatures::Infective => vec![INFECTIVE],
        ClusterFeatures::Both => vec![INFECTIVE, SUSCEPTIBLE],
    };
    let clusters = clusters.with_standardization(train.standardization.select(&features));
    let (clusters, merged) = merge_small_clusters(
        &points,
        clusters,
        config.min_cluster_size,
        config.kmeans_max_iter,
    )?;

    let mut networks = Vec::with_capacity(clusters.k);
    for c in 0..clusters.k {
        let pairs: Vec<(f64, f64)> = train
            .standardized
            .iter()
            .zip(&clusters.assignments)
            .filter(|&(_, &a)| a == c)
            .map(|(&p, _)| p)
            .collect();
        let mlp = MlpConfig {
            input_dim: 1,
            hidden_units: config.hidden_units,
            output_dim: 1,
            output_activation: config.output_activation,
            init_scale: config.init_scale,
            seed: seed::derive(seed, Stream::WeightInit, c as u64),
        };
        let tcfg = TrainConfig {
            shuffle_seed: seed::derive(seed, Stream::Shuffle, c as u64),
            ..config.train
        };
        let out = neuralnet::train(neuralnet::init_model(&mlp)?, &pairs, &tcfg)?;
        log::debug!(
            "cluster {c}: {} pairs, {} epochs, mse {:?}",
            pairs.len(),
            out.model.epochs_run,
            out.model.final_mse
        );
        networks.push(out.model);
    }
    Ok(CooperativeModel {
        clusters,
        networks,
        standardization: train.standardization.clone(),
        features: config.features,
        selection,
        merged,
    })
}

/// Maps an infective count to a susceptible estimate.
pub trait SusceptiblePredictor {
    /// Standardization with features [`INFECTIVE`] and [`SUSCEPTIBLE`].
    fn standardization(&self) -> &StandardizationParams;

    /// Prediction in standardized units.
    fn predict_standardized(&self, z_infective: f64) -> f64;

    /// Prediction in raw units.
    fn predict(&self, infective: f64) -> f64 {
        let s = self.standardization();
        let z = self.predict_standardized(s.apply_feature(INFECTIVE, infective));
        s.invert_feature(SUSCEPTIBLE, z)
    }
}

impl SusceptiblePredictor for CooperativeModel {
    fn standardization(&self) -> &StandardizationParams {
        &self.standardization
    }

    fn predict_standardized(&self, z_infective: f64) -> f64 {
        self.networks[self.route(z_infective)].predict(z_infective)
    }
}

/// Polynomial fitted on standardized pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyPredictor {
    pub model: PolyModel,
    pub standardization: StandardizationParams,
}

impl PolyPredictor {
    pub fn fit(train: &Dataset, degree: usize) -> Result<Self, PipelineError> {
        let model = regression::fit_poly(&train.standardized, degree)?;
        Ok(PolyPredictor {
            model,
            standardization: train.standardization.clone(),
        })
    }
}

impl SusceptiblePredictor for PolyPredictor {
    fn standardization(&self) -> &StandardizationParams {
        &self.standardization
    }

    fn predict_standardized(&self, z_infective: f64) -> f64 {
        self.model.predict(z_infective)
    }
}

/// Looks up the true susceptible count for an exactly known infective
/// value. Unknown inputs give NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthOracle {
    table: BTreeMap<u64, f64>,
    standardization: StandardizationParams,
}

impl TruthOracle {
    pub fn new(traj: &Trajectory) -> Self {
        let table = traj.states.iter().map(|s| (s.x2.to_bits(), s.x1)).collect();
        TruthOracle {
            table,
            standardization: StandardizationParams {
                mean: vec![0.0, 0.0],
                std: vec![1.0, 1.0],
            },
        }
    }
}

impl SusceptiblePredictor for TruthOracle {
    fn standardization(&self) -> &StandardizationParams {
        &self.standardization
    }

    fn predict_standardized(&self, z_infective: f64) -> f64 {
        self.predict(z_infective)
    }

    fn predict(&self, infective: f64) -> f64 {
        self.table
            .get(&infective.to_bits())
            .copied()
            .unwrap_or(f64::NAN)
    }
}

/// Named predictor, as passed to [`evaluate`] and [`estimate_rate_series`].
pub type Method<'a> = (&'a str, &'a dyn SusceptiblePredictor);

#[derive(Clone, Debug, PartialEq)]
pub struct MethodScores {
    pub method: String,
    pub train_mse: f64,
    pub test_mse: f64,
    pub train_mse_raw: f64,
    pub test_mse_raw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub n_train: usize,
    pub n_test: usize,
    pub methods: Vec<MethodScores>,
}

impl EvalReport {
    pub fn get(&self, method: &str) -> Option<&MethodScores> {
        self.methods.iter().find(|m| m.method == method)
    }
}

fn mse_std(p: &dyn SusceptiblePredictor, data: &Dataset) -> f64 {
    let sum: f64 = data
        .standardized
        .iter()
        .map(|&(x, y)| {
            let e = p.predict_standardized(x) - y;
            e * e
        })
        .sum();
    sum / data.len() as f64
}

fn mse_raw(p: &dyn SusceptiblePredictor, data: &Dataset) -> f64 {
    let sum: f64 = data
        .raw
        .iter()
        .map(|&(x, y)| {
            let e = p.predict(x) - y;
            e * e
        })
        .sum();
    sum / data.len() as f64
}

/// Mean squared susceptible-prediction error of each method on identical
/// train and test pairs, in standardized and raw units.
pub fn evaluate(methods: &[Method<'_>], train: &Dataset, test: &Dataset) -> EvalReport {
    let methods = methods
        .iter()
        .map(|&(name, p)| MethodScores {
            method: name.to_string(),
            train_mse: mse_std(p, train),
            test_mse: mse_std(p, test),
            train_mse_raw: mse_raw(p, train),
            test_mse_raw: mse_raw(p, test),
        })
        .collect();
    EvalReport {
        n_train: train.len(),
        n_test: test.len(),
        methods,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateSeries {
    pub method: String,
    pub estimated: Vec<f64>,
    pub rmse: f64,
    /// Samples whose predicted susceptible count was negative and clamped.
    pub clamped: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub times: Vec<f64>,
    pub actual: Vec<f64>,
    pub methods: Vec<RateSeries>,
}

impl RateReport {
    pub fn get(&self, method: &str) -> Option<&RateSeries> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Actual rate `beta * x1^m1 * x2^m2` along the trajectory against the
/// rate obtained by substituting each method's predicted susceptible count
/// for `x1` (the observed `x2` is kept).
pub fn estimate_rate_series(
    params: &ModelParams,
    traj: &Trajectory,
    methods: &[Method<'_>],
) -> RateReport {
    let actual: Vec<f64> = traj
        .states
        .iter()
        .map(|&s| model::rate_of_spread(params, s))
        .collect();
    let methods = methods
        .iter()
        .map(|&(name, p)| {
            let mut clamped = 0;
            let estimated: Vec<f64> = traj
                .states
                .iter()
                .map(|s| {
                    let mut x1 = p.predict(s.x2);
                    if x1 < 0.0 {
                        clamped += 1;
                        x1 = 0.0;
                    }
                    params.beta * pow_nonneg(x1, params.m1) * pow_nonneg(s.x2, params.m2)
                })
                .collect();
            if clamped > 0 {
                log::warn!("{name}: {clamped} negative susceptible estimates clamped to 0");
            }
            let sse: f64 = estimated
                .iter()
                .zip(&actual)
                .map(|(e, a)| (e - a) * (e - a))
                .sum();
            RateSeries {
                method: name.to_string(),
                estimated,
                rmse: sqrt(sse / actual.len().max(1) as f64),
                clamped,
            }
        })
        .collect();
    RateReport {
        times: traj.times.clone(),
        actual,
        methods,
    }
}

/// Everything needed for one end-to-end run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub init: State,
    pub integration: IntegrationConfig,
    pub train_fraction: f64,
    pub cooperative: CooperativeConfig,
    /// Polynomial baseline degrees.
    pub degrees: Vec<usize>,
    /// Master seed; split, clustering, initialization and shuffling derive
    /// from it.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(params: ModelParams, init: State, integration: IntegrationConfig) -> Self {
        ExperimentConfig {
            params,
            init,
            integration,
            train_fraction: 0.7,
            cooperative: CooperativeConfig::default(),
            degrees: vec![1, 2],
            seed: 0,
        }
    }
}

pub const COOPERATIVE_METHOD: &str = "cooperative_nn";

/// Name of the polynomial baseline of the given degree.
pub fn poly_method(degree: usize) -> String {
    alloc::format!("poly{degree}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub trajectory: Trajectory,
    pub dataset: Dataset,
    pub train: Dataset,
    pub test: Dataset,
    pub cooperative: CooperativeModel,
    pub polys: Vec<(usize, PolyPredictor)>,
    pub eval: EvalReport,
    pub rate: RateReport,
}

impl Experiment {
    /// Cooperative model first, then the polynomials in the configured order.
    pub fn methods(&self) -> Vec<(String, &dyn SusceptiblePredictor)> {
        let mut out: Vec<(String, &dyn SusceptiblePredictor)> =
            vec![(COOPERATIVE_METHOD.to_string(), &self.cooperative)];
        for (d, p) in &self.polys {
            out.push((poly_method(*d), p));
        }
        out
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment, PipelineError> {
    let (trajectory, dataset) = generate_dataset(&config.params, config.init, &config.integration)?;
    let (train, test) = split(
        &dataset,
        config.train_fraction,
        seed::derive(config.seed, Stream::Split, 0),
    )?;
    let cooperative = train_cooperative(&train, &config.cooperative, config.seed)?;
    let polys = config
        .degrees
        .iter()
        .map(|&d| PolyPredictor::fit(&train, d).map(|p| (d, p)))
        .collect::<Result<Vec<_>, _>>()?;

    let names: Vec<String> = core::iter::once(COOPERATIVE_METHOD.to_string())
        .chain(config.degrees.iter().map(|&d| poly_method(d)))
        .collect();
    let mut predictors: Vec<&dyn SusceptiblePredictor> = vec![&cooperative];
    predictors.extend(polys.iter().map(|(_, p)| p as &dyn SusceptiblePredictor));
    let methods: Vec<Method<'_>> = names
        .iter()
        .map(String::as_str)
        .zip(predictors.iter().copied())
        .collect();
    let eval = evaluate(&methods, &train, &test);
    let rate = estimate_rate_series(&config.params, &trajectory, &methods);
    drop(methods);
    drop(predictors);
    Ok(Experiment {
        trajectory,
        dataset,
        train,
        test,
        cooperative,
        polys,
        eval,
        rate,
    })
}
