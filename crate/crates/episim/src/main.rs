use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use episim_core::clustering::{self, KMeansConfig};
use episim_core::integrate;
use episim_core::neuralnet::TrainConfig;
use episim_core::pipeline::{
    self, ClusterFeatures, CooperativeConfig, Dataset, KChoice, Method, PolyPredictor,
    SusceptiblePredictor, COOPERATIVE_METHOD,
};
use episim_core::seed::{self, Stream};

use episim::config;
use episim::formats::{self, fmt_f64, ModelMeta};
use episim::output;

#[derive(Parser)]
#[command(name = "episim", version, about = "Epidemic rate-of-spread estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the model and write `t,x1,x2`.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the `(infective, susceptible)` dataset with its z-scores.
    Dataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick k by silhouette and write per-point cluster labels.
    Cluster {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "3,4,5", value_delimiter = ',')]
        k_candidates: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Features::Infective)]
        features: Features,
        #[arg(long)]
        out: PathBuf,
        /// Also write the `k,mean_silhouette,V` table here.
        #[arg(long)]
        selection_out: Option<PathBuf>,
    },
    /// Train the cluster-wise networks on the training split.
    Train(TrainArgs),
    /// Predict the susceptible count for an infective count.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: f64,
    },
    /// Actual versus estimated rate of spread along a trajectory.
    Rate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        /// Model parameters; defaults to the configuration saved with the model.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test-split MSE of the networks against polynomial baselines.
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "1,2", value_delimiter = ',')]
        degrees: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole pipeline from a configuration file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 1e-3)]
    target_mse: f64,
    #[arg(long, default_value_t = 5000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long, value_enum, default_value_t = Features::Infective)]
    features: Features,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Features {
    Infective,
    Both,
}

impl From<Features> for ClusterFeatures {
    fn from(f: Features) -> Self {
        match f {
            Features::Infective => ClusterFeatures::Infective,
            Features::Both => ClusterFeatures::Both,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn sidecar(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".cfg");
    PathBuf::from(s)
}

const PROVENANCE: &str = "provenance.cfg";

fn load_data(path: &Path) -> Result<Dataset> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Dataset::from_raw(formats::read_dataset(f)?)?)
}

fn split_like(data: &Dataset, meta: &ModelMeta) -> Result<(Dataset, Dataset)> {
    let s = seed::derive(meta.seed, Stream::Split, 0);
    Ok(pipeline::split(data, meta.train_fraction, s)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let c = config::load(&config)?;
            let report = episim_core::model::validate_params(&c.params);
            if !report.is_admissible() {
                for v in &report.violations {
                    log::error!("{v}");
                }
                bail!("inadmissible model parameters");
            }
            let traj = integrate::integrate(&c.params, c.init, &c.integration)?;
            if let Some(t) = traj.truncated_at {
                log::warn!("susceptible count reached zero; trajectory truncated at t = {t}");
            }
            formats::write_trajectory(create(&out)?, &traj)?;
        }
        Command::Dataset { config, out } => {
            let c = config::load(&config)?;
            let (_, data) = pipeline::generate_dataset(&c.params, c.init, &c.integration)?;
            formats::write_dataset(create(&out)?, &data)?;
            fs::write(sidecar(&out), config::to_string(&c))?;
        }
        Command::Cluster {
            data,
            k_candidates,
            seed: master,
            features,
            out,
            selection_out,
        } => {
            let d = load_data(&data)?;
            let points = output::cluster_points(features.into(), &d.standardized);
            let s = seed::derive(master, Stream::Clustering, 0);
            let sel = clustering::select_k(&points, &k_candidates, s)?;
            let model = clustering::kmeans(&points, &KMeansConfig::new(sel.k, s))?;
            let scores = output::silhouettes(&points, &model.assignments, model.k);
            formats::write_cluster_report(create(&out)?, &model.assignments, &scores)?;
            match selection_out {
                Some(p) => formats::write_selection(create(&p)?, &sel)?,
                None => formats::write_selection(std::io::stdout().lock(), &sel)?,
            }
        }
        Command::Train(a) => {
            let d = load_data(&a.data)?;
            let meta = ModelMeta {
                seed: a.seed,
                train_fraction: a.train_fraction,
            };
            let (train, _) = split_like(&d, &meta)?;
            let cfg = CooperativeConfig {
                k: KChoice::Fixed(a.k),
                features: a.features.into(),
                train: TrainConfig {
                    learning_rate: a.eta,
                    momentum: a.momentum,
                    target_mse: a.target_mse,
                    max_epochs: a.max_epochs,
                    ..TrainConfig::default()
                },
                ..CooperativeConfig::default()
            };
            let model = pipeline::train_cooperative(&train, &cfg, a.seed)?;
            for (i, n) in model.networks.iter().enumerate() {
                log::info!(
                    "network {i}: {} epochs, training mse {:?}",
                    n.epochs_run,
                    n.final_mse
                );
            }
            formats::save_cooperative(&a.out, &model, &meta)?;
            let side = sidecar(&a.data);
            if side.exists() {
                fs::copy(&side, a.out.join(PROVENANCE))?;
            }
        }
        Command::Predict { model, input } => {
            let (m, _) = formats::load_cooperative(&model)?;
            println!("{}", fmt_f64(m.predict(input)));
        }
        Command::Rate {
            model,
            traj,
            config: cfg_path,
            out,
        } => {
            let (m, _) = formats::load_cooperative(&model)?;
            let cfg_path = cfg_path.unwrap_or_else(|| model.join(PROVENANCE));
            let c = config::load(&cfg_path)
                .with_context(|| "model parameters needed; pass --config".to_string())?;
            let t = formats::read_trajectory(File::open(&traj)?)?;
            let r = pipeline::estimate_rate_series(&c.params, &t, &[(COOPERATIVE_METHOD, &m)]);
            log::info!("rate rmse {}", r.methods[0].rmse);
            formats::write_rate(create(&out)?, &r.times, &r.actual, &r.methods[0].estimated)?;
        }
        Command::Compare {
            data,
            model,
            degrees,
            out,
        } => {
            let d = load_data(&data)?;
            let (m, meta) = formats::load_cooperative(&model)?;
            let (train, test) = split_like(&d, &meta)?;
            let polys = degrees
                .iter()
                .map(|&deg| PolyPredictor::fit(&train, deg))
                .collect::<Result<Vec<_>, _>>()?;
            let names: Vec<String> = degrees.iter().map(|&d| pipeline::poly_method(d)).collect();
            let mut methods: Vec<Method<'_>> = vec![(COOPERATIVE_METHOD, &m)];
            for (n, p) in names.iter().zip(&polys) {
                methods.push((n, p as &dyn SusceptiblePredictor));
            }
            let report = pipeline::evaluate(&methods, &train, &test);
            formats::write_compare(create(&out)?, &report)?;
        }
        Command::Experiment { config, out_dir } => {
            let c = config::load(&config)?;
            let exp = pipeline::run_experiment(&c)?;
            output::write_experiment(&out_dir, &c, &exp)?;
            for m in &exp.eval.methods {
                let rate = exp.rate.get(&m.method).map_or(f64::NAN, |r| r.rmse);
                println!(
                    "{:<16} train_mse {:.6e}  test_mse {:.6e}  rate_rmse {:.6e}",
                    m.method, m.train_mse, m.test_mse, rate
                );
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
