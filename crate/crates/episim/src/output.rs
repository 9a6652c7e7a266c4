//! Experiment output directory.
//!
//! | file | contents |
//! |------|----------|
//! | `experiment.cfg` | resolved configuration |
//! | `traj.csv` | `t,x1,x2` |
//! | `data.csv` | `x2_raw,x1_raw,x2_std,x1_std` |
//! | `clusters.csv` | training points: `point_index,cluster,silhouette` |
//! | `selection.csv` | `k,mean_silhouette,V` (only when `k = auto`) |
//! | `report.csv` | `method,train_mse,test_mse` (standardized units) |
//! | `rate.csv` | `t,actual,estimated` for the cooperative networks |
//! | `rate_<method>.csv` | the same for each polynomial baseline |
//! | `rate_rmse.csv` | `method,rmse` |
//! | `model/` | saved cooperative model |

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use episim_core::clustering::{self, Point};
use episim_core::pipeline::{ClusterFeatures, Experiment, ExperimentConfig, COOPERATIVE_METHOD};

use crate::config;
use crate::formats::{self, fmt_f64, FormatError, ModelMeta};

fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn cluster_points(features: ClusterFeatures, standardized: &[(f64, f64)]) -> Vec<Point> {
    standardized.iter().map(|&p| features.point(p)).collect()
}

/// Per-point silhouettes, or zeros when there is a single cluster.
pub fn silhouettes(points: &[Point], assignments: &[usize], k: usize) -> Vec<f64> {
    if k < 2 {
        return vec![0.0; points.len()];
    }
    match clustering::silhouette(points, assignments) {
        Ok(s) => s.scores,
        Err(e) => {
            log::warn!("silhouette unavailable: {e}");
            vec![0.0; points.len()]
        }
    }
}

pub fn write_experiment(
    dir: &Path,
    config: &ExperimentConfig,
    exp: &Experiment,
) -> Result<(), FormatError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("experiment.cfg"), config::to_string(config))?;
    formats::write_trajectory(create(&dir.join("traj.csv"))?, &exp.trajectory)?;
    formats::write_dataset(create(&dir.join("data.csv"))?, &exp.dataset)?;

    let coop = &exp.cooperative;
    let points = cluster_points(coop.features, &exp.train.standardized);
    let scores = silhouettes(&points, &coop.clusters.assignments, coop.k());
    formats::write_cluster_report(
        create(&dir.join("clusters.csv"))?,
        &coop.clusters.assignments,
        &scores,
    )?;
    if let Some(sel) = &coop.selection {
        formats::write_selection(create(&dir.join("selection.csv"))?, sel)?;
    }
    formats::write_compare(create(&dir.join("report.csv"))?, &exp.eval)?;

    let rate = &exp.rate;
    let mut rmse = csv::Writer::from_writer(create(&dir.join("rate_rmse.csv"))?);
    rmse.write_record(["method", "rmse"])?;
    for series in &rate.methods {
        let name = if series.method == COOPERATIVE_METHOD {
            "rate.csv".to_string()
        } else {
            format!("rate_{}.csv", series.method)
        };
        formats::write_rate(
            create(&dir.join(name))?,
            &rate.times,
            &rate.actual,
            &series.estimated,
        )?;
        rmse.write_record([series.method.clone(), fmt_f64(series.rmse)])?;
    }
    rmse.flush()?;

    formats::save_cooperative(
        &dir.join("model"),
        coop,
        &ModelMeta {
            seed: config.seed,
            train_fraction: config.train_fraction,
        },
    )?;
    Ok(())
}
