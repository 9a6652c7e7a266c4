//! On-disk formats: CSV reports, the network model file and the
//! cooperative model directory.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use episim_core::clustering::{ClusterModel, KSelection, StandardizationParams};
use episim_core::integrate::Trajectory;
use episim_core::model::State;
use episim_core::neuralnet::{MlpModel, OutputActivation, Params};
use episim_core::pipeline::{ClusterFeatures, CooperativeModel, Dataset, EvalReport};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected CSV header {found:?}, expected {expected:?}")]
    Header {
        expected: &'static [&'static str],
        found: Vec<String>,
    },
    #[error("row {row}: bad number `{value}`")]
    Number { row: usize, value: String },
    #[error("malformed model file: {0}")]
    MalformedModel(String),
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>, FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    Ok(out)
}

fn read_numeric_csv<R: Read>(
    r: R,
    expected: &'static [&'static str],
) -> Result<Vec<Vec<f64>>, FormatError> {
    let mut rdr = csv::Reader::from_reader(r);
    let found: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if found != expected {
        return Err(FormatError::Header { expected, found });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| FormatError::Number {
                    row: i + 1,
                    value: v.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub const TRAJECTORY_HEADER: &[&str] = &["t", "x1", "x2"];

pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory) -> Result<(), FormatError> {
    let mut out = csv_writer(w, TRAJECTORY_HEADER)?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.write_record([fmt_f64(*t), fmt_f64(s.x1), fmt_f64(s.x2)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(r: R) -> Result<Trajectory, FormatError> {
    let rows = read_numeric_csv(r, TRAJECTORY_HEADER)?;
    Ok(Trajectory {
        times: rows.iter().map(|r| r[0]).collect(),
        states: rows.iter().map(|r| State::new(r[1], r[2])).collect(),
        truncated_at: None,
    })
}

pub const DATASET_HEADER: &[&str] = &["x2_raw", "x1_raw", "x2_std", "x1_std"];

pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> Result<(), FormatError> {
    let mut out = csv_writer(w, DATASET_HEADER)?;
    for (raw, z) in data.raw.iter().zip(&data.standardized) {
        out.write_record([fmt_f64(raw.0), fmt_f64(raw.1), fmt_f64(z.0), fmt_f64(z.1)])?;
    }
    out.flush()?;
    Ok(())
}

/// Raw `(x2, x1)` pairs; standardization is recomputed by the caller.
pub fn read_dataset<R: Read>(r: R) -> Result<Vec<(f64, f64)>, FormatError> {
    let rows = read_numeric_csv(r, DATASET_HEADER)?;
    Ok(rows.iter().map(|r| (r[0], r[1])).collect())
}

pub fn write_cluster_report<W: Write>(
    w: W,
    assignments: &[usize],
    silhouettes: &[f64],
) -> Result<(), FormatError> {
    let mut out = csv_writer(w, &["point_index", "cluster", "silhouette"])?;
    for (i, (c, s)) in assignments.iter().zip(silhouettes).enumerate() {
        out.write_record([i.to_string(), c.to_string(), fmt_f64(*s)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_selection<W: Write>(w: W, selection: &KSelection) -> Result<(), FormatError> {
    let mut out = csv_writer(w, &["k", "mean_silhouette", "V"])?;
    for s in &selection.table {
        out.write_record([
            s.k.to_string(),
            fmt_f64(s.mean_silhouette),
            fmt_f64(s.objective),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rate<W: Write>(
    w: W,
    times: &[f64],
    actual: &[f64],
    estimated: &[f64],
) -> Result<(), FormatError> {
    let mut out = csv_writer(w, &["t", "actual", "estimated"])?;
    for ((t, a), e) in times.iter().zip(actual).zip(estimated) {
        out.write_record([fmt_f64(*t), fmt_f64(*a), fmt_f64(*e)])?;
    }
    out.flush()?;
    Ok(())
}

/// Standardized-unit MSEs.
pub fn write_compare<W: Write>(w: W, report: &EvalReport) -> Result<(), FormatError> {
    let mut out = csv_writer(w, &["method", "train_mse", "test_mse"])?;
    for m in &report.methods {
        out.write_record([m.method.clone(), fmt_f64(m.train_mse), fmt_f64(m.test_mse)])?;
    }
    out.flush()?;
    Ok(())
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_floats(line: &str, expected: usize, what: &str) -> Result<Vec<f64>, FormatError> {
    let v = line
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| FormatError::MalformedModel(format!("{what}: {e}")))?;
    if v.len() != expected {
        return Err(FormatError::MalformedModel(format!(
            "{what}: expected {expected} values, found {}",
            v.len()
        )));
    }
    Ok(v)
}

/// Network model text: `mlp I H O`, hidden weights (row-major), hidden
/// biases, output weights, output biases. A sixth line `activation tanh`
/// marks a tanh output unit. Values are written in shortest round-trip form,
/// so reading gives back the identical bits.
pub fn mlp_to_string(model: &MlpModel) -> String {
    let p = &model.params;
    let mut s = format!(
        "mlp {} {} {}\n",
        model.input_dim, model.hidden_units, model.output_dim
    );
    for v in [&p.hidden_w, &p.hidden_b, &p.output_w, &p.output_b] {
        s.push_str(&join_floats(v));
        s.push('\n');
    }
    if model.output_activation == OutputActivation::Tanh {
        s.push_str("activation tanh\n");
    }
    s
}

pub fn mlp_from_str(text: &str) -> Result<MlpModel, FormatError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| FormatError::MalformedModel(format!("missing {what} line")))
    };
    let head: Vec<&str> = next("header")?.split_whitespace().collect();
    let dims = match head.as_slice() {
        ["mlp", i, h, o] => [i, h, o].map(|v| v.parse::<usize>().ok()),
        _ => [None; 3],
    };
    let [Some(i), Some(h), Some(o)] = dims else {
        return Err(FormatError::MalformedModel(
            "header must be `mlp <inputs> <hidden> <outputs>`".into(),
        ));
    };
    if i == 0 || h == 0 || o == 0 {
        return Err(FormatError::MalformedModel("zero layer size".into()));
    }
    let params = Params {
        hidden_w: parse_floats(next("hidden weights")?, i * h, "hidden weights")?,
        hidden_b: parse_floats(next("hidden biases")?, h, "hidden biases")?,
        output_w: parse_floats(next("output weights")?, h * o, "output weights")?,
        output_b: parse_floats(next("output biases")?, o, "output biases")?,
    };
    let output_activation = match next("activation").ok().map(str::split_whitespace) {
        None => OutputActivation::Identity,
        Some(mut words) => match (words.next(), words.next(), words.next()) {
            (Some("activation"), Some("identity"), None) => OutputActivation::Identity,
            (Some("activation"), Some("tanh"), None) => OutputActivation::Tanh,
            _ => return Err(FormatError::MalformedModel("bad activation line".into())),
        },
    };
    if next("trailing").is_ok() {
        return Err(FormatError::MalformedModel("trailing content".into()));
    }
    Ok(MlpModel {
        input_dim: i,
        hidden_units: h,
        output_dim: o,
        output_activation,
        params,
        epochs_run: 0,
        final_mse: None,
    })
}

/// Provenance stored next to a saved cooperative model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    pub seed: u64,
    pub train_fraction: f64,
}

const MANIFEST: &str = "manifest.txt";
const MANIFEST_MAGIC: &str = "episim-cooperative 1";

fn net_file(i: usize) -> String {
    format!("net_{i}.txt")
}

/// Writes `manifest.txt` and one `net_<i>.txt` per cluster into `dir`.
pub fn save_cooperative(
    dir: &Path,
    model: &CooperativeModel,
    meta: &ModelMeta,
) -> Result<(), FormatError> {
    fs::create_dir_all(dir)?;
    let mut s = String::new();
    let _ = writeln!(s, "{MANIFEST_MAGIC}");
    let _ = writeln!(s, "k = {}", model.k());
    let features = match model.features {
        ClusterFeatures::Infective => "infective",
        ClusterFeatures::Both => "both",
    };
    let _ = writeln!(s, "features = {features}");
    let _ = writeln!(s, "seed = {}", meta.seed);
    let _ = writeln!(s, "train_fraction = {:e}", meta.train_fraction);
    let _ = writeln!(s, "mean = {}", join_floats(&model.standardization.mean));
    let _ = writeln!(s, "std = {}", join_floats(&model.standardization.std));
    let _ = writeln!(s, "objective = {:e}", model.clusters.objective);
    for c in &model.clusters.centroids {
        let _ = writeln!(s, "centroid = {}", join_floats(c));
    }
    let assignments: Vec<String> = model
        .clusters
        .assignments
        .iter()
        .map(usize::to_string)
        .collect();
    let _ = writeln!(s, "assignments = {}", assignments.join(" "));
    fs::write(dir.join(MANIFEST), s)?;
    for (i, net) in model.networks.iter().enumerate() {
        fs::write(dir.join(net_file(i)), mlp_to_string(net))?;
    }
    Ok(())
}

pub fn load_cooperative(dir: &Path) -> Result<(CooperativeModel, ModelMeta), FormatError> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let bad = |m: &str| FormatError::MalformedManifest(m.to_string());
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MANIFEST_MAGIC) {
        return Err(bad("missing header"));
    }
    let (mut k, mut features, mut seed, mut fraction) = (None, None, None, None);
    let (mut mean, mut std, mut objective) = (None, None, f64::NAN);
    let mut centroids = Vec::new();
    let mut assignments = Vec::new();
    let floats = |v: &str| {
        v.split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| bad("bad number"))
    };
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let (key, value) = line.split_once('=').ok_or_else(|| bad(line))?;
        let value = value.trim();
        match key.trim() {
            "k" => k = Some(value.parse::<usize>().map_err(|_| bad("k"))?),
            "features" => {
                features = Some(match value {
                    "infective" => ClusterFeatures::Infective,
                    "both" => ClusterFeatures::Both,
                    _ => return Err(bad("features")),
                })
            }
            "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
            "train_fraction" => {
                fraction = Some(value.parse::<f64>().map_err(|_| bad("train_fraction"))?)
            }
            "mean" => mean = Some(floats(value)?),
            "std" => std = Some(floats(value)?),
            "objective" => objective = value.parse().map_err(|_| bad("objective"))?,
            "centroid" => centroids.push(floats(value)?),
            "assignments" => {
                assignments = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<Result<Vec<usize>, _>>()
                    .map_err(|_| bad("assignments"))?
            }
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    let k = k.ok_or_else(|| bad("missing k"))?;
    let features = features.ok_or_else(|| bad("missing features"))?;
    let standardization = StandardizationParams {
        mean: mean.ok_or_else(|| bad("missing mean"))?,
        std: std.ok_or_else(|| bad("missing std"))?,
    };
    if standardization.mean.len() != 2 || standardization.std.len() != 2 {
        return Err(bad("standardization must have two features"));
    }
    let dim = match features {
        ClusterFeatures::Infective => 1,
        ClusterFeatures::Both => 2,
    };
    if k == 0 || centroids.len() != k || centroids.iter().any(|c| c.len() != dim) {
        return Err(bad("centroid count or dimension does not match k"));
    }
    if assignments.iter().any(|&a| a >= k) {
        return Err(bad("assignment out of range"));
    }
    let networks = (0..k)
        .map(|i| mlp_from_str(&fs::read_to_string(dir.join(net_file(i)))?))
        .collect::<Result<Vec<_>, FormatError>>()?;
    if networks
        .iter()
        .any(|n| n.input_dim != 1 || n.output_dim != 1)
    {
        return Err(bad("cluster networks must be scalar"));
    }
    let cluster_std = standardization.select(&[0, 1][..dim]);
    let clusters = ClusterModel {
        k,
        centroids,
        assignments,
        objective,
        objective_history: Vec::new(),
        iterations: 0,
        repairs: 0,
        standardization: Some(cluster_std),
    };
    let model = CooperativeModel {
        clusters,
        networks,
        standardization,
        features,
        selection: None,
        merged: 0,
    };
    let meta = ModelMeta {
        seed: seed.ok_or_else(|| bad("missing seed"))?,
        train_fraction: fraction.ok_or_else(|| bad("missing train_fraction"))?,
    };
    Ok((model, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(10_000.0), "1.0000000000000000e4");
        for x in [0.1, 1.0 / 3.0, 4.493_289_641_172_216, -2.5e-300, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn mlp_text_layout() {
        let model = MlpModel {
            input_dim: 1,
            hidden_units: 2,
            output_dim: 1,
            output_activation: OutputActivation::Identity,
            params: Params {
                hidden_w: vec![0.5, -1.0],
                hidden_b: vec![0.0, 0.25],
                output_w: vec![2.0, 3.0],
                output_b: vec![-0.125],
            },
            epochs_run: 7,
            final_mse: Some(0.1),
        };
        let text = mlp_to_string(&model);
        assert_eq!(
            text,
            "mlp 1 2 1\n5e-1 -1e0\n0e0 2.5e-1\n2e0 3e0\n-1.25e-1\n"
        );
        let back = mlp_from_str(&text).unwrap();
        assert_eq!(back.params, model.params);
        assert_eq!(back.output_activation, OutputActivation::Identity);
    }

    #[test]
    fn malformed_models() {
        for text in [
            "",
            "mlp 1 5\n",
            "net 1 1 1\n1\n1\n1\n1\n",
            "mlp 1 2 1\n1\n1 1\n1 1\n1\n",
            "mlp 1 1 1\n1\n1\n1\nx\n",
            "mlp 1 1 1\n1\n1\n1\n1\nactivation relu\n",
            "mlp 1 1 1\n1\n1\n1\n1\nactivation tanh\nextra\n",
        ] {
            assert!(
                matches!(mlp_from_str(text), Err(FormatError::MalformedModel(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn csv_header_is_checked() {
        let err = read_trajectory("t,x2,x1\n0,1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::Header { .. }));
        let err = read_trajectory("t,x1,x2\n0,abc,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::Number { row: 1, .. }));
    }
}
