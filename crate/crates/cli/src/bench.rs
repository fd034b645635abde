//! Batch evaluation over a directory of meshes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use meshrdh_core::cipher::encrypt_payload;
use meshrdh_core::metrics::{evaluate, EvalReport};
use meshrdh_core::payload;
use meshrdh_core::{MeshFormat, SecretKey, Snr, Strategy, KEY_LEN};
use rand::RngCore;
use rayon::prelude::*;

use crate::commands::{self, normalize_input, prepare_input, read_mesh, recovered_mesh};
use crate::Options;

pub const HEADER: [&str; 12] = [
    "mesh",
    "n",
    "m",
    "strategy",
    "p",
    "|S_e|",
    "utilization",
    "l_p",
    "l_ai",
    "ER",
    "snr",
    "hausdorff",
];

const SUMMARY_NAME: &str = "MEAN";

/// One CSV row. Fidelity columns stay empty when no recovery was run.
#[derive(Debug, Clone)]
pub struct Row {
    pub mesh: String,
    pub n: usize,
    pub m: usize,
    pub strategy: Strategy,
    pub precision: u32,
    pub embed_count: usize,
    pub utilization: f64,
    pub embed_bits: u64,
    pub aux_bits: u64,
    pub er: f64,
    pub snr: Option<Snr>,
    pub hausdorff: Option<f64>,
}

impl Row {
    pub fn from_report(mesh: String, r: &EvalReport) -> Self {
        Self {
            mesh,
            n: r.vertex_count,
            m: r.face_count,
            strategy: r.strategy,
            precision: r.precision,
            embed_count: r.embed_count,
            utilization: r.utilization,
            embed_bits: r.embed_bits,
            aux_bits: r.aux_bits,
            er: r.er_bpv,
            snr: Some(r.snr),
            hausdorff: Some(r.hausdorff),
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.mesh.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.strategy.to_string(),
            self.precision.to_string(),
            self.embed_count.to_string(),
            format!("{:.4}", self.utilization),
            self.embed_bits.to_string(),
            self.aux_bits.to_string(),
            format!("{:.4}", self.er),
            self.snr.map(|s| s.to_string()).unwrap_or_default(),
            self.hausdorff.map(|h| format!("{h:e}")).unwrap_or_default(),
        ]
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Averages of the rows for one strategy. SNR averages the finite values and
/// is `inf` only when every run was lossless.
fn summary(rows: &[&Row]) -> Vec<String> {
    let avg = |f: &dyn Fn(&Row) -> f64| mean(rows.iter().map(|r| f(r))).unwrap_or(0.0);
    let snr = if rows.iter().all(|r| r.snr == Some(Snr::Infinite)) {
        Snr::Infinite.to_string()
    } else {
        mean(rows.iter().filter_map(|r| r.snr.and_then(|s| s.value())))
            .map(|v| Snr::Finite(v).to_string())
            .unwrap_or_default()
    };
    let hausdorff = mean(rows.iter().filter_map(|r| r.hausdorff))
        .map(|h| format!("{h:e}"))
        .unwrap_or_default();
    vec![
        SUMMARY_NAME.to_string(),
        format!("{:.1}", avg(&|r| r.n as f64)),
        format!("{:.1}", avg(&|r| r.m as f64)),
        rows[0].strategy.to_string(),
        rows[0].precision.to_string(),
        format!("{:.1}", avg(&|r| r.embed_count as f64)),
        format!("{:.4}", avg(&|r| r.utilization)),
        format!("{:.1}", avg(&|r| r.embed_bits as f64)),
        format!("{:.1}", avg(&|r| r.aux_bits as f64)),
        format!("{:.4}", avg(&|r| r.er)),
        snr,
        hausdorff,
    ]
}

/// A CSV writer on `path`, or on standard output, with the header written.
fn open(path: Option<&Path>) -> Result<csv::Writer<Box<dyn io::Write>>> {
    let sink: Box<dyn io::Write> = match path {
        Some(p) => {
            Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER)?;
    Ok(w)
}

pub fn write_csv(path: Option<&Path>, rows: &[Row]) -> Result<()> {
    let mut w = open(path)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn mesh_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn corpus(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && MeshFormat::from_path(p).is_some())
        .collect();
    files.sort();
    Ok(files)
}

fn key_or_random(given: Result<SecretKey>) -> SecretKey {
    given.unwrap_or_else(|_| {
        let mut k = [0u8; KEY_LEN];
        rand::rng().fill_bytes(&mut k);
        SecretKey::from_bytes(k)
    })
}

/// Full pipeline on one mesh with the largest payload it can carry.
fn bench_one(opts: &Options, path: &Path, strategy: Strategy) -> Result<Row> {
    let opts = Options {
        strategy,
        ..opts.clone()
    };
    let original = read_mesh(path)?;
    let (mesh, norm) = normalize_input(&opts, original.clone());
    let prepared = prepare_input(&opts, &mesh)?;
    let km = key_or_random(commands::model_key(&opts));
    let ka = key_or_random(commands::data_key(&opts));
    let nonce = commands::nonce(&opts)?;
    let c = prepared.encrypt(&km, &nonce, norm);
    let mut data = vec![0u8; prepared.capacity().max_payload_bytes() as usize];
    rand::rng().fill_bytes(&mut data);
    let marked = payload::embed(&c, &encrypt_payload(&data, &ka, &nonce))?;
    anyhow::ensure!(
        payload::extract(&marked, &ka)? == data,
        "extracted payload differs"
    );
    let recovered = recovered_mesh(&marked, &km)?;
    let report = evaluate(&original, &marked, &recovered)?;
    Ok(Row::from_report(mesh_name(path), &report))
}

pub fn run(opts: &Options, dir: &Path, csv: Option<&Path>) -> Result<()> {
    let files = corpus(dir)?;
    let jobs: Vec<(&PathBuf, Strategy)> = files
        .iter()
        .flat_map(|f| Strategy::ALL.map(|s| (f, s)))
        .collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .filter_map(|(path, strategy)| match bench_one(opts, path, *strategy) {
            Ok(row) => Some(row),
            Err(e) => {
                log::error!("{} ({strategy}): {e:#}", path.display());
                None
            }
        })
        .collect();
    log::info!("{} of {} runs succeeded", rows.len(), jobs.len());

    let mut w = open(csv)?;
    for row in &rows {
        w.write_record(row.record())?;
    }
    for strategy in Strategy::ALL {
        let group: Vec<&Row> = rows.iter().filter(|r| r.strategy == strategy).collect();
        if !group.is_empty() {
            w.write_record(summary(&group))?;
        }
    }
    w.flush()?;
    Ok(())
}
