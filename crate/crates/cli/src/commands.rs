use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use indexmap::IndexMap;
use serde::Serialize;
use specmap::artifact::{ArtifactOptions, Timestamps};
use specmap::datasets::{Synthetic, SyntheticSpec};
use specmap::explain::{grid_aggregate, write_contact_sheet};
use specmap::io::{read_matrix, write_atomic, write_csv, write_spem};
use specmap::metrics::{MetricContext, MetricParams, StageInput};
use specmap::{run_embedding, DataMatrix, EmbedConfig, EmbeddingArtifact, Error, OptimizerConfig, Thumbnails};

use crate::{CliError, CliResult, DatasetKind, EmbedArgs, GenArgs, GridArgs, MatrixFormat, MetricsArgs, ReferenceStage};

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a SyntheticSpec,
    seed: u64,
    n: usize,
    m: usize,
    intrinsic: &'a IndexMap<String, Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<&'a [i64]>,
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { context: format!("creating {}", dir.display()), source })
}

fn dataset_spec(a: &GenArgs) -> SyntheticSpec {
    match a.dataset {
        DatasetKind::SwissRoll => SyntheticSpec::SwissRoll { n: a.n, noise: a.noise.unwrap_or(0.0), seed: a.seed },
        DatasetKind::MultiscaleLoop => SyntheticSpec::MultiscaleLoop {
            n: a.n,
            dims: a.dims,
            freq: a.freq,
            amp: a.amp,
            noise: a.noise.unwrap_or(0.05),
            seed: a.seed,
        },
        DatasetKind::Blobs => {
            SyntheticSpec::GaussianBlobs { n: a.n, dims: a.dims, blobs: a.blobs, spread: a.spread, seed: a.seed }
        }
    }
}

fn default_stem(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::SwissRoll => "swiss_roll",
        DatasetKind::MultiscaleLoop => "multiscale_loop",
        DatasetKind::Blobs => "blobs",
    }
}

/// Writes `<stem>.spem` (or `.csv`) and `<stem>.json`; returns the matrix path.
pub fn gen(a: &GenArgs) -> CliResult<PathBuf> {
    let spec = dataset_spec(a);
    let Synthetic { data, intrinsic, .. } = spec.generate()?;
    create_dir(&a.out)?;
    let stem = a.name.as_deref().unwrap_or(default_stem(a.dataset));
    let matrix = match a.format {
        MatrixFormat::Spem => {
            let p = a.out.join(format!("{stem}.spem"));
            write_spem(&data, &p)?;
            p
        }
        MatrixFormat::Csv => {
            let p = a.out.join(format!("{stem}.csv"));
            write_csv(&data, &p)?;
            p
        }
    };
    let sidecar = Sidecar { spec: &spec, seed: a.seed, n: data.n(), m: data.m(), intrinsic: &intrinsic, labels: data.labels() };
    write_json(&a.out.join(format!("{stem}.json")), &sidecar)?;
    Ok(matrix)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn embed_config(a: &EmbedArgs) -> EmbedConfig {
    let mut cfg = EmbedConfig {
        k: a.k,
        metric: a.metric,
        eigen: a.eigen,
        min_dist: a.min_dist,
        spread: a.spread,
        stages: a.stages,
        schedule: a.schedule,
        max_modes: a.max_modes,
        full_spectrum: a.full_spectrum,
        ..Default::default()
    };
    cfg.progressive.optimizer = OptimizerConfig {
        epochs: a.epochs,
        initial_lr: a.lr,
        negative_samples: a.neg,
        gamma: a.gamma,
        seed: a.seed,
        deterministic: !a.relaxed,
        ..Default::default()
    };
    if let Some(noise) = a.init_noise {
        cfg.progressive.init_noise = noise;
    }
    cfg
}

pub fn embed(a: &EmbedArgs) -> CliResult<()> {
    let data = load(&a.input, a.label_column)?;
    let cfg = embed_config(a);
    let started = unix_now();
    let quiet = a.quiet;
    let stderr = std::io::stderr();
    let run = run_embedding(&data, &cfg, |p| {
        if !quiet {
            let _ = writeln!(stderr.lock(), "{p}");
        }
    })?;
    let timestamps = a.timestamps.then(|| Timestamps { started_unix: started, finished_unix: unix_now() });
    let opts = ArtifactOptions { glyph_k: a.glyph_k, glyph_stages: a.glyph_stages, timestamps };
    let artifact = EmbeddingArtifact::from_run(&run, data.m(), data.labels(), &cfg, &opts)?;
    artifact.write(&a.out)?;
    if !quiet {
        eprintln!("wrote {} ({} stages)", a.out.display(), artifact.stages.len());
    }
    Ok(())
}

fn load(path: &Path, label_column: bool) -> CliResult<DataMatrix> {
    read_matrix(path, label_column).map_err(|e| match e {
        Error::Io(io) => CliError::Usage(format!("cannot read {}: {io}", path.display())),
        other => other.into(),
    })
}

fn load_artifact(path: &Path) -> CliResult<EmbeddingArtifact> {
    EmbeddingArtifact::read(path).map_err(|e| match e {
        Error::Io(io) => CliError::Usage(format!("cannot read {}: {io}", path.display())),
        other => other.into(),
    })
}

fn check_dims(art: &EmbeddingArtifact, data: &DataMatrix) -> CliResult<()> {
    if art.meta.n != data.n() || art.meta.m != data.m() {
        return Err(Error::ShapeMismatch(format!(
            "artifact is {}x{} but the data matrix is {}x{}",
            art.meta.n,
            art.meta.m,
            data.n(),
            data.m()
        ))
        .into());
    }
    Ok(())
}

pub fn metrics(a: &MetricsArgs) -> CliResult<()> {
    let mut art = load_artifact(&a.artifact)?;
    let data = load(&a.data, a.label_column)?;
    check_dims(&art, &data)?;
    let (n, dim) = (art.meta.n, art.meta.dim);
    let ys = art.stages.iter().map(|s| s.y_matrix(n, dim)).collect::<Result<Vec<_>, _>>()?;
    let inputs: Vec<StageInput<'_>> =
        art.stages.iter().zip(&ys).map(|(s, y)| StageInput { s: s.s, full: s.full, y: y.view() }).collect();
    let reference = match a.reference {
        ReferenceStage::Final => art.stages.iter().rposition(|s| !s.full),
        ReferenceStage::Full => art.stages.iter().position(|s| s.full),
    }
    .ok_or_else(|| CliError::Usage("artifact has no full-spectrum stage; rerun embed with --full-spectrum".into()))?;
    let params = MetricParams { k_metric: a.k, demap_k: a.demap_k, pair_seed: a.pair_seed, align: a.align };
    let ctx = MetricContext::new(data.points(), params)?;
    let mut report = ctx.evaluate(&inputs, reference)?;
    if let Some(curve) = &art.truncation_error {
        report.attach_truncation(curve);
    }
    if let Some(path) = &a.json {
        write_json(path, &report)?;
    }
    if let Some(path) = &a.csv {
        write_atomic(path, |w| report.write_csv(w))?;
    }
    if a.json.is_none() && a.csv.is_none() && !a.attach {
        report.write_csv(std::io::stdout().lock())?;
    }
    if a.attach {
        art.metrics = Some(report);
        art.write(&a.artifact)?;
    }
    Ok(())
}

pub fn grid(a: &GridArgs) -> CliResult<()> {
    let art = load_artifact(&a.artifact)?;
    let images = load(&a.thumbnails, false)?;
    if images.n() != art.meta.n {
        return Err(Error::ShapeMismatch(format!("{} thumbnails for {} points", images.n(), art.meta.n)).into());
    }
    let count = art.stages.len() as isize;
    let idx = if a.stage < 0 { count + a.stage } else { a.stage };
    if idx < 0 || idx >= count {
        return Err(CliError::Usage(format!("stage {} out of range for {count} stages", a.stage)));
    }
    let thumbs = Thumbnails::new(a.width, a.height, images.into_points().into_raw_vec_and_offset().0)?;
    let y = art.stages[idx as usize].y_matrix(art.meta.n, art.meta.dim)?;
    let summary = grid_aggregate(y.view(), Some(&thumbs), a.cols, a.rows)?;
    if let Some(path) = &a.png {
        write_contact_sheet(&summary, path)?;
    }
    match &a.json {
        Some(path) => write_json(path, &summary)?,
        None => {
            let text = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
            println!("{text}");
        }
    }
    Ok(())
}
