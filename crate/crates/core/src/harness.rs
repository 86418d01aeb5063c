//! Ensemble runs, depth sweeps, fluctuation statistics and persistence.
//!
//! Instance i of an ensemble uses the seed derived from (master_seed, i), so
//! any instance is reproducible in isolation and a parallel run is
//! bit-identical to a sequential one. Records are ordered by
//! (depth, k, instance), never by completion time.

use crate::ensemble::{sample_circuit_with_seed, Circuit, EnsembleSpec};
use crate::error::{Error, Result};
use crate::lightcone::min_connecting_depth;
use crate::otoc::{otoc_moment, shot_estimate, CorrelatorSpec};
use crate::rng::{derive_stream_seed, Xoshiro256StarStar};
use rayon::prelude::*;
use serde::Serialize;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

const STREAM_TAG_SHOTS: u64 = 2;

pub const CSV_HEADER: &str =
    "instance_seed,rows,cols,depth,k,ensemble,exact,estimate,stderr,shots,d_star,wall_time_s";

/// One (instance, k) evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OtocRecord {
    pub instance_seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
    pub k: usize,
    pub ensemble: String,
    pub exact: f64,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub shots: Option<u64>,
    pub d_star: Option<usize>,
    pub wall_time_s: f64,
}

/// Per-(depth, k) aggregate over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupStats {
    pub depth: usize,
    pub k: usize,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub ensemble: String,
    pub master_seed: u64,
    pub butterfly: String,
    pub measurement: String,
    pub depths: Vec<usize>,
    pub ks: Vec<usize>,
    pub instances: usize,
    pub shots: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub spec: SweepSnapshot,
    pub rows: Vec<OtocRecord>,
    pub aggregates: Vec<GroupStats>,
}

/// Seed of ensemble instance `index`.
pub fn instance_seed(master_seed: u64, index: usize) -> u64 {
    derive_stream_seed(master_seed, &[index as u64])
}

fn evaluate_instance(
    spec: &EnsembleSpec,
    index: usize,
    ks: &[usize],
    shots: Option<u64>,
    d_star: Option<usize>,
) -> Result<Vec<OtocRecord>> {
    let seed = instance_seed(spec.master_seed, index);
    let circuit = sample_circuit_with_seed(spec, seed);
    let mut records = Vec::with_capacity(ks.len());
    for &k in ks {
        let started = Instant::now();
        let cspec = CorrelatorSpec::new(
            &circuit,
            spec.butterfly.clone(),
            spec.measurement.clone(),
            k,
        )?;
        let exact = otoc_moment(&cspec)?;
        let (estimate, stderr, shot_count) = match shots {
            Some(s) => {
                let mut rng = Xoshiro256StarStar::from_seed(derive_stream_seed(
                    seed,
                    &[k as u64, STREAM_TAG_SHOTS],
                ));
                let est = shot_estimate(&cspec, s, &mut rng)?;
                (Some(est.estimate), Some(est.stderr), Some(est.shots))
            }
            None => (None, None, None),
        };
        records.push(OtocRecord {
            instance_seed: seed,
            rows: spec.geometry.rows(),
            cols: spec.geometry.cols(),
            depth: spec.depth,
            k,
            ensemble: spec.distribution.label().to_string(),
            exact,
            estimate,
            stderr,
            shots: shot_count,
            d_star,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

/// Evaluates `instances` independent circuits of the spec at every k.
/// Records are ordered by (k, instance index).
pub fn run_ensemble(
    spec: &EnsembleSpec,
    instances: usize,
    ks: &[usize],
    shots: Option<u64>,
) -> Result<Vec<OtocRecord>> {
    if instances == 0 {
        return Err(Error::InvalidSpec("instances must be >= 1".into()));
    }
    if ks.is_empty() {
        return Err(Error::InvalidSpec("ks must be nonempty".into()));
    }
    let d_star =
        min_connecting_depth(&spec.geometry, &spec.butterfly, &spec.measurement)?;
    let per_instance: Vec<Vec<OtocRecord>> = (0..instances)
        .into_par_iter()
        .map(|i| evaluate_instance(spec, i, ks, shots, d_star))
        .collect::<Result<_>>()?;
    // reorder to (k, instance)
    let mut records = Vec::with_capacity(instances * ks.len());
    for ki in 0..ks.len() {
        for inst in &per_instance {
            records.push(inst[ki].clone());
        }
    }
    Ok(records)
}

/// Runs the ensemble at every depth and aggregates per (depth, k).
pub fn depth_sweep(
    base: &EnsembleSpec,
    depths: &[usize],
    instances: usize,
    ks: &[usize],
    shots: Option<u64>,
) -> Result<SweepTable> {
    if depths.is_empty() {
        return Err(Error::InvalidSpec("depths must be nonempty".into()));
    }
    let mut rows = Vec::new();
    for &depth in depths {
        let mut spec = base.clone();
        spec.depth = depth;
        rows.extend(run_ensemble(&spec, instances, ks, shots)?);
    }
    let aggregates = fluctuation_stats(&rows)?;
    Ok(SweepTable {
        spec: SweepSnapshot {
            rows: base.geometry.rows(),
            cols: base.geometry.cols(),
            ensemble: base.distribution.label().to_string(),
            master_seed: base.master_seed,
            butterfly: base.butterfly.format(&base.geometry),
            measurement: base.measurement.format(&base.geometry),
            depths: depths.to_vec(),
            ks: ks.to_vec(),
            instances,
            shots,
        },
        rows,
        aggregates,
    })
}

/// Mean, unbiased sample variance and std of the exact values, grouped by
/// (depth, k).
pub fn fluctuation_stats(records: &[OtocRecord]) -> Result<Vec<GroupStats>> {
    if records.is_empty() {
        return Err(Error::InvalidSpec("no records to aggregate".into()));
    }
    let mut keys: Vec<(usize, usize)> = records.iter().map(|r| (r.depth, r.k)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut out = Vec::with_capacity(keys.len());
    for (depth, k) in keys {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.depth == depth && r.k == k)
            .map(|r| r.exact)
            .collect();
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let variance = if count > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        out.push(GroupStats {
            depth,
            k,
            count,
            mean,
            variance,
            std: variance.sqrt(),
        });
    }
    Ok(out)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "pearson inputs have lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidSpec(
            "pearson needs at least two points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// 17 significant digits: enough to round-trip any f64 exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_records_csv<W: Write>(w: &mut W, records: &[OtocRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.instance_seed,
            r.rows,
            r.cols,
            r.depth,
            r.k,
            r.ensemble,
            fmt_f64(r.exact),
            fmt_opt_f64(r.estimate),
            fmt_opt_f64(r.stderr),
            r.shots.map(|s| s.to_string()).unwrap_or_default(),
            r.d_star.map(|d| d.to_string()).unwrap_or_default(),
            fmt_f64(r.wall_time_s),
        )?;
    }
    Ok(())
}

pub fn save_records(path: &Path, records: &[OtocRecord]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_records_csv(&mut file, records)
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field.parse().map_err(|_| {
        Error::Parse(format!("line {line}: bad value '{field}' for field {name}"))
    })
}

fn parse_opt<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<Option<T>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, line, name).map(Some)
    }
}

pub fn read_records_csv<R: std::io::Read>(r: R) -> Result<Vec<OtocRecord>> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse(format!(
            "line 1: unexpected header '{}'",
            header.trim()
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected 12 fields, found {}",
                fields.len()
            )));
        }
        records.push(OtocRecord {
            instance_seed: parse_field(fields[0], lineno, "instance_seed")?,
            rows: parse_field(fields[1], lineno, "rows")?,
            cols: parse_field(fields[2], lineno, "cols")?,
            depth: parse_field(fields[3], lineno, "depth")?,
            k: parse_field(fields[4], lineno, "k")?,
            ensemble: fields[5].to_string(),
            exact: parse_field(fields[6], lineno, "exact")?,
            estimate: parse_opt(fields[7], lineno, "estimate")?,
            stderr: parse_opt(fields[8], lineno, "stderr")?,
            shots: parse_opt(fields[9], lineno, "shots")?,
            d_star: parse_opt(fields[10], lineno, "d_star")?,
            wall_time_s: parse_field(fields[11], lineno, "wall_time_s")?,
        });
    }
    Ok(records)
}

pub fn load_records(path: &Path) -> Result<Vec<OtocRecord>> {
    read_records_csv(std::fs::File::open(path)?)
}

pub fn save_circuit(path: &Path, circuit: &Circuit) -> Result<()> {
    std::fs::write(path, circuit.to_json()?)?;
    Ok(())
}

pub fn load_circuit(path: &Path) -> Result<Circuit> {
    Circuit::from_json(&std::fs::read_to_string(path)?)
}
