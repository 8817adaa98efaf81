//! File formats: headed CSV matrices, per-node draw files, the fit
//! configuration and the run manifest.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gibbs::{PosteriorDraws, SamplerOptions};
use crate::model::{regressors, ChainConfig, HyperParams};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[String], data: ArrayView2<'_, f64>) -> Result<()> {
    if header.len() != data.ncols() {
        return Err(Error::Dimension(format!(
            "{} column names for {} columns",
            header.len(),
            data.ncols()
        )));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for row in data.rows() {
            let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Default column names `prefix1 .. prefixN`.
pub fn column_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Reads a headed numeric CSV. Row-length and parse failures report the
/// one-based line and column.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header: Vec<String> = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?.split(',').map(|s| s.trim().to_string()).collect(),
        None => return Err(Error::format(path, "empty file")),
    };
    let cols = header.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::format(
                path,
                format!("line {lineno}: expected {cols} fields, found {}", fields.len()),
            ));
        }
        for (c, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::format(path, format!("line {lineno}, column {}: cannot parse {f:?}", c + 1))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let data = Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((header, data))
}

/// Settings of a fit, read from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub hyper: HyperParams,
    pub chain: ChainConfig,
    pub options: SamplerOptions,
}

impl FitConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: FitConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.chain.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrawFormat {
    Csv,
    Bin,
}

impl DrawFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            DrawFormat::Csv => "csv",
            DrawFormat::Bin => "bin",
        }
    }
}

const MAGIC: &[u8; 8] = b"RBGRDRW1";

/// Column names of a node's draw table.
pub fn draw_columns(p: usize, node: usize, q: usize) -> Vec<String> {
    let mut names: Vec<String> = ["iteration", "t", "sigma2", "loglik", "unit_scale_frac"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let ks = regressors(p, node);
    for &k in &ks {
        for h in 0..q {
            names.push(format!("alpha_{k}_{h}"));
        }
    }
    for &k in &ks {
        for h in 0..q {
            names.push(format!("slab_{k}_{h}"));
        }
    }
    names
}

/// Draw table in column-major order.
fn draw_table(d: &PosteriorDraws) -> Vec<Vec<f64>> {
    let s = d.len();
    let mut cols = vec![
        d.iterations.iter().map(|&i| i as f64).collect(),
        d.t.clone(),
        d.sigma2.clone(),
        d.loglik.clone(),
        d.unit_scale_frac.clone(),
    ];
    for r in 0..d.rows() {
        for h in 0..d.q() {
            cols.push((0..s).map(|i| d.alpha[[i, r, h]]).collect());
        }
    }
    for r in 0..d.rows() {
        for h in 0..d.q() {
            cols.push((0..s).map(|i| if d.slab[[i, r, h]] { 1.0 } else { 0.0 }).collect());
        }
    }
    cols
}

fn from_table(path: &Path, node: usize, p: usize, q: usize, cols: Vec<Vec<f64>>) -> Result<PosteriorDraws> {
    let rows = p - 1;
    if cols.len() != 5 + 2 * rows * q {
        return Err(Error::format(path, format!("expected {} columns, found {}", 5 + 2 * rows * q, cols.len())));
    }
    let s = cols[0].len();
    let mut alpha = Array3::zeros((s, rows, q));
    let mut slab = Array3::from_elem((s, rows, q), false);
    for r in 0..rows {
        for h in 0..q {
            let a = &cols[5 + r * q + h];
            let g = &cols[5 + rows * q + r * q + h];
            for i in 0..s {
                alpha[[i, r, h]] = a[i];
                slab[[i, r, h]] = g[i] != 0.0;
            }
        }
    }
    let mut it = cols.into_iter();
    let iterations = it.next().expect("column").into_iter().map(|v| v as usize).collect();
    Ok(PosteriorDraws {
        node,
        iterations,
        t: it.next().expect("column"),
        sigma2: it.next().expect("column"),
        loglik: it.next().expect("column"),
        unit_scale_frac: it.next().expect("column"),
        alpha,
        slab,
    })
}

pub fn draw_path(dir: &Path, node: usize, format: DrawFormat) -> PathBuf {
    dir.join(format!("node_{node}.{}", format.extension()))
}

/// Writes one node's draws. `p` is the number of response variables.
pub fn write_draws(path: &Path, d: &PosteriorDraws, p: usize, format: DrawFormat) -> Result<()> {
    let names = draw_columns(p, d.node, d.q());
    let cols = draw_table(d);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let s = d.len();
    let res = match format {
        DrawFormat::Csv => (|| -> std::io::Result<()> {
            writeln!(w, "{}", names.join(","))?;
            for i in 0..s {
                let line: Vec<String> = cols
                    .iter()
                    .enumerate()
                    .map(|(c, col)| if c == 0 { format!("{}", col[i] as usize) } else { fmt_f64(col[i]) })
                    .collect();
                writeln!(w, "{}", line.join(","))?;
            }
            w.flush()
        })(),
        DrawFormat::Bin => (|| -> std::io::Result<()> {
            w.write_all(MAGIC)?;
            for v in [d.node, p, d.q(), s, cols.len()] {
                w.write_all(&(v as u64).to_le_bytes())?;
            }
            for name in &names {
                w.write_all(&(name.len() as u32).to_le_bytes())?;
                w.write_all(name.as_bytes())?;
            }
            for col in &cols {
                for v in col {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            w.flush()
        })(),
    };
    res.map_err(|e| Error::io(path, e))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_draws(path: &Path, node: usize, p: usize, q: usize, format: DrawFormat) -> Result<PosteriorDraws> {
    match format {
        DrawFormat::Csv => {
            let (header, data) = read_csv(path)?;
            if header != draw_columns(p, node, q) {
                return Err(Error::format(path, "unexpected draw columns"));
            }
            let cols = data.columns().into_iter().map(|c| c.to_vec()).collect();
            from_table(path, node, p, q, cols)
        }
        DrawFormat::Bin => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let mut r = BufReader::new(file);
            let bad = |m: &str| Error::format(path, m.to_string());
            let mut magic = [0u8; 8];
            r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
            if &magic != MAGIC {
                return Err(bad("not a draw file"));
            }
            let mut head = [0u64; 5];
            for v in head.iter_mut() {
                *v = read_u64(&mut r).map_err(|e| Error::io(path, e))?;
            }
            let [f_node, f_p, f_q, s, ncols] = head.map(|v| v as usize);
            if (f_node, f_p, f_q) != (node, p, q) {
                return Err(bad("draw file belongs to a different node or shape"));
            }
            let expected = draw_columns(p, node, q);
            if ncols != expected.len() {
                return Err(bad("unexpected column count"));
            }
            for want in &expected {
                let mut lb = [0u8; 4];
                r.read_exact(&mut lb).map_err(|e| Error::io(path, e))?;
                let mut name = vec![0u8; u32::from_le_bytes(lb) as usize];
                r.read_exact(&mut name).map_err(|e| Error::io(path, e))?;
                if name != want.as_bytes() {
                    return Err(bad("unexpected column name"));
                }
            }
            let mut cols = Vec::with_capacity(ncols);
            let mut buf = [0u8; 8];
            for _ in 0..ncols {
                let mut col = Vec::with_capacity(s);
                for _ in 0..s {
                    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
                    col.push(f64::from_le_bytes(buf));
                }
                cols.push(col);
            }
            from_table(path, node, p, q, cols)
        }
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStatus {
    pub node: usize,
    pub status: String,
    pub seconds: f64,
    pub draws: usize,
    pub file: Option<String>,
    pub error: Option<String>,
}

/// Record of one command invocation, written after all other outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub nodes: Vec<NodeStatus>,
    pub seconds: f64,
    #[serde(default)]
    pub convergence: Option<serde_json::Value>,
    /// Data shape `(n, p, q)` of the run.
    #[serde(default)]
    pub dims: Option<(usize, usize, usize)>,
    #[serde(default)]
    pub draw_format: Option<DrawFormat>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "rbgr".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            nodes: Vec::new(),
            seconds: 0.0,
            convergence: None,
            dims: None,
            draw_format: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputFile { path: path.display().to_string(), sha256: sha256_file(path)? });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes rows of already formatted fields under a header.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
