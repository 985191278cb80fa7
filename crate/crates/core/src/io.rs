//! File formats for signals, coefficients, shift operators and dual atom sets.
//!
//! CSV floats are written with 17 significant digits; JSON uses the shortest
//! representation that round-trips.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amalgam::GaborCoefficients;
use crate::error::{GaborError, Result};
use crate::frames::DualAtomSet;
use crate::grid::{GridSpec, SampledFunction};
use crate::lattice::{LatticeParams, TFLattice};
use crate::shift::ShiftOperator;

fn parse_err(e: csv::Error) -> GaborError {
    GaborError::Parse(e.to_string())
}

/// Rejects grids that bypassed [`GridSpec::new`] on the way in.
fn checked(grid: GridSpec) -> Result<GridSpec> {
    GridSpec::new(grid.period(), grid.samples_per_unit())
}

fn pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|v| [v.re, v.im]).collect()
}

fn unpair(values: &[[f64; 2]]) -> Vec<Complex64> {
    values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// Guesses from the extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = GaborError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(GaborError::Parse(format!("unknown format `{other}`"))),
        }
    }
}

// ---- signals ----

#[derive(Serialize, Deserialize)]
struct SignalRow {
    index: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct SignalJson {
    grid: GridSpec,
    values: Vec<[f64; 2]>,
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_signal_csv<W: Write>(f: &SampledFunction, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["index", "re", "im"]).map_err(parse_err)?;
    for (l, v) in f.values().iter().enumerate() {
        w.write_record([l.to_string(), fmt(v.re), fmt(v.im)])
            .map_err(parse_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `index,re,im` rows; every index in `0..n` must appear exactly once.
pub fn read_signal_csv<R: Read>(input: R, grid: GridSpec) -> Result<SampledFunction> {
    let n = grid.len();
    let mut values = vec![None; n];
    for row in csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
        .deserialize()
    {
        let row: SignalRow = row.map_err(parse_err)?;
        let slot = values
            .get_mut(row.index)
            .ok_or_else(|| GaborError::Parse(format!("index {} outside 0..{n}", row.index)))?;
        if slot.replace(Complex64::new(row.re, row.im)).is_some() {
            return Err(GaborError::Parse(format!("index {} appears twice", row.index)));
        }
    }
    let got = values.iter().filter(|v| v.is_some()).count();
    if got != n {
        return Err(GaborError::LengthMismatch { expected: n, got });
    }
    SampledFunction::new(grid, values.into_iter().flatten().collect())
}

pub fn write_signal_json<W: Write>(f: &SampledFunction, out: W) -> Result<()> {
    let doc = SignalJson {
        grid: *f.grid(),
        values: pairs(f.values()),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_signal_json<R: Read>(input: R) -> Result<SampledFunction> {
    let doc: SignalJson = serde_json::from_reader(input)?;
    SampledFunction::new(checked(doc.grid)?, unpair(&doc.values))
}

/// Writes `f` as CSV or JSON according to `format`.
pub fn save_signal(f: &SampledFunction, path: &Path, format: Format) -> Result<()> {
    let file = std::io::BufWriter::new(fs::File::create(path)?);
    match format {
        Format::Csv => write_signal_csv(f, file),
        Format::Json => write_signal_json(f, file),
    }
}

/// Loads a signal; CSV needs `grid`, JSON carries its own and must agree with `grid` if given.
pub fn load_signal(path: &Path, grid: Option<GridSpec>) -> Result<SampledFunction> {
    let file = std::io::BufReader::new(fs::File::open(path)?);
    match Format::from_path(path) {
        Format::Json => {
            let f = read_signal_json(file)?;
            match grid {
                Some(g) if g != *f.grid() => Err(GaborError::GridMismatch),
                _ => Ok(f),
            }
        }
        Format::Csv => {
            let grid =
                grid.ok_or_else(|| GaborError::InvalidGrid(format!("{} is CSV and needs a grid", path.display())))?;
            read_signal_csv(file, grid)
        }
    }
}

// ---- coefficients ----

#[derive(Serialize, Deserialize)]
struct CoefficientRow {
    k: usize,
    j: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct LatticeHeader {
    grid: GridSpec,
    alpha: f64,
    beta: f64,
}

impl LatticeHeader {
    fn from_lattice(lat: &TFLattice) -> Self {
        Self {
            grid: *lat.grid(),
            alpha: lat.alpha(),
            beta: lat.beta(),
        }
    }

    fn lattice(&self) -> Result<TFLattice> {
        TFLattice::new(checked(self.grid)?, self.alpha, self.beta)
    }
}

#[derive(Serialize, Deserialize)]
struct CoefficientJson {
    lattice: LatticeHeader,
    /// Row-major `[k][j]`.
    entries: Vec<[f64; 2]>,
}

/// Rows `k,j,re,im` with `k` the time node and `j` the frequency node, both unsigned.
pub fn write_coefficients_csv<W: Write>(c: &GaborCoefficients, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["k", "j", "re", "im"]).map_err(parse_err)?;
    let lat = c.lattice();
    for k in 0..lat.time_nodes() {
        for (j, v) in c.row(k).iter().enumerate() {
            w.write_record([k.to_string(), j.to_string(), fmt(v.re), fmt(v.im)])
                .map_err(parse_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_coefficients_csv<R: Read>(input: R, lattice: TFLattice) -> Result<GaborCoefficients> {
    let mut c = GaborCoefficients::zeros(lattice);
    let mut seen = vec![false; lattice.size()];
    for row in csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
        .deserialize()
    {
        let row: CoefficientRow = row.map_err(parse_err)?;
        if row.k >= lattice.time_nodes() || row.j >= lattice.freq_nodes() {
            return Err(GaborError::Parse(format!(
                "node ({}, {}) outside the lattice",
                row.k, row.j
            )));
        }
        let idx = row.k * lattice.freq_nodes() + row.j;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(GaborError::Parse(format!("node ({}, {}) appears twice", row.k, row.j)));
        }
        if !(row.re.is_finite() && row.im.is_finite()) {
            return Err(GaborError::NonFinite(idx));
        }
        c.set(row.k, row.j, Complex64::new(row.re, row.im));
    }
    let got = seen.iter().filter(|s| **s).count();
    if got != lattice.size() {
        return Err(GaborError::LengthMismatch {
            expected: lattice.size(),
            got,
        });
    }
    Ok(c)
}

pub fn write_coefficients_json<W: Write>(c: &GaborCoefficients, out: W) -> Result<()> {
    let doc = CoefficientJson {
        lattice: LatticeHeader::from_lattice(c.lattice()),
        entries: pairs(c.entries()),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_coefficients_json<R: Read>(input: R) -> Result<GaborCoefficients> {
    let doc: CoefficientJson = serde_json::from_reader(input)?;
    GaborCoefficients::new(doc.lattice.lattice()?, unpair(&doc.entries))
}

// ---- shift operators ----

#[derive(Serialize, Deserialize)]
struct TermJson {
    /// Real shift `x`, canonical representative in `(−L/2, L/2]`.
    shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<[f64; 2]>>,
    /// Signal file holding the multiplier, relative to the operator file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    multiplier_ref: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    grid: GridSpec,
    terms: Vec<TermJson>,
}

pub fn write_operator_json<W: Write>(op: &ShiftOperator, out: W) -> Result<()> {
    let doc = OperatorJson {
        grid: *op.grid(),
        terms: op
            .terms()
            .map(|(x, m)| TermJson {
                shift: op.real_shift(x),
                values: Some(pairs(m)),
                multiplier_ref: None,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

/// Reads an operator; `multiplier_ref` paths are resolved against `base`.
pub fn read_operator_json<R: Read>(input: R, base: &Path) -> Result<ShiftOperator> {
    let doc: OperatorJson = serde_json::from_reader(input)?;
    let grid = checked(doc.grid)?;
    let terms = doc
        .terms
        .into_iter()
        .map(|t| {
            let m = match (t.values, t.multiplier_ref) {
                (Some(v), None) => SampledFunction::new(grid, unpair(&v))?,
                (None, Some(r)) => load_signal(&base.join(r), Some(grid))?,
                _ => {
                    return Err(GaborError::Parse(format!(
                        "term at shift {} needs exactly one of `values` and `multiplier_ref`",
                        t.shift
                    )))
                }
            };
            Ok((t.shift, m))
        })
        .collect::<Result<Vec<_>>>()?;
    ShiftOperator::from_terms(grid, terms)
}

pub fn save_operator(op: &ShiftOperator, path: &Path) -> Result<()> {
    write_operator_json(op, std::io::BufWriter::new(fs::File::create(path)?))
}

pub fn load_operator(path: &Path) -> Result<ShiftOperator> {
    let base = path.parent().unwrap_or(Path::new("."));
    read_operator_json(std::io::BufReader::new(fs::File::open(path)?), base)
}

// ---- dual atoms ----

#[derive(Serialize, Deserialize)]
struct SystemHeader {
    grid: GridSpec,
    windows: usize,
    atoms: usize,
}

#[derive(Serialize, Deserialize)]
struct AtomEntry {
    i: usize,
    k: usize,
    j: usize,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    system: SystemHeader,
    lattice: Vec<LatticeParams>,
    atoms: Vec<AtomEntry>,
}

pub const MANIFEST: &str = "manifest.json";

fn atom_file(i: usize, k: usize, j: usize) -> String {
    format!("atom_{i}_{k}_{j}.csv")
}

/// Writes one CSV per atom plus `manifest.json` into `dir`, creating it if needed.
pub fn save_dual_atoms(duals: &DualAtomSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let lattices = duals.lattices();
    let Some(first) = lattices.first() else {
        return Err(GaborError::IndexMismatch("empty dual atom set".into()));
    };
    let mut atoms = Vec::with_capacity(duals.len());
    for (i, lat) in lattices.iter().enumerate() {
        for k in 0..lat.time_nodes() {
            for j in 0..lat.freq_nodes() {
                let file = atom_file(i, k, j);
                save_signal(duals.get(i, k, j), &dir.join(&file), Format::Csv)?;
                atoms.push(AtomEntry { i, k, j, file });
            }
        }
    }
    let manifest = Manifest {
        system: SystemHeader {
            grid: *first.grid(),
            windows: lattices.len(),
            atoms: duals.len(),
        },
        lattice: lattices.iter().map(TFLattice::params).collect(),
        atoms,
    };
    let out = std::io::BufWriter::new(fs::File::create(dir.join(MANIFEST))?);
    serde_json::to_writer_pretty(out, &manifest)?;
    Ok(())
}

pub fn load_dual_atoms(dir: &Path) -> Result<DualAtomSet> {
    let manifest: Manifest = serde_json::from_reader(std::io::BufReader::new(fs::File::open(dir.join(MANIFEST))?))?;
    let grid = checked(manifest.system.grid)?;
    let lattices = manifest
        .lattice
        .iter()
        .map(|p| TFLattice::new(grid, p.alpha, p.beta))
        .collect::<Result<Vec<_>>>()?;
    let mut slots: Vec<Vec<Option<SampledFunction>>> = lattices.iter().map(|l| vec![None; l.size()]).collect();
    for entry in &manifest.atoms {
        let lat = lattices
            .get(entry.i)
            .ok_or_else(|| GaborError::IndexMismatch(format!("atom refers to system {}", entry.i)))?;
        if entry.k >= lat.time_nodes() || entry.j >= lat.freq_nodes() {
            return Err(GaborError::IndexMismatch(format!(
                "atom ({}, {}, {}) outside its lattice",
                entry.i, entry.k, entry.j
            )));
        }
        let atom = load_signal(&dir.join(&entry.file), Some(grid))?;
        slots[entry.i][entry.k * lat.freq_nodes() + entry.j] = Some(atom);
    }
    let atoms = slots
        .into_iter()
        .enumerate()
        .map(|(i, group)| {
            group
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| GaborError::IndexMismatch(format!("system {i} is missing atoms")))
        })
        .collect::<Result<Vec<_>>>()?;
    DualAtomSet::new(lattices, atoms)
}
