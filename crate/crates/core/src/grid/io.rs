use std::io::{BufRead, Write};

use super::{FluidState, Grid, SolverError};

const MAGIC: &str = "MHDSNAP1";
const FIELDS: [&str; 8] = ["rho", "mx", "my", "mz", "eps", "bx", "by", "bz"];

pub const TIME_SERIES_COLUMNS: [&str; 12] = [
    "t",
    "mass",
    "momx",
    "momy",
    "momz",
    "E_total",
    "S_total",
    "E_ballistic",
    "H_rel",
    "prod_min",
    "divB_max",
    "entropy_residual",
];

fn io_err(e: std::io::Error) -> SolverError {
    SolverError::Io(e.to_string())
}

/// Contents of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dim: usize,
    pub cells: [usize; 3],
    pub t: f64,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    /// Rebuild a state on `grid`, which must match the stored shape.
    pub fn into_state(self, grid: &Grid) -> Result<FluidState, SolverError> {
        if self.dim != grid.dim() || self.cells != grid.cells() {
            return Err(SolverError::GridMismatch(format!(
                "snapshot {:?} in {}D, grid {:?} in {}D",
                self.cells,
                self.dim,
                grid.cells(),
                grid.dim()
            )));
        }
        let get = |name: &str| {
            self.fields
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| SolverError::Io(format!("snapshot lacks field {name}")))
        };
        let [rho, mx, my, mz, eps, bx, by, bz] = FIELDS.map(get);
        let (rho, mx, my, mz, eps, bx, by, bz) = (rho?, mx?, my?, mz?, eps?, bx?, by?, bz?);
        let n = rho.len();
        Ok(FluidState {
            t: self.t,
            mom: (0..n).map(|i| [mx[i], my[i], mz[i]]).collect(),
            b: (0..n).map(|i| [bx[i], by[i], bz[i]]).collect(),
            rho,
            eps,
            ct: None,
        })
    }
}

pub fn write_snapshot<W: Write>(mut w: W, grid: &Grid, state: &FluidState) -> Result<(), SolverError> {
    let [nx, ny, nz] = grid.cells();
    // Debug formatting of f64 round-trips exactly.
    write!(w, "{MAGIC}\n{} {nx} {ny} {nz} {:?} {}\n", grid.dim(), state.t, FIELDS.len()).map_err(io_err)?;
    for f in FIELDS {
        writeln!(w, "{f}").map_err(io_err)?;
    }
    let column = |k: usize| -> Vec<f64> {
        match k {
            0 => state.rho.clone(),
            1..=3 => state.mom.iter().map(|m| m[k - 1]).collect(),
            4 => state.eps.clone(),
            _ => state.b.iter().map(|b| b[k - 5]).collect(),
        }
    };
    for k in 0..FIELDS.len() {
        let mut buf = Vec::with_capacity(8 * state.len());
        for v in column(k) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut r: R) -> Result<Snapshot, SolverError> {
    let mut line = String::new();
    let mut next_line = |r: &mut R| -> Result<String, SolverError> {
        line.clear();
        r.read_line(&mut line).map_err(io_err)?;
        Ok(line.trim_end_matches('\n').to_string())
    };
    if next_line(&mut r)? != MAGIC {
        return Err(SolverError::Io("not a snapshot file".into()));
    }
    let header = next_line(&mut r)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad = || SolverError::Io(format!("malformed snapshot header '{header}'"));
    if parts.len() != 6 {
        return Err(bad());
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let dim = int(parts[0])?;
    let cells = [int(parts[1])?, int(parts[2])?, int(parts[3])?];
    let t = parts[4].parse::<f64>().map_err(|_| bad())?;
    let nfields = int(parts[5])?;
    let names: Vec<String> = (0..nfields).map(|_| next_line(&mut r)).collect::<Result<_, _>>()?;
    let count = cells[0] * cells[1] * cells[2];
    let mut fields = Vec::with_capacity(nfields);
    for name in names {
        let mut buf = vec![0u8; 8 * count];
        r.read_exact(&mut buf).map_err(io_err)?;
        let vals = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        fields.push((name, vals));
    }
    Ok(Snapshot { dim, cells, t, fields })
}

/// One row of the time-series CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub entropy: f64,
    pub ballistic: f64,
    pub relative_energy: f64,
    pub production_min: f64,
    pub div_b_max: f64,
    pub entropy_residual: f64,
}

impl TimeSeriesRow {
    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.mass,
            self.momentum[0],
            self.momentum[1],
            self.momentum[2],
            self.energy,
            self.entropy,
            self.ballistic,
            self.relative_energy,
            self.production_min,
            self.div_b_max,
            self.entropy_residual,
        ]
    }
}

/// Write the base columns followed by any extra named columns.
pub fn write_time_series<W: Write>(
    mut w: W,
    rows: &[TimeSeriesRow],
    extra_names: &[&str],
    extra: &[Vec<f64>],
) -> Result<(), SolverError> {
    let mut header: Vec<&str> = TIME_SERIES_COLUMNS.to_vec();
    header.extend_from_slice(extra_names);
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for (k, row) in rows.iter().enumerate() {
        let mut vals: Vec<String> = row.values().iter().map(|v| format!("{v:?}")).collect();
        for col in extra {
            vals.push(format!("{:?}", col.get(k).copied().unwrap_or(f64::NAN)));
        }
        writeln!(w, "{}", vals.join(",")).map_err(io_err)?;
    }
    Ok(())
}
