//! Per-difference-vector tabulation shared by the direct evaluators, with an
//! in-memory cache plus optional disk persistence keyed by a content hash of
//! `(n, R, gamma, s, eps, quadrature signature)`.

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::kernel::{kinetic_factor_phi, CrossSection};
use crate::rng::fnv1a;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

/// One entry per difference vector `u != 0` on the (possibly strided)
/// lattice: per-axis index offset, physical coordinates, speed `|u|` and
/// kinetic factor.
#[derive(Clone, Debug)]
pub struct UTable {
    pub entries: Vec<UEntry>,
    /// Kinetic factor of the `u = 0` site (used by the split gain/loss).
    pub phi_zero: f64,
    /// Lattice measure per v* site, `(stride * h)^3`.
    pub measure: f64,
    pub stride: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct UEntry {
    /// Index offset per axis: `u_d = offset_d * h`, in `[-n/2, n/2)`.
    pub offset: [i64; 3],
    pub u: [f64; 3],
    pub speed: f64,
    pub phi: f64,
}

pub fn build_u_table(grid: &VelocityGrid, cs: &CrossSection, stride: usize) -> Result<UTable> {
    if grid.dim != 3 {
        return Err(Error::unsupported(
            "collision operators are implemented for dim = 3",
        ));
    }
    let n = grid.n;
    if stride == 0 || n % stride != 0 {
        return Err(Error::config(format!(
            "vstar_stride must divide n = {n}, got {stride}"
        )));
    }
    let mut entries = Vec::with_capacity((n / stride).pow(3));
    // Skip the j = 0 faces: the shift coordinate -R is wrap-ambiguous with
    // +R, so those entries have no exact negation partner and would break
    // the swap symmetry that cancels odd moments. The remaining offsets
    // form a set closed under negation.
    for jz in (0..n).step_by(stride).filter(|&j| j != 0) {
        for jy in (0..n).step_by(stride).filter(|&j| j != 0) {
            for jx in (0..n).step_by(stride).filter(|&j| j != 0) {
                // The difference lattice carries the same centred
                // coordinates as the velocity lattice: coord(j) = (j - n/2) h.
                let u = [grid.coord(jx), grid.coord(jy), grid.coord(jz)];
                let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                if speed == 0.0 {
                    continue;
                }
                let half = (n / 2) as i64;
                entries.push(UEntry {
                    offset: [jx as i64 - half, jy as i64 - half, jz as i64 - half],
                    u,
                    speed,
                    phi: kinetic_factor_phi(speed, cs.gamma),
                });
            }
        }
    }
    Ok(UTable {
        entries,
        phi_zero: kinetic_factor_phi(0.0, cs.gamma),
        measure: (stride as f64 * grid.spacing).powi(3),
        stride,
    })
}

type CacheMap = HashMap<u64, Arc<UTable>>;
static CACHE: OnceLock<Mutex<CacheMap>> = OnceLock::new();

fn cache_key(grid: &VelocityGrid, cs: &CrossSection, stride: usize) -> u64 {
    let sig = format!("{};{};stride={}", grid.signature(), cs.signature(), stride);
    fnv1a(sig.as_bytes())
}

/// Memoised table lookup; the table depends only on grid, cross-section and
/// stride, never on the fields.
pub fn cached_u_table(grid: &VelocityGrid, cs: &CrossSection, stride: usize) -> Result<Arc<UTable>> {
    let key = cache_key(grid, cs, stride);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let table = Arc::new(build_u_table(grid, cs, stride)?);
    cache.lock().unwrap().insert(key, table.clone());
    Ok(table)
}

impl UTable {
    /// Persist to disk under a content-hashed file name; returns the path.
    pub fn save(
        &self,
        dir: &Path,
        grid: &VelocityGrid,
        cs: &CrossSection,
    ) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        let key = cache_key(grid, cs, self.stride);
        let path = dir.join(format!("qtab_{key:016x}.bin"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        w.write_all(&(self.entries.len() as u64).to_le_bytes())?;
        w.write_all(&self.phi_zero.to_le_bytes())?;
        w.write_all(&self.measure.to_le_bytes())?;
        w.write_all(&(self.stride as u64).to_le_bytes())?;
        for e in &self.entries {
            for d in 0..3 {
                w.write_all(&e.offset[d].to_le_bytes())?;
            }
            for d in 0..3 {
                w.write_all(&e.u[d].to_le_bytes())?;
            }
            w.write_all(&e.speed.to_le_bytes())?;
            w.write_all(&e.phi.to_le_bytes())?;
        }
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<UTable> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let len = next_u64(&mut r)? as usize;
        let mut f8 = [0u8; 8];
        let mut next_f64 = |r: &mut dyn Read| -> Result<f64> {
            r.read_exact(&mut f8)?;
            Ok(f64::from_le_bytes(f8))
        };
        let phi_zero = next_f64(&mut r)?;
        let measure = next_f64(&mut r)?;
        let mut b8b = [0u8; 8];
        r.read_exact(&mut b8b)?;
        let stride = u64::from_le_bytes(b8b) as usize;
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            let mut offset = [0i64; 3];
            for d in &mut offset {
                r.read_exact(&mut b8b)?;
                *d = i64::from_le_bytes(b8b);
            }
            let mut u = [0.0; 3];
            for d in &mut u {
                r.read_exact(&mut f8)?;
                *d = f64::from_le_bytes(f8);
            }
            r.read_exact(&mut f8)?;
            let speed = f64::from_le_bytes(f8);
            r.read_exact(&mut f8)?;
            let phi = f64::from_le_bytes(f8);
            entries.push(UEntry { offset, u, speed, phi });
        }
        Ok(UTable {
            entries,
            phi_zero,
            measure,
            stride,
        })
    }
}
