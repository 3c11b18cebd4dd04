//! Persistent cache of computed `Psi` rows.
//!
//! Rows are keyed by the full numeric configuration (spline degree and
//! interval count, quadrature tolerances, sample counts, formula
//! switches), so a cache hit is guaranteed to reproduce the exact value a
//! fresh computation would give. Per-row `I_2` terms go to a sibling
//! file. Writes rewrite the whole file atomically under a single lock;
//! the on-disk order is sorted, so identical computations leave
//! byte-identical files.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::wu::{I20Weight, I2Detail, PsiKind, PsiRow, WuOptions, WuParams};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Identity of a numeric configuration, embedded in the cache file names.
pub fn cache_key(
    spline_degree: usize,
    spline_intervals: usize,
    cfg: &QuadratureConfig,
    options: &WuOptions,
) -> String {
    let weight = match options.i20_weight {
        I20Weight::AsPrinted => "p",
        I20Weight::WSquared => "w",
    };
    format!(
        "d{}k{}-a{:e}-r{:e}-m{}-u{}{}",
        spline_degree,
        spline_intervals,
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.mc_samples,
        options.i2_upper,
        weight
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct RowId {
    kind: PsiKind,
    s: u64,
    s_prime: u64,
    ks: Option<[u64; 3]>,
}

impl RowId {
    fn of(kind: PsiKind, params: &WuParams) -> RowId {
        RowId {
            kind,
            s: params.s.to_bits(),
            s_prime: params.s_prime.to_bits(),
            ks: params.ks.map(|k| k.map(f64::to_bits)),
        }
    }
}

#[derive(Debug)]
struct CacheState {
    rows: HashMap<RowId, PsiRow>,
    details: HashMap<RowId, Vec<I2Detail>>,
}

/// Append-only row cache with atomic file replacement.
#[derive(Debug)]
pub struct PsiCache {
    rows_path: PathBuf,
    details_path: PathBuf,
    state: Mutex<CacheState>,
}

impl PsiCache {
    /// Open (or create) the cache for one numeric configuration under
    /// `dir`.
    pub fn open(dir: &Path, key: &str) -> Result<PsiCache> {
        std::fs::create_dir_all(dir)?;
        let rows_path = dir.join(format!("psi-{key}.csv"));
        let details_path = dir.join(format!("i2-{key}.csv"));
        let rows = if rows_path.exists() {
            read_rows(&rows_path)?
        } else {
            HashMap::new()
        };
        let details = if details_path.exists() {
            read_details(&details_path)?
        } else {
            HashMap::new()
        };
        Ok(PsiCache {
            rows_path,
            details_path,
            state: Mutex::new(CacheState { rows, details }),
        })
    }

    /// Exact-parameter lookup. The caller's row index replaces the stored
    /// one, since the same parameters may sit at different grid
    /// positions.
    pub fn get(&self, kind: PsiKind, params: &WuParams, index: usize) -> Option<PsiRow> {
        let state = self.state.lock().unwrap();
        state.rows.get(&RowId::of(kind, params)).map(|r| {
            let mut row = r.clone();
            row.index = index;
            row
        })
    }

    /// Lookup of a scanned `Psi_1` grid row by `s` alone: any cached grid
    /// row (index >= 1) with this `s` was produced by the same
    /// deterministic scan policy. Ad-hoc rows are stored with index 0 and
    /// never match.
    pub fn get_psi1_scanned(&self, s: f64, index: usize) -> Option<PsiRow> {
        let state = self.state.lock().unwrap();
        state
            .rows
            .iter()
            .filter(|(id, row)| id.kind == PsiKind::Psi1 && row.index >= 1 && row.s_i == s)
            .map(|(_, row)| {
                let mut row = row.clone();
                row.index = index;
                row
            })
            .next()
    }

    pub fn details(&self, kind: PsiKind, params: &WuParams) -> Option<Vec<I2Detail>> {
        let state = self.state.lock().unwrap();
        state.details.get(&RowId::of(kind, params)).cloned()
    }

    /// Insert a freshly computed row and flush both files.
    pub fn put(&self, row: &PsiRow, details: &[I2Detail]) -> Result<()> {
        let mut state = self.state.lock().unwrap();
        let id = RowId::of(row.kind, &row.params);
        state.rows.insert(id.clone(), row.clone());
        if !details.is_empty() {
            state.details.insert(id, details.to_vec());
        }
        write_rows(&self.rows_path, &state.rows)?;
        write_details(&self.details_path, &state.rows, &state.details)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const ROWS_HEADER: [&str; 10] = [
    "i", "s", "s_prime", "k1", "k2", "k3", "kind", "phi_max", "phi_low", "psi_value",
];
const DETAILS_HEADER: [&str; 10] = [
    "i", "s", "s_prime", "k1", "k2", "k3", "term", "phi_max", "phi_low", "value",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

fn sorted_rows(rows: &HashMap<RowId, PsiRow>) -> Vec<&PsiRow> {
    let mut out: Vec<&PsiRow> = rows.values().collect();
    out.sort_by(|a, b| {
        (a.s_i, a.params.s_prime, a.kind as u8)
            .partial_cmp(&(b.s_i, b.params.s_prime, b.kind as u8))
            .unwrap()
    });
    out
}

fn write_rows(path: &Path, rows: &HashMap<RowId, PsiRow>) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        w.write_record(ROWS_HEADER)
            .map_err(|e| Error::Parse(e.to_string()))?;
        for row in sorted_rows(rows) {
            let ks = row.params.ks;
            w.write_record([
                row.index.to_string(),
                row.s_i.to_string(),
                row.params.s_prime.to_string(),
                fmt_opt(ks.map(|k| k[0])),
                fmt_opt(ks.map(|k| k[1])),
                fmt_opt(ks.map(|k| k[2])),
                row.kind.to_string(),
                row.phi_max.to_string(),
                row.phi_low.to_string(),
                row.psi_value.to_string(),
            ])
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_rows(path: &Path) -> Result<HashMap<RowId, PsiRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != ROWS_HEADER.len() {
            return Err(Error::Parse(format!("bad cache row: {rec:?}")));
        }
        let kind = match &rec[6] {
            "psi1" => PsiKind::Psi1,
            "psi2" => PsiKind::Psi2,
            other => return Err(Error::Parse(format!("bad kind: {other:?}"))),
        };
        let k1 = parse_opt(&rec[3], "k1")?;
        let k2 = parse_opt(&rec[4], "k2")?;
        let k3 = parse_opt(&rec[5], "k3")?;
        let ks = match (k1, k2, k3) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            (None, None, None) => None,
            _ => return Err(Error::Parse("partial k columns".to_string())),
        };
        let params = WuParams {
            s: parse_f64(&rec[1], "s")?,
            s_prime: parse_f64(&rec[2], "s_prime")?,
            ks,
        };
        let row = PsiRow {
            index: rec[0]
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad index: {:?}", &rec[0])))?,
            s_i: params.s,
            params,
            kind,
            phi_max: parse_f64(&rec[7], "phi_max")?,
            phi_low: parse_f64(&rec[8], "phi_low")?,
            psi_value: parse_f64(&rec[9], "psi_value")?,
        };
        out.insert(RowId::of(kind, &row.params), row);
    }
    Ok(out)
}

fn write_details(
    path: &Path,
    rows: &HashMap<RowId, PsiRow>,
    details: &HashMap<RowId, Vec<I2Detail>>,
) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        w.write_record(DETAILS_HEADER)
            .map_err(|e| Error::Parse(e.to_string()))?;
        for row in sorted_rows(rows) {
            let id = RowId::of(row.kind, &row.params);
            let Some(terms) = details.get(&id) else {
                continue;
            };
            let ks = row.params.ks;
            for d in terms {
                w.write_record([
                    row.index.to_string(),
                    row.s_i.to_string(),
                    row.params.s_prime.to_string(),
                    fmt_opt(ks.map(|k| k[0])),
                    fmt_opt(ks.map(|k| k[1])),
                    fmt_opt(ks.map(|k| k[2])),
                    d.i.to_string(),
                    d.phi_max.to_string(),
                    d.phi_low.to_string(),
                    d.value.to_string(),
                ])
                .map_err(|e| Error::Parse(e.to_string()))?;
            }
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_details(path: &Path) -> Result<HashMap<RowId, Vec<I2Detail>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out: HashMap<RowId, Vec<I2Detail>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != DETAILS_HEADER.len() {
            return Err(Error::Parse(format!("bad detail row: {rec:?}")));
        }
        let ks = match (
            parse_opt(&rec[3], "k1")?,
            parse_opt(&rec[4], "k2")?,
            parse_opt(&rec[5], "k3")?,
        ) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        let params = WuParams {
            s: parse_f64(&rec[1], "s")?,
            s_prime: parse_f64(&rec[2], "s_prime")?,
            ks,
        };
        // details exist only for Psi2 rows
        let id = RowId::of(PsiKind::Psi2, &params);
        out.entry(id).or_default().push(I2Detail {
            i: rec[6]
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad term index: {:?}", &rec[6])))?,
            phi_max: parse_f64(&rec[7], "phi_max")?,
            phi_low: parse_f64(&rec[8], "phi_low")?,
            value: parse_f64(&rec[9], "value")?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> PsiRow {
        PsiRow {
            index: 1,
            s_i: 2.2,
            params: WuParams::psi2(2.2, 4.54, 3.53, 2.90, 2.44),
            kind: PsiKind::Psi2,
            phi_low: 2.0,
            phi_max: 2.135,
            psi_value: 0.0161518,
        }
    }

    #[test]
    fn round_trip_preserves_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PsiCache::open(dir.path(), "test").unwrap();
        let row = PsiRow {
            psi_value: 0.1 + 0.2 / 3.0, // not representable in short decimal
            ..sample_row()
        };
        let details = vec![I2Detail {
            i: 11,
            phi_low: 2.0,
            phi_max: 2.135,
            value: 1.2345678901234567e-3,
        }];
        cache.put(&row, &details).unwrap();

        let reopened = PsiCache::open(dir.path(), "test").unwrap();
        let got = reopened.get(PsiKind::Psi2, &row.params, 1).unwrap();
        assert_eq!(got, row);
        assert_eq!(
            reopened.details(PsiKind::Psi2, &row.params).unwrap(),
            details
        );
    }

    #[test]
    fn lookup_rewrites_index_only() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PsiCache::open(dir.path(), "k").unwrap();
        cache.put(&sample_row(), &[]).unwrap();
        let got = cache.get(PsiKind::Psi2, &sample_row().params, 7).unwrap();
        assert_eq!(got.index, 7);
        assert_eq!(got.psi_value, sample_row().psi_value);
    }

    #[test]
    fn scanned_lookup_ignores_adhoc_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PsiCache::open(dir.path(), "k").unwrap();
        let adhoc = PsiRow {
            index: 0,
            s_i: 2.61,
            params: WuParams::psi1(2.61, 3.3),
            kind: PsiKind::Psi1,
            phi_low: 2.0,
            phi_max: 2.0,
            psi_value: 0.009,
        };
        cache.put(&adhoc, &[]).unwrap();
        assert!(cache.get_psi1_scanned(2.61, 6).is_none());

        let grid = PsiRow {
            index: 6,
            ..adhoc.clone()
        };
        cache.put(&grid, &[]).unwrap();
        let hit = cache.get_psi1_scanned(2.61, 12).unwrap();
        assert_eq!(hit.index, 12);
    }

    #[test]
    fn missing_params_miss_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PsiCache::open(dir.path(), "k").unwrap();
        cache.put(&sample_row(), &[]).unwrap();
        let other = WuParams::psi2(2.3, 4.50, 3.54, 2.88, 2.43);
        assert!(cache.get(PsiKind::Psi2, &other, 2).is_none());
    }

    #[test]
    fn cache_key_distinguishes_configs() {
        let cfg = QuadratureConfig::default();
        let mut cfg2 = cfg;
        cfg2.mc_samples = 1000;
        let opts = WuOptions::default();
        assert_ne!(
            cache_key(20, 10, &cfg, &opts),
            cache_key(20, 10, &cfg2, &opts)
        );
        assert_ne!(
            cache_key(20, 10, &cfg, &opts),
            cache_key(10, 10, &cfg, &opts)
        );
    }
}
