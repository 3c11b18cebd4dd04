//! Discretisation of `[2, 3]`, assembly of the linear system
//! `(I - A) X = B`, Chen's constant `C* = 8 (1 - x_1)`, the grid
//! refinement experiments and the interpolation experiment on the
//! published table.

use crate::cache::PsiCache;
use crate::error::{Error, Result};
use crate::interp::InterpolatingCubic;
use crate::quadrature::{grid_maximize, integrate_1d};
use crate::wu::{wu_rows, PsiKind, PsiRow, WuCtx, WuParams, WU_PUBLISHED_PSI};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Tolerance for matching a grid point against a published table row.
const S_MATCH_EPS: f64 = 1e-9;

/// Residual budget of a solved system: `1e-10 * (1 + |B|_inf)`.
const RESIDUAL_SCALE: f64 = 1e-10;

/// Which discretisation of `[2, 3]` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `s_i = 2.1 + 0.1 i`, `i = 1..=9`.
    Nine,
    /// Coarse prefix to 2.6, then step 0.01 up to 3.0 (45 rows).
    Forty,
    /// Coarse prefix to 2.6, then step 0.001 up to 3.0 (405 rows).
    FourHundred,
    /// `n` uniform points on `[2.2, 3.0]`.
    Custom(usize),
}

impl GridKind {
    pub fn name(&self) -> String {
        match self {
            GridKind::Nine => "nine".to_string(),
            GridKind::Forty => "forty".to_string(),
            GridKind::FourHundred => "fourhundred".to_string(),
            GridKind::Custom(n) => format!("custom:{n}"),
        }
    }
}

/// What a grid row still needs before its `Psi` value can be computed.
#[derive(Debug, Clone, PartialEq)]
pub enum RowSpec {
    /// `Psi_2` with fully known parameters.
    Psi2(WuParams),
    /// `Psi_1` with a known maximising `s'`.
    Psi1(WuParams),
    /// `Psi_1` whose `s'` must be found by scanning `[3, 5]`.
    Psi1Scan { s: f64 },
}

impl RowSpec {
    pub fn kind(&self) -> PsiKind {
        match self {
            RowSpec::Psi2(_) => PsiKind::Psi2,
            _ => PsiKind::Psi1,
        }
    }

    pub fn s(&self) -> f64 {
        match self {
            RowSpec::Psi2(p) | RowSpec::Psi1(p) => p.s,
            RowSpec::Psi1Scan { s } => *s,
        }
    }
}

/// Grid points `s_0 = 1 < s_1 < ... < s_n = 3` plus per-row kinds and
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    /// `n + 1` points, starting at `s_0 = 1`.
    pub points: Vec<f64>,
    /// `n` rows, one per grid point `s_1..s_n`.
    pub rows: Vec<RowSpec>,
}

impl Discretization {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Parameters of the published row nearest to `s` among the `Psi_2` rows.
fn nearest_published_psi2(s: f64) -> WuParams {
    wu_rows()
        .iter()
        .filter(|r| r.kind == PsiKind::Psi2)
        .min_by(|a, b| {
            (a.params.s - s)
                .abs()
                .partial_cmp(&(b.params.s - s).abs())
                .unwrap()
        })
        .map(|r| r.params)
        .expect("the table has Psi_2 rows")
}

fn classify(s: f64) -> RowSpec {
    // exact published rows keep their published parameters
    for r in wu_rows().iter() {
        if (r.params.s - s).abs() < S_MATCH_EPS {
            return match r.kind {
                PsiKind::Psi2 => RowSpec::Psi2(r.params),
                PsiKind::Psi1 => RowSpec::Psi1(r.params),
            };
        }
    }
    if s < 2.55 {
        // Psi_2 dominates left of the crossover; reuse the nearest
        // published k-parameters since optimising all five is out of reach
        let near = nearest_published_psi2(s);
        let p = WuParams {
            s,
            s_prime: near.s_prime,
            ks: near.ks,
        };
        if p.validate_psi2().is_ok() {
            return RowSpec::Psi2(p);
        }
    }
    RowSpec::Psi1Scan { s }
}

/// Build a discretisation. Row kinds: published rows keep their table
/// assignment, refined rows on `[2.6, 3.0]` are `Psi_1` with a scanned
/// `s'`.
pub fn build_grid(kind: GridKind) -> Result<Discretization> {
    let mut points = vec![1.0];
    match kind {
        GridKind::Nine => {
            for i in 1..=9usize {
                points.push((21.0 + i as f64) / 10.0);
            }
        }
        GridKind::Forty => {
            for i in 1..=5usize {
                points.push((21.0 + i as f64) / 10.0);
            }
            for i in 6..=45usize {
                points.push((260.0 + (i as f64 - 5.0)) / 100.0);
            }
        }
        GridKind::FourHundred => {
            for i in 1..=5usize {
                points.push((21.0 + i as f64) / 10.0);
            }
            for i in 6..=405usize {
                points.push((2600.0 + (i as f64 - 5.0)) / 1000.0);
            }
        }
        GridKind::Custom(n) => {
            if n < 2 {
                return Err(Error::domain("custom grid needs at least 2 points".to_string()));
            }
            for i in 1..=n {
                points.push(2.2 + (i as f64 - 1.0) * 0.8 / (n as f64 - 1.0));
            }
        }
    }
    let rows = points[1..].iter().map(|&s| classify(s)).collect();
    Ok(Discretization { points, rows })
}

/// `Psi` evaluation pipeline bound to a Wu context and an optional row
/// cache.
pub struct ChenCtx<'a> {
    pub wu: &'a WuCtx,
    pub cache: Option<&'a PsiCache>,
}

impl<'a> ChenCtx<'a> {
    pub fn new(wu: &'a WuCtx, cache: Option<&'a PsiCache>) -> Self {
        ChenCtx { wu, cache }
    }

    /// Compute (or fetch) the `Psi` row for one grid entry.
    pub fn psi_row(&self, index: usize, spec: &RowSpec) -> Result<PsiRow> {
        match spec {
            RowSpec::Psi2(p) => {
                if let Some(hit) = self.cache.and_then(|c| c.get(PsiKind::Psi2, p, index)) {
                    return Ok(hit);
                }
                let eval = self.wu.psi2_eval(p)?;
                let row = PsiRow {
                    index,
                    s_i: p.s,
                    params: *p,
                    kind: PsiKind::Psi2,
                    phi_low: eval.phi_low,
                    phi_max: eval.phi_max,
                    psi_value: eval.value,
                };
                if let Some(c) = self.cache {
                    c.put(&row, &eval.details)?;
                }
                Ok(row)
            }
            RowSpec::Psi1(p) => {
                if let Some(hit) = self.cache.and_then(|c| c.get(PsiKind::Psi1, p, index)) {
                    return Ok(hit);
                }
                let eval = self.wu.psi1_eval(p.s, p.s_prime)?;
                let row = PsiRow {
                    index,
                    s_i: p.s,
                    params: *p,
                    kind: PsiKind::Psi1,
                    phi_low: eval.phi_low,
                    phi_max: eval.phi_max,
                    psi_value: eval.value,
                };
                if let Some(c) = self.cache {
                    c.put(&row, &[])?;
                }
                Ok(row)
            }
            RowSpec::Psi1Scan { s } => {
                if let Some(hit) = self.cache.and_then(|c| c.get_psi1_scanned(*s, index)) {
                    return Ok(hit);
                }
                let row = self.scan_psi1(index, *s)?;
                if let Some(c) = self.cache {
                    c.put(&row, &[])?;
                }
                Ok(row)
            }
        }
    }

    /// Maximise `Psi_1(s, s')` over `s' in [3, 5]`: a coarse 0.01 pass,
    /// then one 0.001 refinement around the best point. Infeasible `s'`
    /// (constraint violations) are skipped like undefined points.
    fn scan_psi1(&self, index: usize, s: f64) -> Result<PsiRow> {
        let (sp_best, _) = grid_maximize(
            |sp| match self.wu.psi1(s, sp) {
                Ok(v) => Ok(v),
                Err(Error::ConstraintViolation(m)) => Err(Error::undefined(m)),
                Err(e) => Err(e),
            },
            3.0,
            5.0,
            0.01,
            0.001,
        )?;
        let eval = self.wu.psi1_eval(s, sp_best)?;
        Ok(PsiRow {
            index,
            s_i: s,
            params: WuParams::psi1(s, sp_best),
            kind: PsiKind::Psi1,
            phi_low: eval.phi_low,
            phi_max: eval.phi_max,
            psi_value: eval.value,
        })
    }

    /// Compute the full `B` table (in parallel), resolving scanned `s'`
    /// values along the way.
    pub fn build_b(&self, d: &Discretization) -> Result<Vec<PsiRow>> {
        d.rows
            .par_iter()
            .enumerate()
            .map(|(i, spec)| self.psi_row(i + 1, spec))
            .collect()
    }

    /// Assemble `A`: row `i` integrates its kernel (`Xi_2` for `Psi_2`
    /// rows, `Xi_1` otherwise) over each panel `[s_{j-1}, s_j]`. The
    /// kernels jump at their alpha breakpoints, so each panel integral is
    /// split there instead of leaving the discontinuities to the
    /// adaptive refinement.
    pub fn build_a(&self, d: &Discretization, rows: &[PsiRow]) -> Result<DMatrix<f64>> {
        let n = d.len();
        if rows.len() != n {
            return Err(Error::domain("row table does not match the grid".to_string()));
        }
        let entries: Result<Vec<Vec<f64>>> = rows
            .par_iter()
            .map(|row| {
                let breaks = kernel_breakpoints(row)?;
                let mut out = Vec::with_capacity(n);
                for j in 0..n {
                    out.push(self.kernel_panel(row, &breaks, d.points[j], d.points[j + 1])?);
                }
                Ok(out)
            })
            .collect();
        let entries = entries?;
        Ok(DMatrix::from_fn(n, n, |i, j| entries[i][j]))
    }

    /// Integral of the row's kernel over `[a, b]`, split at breakpoints.
    fn kernel_panel(&self, row: &PsiRow, breaks: &[f64], a: f64, b: f64) -> Result<f64> {
        let mut cuts = vec![a];
        for &x in breaks {
            if x > a && x < b {
                cuts.push(x);
            }
        }
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let v = match row.kind {
                PsiKind::Psi2 => integrate_1d(
                    |t| self.wu.xi2(t, &row.params).unwrap_or(f64::NAN),
                    w[0],
                    w[1],
                    self.wu.cfg(),
                )?,
                PsiKind::Psi1 => integrate_1d(
                    |t| {
                        self.wu
                            .xi1(t, row.params.s, row.params.s_prime)
                            .unwrap_or(f64::NAN)
                    },
                    w[0],
                    w[1],
                    self.wu.cfg(),
                )?,
            };
            total += v;
        }
        Ok(total)
    }
}

/// Points where a row's kernel switches indicator terms, sorted.
fn kernel_breakpoints(row: &PsiRow) -> Result<Vec<f64>> {
    let mut breaks = match row.kind {
        PsiKind::Psi2 => {
            let al = crate::wu::alpha_set(&row.params)?;
            let mut v = al.alpha.to_vec();
            v.push(3.0);
            v
        }
        PsiKind::Psi1 => {
            let sp = row.params.s_prime;
            vec![sp - 2.0, sp - sp / row.params.s - 1.0, 3.0]
        }
    };
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    Ok(breaks)
}

/// A solved system `(I - A) X = B` with its derived constant.
#[derive(Debug, Clone)]
pub struct ChenSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub x: DVector<f64>,
    pub c_star: f64,
    /// `|(I - A) X - B|_inf`.
    pub residual: f64,
    /// Whether `x_1` is the largest coordinate (recorded, not enforced).
    pub x1_is_max: bool,
}

/// Direct dense solve with partial pivoting, one step of iterative
/// refinement if the residual misses `1e-10 (1 + |B|_inf)`.
pub fn solve_system(a: DMatrix<f64>, b: DVector<f64>) -> Result<ChenSystem> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::domain("A/B dimension mismatch".to_string()));
    }
    let m = DMatrix::identity(n, n) - &a;
    let lu = m.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| Error::SingularMatrix("I - A is singular".to_string()))?;

    let budget = RESIDUAL_SCALE * (1.0 + b.amax());
    let mut residual = (&m * &x - &b).amax();
    if residual > budget {
        let correction = lu
            .solve(&(&b - &m * &x))
            .ok_or_else(|| Error::SingularMatrix("refinement solve failed".to_string()))?;
        x += correction;
        residual = (&m * &x - &b).amax();
        if residual > budget {
            return Err(Error::SingularMatrix(format!(
                "residual {residual:.3e} exceeds budget {budget:.3e}"
            )));
        }
    }

    let x1 = x[0];
    let x1_is_max = x.iter().all(|&v| v <= x1);
    Ok(ChenSystem {
        a,
        b,
        x,
        c_star: 8.0 * (1.0 - x1),
        residual,
        x1_is_max,
    })
}

/// Where the `B` vector comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BSource {
    /// Compute every `Psi` value.
    Computed,
    /// Use the published nine-row `Psi` column (requires the nine grid).
    WuPublished,
}

/// Report of one grid solve.
#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub grid: String,
    pub points: usize,
    pub b_source: String,
    pub x: Vec<f64>,
    pub x1: f64,
    pub c_star: f64,
    pub residual: f64,
    pub x1_is_max: bool,
    pub b_wall_seconds: f64,
    pub a_wall_seconds: f64,
    pub wall_seconds: f64,
}

impl GridReport {
    /// Canonical bytes for determinism comparisons: wall-clock fields are
    /// zeroed, everything else must match bit-for-bit.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.b_wall_seconds = 0.0;
        c.a_wall_seconds = 0.0;
        c.wall_seconds = 0.0;
        serde_json::to_string_pretty(&c).expect("report serialisation cannot fail")
    }
}

/// Build `B` and `A` for a grid, solve, and report.
pub fn solve_grid(
    ctx: &ChenCtx,
    kind: GridKind,
    b_source: BSource,
) -> Result<(GridReport, ChenSystem)> {
    let started = Instant::now();
    let d = build_grid(kind)?;

    let b_started = Instant::now();
    let (rows, b): (Vec<PsiRow>, DVector<f64>) = match b_source {
        BSource::Computed => {
            let rows = ctx.build_b(&d)?;
            let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.psi_value));
            (rows, b)
        }
        BSource::WuPublished => {
            if d.len() != 9 {
                return Err(Error::domain(
                    "the published B vector has 9 entries; use the nine grid".to_string(),
                ));
            }
            let rows = wu_rows()
                .iter()
                .zip(WU_PUBLISHED_PSI)
                .map(|(r, psi)| PsiRow {
                    psi_value: psi,
                    ..r.clone()
                })
                .collect::<Vec<_>>();
            let b = DVector::from_column_slice(&WU_PUBLISHED_PSI);
            (rows, b)
        }
    };
    let b_wall = b_started.elapsed().as_secs_f64();

    let a_started = Instant::now();
    let a = ctx.build_a(&d, &rows)?;
    let a_wall = a_started.elapsed().as_secs_f64();

    let system = solve_system(a, b)?;
    let report = GridReport {
        grid: kind.name(),
        points: d.len(),
        b_source: match b_source {
            BSource::Computed => "computed".to_string(),
            BSource::WuPublished => "wu-published".to_string(),
        },
        x: system.x.iter().copied().collect(),
        x1: system.x[0],
        c_star: system.c_star,
        residual: system.residual,
        x1_is_max: system.x1_is_max,
        b_wall_seconds: b_wall,
        a_wall_seconds: a_wall,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((report, system))
}

/// Run the refinement experiment over the given grids, in order.
pub fn refine_experiment(ctx: &ChenCtx, kinds: &[GridKind]) -> Result<Vec<GridReport>> {
    kinds
        .iter()
        .map(|&k| solve_grid(ctx, k, BSource::Computed).map(|(r, _)| r))
        .collect()
}

/// Report of the interpolation experiment.
#[derive(Debug, Clone, Serialize)]
pub struct InterpReport {
    pub n_intervals: usize,
    pub crossing_root: f64,
    pub c_star: f64,
    pub x1: f64,
    pub residual: f64,
    /// Rows whose interpolated parameters violated the constraints and
    /// fell back to the nearest published row.
    pub fallback_rows: Vec<usize>,
    pub wall_seconds: f64,
}

/// Interpolants of the published table columns.
struct TableInterpolants {
    psi1: InterpolatingCubic,
    psi2: InterpolatingCubic,
    sp: InterpolatingCubic,
    k1: InterpolatingCubic,
    k2: InterpolatingCubic,
    k3: InterpolatingCubic,
}

fn table_interpolants() -> TableInterpolants {
    let rows = wu_rows();
    let s: Vec<f64> = rows.iter().map(|r| r.params.s).collect();
    let psi2_s = &s[..4];
    let psi1_s = &s[4..];
    TableInterpolants {
        psi1: InterpolatingCubic::fit(psi1_s, &WU_PUBLISHED_PSI[4..]).unwrap(),
        psi2: InterpolatingCubic::fit(psi2_s, &WU_PUBLISHED_PSI[..4]).unwrap(),
        sp: InterpolatingCubic::fit(
            &s,
            &rows.iter().map(|r| r.params.s_prime).collect::<Vec<_>>(),
        )
        .unwrap(),
        k1: InterpolatingCubic::fit(
            psi2_s,
            &rows[..4].iter().map(|r| r.params.ks.unwrap()[0]).collect::<Vec<_>>(),
        )
        .unwrap(),
        k2: InterpolatingCubic::fit(
            psi2_s,
            &rows[..4].iter().map(|r| r.params.ks.unwrap()[1]).collect::<Vec<_>>(),
        )
        .unwrap(),
        k3: InterpolatingCubic::fit(
            psi2_s,
            &rows[..4].iter().map(|r| r.params.ks.unwrap()[2]).collect::<Vec<_>>(),
        )
        .unwrap(),
    }
}

/// Root of `Psi_1 - Psi_2` (interpolated) near 2.55, by bracketed
/// bisection.
fn crossing_root(t: &TableInterpolants) -> Result<f64> {
    let f = |s: f64| t.psi1.eval(s) - t.psi2.eval(s);
    let (mut lo, mut hi) = (f64::NAN, f64::NAN);
    let mut prev = (2.45, f(2.45));
    let mut x = 2.455;
    while x <= 2.65 {
        let fx = f(x);
        if prev.1 == 0.0 || prev.1 * fx < 0.0 {
            lo = prev.0;
            hi = x;
            break;
        }
        prev = (x, fx);
        x += 0.005;
    }
    if lo.is_nan() {
        return Err(Error::RootNotBracketed(
            "Psi_1 - Psi_2 does not change sign on [2.45, 2.65]".to_string(),
        ));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The best-case bound `Psi_B`: `Psi_2` below the crossing (held constant
/// left of 2.2), `Psi_1` above it.
fn psi_b(t: &TableInterpolants, m: f64, s: f64) -> f64 {
    if s <= 2.2 {
        t.psi2.eval(2.2)
    } else if s <= m {
        t.psi2.eval(s)
    } else {
        t.psi1.eval(s)
    }
}

/// Interpolation experiment: discretise `[2.2, 3]` into `n_intervals`
/// points, build `B` from `Psi_B` and `A` from the kernels with
/// interpolated parameters, solve, and return `C*` with the crossing
/// root.
pub fn interpolation_experiment(ctx: &ChenCtx, n_intervals: usize) -> Result<InterpReport> {
    if n_intervals < 9 {
        return Err(Error::domain(
            "interpolation experiment needs at least 9 intervals".to_string(),
        ));
    }
    let started = Instant::now();
    let t = table_interpolants();
    let m = crossing_root(&t)?;

    let n = n_intervals;
    let mut points = vec![1.0];
    for i in 1..=n {
        points.push(2.2 + (i as f64 - 1.0) * 0.8 / (n as f64 - 1.0));
    }

    // row parameters: interpolated, falling back to the nearest published
    // row when the interpolated tuple is infeasible
    let mut fallback_rows = Vec::new();
    let mut rows: Vec<PsiRow> = Vec::with_capacity(n);
    for (i, &s) in points[1..].iter().enumerate() {
        let kind = if s > m { PsiKind::Psi1 } else { PsiKind::Psi2 };
        let params = match kind {
            PsiKind::Psi1 => WuParams::psi1(s, t.sp.eval(s)),
            PsiKind::Psi2 => {
                let p = WuParams {
                    s,
                    s_prime: t.sp.eval(s),
                    ks: Some([t.k1.eval(s), t.k2.eval(s), t.k3.eval(s)]),
                };
                if p.validate_psi2().is_err() {
                    fallback_rows.push(i + 1);
                    nearest_published_psi2(s)
                } else {
                    p
                }
            }
        };
        rows.push(PsiRow {
            index: i + 1,
            s_i: s,
            params,
            kind,
            phi_low: f64::NAN,
            phi_max: f64::NAN,
            psi_value: psi_b(&t, m, s),
        });
    }

    let d = Discretization {
        points,
        rows: rows
            .iter()
            .map(|r| match r.kind {
                PsiKind::Psi1 => RowSpec::Psi1(r.params),
                PsiKind::Psi2 => RowSpec::Psi2(r.params),
            })
            .collect(),
    };
    let a = ctx.build_a(&d, &rows)?;
    let b = DVector::from_iterator(n, rows.iter().map(|r| r.psi_value));
    let system = solve_system(a, b)?;

    Ok(InterpReport {
        n_intervals,
        crossing_root: m,
        c_star: system.c_star,
        x1: system.x[0],
        residual: system.residual,
        fallback_rows,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
