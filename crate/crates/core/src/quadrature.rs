//! Numeric kernels: adaptive 1-D quadrature, iterated quadrature over
//! chain-ordered domains, quasi-Monte-Carlo for dimensions >= 4, grid
//! refinement maximisation and feasibility bisection.
//!
//! Integrands signal "undefined at this point" by returning NaN; the
//! integrators convert that into [`Error::UndefinedIntegrand`] instead of
//! silently propagating NaN into the estimate.

use crate::error::{Error, Result};

/// Maximum supported dimension of an ordered domain.
pub const MAX_DIM: usize = 6;

/// Tolerances and budgets for the integration routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute tolerance for 1-D integrals.
    pub abs_tol: f64,
    /// Relative tolerance (applied against the whole-interval estimate).
    pub rel_tol: f64,
    /// Maximum bisection depth of the adaptive scheme.
    pub max_depth: u32,
    /// Sample count for the quasi-Monte-Carlo path (dimensions >= 4).
    pub mc_samples: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-8,
            rel_tol: 1e-4,
            max_depth: 40,
            mc_samples: 2_000_000,
        }
    }
}

impl QuadratureConfig {
    /// Absolute target for an iterated integral of the given dimension.
    ///
    /// Multi-dimensional integrals run at 100x the 1-D tolerance: the
    /// pipeline needs ~1e-6 on triple integrals while the 1-D terms that
    /// enter the same sums are cheap enough to keep at `abs_tol`.
    pub fn abs_tol_for_dim(&self, dim: usize) -> f64 {
        if dim <= 1 {
            self.abs_tol
        } else {
            self.abs_tol * 100.0
        }
    }
}

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights. Values are the classical QUADPACK constants.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 15 panel. Returns `(estimate, error_estimate)`;
/// a NaN anywhere yields `UndefinedIntegrand`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut res_gauss = fc * WG[3];
    let mut res_kron = fc * WGK[7];
    let mut res_abs = res_kron.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        let sum = f1 + f2;
        res_kron += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd Kronrod indices are the embedded Gauss nodes
            res_gauss += WG[j / 2] * sum;
        }
    }

    if res_kron.is_nan() {
        return Err(Error::undefined(format!(
            "integrand is NaN on [{a}, {b}]"
        )));
    }

    let mean = res_kron * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let mut err = ((res_kron - res_gauss) * half).abs();
    res_asc *= half.abs();
    res_abs *= half.abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    Ok((res_kron * half, err))
}

fn adapt<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> Result<f64> {
    let (res, err) = gk15(f, a, b)?;
    // `floor` guards against kinks: halving the budget per split would
    // otherwise demand sub-rounding accuracy from machine-width panels
    if err <= tol || err <= floor || (b - a).abs() <= 1e-14 * (a.abs() + b.abs() + 1.0) {
        return Ok(res);
    }
    if depth == 0 {
        return Err(Error::NonConvergent(format!(
            "panel [{a}, {b}] still has error {err:.3e} > {tol:.3e} at max depth"
        )));
    }
    let mid = 0.5 * (a + b);
    Ok(adapt(f, a, mid, 0.5 * tol, floor, depth - 1)?
        + adapt(f, mid, b, 0.5 * tol, floor, depth - 1)?)
}

/// Adaptive integration with an explicit absolute target. The relative
/// part of the tolerance is resolved against the whole-interval estimate.
fn integrate_abs<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (whole, err) = gk15(&mut f, a, b)?;
    let tol = abs_tol.max(rel_tol * whole.abs());
    if err <= tol {
        return Ok(whole);
    }
    let floor = tol * 1e-4;
    let mid = 0.5 * (a + b);
    Ok(adapt(&mut f, a, mid, 0.5 * tol, floor, max_depth)?
        + adapt(&mut f, mid, b, 0.5 * tol, floor, max_depth)?)
}

/// Integrate `f` over `[a, b]` to the absolute tolerance `cfg.abs_tol`.
/// `rel_tol` applies only to multi-dimensional integrals.
///
/// Requires `a <= b`; handles the pipeline's smoothness class (piecewise
/// analytic, mild log endpoint behaviour).
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::domain(format!(
            "integrate_1d requires a <= b, got [{a}, {b}]"
        )));
    }
    integrate_abs(f, a, b, cfg.abs_tol, 0.0, cfg.max_depth)
}

/// A bound of an ordered-domain variable: a constant cutpoint or a
/// reference to a variable that appears earlier in the integration chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Const(f64),
    Var(usize),
}

/// One variable slot, in integration order (slot 0 is outermost).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarSlot {
    pub lo: Bound,
    pub hi: Bound,
}

/// A chain-constrained integration region such as
/// `1/k1 <= t <= u <= 1/k2 <= v <= 1/s`.
///
/// Slots are stored outermost-first and bounds may reference only earlier
/// slots. `arg_order[i]` maps slot `i` back to the integrand's argument
/// position, so integrands can be written in the natural variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedDomain {
    slots: Vec<VarSlot>,
    arg_order: Vec<usize>,
    /// Propagated constant lower/upper bounds per slot.
    const_lo: Vec<f64>,
    const_hi: Vec<f64>,
}

/// Element of a chain description: either a constant cutpoint or a
/// variable identified by its argument position.
#[derive(Debug, Clone, Copy)]
pub enum ChainElem {
    Cut(f64),
    Var(usize),
}

pub fn cut(c: f64) -> ChainElem {
    ChainElem::Cut(c)
}

pub fn var(i: usize) -> ChainElem {
    ChainElem::Var(i)
}

impl OrderedDomain {
    /// Build a domain from explicit slots (outermost first).
    ///
    /// Validates that every `Bound::Var` points strictly earlier in the
    /// chain and that `arg_order` is a permutation of `0..n`.
    pub fn from_slots(slots: Vec<VarSlot>, arg_order: Vec<usize>) -> Result<Self> {
        let n = slots.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::domain(format!(
                "ordered domain must have 1..={MAX_DIM} variables, got {n}"
            )));
        }
        if arg_order.len() != n {
            return Err(Error::domain("arg_order length mismatch".to_string()));
        }
        let mut seen = vec![false; n];
        for &a in &arg_order {
            if a >= n || seen[a] {
                return Err(Error::domain("arg_order is not a permutation".to_string()));
            }
            seen[a] = true;
        }
        for (i, s) in slots.iter().enumerate() {
            for b in [s.lo, s.hi] {
                if let Bound::Var(j) = b {
                    if j >= i {
                        return Err(Error::domain(format!(
                            "slot {i} references slot {j}, which is not earlier in the chain"
                        )));
                    }
                }
            }
        }
        let (const_lo, const_hi) = propagate(&slots);
        Ok(OrderedDomain {
            slots,
            arg_order,
            const_lo,
            const_hi,
        })
    }

    /// Build a domain from one or more chains of the form
    /// `cut <= var <= var <= cut <= var <= ... <= cut`.
    ///
    /// Each chain must start and end with a cut, and every variable of the
    /// domain must appear exactly once across the chains. Runs of
    /// consecutive variables are emitted innermost-last, so the resulting
    /// slot order is a valid integration order.
    pub fn from_chains(dim: usize, chains: &[Vec<ChainElem>]) -> Result<Self> {
        let mut slots: Vec<VarSlot> = Vec::with_capacity(dim);
        let mut arg_order: Vec<usize> = Vec::with_capacity(dim);
        for chain in chains {
            match (chain.first(), chain.last()) {
                (Some(ChainElem::Cut(_)), Some(ChainElem::Cut(_))) => {}
                _ => {
                    return Err(Error::domain(
                        "each chain must start and end with a cutpoint".to_string(),
                    ))
                }
            }
            // split into runs of variables delimited by cuts
            let mut lo_cut = match chain[0] {
                ChainElem::Cut(c) => c,
                ChainElem::Var(_) => unreachable!(),
            };
            let mut run: Vec<usize> = Vec::new();
            for elem in &chain[1..] {
                match *elem {
                    ChainElem::Var(v) => run.push(v),
                    ChainElem::Cut(hi_cut) => {
                        // emit the run: last variable outermost with const
                        // bounds, each earlier one capped by its successor
                        for (pos, &v) in run.iter().rev().enumerate() {
                            let hi = if pos == 0 {
                                Bound::Const(hi_cut)
                            } else {
                                Bound::Var(slots.len() - 1)
                            };
                            slots.push(VarSlot {
                                lo: Bound::Const(lo_cut),
                                hi,
                            });
                            arg_order.push(v);
                        }
                        run.clear();
                        lo_cut = hi_cut;
                    }
                }
            }
        }
        Self::from_slots(slots, arg_order)
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[VarSlot] {
        &self.slots
    }

    /// Propagated constant range of the slot holding argument `arg`.
    pub fn arg_range(&self, arg: usize) -> (f64, f64) {
        let slot = self
            .arg_order
            .iter()
            .position(|&a| a == arg)
            .expect("argument index out of range");
        (self.const_lo[slot], self.const_hi[slot])
    }

    /// A domain is empty when interval propagation leaves some variable
    /// with a constant lower bound strictly above its upper bound.
    pub fn is_empty(&self) -> bool {
        self.const_lo
            .iter()
            .zip(&self.const_hi)
            .any(|(lo, hi)| lo > hi)
    }

    /// Componentwise-maximal corner in argument order (used for analytic
    /// feasibility thresholds).
    pub fn max_corner(&self) -> Vec<f64> {
        let mut corner = vec![0.0; self.dim()];
        for (slot, &arg) in self.arg_order.iter().enumerate() {
            corner[arg] = self.const_hi[slot];
        }
        corner
    }

    /// Detect maximal runs `(lo, hi, slots...)` where consecutive slots
    /// share a constant lower cut and each is capped by its predecessor.
    /// Every chain-built domain decomposes this way.
    fn blocks(&self) -> Option<Vec<QmcBlock>> {
        let mut blocks: Vec<QmcBlock> = Vec::new();
        for (i, s) in self.slots.iter().enumerate() {
            match (s.lo, s.hi) {
                (Bound::Const(lo), Bound::Const(hi)) => blocks.push(QmcBlock {
                    lo,
                    hi,
                    slots: vec![i],
                }),
                (Bound::Const(lo), Bound::Var(j)) => {
                    let last = blocks.last_mut()?;
                    if last.lo == lo && *last.slots.last().unwrap() == j {
                        last.slots.push(i);
                    } else {
                        return None;
                    }
                }
                _ => return None,
            }
        }
        Some(blocks)
    }
}

fn propagate(slots: &[VarSlot]) -> (Vec<f64>, Vec<f64>) {
    let n = slots.len();
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for i in 0..n {
        lo[i] = match slots[i].lo {
            Bound::Const(c) => c,
            Bound::Var(j) => lo[j],
        };
        hi[i] = match slots[i].hi {
            Bound::Const(c) => c,
            Bound::Var(j) => hi[j],
        };
    }
    (lo, hi)
}

/// A run of chain variables sharing the box `[lo, hi]`.
#[derive(Debug, Clone)]
struct QmcBlock {
    lo: f64,
    hi: f64,
    slots: Vec<usize>,
}

const HALTON_PRIMES: [u64; MAX_DIM] = [2, 3, 5, 7, 11, 13];
// Fixed burn-in so every call uses the same deterministic sequence.
const HALTON_OFFSET: u64 = 127;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let inv = 1.0 / base as f64;
    while i > 0 {
        f *= inv;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// A reusable deterministic point set over an ordered domain, for
/// quasi-Monte-Carlo integration. Points satisfy the chain constraints by
/// construction (coordinates of each run are sorted), so every sample
/// carries the same measure `prod_runs (hi-lo)^len / len! / n`.
#[derive(Debug, Clone)]
pub struct QmcPoints {
    dim: usize,
    /// Flattened points in argument order, `dim` entries per sample.
    coords: Vec<f64>,
    /// Measure represented by each sample.
    pub point_measure: f64,
    n: usize,
}

impl QmcPoints {
    /// Generate `n` low-discrepancy samples over `dom`.
    ///
    /// Falls back to indicator rejection against the bounding box when the
    /// domain does not decompose into chain runs; rejected points keep a
    /// zero row so the measure stays uniform.
    pub fn generate(dom: &OrderedDomain, n: usize) -> Result<Self> {
        let dim = dom.dim();
        if dom.is_empty() || n == 0 {
            return Ok(QmcPoints {
                dim,
                coords: Vec::new(),
                point_measure: 0.0,
                n: 0,
            });
        }
        match dom.blocks() {
            Some(blocks) => Self::generate_sorted(dom, &blocks, n),
            None => Self::generate_rejection(dom, n),
        }
    }

    fn generate_sorted(dom: &OrderedDomain, blocks: &[QmcBlock], n: usize) -> Result<Self> {
        let dim = dom.dim();
        let mut measure = 1.0;
        for b in blocks {
            let len = b.slots.len();
            let width = b.hi - b.lo;
            if width < 0.0 {
                return Ok(QmcPoints {
                    dim,
                    coords: Vec::new(),
                    point_measure: 0.0,
                    n: 0,
                });
            }
            let mut factorial = 1.0;
            for k in 2..=len {
                factorial *= k as f64;
            }
            measure *= width.powi(len as i32) / factorial;
        }
        let mut coords = vec![0.0f64; dim * n];
        let mut slot_vals = [0.0f64; MAX_DIM];
        let mut run = [0.0f64; MAX_DIM];
        for s in 0..n {
            let idx = HALTON_OFFSET + s as u64;
            let mut d = 0;
            for b in blocks {
                let len = b.slots.len();
                for item in run.iter_mut().take(len) {
                    *item = b.lo + (b.hi - b.lo) * radical_inverse(idx, HALTON_PRIMES[d]);
                    d += 1;
                }
                // slot order is outermost-first, i.e. descending values
                run[..len].sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
                for (k, &slot) in b.slots.iter().enumerate() {
                    slot_vals[slot] = run[k];
                }
            }
            for (slot, &arg) in dom.arg_order.iter().enumerate() {
                coords[s * dim + arg] = slot_vals[slot];
            }
        }
        Ok(QmcPoints {
            dim,
            coords,
            point_measure: measure / n as f64,
            n,
        })
    }

    fn generate_rejection(dom: &OrderedDomain, n: usize) -> Result<Self> {
        let dim = dom.dim();
        let mut box_vol = 1.0;
        for i in 0..dim {
            box_vol *= dom.const_hi[i] - dom.const_lo[i];
        }
        let mut coords = Vec::new();
        let mut slot_vals = [0.0f64; MAX_DIM];
        for s in 0..n {
            let idx = HALTON_OFFSET + s as u64;
            for i in 0..dim {
                slot_vals[i] = dom.const_lo[i]
                    + (dom.const_hi[i] - dom.const_lo[i])
                        * radical_inverse(idx, HALTON_PRIMES[i]);
            }
            let ok = dom.slots.iter().enumerate().all(|(i, s)| {
                let lo = match s.lo {
                    Bound::Const(c) => c,
                    Bound::Var(j) => slot_vals[j],
                };
                let hi = match s.hi {
                    Bound::Const(c) => c,
                    Bound::Var(j) => slot_vals[j],
                };
                lo <= slot_vals[i] && slot_vals[i] <= hi
            });
            if ok {
                let base = coords.len();
                coords.resize(base + dim, 0.0);
                for (slot, &arg) in dom.arg_order.iter().enumerate() {
                    coords[base + arg] = slot_vals[slot];
                }
            }
        }
        Ok(QmcPoints {
            dim,
            coords,
            point_measure: box_vol / n as f64,
            n,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Number of retained samples.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    /// Sum `f` over the point set and scale by the per-point measure.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<f64> {
        if self.coords.is_empty() || self.n == 0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for chunk in self.coords.chunks_exact(self.dim) {
            let v = f(chunk);
            if v.is_nan() {
                return Err(Error::undefined(format!(
                    "integrand is NaN at {chunk:?}"
                )));
            }
            acc += v;
        }
        Ok(acc * self.point_measure)
    }
}

/// Integrate `f` over an ordered domain.
///
/// Dimensions 1-3 use iterated adaptive quadrature with exact chain
/// limits; dimensions 4-6 use the deterministic quasi-Monte-Carlo point
/// set. Empty domains integrate to exactly 0.
pub fn integrate_ordered<F: Fn(&[f64]) -> f64>(
    f: F,
    dom: &OrderedDomain,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let dim = dom.dim();
    if dom.is_empty() {
        return Ok(0.0);
    }
    if dim <= 3 {
        let mut slot_vals = [0.0f64; MAX_DIM];
        let mut args = [0.0f64; MAX_DIM];
        let tol = cfg.abs_tol_for_dim(dim);
        nest(&f, dom, 0, &mut slot_vals, &mut args, tol, cfg)
    } else {
        let pts = QmcPoints::generate(dom, cfg.mc_samples)?;
        pts.integrate(f)
    }
}

fn nest<F: Fn(&[f64]) -> f64>(
    f: &F,
    dom: &OrderedDomain,
    level: usize,
    slot_vals: &mut [f64; MAX_DIM],
    args: &mut [f64; MAX_DIM],
    tol: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let dim = dom.dim();
    let slot = dom.slots[level];
    let lo = match slot.lo {
        Bound::Const(c) => c,
        Bound::Var(j) => slot_vals[j],
    };
    let hi = match slot.hi {
        Bound::Const(c) => c,
        Bound::Var(j) => slot_vals[j],
    };
    if hi <= lo {
        return Ok(0.0);
    }
    // the relative part of the tolerance applies at the outermost level
    let rel = if level == 0 { cfg.rel_tol } else { 0.0 };
    if level + 1 == dim {
        integrate_abs(
            |x| {
                slot_vals[level] = x;
                for (s, &a) in dom.arg_order.iter().enumerate() {
                    args[a] = slot_vals[s];
                }
                f(&args[..dim])
            },
            lo,
            hi,
            tol,
            rel,
            cfg.max_depth,
        )
    } else {
        // inner levels run tighter so their noise cannot stall the outer
        // adaptive refinement
        let inner_tol = tol / 10.0;
        let mut inner_err: Option<Error> = None;
        let res = integrate_abs(
            |x| {
                slot_vals[level] = x;
                match nest(f, dom, level + 1, slot_vals, args, inner_tol, cfg) {
                    Ok(v) => v,
                    Err(e) => {
                        inner_err = Some(e);
                        f64::NAN
                    }
                }
            },
            lo,
            hi,
            tol,
            rel,
            cfg.max_depth,
        );
        match inner_err {
            Some(e) => Err(e),
            None => res,
        }
    }
}

/// Maximise `g` by iterated grid refinement.
///
/// Scans `{lo, lo+eps, ..., hi}` at `eps = tol0`, recenters on the best
/// point, shrinks `eps` tenfold (clamping the window's left edge at `lo`),
/// and repeats until `eps < tol_final`. Points where `g` is undefined are
/// skipped; ties break toward the smaller argument.
pub fn grid_maximize<F: FnMut(f64) -> Result<f64>>(
    mut g: F,
    lo: f64,
    hi: f64,
    tol0: f64,
    tol_final: f64,
) -> Result<(f64, f64)> {
    if !(lo <= hi) {
        return Err(Error::domain(format!(
            "grid_maximize requires lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if !(tol0 > tol_final && tol_final > 0.0) {
        return Err(Error::domain(
            "grid_maximize requires tol0 > tol_final > 0".to_string(),
        ));
    }
    let mut eps = tol0;
    let mut wlo = lo;
    let mut whi = hi;
    let mut best: Option<(f64, f64)> = None;
    while eps >= tol_final * (1.0 - 1e-9) {
        let mut scan_best: Option<(f64, f64)> = None;
        let mut x = wlo;
        while x <= whi + eps * 1e-9 {
            let x_eval = x.min(whi);
            match g(x_eval) {
                Ok(v) => {
                    if scan_best.map_or(true, |(_, bv)| v > bv) {
                        scan_best = Some((x_eval, v));
                    }
                }
                Err(Error::UndefinedIntegrand(_)) => {}
                Err(e) => return Err(e),
            }
            x += eps;
        }
        let (bx, bv) = scan_best.ok_or_else(|| {
            Error::undefined(format!("g undefined on the whole window [{wlo}, {whi}]"))
        })?;
        best = Some((bx, bv));
        wlo = (bx - eps).max(lo);
        whi = bx + eps;
        eps /= 10.0;
    }
    best.ok_or_else(|| Error::domain("empty refinement loop".to_string()))
}

/// Find the least point of `[lo, hi]` where a monotone false-then-true
/// predicate becomes true, by bisection.
///
/// Returns `lo` immediately when `defined(lo)` holds and errors when even
/// `defined(hi)` fails.
pub fn bisect_threshold<F: FnMut(f64) -> bool>(
    mut defined: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if defined(lo) {
        return Ok(lo);
    }
    if !defined(hi) {
        return Err(Error::ThresholdNotBracketed { lo, hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if defined(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
