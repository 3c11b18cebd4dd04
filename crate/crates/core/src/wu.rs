//! Wu's integral machinery: the alpha breakpoints, the kernels `Xi_1` and
//! `Xi_2`, the Buchstab-weighted integrals `I_1` and `I_{2,9}..I_{2,21}`
//! with their phi-maximisation, and the bound functions `Psi_1`, `Psi_2`.
//!
//! All Buchstab evaluations go through the certified spline; an omega
//! argument below 1 marks the integrand undefined, which surfaces as
//! [`Error::UndefinedIntegrand`] and drives the feasibility threshold
//! `phi_low`.

use crate::buchstab::BuchstabSpline;
use crate::error::{Error, Result};
use crate::quadrature::{
    bisect_threshold, cut, grid_maximize, integrate_1d, integrate_ordered, var, OrderedDomain,
    QmcPoints, QuadratureConfig,
};
use serde::{Deserialize, Serialize};

/// Slack for roundoff when the omega argument grazes 1 at a domain corner.
const OMEGA_ARG_SLACK: f64 = 1e-9;

/// Grid-refinement steps of the phi maximisation.
const PHI_TOL0: f64 = 0.1;
const PHI_TOL_FINAL: f64 = 0.001;
/// Scan ceilings: `I_1` is maximised on `[2, 4]`, the `I_2` family on
/// `[2, 5]`.
const PHI_HIGH_I1: f64 = 4.0;
const PHI_HIGH_I2: f64 = 5.0;

/// Parameter tuple `(s, s', k1, k2, k3)`; the `k`s are absent for rows
/// that only feed `Psi_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WuParams {
    pub s: f64,
    pub s_prime: f64,
    pub ks: Option<[f64; 3]>,
}

impl WuParams {
    pub fn psi1(s: f64, s_prime: f64) -> Self {
        WuParams {
            s,
            s_prime,
            ks: None,
        }
    }

    pub fn psi2(s: f64, s_prime: f64, k1: f64, k2: f64, k3: f64) -> Self {
        WuParams {
            s,
            s_prime,
            ks: Some([k1, k2, k3]),
        }
    }

    pub fn k1(&self) -> Result<f64> {
        Ok(self.require_ks()?[0])
    }

    pub fn k2(&self) -> Result<f64> {
        Ok(self.require_ks()?[1])
    }

    pub fn k3(&self) -> Result<f64> {
        Ok(self.require_ks()?[2])
    }

    fn require_ks(&self) -> Result<[f64; 3]> {
        self.ks.ok_or_else(|| {
            Error::ConstraintViolation("k parameters required but absent".to_string())
        })
    }

    /// `2 <= s <= 3 <= s' <= 5` and `s' - s'/s >= 2`.
    pub fn validate_psi1(&self) -> Result<()> {
        let (s, sp) = (self.s, self.s_prime);
        if !(2.0 <= s && s <= 3.0 && 3.0 <= sp && sp <= 5.0) {
            return Err(Error::ConstraintViolation(format!(
                "need 2 <= s <= 3 <= s' <= 5, got s = {s}, s' = {sp}"
            )));
        }
        if sp - sp / s < 2.0 - 1e-12 {
            return Err(Error::ConstraintViolation(format!(
                "need s' - s'/s >= 2, got {}",
                sp - sp / s
            )));
        }
        Ok(())
    }

    /// The `Psi_1` constraints plus `s <= k3 <= k2 <= k1 <= s'` and the
    /// alpha conditions.
    pub fn validate_psi2(&self) -> Result<()> {
        self.validate_psi1()?;
        let [k1, k2, k3] = self.require_ks()?;
        if !(self.s <= k3 && k3 <= k2 && k2 <= k1 && k1 <= self.s_prime) {
            return Err(Error::ConstraintViolation(format!(
                "need s <= k3 <= k2 <= k1 <= s', got s = {}, k3 = {k3}, k2 = {k2}, k1 = {k1}, s' = {}",
                self.s, self.s_prime
            )));
        }
        alpha_set(self).map(|_| ())
    }
}

/// The nine breakpoints derived from `(s, s', k1, k2, k3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSet {
    /// `alpha[0]` is `alpha_1 = k1 - 2` and so on through
    /// `alpha[8] = alpha_9 = k1 - k1/k2 - 1`.
    pub alpha: [f64; 9],
}

impl AlphaSet {
    #[inline]
    pub fn a(&self, i: usize) -> f64 {
        self.alpha[i - 1]
    }
}

/// Evaluate the alpha formulas and check the constraints
/// `1 <= alpha_i <= 3`, `alpha_1 < alpha_4` and `alpha_5 < alpha_8`.
/// Violations are reported, never clamped.
pub fn alpha_set(p: &WuParams) -> Result<AlphaSet> {
    let [k1, k2, k3] = p.require_ks()?;
    let (s, sp) = (p.s, p.s_prime);
    let alpha = [
        k1 - 2.0,
        sp - 2.0,
        sp - sp / s - 1.0,
        sp - sp / k2 - 1.0,
        sp - sp / k3 - 1.0,
        sp - 2.0 * sp / k2,
        sp - sp / k1 - sp / k3,
        sp - sp / k1 - sp / k2,
        k1 - k1 / k2 - 1.0,
    ];
    for (idx, a) in alpha.iter().enumerate() {
        if !(1.0 - 1e-12..=3.0 + 1e-12).contains(a) {
            return Err(Error::ConstraintViolation(format!(
                "alpha_{} = {a} violates 1 <= alpha_i <= 3",
                idx + 1
            )));
        }
    }
    if alpha[0] >= alpha[3] {
        return Err(Error::ConstraintViolation(format!(
            "alpha_1 = {} must be < alpha_4 = {}",
            alpha[0], alpha[3]
        )));
    }
    if alpha[4] >= alpha[7] {
        return Err(Error::ConstraintViolation(format!(
            "alpha_5 = {} must be < alpha_8 = {}",
            alpha[4], alpha[7]
        )));
    }
    Ok(AlphaSet { alpha })
}

/// Closed-endpoint indicator `1_[a,b](t)`, zero whenever `a > b`.
#[inline]
fn indicator(a: f64, b: f64, t: f64) -> f64 {
    if a <= b && a <= t && t <= b {
        1.0
    } else {
        0.0
    }
}

/// Which bound function a table row feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PsiKind {
    Psi1,
    Psi2,
}

impl std::fmt::Display for PsiKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsiKind::Psi1 => write!(f, "psi1"),
            PsiKind::Psi2 => write!(f, "psi2"),
        }
    }
}

/// Weight convention for `I_{2,20}`, whose printed form `1/(t u v^2 x)`
/// skips the omega divisor `w`; the alternate uses `1/(t u v w^2 x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum I20Weight {
    #[default]
    AsPrinted,
    WSquared,
}

/// Switches for the documented formula ambiguities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WuOptions {
    /// Upper index of the `I_2` sum in `Psi_2` (21, or 19 to drop the
    /// 5-D and 6-D terms for comparison).
    pub i2_upper: usize,
    pub i20_weight: I20Weight,
}

impl Default for WuOptions {
    fn default() -> Self {
        WuOptions {
            i2_upper: 21,
            i20_weight: I20Weight::AsPrinted,
        }
    }
}

/// Shared evaluation context: the Buchstab spline, quadrature settings
/// and the cached `sigma` denominator.
pub struct WuCtx {
    spline: BuchstabSpline,
    cfg: QuadratureConfig,
    options: WuOptions,
    /// `1 - sigma(3,5,4)`, computed once.
    sigma_denom: f64,
}

/// `sigma(a,b,c) = integral_a^b log(c/(t-1)) / t dt` for `1 < a <= b`.
pub fn sigma(a: f64, b: f64, c: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(1.0 < a && a <= b && c > 0.0) {
        return Err(Error::domain(format!(
            "sigma requires 1 < a <= b and c > 0, got ({a}, {b}, {c})"
        )));
    }
    integrate_1d(|t| (c / (t - 1.0)).ln() / t, a, b, cfg)
}

impl WuCtx {
    pub fn new(spline: BuchstabSpline, cfg: QuadratureConfig, options: WuOptions) -> Result<Self> {
        let denom = 1.0 - sigma(3.0, 5.0, 4.0, &cfg)?;
        if denom.abs() < 1e-6 {
            return Err(Error::domain(
                "sigma(3,5,4) is too close to 1; sigma_0 would blow up".to_string(),
            ));
        }
        Ok(WuCtx {
            spline,
            cfg,
            options,
            sigma_denom: denom,
        })
    }

    pub fn spline(&self) -> &BuchstabSpline {
        &self.spline
    }

    pub fn cfg(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub fn options(&self) -> &WuOptions {
        &self.options
    }

    /// `sigma_0(t) = sigma(3, t+2, t+1) / (1 - sigma(3,5,4))`.
    pub fn sigma0(&self, t: f64) -> Result<f64> {
        if t < 1.0 {
            return Err(Error::domain(format!("sigma_0 requires t >= 1, got {t}")));
        }
        Ok(sigma(3.0, t + 2.0, t + 1.0, &self.cfg)? / self.sigma_denom)
    }

    /// Kernel `Xi_1(t, s, s')` of the `Psi_1` rows.
    pub fn xi1(&self, t: f64, s: f64, s_prime: f64) -> Result<f64> {
        let sp = s_prime;
        let a2 = sp - 2.0;
        let a3 = sp - sp / s - 1.0;
        let mut total = self.sigma0(t)? / (2.0 * t) * (16.0 / ((s - 1.0) * (sp - 1.0))).ln();
        let ind2 = indicator(a2, 3.0, t);
        if ind2 != 0.0 {
            total += ind2 / (2.0 * t) * ((t + 1.0) * (t + 1.0) / ((s - 1.0) * (sp - 1.0))).ln();
        }
        let ind3 = indicator(a3, a2, t);
        if ind3 != 0.0 {
            total += ind3 / (2.0 * t) * ((t + 1.0) / ((s - 1.0) * (sp - 1.0 - t))).ln();
        }
        Ok(total)
    }

    /// Ten-term kernel `Xi_2(t; s, s', k1, k2, k3)` of the `Psi_2` rows.
    /// The three `1 -+ t/s'` weights keep the signs of the displayed
    /// formula: `alpha_7..alpha_5` carries `1 + t/s'`, the rest `1 - t/s'`.
    pub fn xi2(&self, t: f64, p: &WuParams) -> Result<f64> {
        let al = alpha_set(p)?;
        let [k1, k2, k3] = p.require_ks()?;
        let (s, sp) = (p.s, p.s_prime);
        let denom5 = (s - 1.0) * (sp - 1.0) * (k1 - 1.0) * (k2 - 1.0) * (k3 - 1.0);

        let mut total = self.sigma0(t)? / (5.0 * t) * (1024.0 / denom5).ln();
        let mut add = |ind: f64, weight: f64, ratio: f64| {
            if ind != 0.0 {
                total += ind / weight * ratio.ln();
            }
        };
        add(
            indicator(al.a(2), 3.0, t),
            5.0 * t,
            (t + 1.0).powi(5) / denom5,
        );
        add(
            indicator(al.a(9), al.a(1), t),
            5.0 * t,
            (t + 1.0) / ((k2 - 1.0) * (k1 - 1.0 - t)),
        );
        add(
            indicator(al.a(5), al.a(2), t),
            5.0 * t,
            (t + 1.0) / ((k3 - 1.0) * (sp - 1.0 - t)),
        );
        add(
            indicator(al.a(3), al.a(2), t),
            5.0 * t,
            (t + 1.0) / ((s - 1.0) * (sp - 1.0 - t)),
        );
        add(
            indicator(al.a(1), al.a(2), t),
            5.0 * t,
            (t + 1.0) * (t + 1.0) / ((k1 - 1.0) * (k2 - 1.0)),
        );
        add(
            indicator(al.a(7), al.a(5), t),
            5.0 * t * (1.0 + t / sp),
            sp * sp / ((k1 * sp - sp - k1 * t) * (k3 * sp - sp - k3 * t)),
        );
        add(
            indicator(al.a(5), al.a(8), t),
            5.0 * t * (1.0 - t / sp),
            sp * (sp - 1.0 - t) / (k1 * sp - sp - k1 * t),
        );
        add(
            indicator(al.a(6), al.a(8), t),
            5.0 * t * (1.0 - t / sp),
            sp / (k2 * sp - sp - k2 * t),
        );
        add(
            indicator(al.a(8), al.a(2), t),
            5.0 * t * (1.0 - t / sp),
            sp - 1.0 - t,
        );
        Ok(total)
    }

    #[inline]
    fn omega(&self, arg: f64) -> f64 {
        if arg < 1.0 - OMEGA_ARG_SLACK {
            f64::NAN
        } else {
            self.spline.eval_unchecked(arg.max(1.0))
        }
    }

    /// `I_1(phi, s, s')`: the triple integral of
    /// `omega((phi - t - u - v)/u) / (t u^2 v)` over
    /// `1/s' <= t <= u <= v <= 1/s`, before maximisation.
    pub fn i1(&self, phi: f64, s: f64, s_prime: f64) -> Result<f64> {
        let dom = i1_domain(s, s_prime);
        let low = phi_low(&dom, 1);
        if phi < low - 1e-9 {
            return Err(Error::undefined(format!(
                "I_1 needs phi >= {low:.6}, got {phi}"
            )));
        }
        integrate_ordered(
            |a| self.omega((phi - a[0] - a[1] - a[2]) / a[1]) / (a[0] * a[1] * a[1] * a[2]),
            &dom,
            &self.cfg,
        )
    }

    /// `I_{2,i}(phi, ...)` for `9 <= i <= 21`, before maximisation.
    pub fn i2(&self, i: usize, phi: f64, p: &WuParams) -> Result<f64> {
        let dom = i2_domain(i, p)?;
        let spec = i2_spec(i)?;
        let low = phi_low(&dom, spec.divisor);
        if phi < low - 1e-9 {
            return Err(Error::undefined(format!(
                "I_2,{i} needs phi >= {low:.6}, got {phi}"
            )));
        }
        if dom.dim() <= 3 {
            integrate_ordered(|a| self.i2_integrand(i, phi, a), &dom, &self.cfg)
        } else {
            let pts = QmcPoints::generate(&dom, self.cfg.mc_samples)?;
            pts.integrate(|a| self.i2_integrand(i, phi, a))
        }
    }

    #[inline]
    fn i2_integrand(&self, i: usize, phi: f64, a: &[f64]) -> f64 {
        let divisor = match i {
            9..=15 => a[1],
            16..=19 => a[2],
            20 => a[3],
            _ => a[4],
        };
        let sum: f64 = a.iter().sum();
        self.omega((phi - sum) / divisor) * self.i2_weight(i, a)
    }

    #[inline]
    fn i2_weight(&self, i: usize, a: &[f64]) -> f64 {
        match i {
            9..=15 => 1.0 / (a[0] * a[1] * a[1] * a[2]),
            16..=19 => 1.0 / (a[0] * a[1] * a[2] * a[2] * a[3]),
            20 => match self.options.i20_weight {
                I20Weight::AsPrinted => 1.0 / (a[0] * a[1] * a[2] * a[2] * a[4]),
                I20Weight::WSquared => 1.0 / (a[0] * a[1] * a[2] * a[3] * a[3] * a[4]),
            },
            21 => 1.0 / (a[0] * a[1] * a[2] * a[3] * a[4] * a[4] * a[5]),
            _ => f64::NAN,
        }
    }

    /// Maximise `I_1` over the feasible phi window `[max(2, phi_low), 4]`.
    pub fn i1_max(&self, s: f64, s_prime: f64) -> Result<MaxResult> {
        let dom = i1_domain(s, s_prime);
        let low = phi_low(&dom, 1);
        let (phi_max, value) =
            grid_maximize(|phi| self.i1(phi, s, s_prime), low, PHI_HIGH_I1, PHI_TOL0, PHI_TOL_FINAL)?;
        Ok(MaxResult {
            phi_low: low,
            phi_max,
            value,
        })
    }

    /// Maximise `I_{2,i}` over `[max(2, phi_low), 5]`. The QMC point set
    /// of a 4-6 dimensional domain is generated once and shared across
    /// the whole scan.
    pub fn i2_max(&self, i: usize, p: &WuParams) -> Result<MaxResult> {
        let dom = i2_domain(i, p)?;
        let spec = i2_spec(i)?;
        let low = phi_low(&dom, spec.divisor);
        if dom.is_empty() {
            return Ok(MaxResult {
                phi_low: low,
                phi_max: low,
                value: 0.0,
            });
        }
        let pts = if dom.dim() >= 4 {
            Some(QmcPoints::generate(&dom, self.cfg.mc_samples)?)
        } else {
            None
        };
        let eval = |phi: f64| -> Result<f64> {
            if phi < low - 1e-9 {
                return Err(Error::undefined(format!(
                    "I_2,{i} needs phi >= {low:.6}, got {phi}"
                )));
            }
            match &pts {
                Some(pts) => pts.integrate(|a| self.i2_integrand(i, phi, a)),
                None => integrate_ordered(|a| self.i2_integrand(i, phi, a), &dom, &self.cfg),
            }
        };
        let (phi_max, value) = grid_maximize(eval, low, PHI_HIGH_I2, PHI_TOL0, PHI_TOL_FINAL)?;
        Ok(MaxResult {
            phi_low: low,
            phi_max,
            value,
        })
    }

    /// Numeric feasibility threshold: bisection on "the integral is
    /// defined", as a cross-check of the analytic [`phi_low`].
    pub fn i2_phi_low_bisect(&self, i: usize, p: &WuParams, tol: f64) -> Result<f64> {
        bisect_threshold(
            |phi| self.i2(i, phi, p).is_ok(),
            2.0,
            PHI_HIGH_I2,
            tol,
        )
    }

    /// `Psi_1(s, s') = -integral_2^(s'-1) log(t-1)/t dt
    ///  + integral_(1-1/s)^(1-1/s') log(s' t - 1)/(t (1-t)) dt
    ///  - I_1(s, s')`.
    ///
    /// The signs and weights are pinned by the published nine-row table:
    /// the coefficient triple `(-1, +1, -1)` reproduces all four
    /// non-trivial `Psi_1` rows to 1e-8, and matches the sign pattern of
    /// the `Psi_2` terms.
    pub fn psi1_eval(&self, s: f64, s_prime: f64) -> Result<PsiEval> {
        let p = WuParams::psi1(s, s_prime);
        p.validate_psi1()?;
        let sp = s_prime;
        let t1 = signed_integral(2.0, sp - 1.0, |t| (t - 1.0).ln() / t, &self.cfg)?;
        let t2 = signed_integral(
            1.0 - 1.0 / s,
            1.0 - 1.0 / sp,
            |t| (sp * t - 1.0).ln() / (t * (1.0 - t)),
            &self.cfg,
        )?;
        let m = self.i1_max(s, sp)?;
        Ok(PsiEval {
            value: -t1 + t2 - m.value,
            phi_low: m.phi_low,
            phi_max: m.phi_max,
            details: vec![],
        })
    }

    /// `Psi_2(s, s', k1, k2, k3)` with coefficients
    /// `(-2/5, -2/5, -1/5, +1/5, +1/5)` on the five 1-D integrals, minus
    /// `2/5` times the `I_2` sum.
    pub fn psi2_eval(&self, p: &WuParams) -> Result<PsiEval> {
        p.validate_psi2()?;
        let [k1, k2, k3] = p.require_ks()?;
        let (s, sp) = (p.s, p.s_prime);
        let log_shift = |t: f64| (t - 1.0).ln() / t;
        let t1 = -0.4 * signed_integral(2.0, sp - 1.0, log_shift, &self.cfg)?;
        let t2 = -0.4 * signed_integral(2.0, k1 - 1.0, log_shift, &self.cfg)?;
        let t3 = -0.2 * signed_integral(2.0, k2 - 1.0, log_shift, &self.cfg)?;
        let t4 = 0.2
            * signed_integral(
                1.0 - 1.0 / s,
                1.0 - 1.0 / sp,
                |t| (sp * t - 1.0).ln() / (t * (1.0 - t)),
                &self.cfg,
            )?;
        let t5 = 0.2
            * signed_integral(
                1.0 - 1.0 / k3,
                1.0 - 1.0 / k1,
                |t| (k1 * t - 1.0).ln() / (t * (1.0 - t)),
                &self.cfg,
            )?;
        let mut details = Vec::new();
        let mut i2_sum = 0.0;
        for i in 9..=self.options.i2_upper {
            let m = self.i2_max(i, p)?;
            i2_sum += m.value;
            details.push(I2Detail {
                i,
                phi_low: m.phi_low,
                phi_max: m.phi_max,
                value: m.value,
            });
        }
        let phi_low = details.iter().map(|d| d.phi_low).fold(2.0, f64::max);
        let phi_max = details.iter().map(|d| d.phi_max).fold(2.0, f64::max);
        Ok(PsiEval {
            value: t1 + t2 + t3 + t4 + t5 - 0.4 * i2_sum,
            phi_low,
            phi_max,
            details,
        })
    }

    pub fn psi1(&self, s: f64, s_prime: f64) -> Result<f64> {
        Ok(self.psi1_eval(s, s_prime)?.value)
    }

    pub fn psi2(&self, p: &WuParams) -> Result<f64> {
        Ok(self.psi2_eval(p)?.value)
    }
}

/// Result of a phi maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxResult {
    pub phi_low: f64,
    pub phi_max: f64,
    pub value: f64,
}

/// One `I_{2,i}` term of a `Psi_2` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct I2Detail {
    pub i: usize,
    pub phi_low: f64,
    pub phi_max: f64,
    pub value: f64,
}

/// A computed `Psi` value with its maximisation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiEval {
    pub value: f64,
    pub phi_low: f64,
    pub phi_max: f64,
    pub details: Vec<I2Detail>,
}

/// Row of the Psi table feeding the linear system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiRow {
    pub index: usize,
    pub s_i: f64,
    pub params: WuParams,
    pub kind: PsiKind,
    pub phi_low: f64,
    pub phi_max: f64,
    pub psi_value: f64,
}

/// `integral_a^b` with the orientation convention
/// `integral_a^b = -integral_b^a`; `Psi_2`'s third term genuinely runs
/// backwards whenever `k2 < 3`.
fn signed_integral<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    f: F,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if a <= b {
        integrate_1d(f, a, b, cfg)
    } else {
        Ok(-integrate_1d(f, b, a, cfg)?)
    }
}

/// `1/s' <= t <= u <= v <= 1/s` with `(t, u, v)` at argument positions
/// `(0, 1, 2)`.
pub fn i1_domain(s: f64, s_prime: f64) -> OrderedDomain {
    OrderedDomain::from_chains(
        3,
        &[vec![
            cut(1.0 / s_prime),
            var(0),
            var(1),
            var(2),
            cut(1.0 / s),
        ]],
    )
    .expect("the I_1 chain is well-formed")
}

struct I2Spec {
    /// Argument position of the omega divisor.
    divisor: usize,
}

fn i2_spec(i: usize) -> Result<I2Spec> {
    let spec = match i {
        9..=15 => I2Spec { divisor: 1 },
        16..=19 => I2Spec { divisor: 2 },
        20 => I2Spec { divisor: 3 },
        21 => I2Spec { divisor: 4 },
        _ => {
            return Err(Error::domain(format!(
                "I_2 index must lie in 9..=21, got {i}"
            )))
        }
    };
    Ok(spec)
}

/// Integration domain of `I_{2,i}`.
pub fn i2_domain(i: usize, p: &WuParams) -> Result<OrderedDomain> {
    let [k1, k2, k3] = p.require_ks()?;
    let (s, sp) = (p.s, p.s_prime);
    let (r1, r2, r3, rs, rsp) = (1.0 / k1, 1.0 / k2, 1.0 / k3, 1.0 / s, 1.0 / sp);
    let dom = match i {
        9 => OrderedDomain::from_chains(3, &[vec![cut(r1), var(0), var(1), var(2), cut(r3)]]),
        10 => OrderedDomain::from_chains(
            3,
            &[vec![cut(r1), var(0), var(1), cut(r2), var(2), cut(rs)]],
        ),
        11 => OrderedDomain::from_chains(
            3,
            &[vec![cut(r1), var(0), cut(r2), var(1), var(2), cut(r3)]],
        ),
        12 => OrderedDomain::from_chains(
            3,
            &[
                vec![cut(rsp), var(0), var(1), cut(r1)],
                vec![cut(r3), var(2), cut(rs)],
            ],
        ),
        13 => OrderedDomain::from_chains(
            3,
            &[vec![
                cut(rsp),
                var(0),
                cut(r1),
                var(1),
                cut(r2),
                var(2),
                cut(rs),
            ]],
        ),
        14 => OrderedDomain::from_chains(
            3,
            &[
                vec![cut(rsp), var(0), cut(r1)],
                vec![cut(r2), var(1), var(2), cut(rs)],
            ],
        ),
        15 => OrderedDomain::from_chains(
            3,
            &[vec![
                cut(r1),
                var(0),
                cut(r2),
                var(1),
                cut(r3),
                var(2),
                cut(rs),
            ]],
        ),
        16 => OrderedDomain::from_chains(
            4,
            &[vec![cut(r2), var(0), var(1), var(2), var(3), cut(r3)]],
        ),
        17 => OrderedDomain::from_chains(
            4,
            &[vec![
                cut(r2),
                var(0),
                var(1),
                var(2),
                cut(r3),
                var(3),
                cut(rs),
            ]],
        ),
        18 => OrderedDomain::from_chains(
            4,
            &[vec![
                cut(r2),
                var(0),
                var(1),
                cut(r3),
                var(2),
                var(3),
                cut(rs),
            ]],
        ),
        19 => OrderedDomain::from_chains(
            4,
            &[
                vec![cut(r1), var(0), cut(r2)],
                vec![cut(r3), var(1), var(2), var(3), cut(rs)],
            ],
        ),
        20 => OrderedDomain::from_chains(
            5,
            &[vec![
                cut(r2),
                var(0),
                cut(r3),
                var(1),
                var(2),
                var(3),
                var(4),
                cut(rs),
            ]],
        ),
        21 => OrderedDomain::from_chains(
            6,
            &[vec![
                cut(r3),
                var(0),
                var(1),
                var(2),
                var(3),
                var(4),
                var(5),
                cut(rs),
            ]],
        ),
        _ => {
            return Err(Error::domain(format!(
                "I_2 index must lie in 9..=21, got {i}"
            )))
        }
    };
    dom.map_err(|e| Error::domain(format!("I_2,{i} domain: {e}")))
}

/// Least `phi >= 2` keeping the omega argument `>= 1` on the closed
/// domain. The argument decreases in every variable, so its minimum sits
/// at the componentwise-maximal corner: `phi_low = sum(corner) +
/// corner[divisor]`, clamped below at 2.
pub fn phi_low(dom: &OrderedDomain, divisor_arg: usize) -> f64 {
    let corner = dom.max_corner();
    let sum: f64 = corner.iter().sum();
    (sum + corner[divisor_arg]).max(2.0)
}

/// The nine published table rows: `s_i = 2.1 + 0.1 i`, the maximising
/// `s'_i`, and `k_{1..3}` for the four `Psi_2` rows (Wu 2004).
pub fn wu_rows() -> [PsiRow; 9] {
    let p = |s, sp, ks: Option<[f64; 3]>| WuParams { s, s_prime: sp, ks };
    let mk = |index: usize, params: WuParams, kind| PsiRow {
        index,
        s_i: params.s,
        params,
        kind,
        phi_low: f64::NAN,
        phi_max: f64::NAN,
        psi_value: f64::NAN,
    };
    [
        mk(1, p(2.2, 4.54, Some([3.53, 2.90, 2.44])), PsiKind::Psi2),
        mk(2, p(2.3, 4.50, Some([3.54, 2.88, 2.43])), PsiKind::Psi2),
        mk(3, p(2.4, 4.46, Some([3.57, 2.87, 2.40])), PsiKind::Psi2),
        mk(4, p(2.5, 4.12, Some([3.56, 2.91, 2.50])), PsiKind::Psi2),
        mk(5, p(2.6, 3.58, None), PsiKind::Psi1),
        mk(6, p(2.7, 3.47, None), PsiKind::Psi1),
        mk(7, p(2.8, 3.34, None), PsiKind::Psi1),
        mk(8, p(2.9, 3.19, None), PsiKind::Psi1),
        mk(9, p(3.0, 3.00, None), PsiKind::Psi1),
    ]
}

/// Wu's published `Psi` column (the `B` vector of the nine-row system).
pub const WU_PUBLISHED_PSI: [f64; 9] = [
    0.015826357,
    0.015247971,
    0.013898757,
    0.011776059,
    0.009405211,
    0.006558950,
    0.003536751,
    0.001056651,
    0.0,
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buchstab::{build_spline, omega_limit};
    use std::sync::OnceLock;

    fn ctx() -> &'static WuCtx {
        static CTX: OnceLock<WuCtx> = OnceLock::new();
        CTX.get_or_init(|| {
            let spline = build_spline(20, 10).unwrap();
            WuCtx::new(spline, QuadratureConfig::default(), WuOptions::default()).unwrap()
        })
    }

    fn row(i: usize) -> PsiRow {
        wu_rows()[i - 1].clone()
    }

    #[test]
    fn alpha_substitution_row_one() {
        let al = alpha_set(&row(1).params).unwrap();
        assert!((al.a(1) - 1.53).abs() < 1e-12);
        assert!((al.a(2) - 2.54).abs() < 1e-12);
        let a3 = 4.54 - 4.54 / 2.2 - 1.0;
        assert!((al.a(3) - a3).abs() < 1e-12);
        assert!((a3 - 1.4763636363636362).abs() < 1e-12);
    }

    #[test]
    fn alpha_reports_violations() {
        // k1 = s' drives alpha_4 = alpha_1... use k2 = k1 so
        // alpha_1 = k1 - 2 and alpha_4 = s' - s'/k1 - 1; pick numbers
        // where alpha_1 >= alpha_4.
        let bad = WuParams::psi2(2.2, 4.0, 4.0, 4.0, 4.0);
        assert!(matches!(
            alpha_set(&bad),
            Err(Error::ConstraintViolation(_))
        ));
    }

    fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = 0.5 * (f(a) + f(b));
        for i in 1..n {
            acc += f(a + i as f64 * h);
        }
        acc * h
    }

    #[test]
    fn sigma_examples() {
        let cfg = QuadratureConfig::default();
        assert_eq!(sigma(3.0, 3.0, 4.0, &cfg).unwrap(), 0.0);
        let oracle = trapezoid(|t| (4.0 / (t - 1.0)).ln() / t, 3.0, 5.0, 1_000_000);
        assert!((sigma(3.0, 5.0, 4.0, &cfg).unwrap() - oracle).abs() < 1e-8);
        // sigma(3, t+2, t+1) at t = 1 is the empty interval
        assert_eq!(sigma(3.0, 3.0, 2.0, &cfg).unwrap(), 0.0);
        assert!(sigma(1.0, 2.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn sigma0_examples() {
        let c = ctx();
        assert_eq!(c.sigma0(1.0).unwrap(), 0.0);
        let cfg = QuadratureConfig::default();
        let denom = 1.0 - sigma(3.0, 5.0, 4.0, &cfg).unwrap();
        let s3 = sigma(3.0, 5.0, 4.0, &cfg).unwrap();
        assert!((c.sigma0(3.0).unwrap() - s3 / denom).abs() < 1e-10);
        let s2 = sigma(3.0, 4.0, 3.0, &cfg).unwrap();
        assert!((c.sigma0(2.0).unwrap() - s2 / denom).abs() < 1e-10);
    }

    #[test]
    fn xi1_term_by_term() {
        let c = ctx();
        let (s, sp) = (2.6, 3.58);
        // t = 1: sigma_0 vanishes and both indicators are empty
        assert_eq!(c.xi1(1.0, s, sp).unwrap(), 0.0);

        let a2 = sp - 2.0;
        let a3 = sp - sp / s - 1.0;
        let term1 = |t: f64| {
            c.sigma0(t).unwrap() / (2.0 * t) * (16.0 / ((s - 1.0) * (sp - 1.0))).ln()
        };
        let term2 =
            |t: f64| 1.0 / (2.0 * t) * ((t + 1.0) * (t + 1.0) / ((s - 1.0) * (sp - 1.0))).ln();
        let term3 =
            |t: f64| 1.0 / (2.0 * t) * ((t + 1.0) / ((s - 1.0) * (sp - 1.0 - t))).ln();

        // t = 2.9 > alpha_2: first two terms only
        let t = 2.9;
        assert!((c.xi1(t, s, sp).unwrap() - (term1(t) + term2(t))).abs() < 1e-12);

        // alpha_3 <= t <= alpha_2: all three terms
        let t = 0.5 * (a3 + a2);
        assert!(
            (c.xi1(t, s, sp).unwrap() - (term1(t) + term3(t))).abs() < 1e-12,
            "middle window is below alpha_2, so term2 is off"
        );
    }

    #[test]
    fn xi2_term_by_term_oracle() {
        let c = ctx();
        let p = row(1).params;
        let al = alpha_set(&p).unwrap();
        let [k1, k2, k3] = p.ks.unwrap();
        let (s, sp) = (p.s, p.s_prime);
        // t = 1: sigma_0 = 0 and every indicator interval starts above 1
        assert_eq!(c.xi2(1.0, &p).unwrap(), 0.0);

        let denom5 = (s - 1.0) * (sp - 1.0) * (k1 - 1.0) * (k2 - 1.0) * (k3 - 1.0);
        // indicator-gated terms: logs are evaluated only on the support
        let gated = |on: bool, w: f64, ratio: f64| if on { ratio.ln() / w } else { 0.0 };
        let oracle = |t: f64| {
            c.sigma0(t).unwrap() / (5.0 * t) * (1024.0 / denom5).ln()
                + gated(
                    indicator(al.a(2), 3.0, t) != 0.0,
                    5.0 * t,
                    (t + 1.0).powi(5) / denom5,
                )
                + gated(
                    indicator(al.a(9), al.a(1), t) != 0.0,
                    5.0 * t,
                    (t + 1.0) / ((k2 - 1.0) * (k1 - 1.0 - t)),
                )
                + gated(
                    indicator(al.a(5), al.a(2), t) != 0.0,
                    5.0 * t,
                    (t + 1.0) / ((k3 - 1.0) * (sp - 1.0 - t)),
                )
                + gated(
                    indicator(al.a(3), al.a(2), t) != 0.0,
                    5.0 * t,
                    (t + 1.0) / ((s - 1.0) * (sp - 1.0 - t)),
                )
                + gated(
                    indicator(al.a(1), al.a(2), t) != 0.0,
                    5.0 * t,
                    (t + 1.0).powi(2) / ((k1 - 1.0) * (k2 - 1.0)),
                )
                + gated(
                    indicator(al.a(7), al.a(5), t) != 0.0,
                    5.0 * t * (1.0 + t / sp),
                    sp * sp / ((k1 * sp - sp - k1 * t) * (k3 * sp - sp - k3 * t)),
                )
                + gated(
                    indicator(al.a(5), al.a(8), t) != 0.0,
                    5.0 * t * (1.0 - t / sp),
                    sp * (sp - 1.0 - t) / (k1 * sp - sp - k1 * t),
                )
                + gated(
                    indicator(al.a(6), al.a(8), t) != 0.0,
                    5.0 * t * (1.0 - t / sp),
                    sp / (k2 * sp - sp - k2 * t),
                )
                + gated(
                    indicator(al.a(8), al.a(2), t) != 0.0,
                    5.0 * t * (1.0 - t / sp),
                    sp - 1.0 - t,
                )
        };
        let mut t = 1.0;
        while t <= 3.0 {
            let got = c.xi2(t, &p).unwrap();
            let want = oracle(t);
            assert!((got - want).abs() < 1e-12, "t = {t}: {got} vs {want}");
            t += 0.05;
        }
        // t = 3 sits inside [alpha_2, 3]: term 2 is active
        let got3 = c.xi2(3.0, &p).unwrap();
        assert!((got3 - oracle(3.0)).abs() < 1e-12);
        assert!(indicator(al.a(2), 3.0, 3.0) == 1.0);
    }

    #[test]
    fn xi2_empty_indicator_contributes_zero() {
        let c = ctx();
        // make alpha_6 > alpha_8 so term 9's interval is empty: its
        // contribution must vanish identically, not go negative
        let p = row(1).params;
        let al = alpha_set(&p).unwrap();
        assert!(al.a(6) < al.a(8), "row 1 keeps term 9 alive");
        // probing a t outside every other support isolates the term
        let t = 0.5 * (al.a(6) + al.a(8));
        let v = c.xi2(t, &p).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn phi_low_i1_is_clamped_to_two() {
        let dom = i1_domain(2.6, 3.58);
        let low = phi_low(&dom, 1);
        assert_eq!(low, 2.0);
        // the unclamped corner value is 4/2.6 ~= 1.538
        let corner: f64 = dom.max_corner().iter().sum::<f64>() + 1.0 / 2.6;
        assert!((corner - 4.0 / 2.6).abs() < 1e-12);
    }

    #[test]
    fn phi_low_exceeds_two_for_deep_domains() {
        let p = row(1).params;
        let dom = i2_domain(16, &p).unwrap();
        let low = phi_low(&dom, 2);
        assert!((low - 5.0 / 2.44).abs() < 1e-12, "got {low}");
        assert!(low > 2.0);
    }

    #[test]
    fn phi_30_is_defined_on_every_pipeline_domain() {
        let c = ctx();
        for r in wu_rows().iter().take(4) {
            for i in 9..=21 {
                let dom = i2_domain(i, &r.params).unwrap();
                let spec = i2_spec(i).unwrap();
                assert!(
                    phi_low(&dom, spec.divisor) < 30.0,
                    "row {} I_2,{i}",
                    r.index
                );
            }
        }
        for r in wu_rows().iter().skip(4) {
            let dom = i1_domain(r.params.s, r.params.s_prime);
            assert!(phi_low(&dom, 1) < 30.0);
        }
        // and the integrals actually evaluate there
        assert!(c.i1(30.0, 2.6, 3.58).is_ok());
    }

    #[test]
    fn i1_empty_domain_is_zero() {
        let c = ctx();
        assert_eq!(c.i1(2.0, 3.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn i1_undefined_below_phi_low() {
        let c = ctx();
        // phi_low for I_1 is always 2 in the admissible band
        assert!(matches!(
            c.i1(1.2, 2.6, 3.58),
            Err(Error::UndefinedIntegrand(_))
        ));
    }

    #[test]
    fn i1_constant_tail_factorisation() {
        let c = ctx();
        let (s, sp) = (2.6, 3.58);
        let dom = i1_domain(s, sp);
        let weight_only = integrate_ordered(
            |a| 1.0 / (a[0] * a[1] * a[1] * a[2]),
            &dom,
            c.cfg(),
        )
        .unwrap();
        let full = c.i1(30.0, s, sp).unwrap();
        let expect = omega_limit() * weight_only;
        assert!(
            ((full - expect) / expect).abs() < 1e-4,
            "{full} vs {expect}"
        );
    }

    #[test]
    fn i1_shrinking_domain_shrinks_value() {
        let c = ctx();
        let phi = 2.5;
        let wide = c.i1(phi, 2.6, 3.58).unwrap();
        let mid = c.i1(phi, 2.6, 3.30).unwrap();
        let thin = c.i1(phi, 2.6, 3.00).unwrap();
        assert!(wide >= mid && mid >= thin, "{wide} >= {mid} >= {thin}");
    }

    #[test]
    fn i2_degenerate_domain_is_zero() {
        let c = ctx();
        let mut p = row(1).params;
        // k1 = k3 collapses D_2,9 to a point
        let [_, k2, _] = p.ks.unwrap();
        p.ks = Some([k2, k2, k2]);
        let m = c.i2_max(9, &p).unwrap();
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn i2_16_constant_tail_factorisation() {
        let c = ctx();
        let p = row(1).params;
        let dom = i2_domain(16, &p).unwrap();
        let mut cfg = *c.cfg();
        cfg.mc_samples = 200_000;
        let pts = QmcPoints::generate(&dom, cfg.mc_samples).unwrap();
        let weight_only = pts
            .integrate(|a| 1.0 / (a[0] * a[1] * a[2] * a[2] * a[3]))
            .unwrap();
        let full = pts
            .integrate(|a| c.i2_integrand(16, 30.0, a))
            .unwrap();
        let expect = omega_limit() * weight_only;
        assert!(
            ((full - expect) / expect).abs() < 1e-3,
            "{full} vs {expect}"
        );
    }

    #[test]
    fn i2_11_maximum_is_interior() {
        let c = ctx();
        // row 5 parameters with row-1 k's, as in the published I_2,11 plot
        let p = WuParams::psi2(2.6, 3.58, 3.53, 2.90, 2.44);
        let m = c.i2_max(11, &p).unwrap();
        assert!(
            m.phi_max > 2.0 + 1e-9,
            "I_2,11 should peak past the left edge, got {}",
            m.phi_max
        );
    }

    #[test]
    fn phi_feasibility_bisection_agrees_with_corner() {
        let c = ctx();
        let p = row(1).params;
        for i in [9usize, 13, 16, 20, 21] {
            let dom = i2_domain(i, &p).unwrap();
            let spec = i2_spec(i).unwrap();
            let analytic = phi_low(&dom, spec.divisor);
            let numeric = c.i2_phi_low_bisect(i, &p, 0.001).unwrap();
            assert!(
                (numeric - analytic).abs() <= 0.002,
                "I_2,{i}: bisect {numeric} vs corner {analytic}"
            );
        }
    }

    #[test]
    fn psi1_diagonal_row_vanishes() {
        let c = ctx();
        let v = c.psi1(3.0, 3.0).unwrap();
        assert!(v.abs() < 1e-12, "Psi_1(3,3) = {v}");
    }

    #[test]
    fn psi1_rejects_bad_parameters() {
        let c = ctx();
        assert!(c.psi1(1.5, 3.5).is_err());
        assert!(c.psi1(2.9, 3.05).is_err()); // s' - s'/s < 2
    }

    #[test]
    fn i1_max_at_left_edge_for_row_five() {
        let c = ctx();
        let m = c.i1_max(2.6, 3.58).unwrap();
        assert!((m.phi_max - 2.0).abs() < 1e-9, "phi_max = {}", m.phi_max);
        assert!(m.value > 0.0);
    }
}
