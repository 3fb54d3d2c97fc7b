//! Diffusion-coefficient handling and the space-transform pair (H, K).
//!
//! For a coefficient sigma that is nonzero on an open component (a, b) of its
//! support, H(t, x) = integral from the anchor c to x of dz / sigma(t, z) maps
//! the component onto an interval, and K(t, .) is its inverse in the space
//! variable. The transform reduces a multiplicative-noise equation to an
//! additive-noise one; this module builds the pair numerically (with optional
//! closed-form overrides), decomposes the support of a coefficient into
//! components, and probes integrability/regularity conditions near the
//! component endpoints.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad;
use crate::rootfind;

/// A scalar field on (t, x).
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

fn field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> FieldFn {
    Arc::new(f)
}

/// Diffusion/drift coefficient with whatever derivatives are available.
#[derive(Clone)]
pub struct Coefficient {
    pub name: String,
    pub sigma: FieldFn,
    pub dx_sigma: Option<FieldFn>,
    pub dx2_sigma: Option<FieldFn>,
    pub dt_sigma: Option<FieldFn>,
    pub beta: Option<FieldFn>,
    pub dx_beta: Option<FieldFn>,
    pub alpha: Option<FieldFn>,
    /// True when sigma does not depend on t.
    pub autonomous: bool,
}

impl Coefficient {
    pub fn from_sigma(name: &str, sigma: FieldFn, autonomous: bool) -> Coefficient {
        Coefficient {
            name: name.to_string(),
            sigma,
            dx_sigma: None,
            dx2_sigma: None,
            dt_sigma: None,
            beta: None,
            dx_beta: None,
            alpha: None,
            autonomous,
        }
    }

    /// Named built-in diffusion coefficients.
    ///
    /// - `linear`: sigma = x
    /// - `sqrt1px2`: sigma = sqrt(1 + x^2)
    /// - `abs_pow:a`: sigma = |x|^a (parameter a > 0)
    /// - `sin_pi`: sigma = sin(pi x)
    pub fn builtin(name: &str) -> Result<Coefficient> {
        let mut c = match name {
            "linear" => {
                let mut c = Coefficient::from_sigma("linear", field(|_, x| x), true);
                c.dx_sigma = Some(field(|_, _| 1.0));
                c.dx2_sigma = Some(field(|_, _| 0.0));
                c
            }
            "sqrt1px2" => {
                let mut c = Coefficient::from_sigma(
                    "sqrt1px2",
                    field(|_, x: f64| (1.0 + x * x).sqrt()),
                    true,
                );
                c.dx_sigma = Some(field(|_, x: f64| x / (1.0 + x * x).sqrt()));
                c.dx2_sigma = Some(field(|_, x: f64| (1.0 + x * x).powf(-1.5)));
                c
            }
            "sin_pi" => {
                use std::f64::consts::PI;
                let mut c =
                    Coefficient::from_sigma("sin_pi", field(|_, x: f64| (PI * x).sin()), true);
                c.dx_sigma = Some(field(|_, x: f64| PI * (PI * x).cos()));
                c.dx2_sigma = Some(field(|_, x: f64| -PI * PI * (PI * x).sin()));
                c
            }
            _ => {
                if let Some(rest) = name.strip_prefix("abs_pow:") {
                    let a: f64 = rest
                        .parse()
                        .map_err(|_| Error::BadParameter(format!("bad abs_pow exponent '{rest}'")))?;
                    if !(a > 0.0) {
                        return Err(Error::BadParameter(format!(
                            "abs_pow exponent must be positive, got {a}"
                        )));
                    }
                    let mut c = Coefficient::from_sigma(
                        &format!("abs_pow:{a}"),
                        field(move |_, x: f64| x.abs().powf(a)),
                        true,
                    );
                    c.dx_sigma = Some(field(move |_, x: f64| {
                        if x == 0.0 {
                            0.0
                        } else {
                            a * x.abs().powf(a - 1.0) * x.signum()
                        }
                    }));
                    c
                } else {
                    return Err(Error::BadParameter(format!(
                        "unknown coefficient '{name}' (expected linear, sqrt1px2, abs_pow:a, sin_pi, or an expression)"
                    )));
                }
            }
        };
        c.dt_sigma = Some(field(|_, _| 0.0));
        Ok(c)
    }

    /// Parse a diffusion coefficient from an expression in `t` and `x`;
    /// derivatives up to third order in x are produced symbolically.
    pub fn from_expr(src: &str) -> Result<Coefficient> {
        let e = Expr::parse(src)?;
        let dx = e.diff(true);
        let dx2 = dx.diff(true);
        let dt = e.diff(false);
        let autonomous = !e.depends_on_t();
        let sigma = {
            let e = e.clone();
            field(move |t, x| e.eval(t, x))
        };
        let mut c = Coefficient::from_sigma(src, sigma, autonomous);
        c.dx_sigma = Some({
            let dx = dx.clone();
            field(move |t, x| dx.eval(t, x))
        });
        c.dx2_sigma = Some(field(move |t, x| dx2.eval(t, x)));
        c.dt_sigma = Some(field(move |t, x| dt.eval(t, x)));
        Ok(c)
    }

    /// Resolve a name: built-in keyword first, else expression.
    pub fn resolve(name: &str) -> Result<Coefficient> {
        match Coefficient::builtin(name) {
            Ok(c) => Ok(c),
            Err(Error::BadParameter(_)) if !name.contains(':') => Coefficient::from_expr(name),
            Err(e) => Err(e),
        }
    }

    pub fn with_beta(mut self, beta: FieldFn, dx_beta: Option<FieldFn>) -> Coefficient {
        self.beta = Some(beta);
        self.dx_beta = dx_beta;
        self
    }

    pub fn with_alpha(mut self, alpha: FieldFn) -> Coefficient {
        self.alpha = Some(alpha);
        self
    }

    pub fn sigma(&self, t: f64, x: f64) -> f64 {
        (self.sigma)(t, x)
    }

    /// Check every supplied derivative against central finite differences at
    /// the given probe points; relative tolerance 1e-6.
    pub fn validate_derivatives(&self, probes: &[(f64, f64)]) -> Result<()> {
        for &(t, x) in probes {
            let hx = 1e-6 * (1.0 + x.abs());
            if let Some(dx) = &self.dx_sigma {
                let f = (self.sigma(t, x + hx) - self.sigma(t, x - hx)) / (2.0 * hx);
                let got = dx(t, x);
                if (got - f).abs() > 1e-4 * (1.0 + f.abs()) {
                    return Err(Error::BadParameter(format!(
                        "dx_sigma mismatch at (t={t}, x={x}): analytic {got}, finite-difference {f}"
                    )));
                }
            }
            if let Some(dt) = &self.dt_sigma {
                let ht = 1e-6 * (1.0 + t.abs());
                let tm = (t - ht).max(0.0);
                let f = (self.sigma(t + ht, x) - self.sigma(tm, x)) / (t + ht - tm);
                let got = dt(t, x);
                if (got - f).abs() > 1e-4 * (1.0 + f.abs()) {
                    return Err(Error::BadParameter(format!(
                        "dt_sigma mismatch at (t={t}, x={x}): analytic {got}, finite-difference {f}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One maximal open interval on which sigma is nonzero (at every sampled t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportComponent {
    pub lower: f64,
    pub upper: f64,
    /// The component reached the edge of the scan window on this side, so the
    /// true endpoint may lie beyond it (possibly at infinity).
    pub lower_open_window: bool,
    pub upper_open_window: bool,
    /// Anchor point c inside the component from which H integrates.
    pub anchor: f64,
    pub index: usize,
}

impl SupportComponent {
    pub fn whole_line(window: (f64, f64)) -> SupportComponent {
        SupportComponent {
            lower: window.0,
            upper: window.1,
            lower_open_window: true,
            upper_open_window: true,
            anchor: 0.0,
            index: 0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
            || (self.lower_open_window && x <= self.lower)
            || (self.upper_open_window && x >= self.upper)
    }
}

fn anchor_for(lower: f64, upper: f64, lo_open: bool, up_open: bool) -> f64 {
    match (lo_open, up_open) {
        (true, true) => {
            if lower < 0.0 && upper > 0.0 {
                0.0
            } else {
                0.5 * (lower + upper)
            }
        }
        (false, true) => lower + 0.5 * (upper - lower).min(2.0),
        (true, false) => upper - 0.5 * (upper - lower).min(2.0),
        (false, false) => 0.5 * (lower + upper),
    }
}

/// Decompose the support of `sigma(t, .)` over a scan window into maximal
/// nonzero components. The zero set is sampled at several times and must not
/// move with t (the transform requires a time-independent zero set).
pub fn decompose_support(
    coeff: &Coefficient,
    window: (f64, f64),
    zero_tol: f64,
) -> Result<Vec<SupportComponent>> {
    let (lo, hi) = window;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::BadParameter(format!("bad scan window ({lo}, {hi})")));
    }
    if !(zero_tol > 0.0) {
        return Err(Error::BadParameter(format!("zero_tol must be positive, got {zero_tol}")));
    }
    const N: usize = 4096;
    let times: &[f64] = if coeff.autonomous {
        &[0.0]
    } else {
        &[0.0, 0.25, 0.5, 0.75, 1.0]
    };
    let dx = (hi - lo) / N as f64;
    // nonzero mask per sampled time
    let mut masks: Vec<Vec<bool>> = Vec::new();
    for &t in times {
        let mask: Vec<bool> = (0..=N)
            .map(|i| coeff.sigma(t, lo + i as f64 * dx).abs() > zero_tol)
            .collect();
        masks.push(mask);
    }
    // Zero-set must be time independent: masks may differ only within
    // a couple of lattice cells of a boundary.
    let reference = &masks[0];
    for (mi, mask) in masks.iter().enumerate().skip(1) {
        for i in 0..=N {
            if mask[i] != reference[i] {
                let near_boundary = (i.saturating_sub(2)..=(i + 2).min(N))
                    .any(|j| j > 0 && reference[j] != reference[j - 1]);
                if !near_boundary {
                    return Err(Error::Support(format!(
                        "zero set of '{}' moves with t near x = {:.6} (t = {})",
                        coeff.name,
                        lo + i as f64 * dx,
                        times[mi]
                    )));
                }
            }
        }
    }
    // min over sampled times of |sigma|
    let strength = |x: f64| -> f64 {
        times
            .iter()
            .map(|&t| coeff.sigma(t, x).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let combined: Vec<bool> = (0..=N).map(|i| strength(lo + i as f64 * dx) > zero_tol).collect();

    let mut comps = Vec::new();
    let mut i = 0;
    while i <= N {
        if !combined[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i <= N && combined[i] {
            i += 1;
        }
        let end = i - 1; // inclusive
        let lower_open = start == 0;
        let upper_open = end == N;
        // refine boundary locations by bisection on |sigma| - zero_tol
        // bisect toward where sigma actually vanishes (not the zero_tol
        // level set), so integrability probes see the true singularity
        let mut a = lo + start as f64 * dx;
        if !lower_open {
            let mut bad = a - dx;
            for _ in 0..100 {
                let mid = 0.5 * (bad + a);
                if mid == a || mid == bad {
                    break;
                }
                if strength(mid) > 0.0 {
                    a = mid;
                } else {
                    bad = mid;
                }
            }
        }
        let mut b = lo + end as f64 * dx;
        if !upper_open {
            let mut bad = b + dx;
            for _ in 0..100 {
                let mid = 0.5 * (b + bad);
                if mid == b || mid == bad {
                    break;
                }
                if strength(mid) > 0.0 {
                    b = mid;
                } else {
                    bad = mid;
                }
            }
        }
        comps.push(SupportComponent {
            lower: a,
            upper: b,
            lower_open_window: lower_open,
            upper_open_window: upper_open,
            anchor: anchor_for(a, b, lower_open, upper_open),
            index: comps.len(),
        });
    }
    if comps.is_empty() {
        return Err(Error::Support(format!(
            "'{}' vanishes identically on the scan window",
            coeff.name
        )));
    }
    Ok(comps)
}

/// The forward transform H(t, x) = int_c^x dz / sigma(t, z) on one support
/// component, its time derivative, and the space inverse K(t, y).
#[derive(Clone)]
pub struct HKPair {
    pub component: SupportComponent,
    coeff: Coefficient,
    closed_h: Option<FieldFn>,
    closed_k: Option<FieldFn>,
    closed_dt_h: Option<FieldFn>,
    /// Sign of sigma on the component (H is increasing iff positive).
    pub orientation: f64,
}

impl HKPair {
    pub fn numeric(component: SupportComponent, coeff: &Coefficient) -> Result<HKPair> {
        let s = coeff.sigma(0.0, component.anchor);
        if s == 0.0 || !s.is_finite() {
            return Err(Error::Support(format!(
                "sigma vanishes at the anchor {} of component {}",
                component.anchor, component.index
            )));
        }
        Ok(HKPair {
            component,
            coeff: coeff.clone(),
            closed_h: None,
            closed_k: None,
            closed_dt_h: None,
            orientation: s.signum(),
        })
    }

    /// Install closed-form overrides (used when the transform is known
    /// analytically; the numeric route stays available for cross-checks).
    pub fn with_closed_forms(
        mut self,
        h: FieldFn,
        k: FieldFn,
        dt_h: Option<FieldFn>,
    ) -> HKPair {
        self.closed_h = Some(h);
        self.closed_k = Some(k);
        self.closed_dt_h = dt_h;
        self
    }

    pub fn has_closed_forms(&self) -> bool {
        self.closed_h.is_some()
    }

    fn check_inside(&self, x: f64) -> Result<()> {
        if !self.component.contains(x) {
            return Err(Error::OutsideRange { y: x });
        }
        Ok(())
    }

    /// H(t, x), by closed form or adaptive quadrature of 1/sigma.
    pub fn h(&self, t: f64, x: f64) -> Result<f64> {
        if let Some(h) = &self.closed_h {
            return Ok(h(t, x));
        }
        self.check_inside(x)?;
        let coeff = self.coeff.clone();
        quad::integrate(
            &move |z| 1.0 / coeff.sigma(t, z),
            self.component.anchor,
            x,
            1e-11,
        )
    }

    /// Numeric H regardless of closed-form overrides (for cross-checks).
    pub fn h_numeric(&self, t: f64, x: f64) -> Result<f64> {
        self.check_inside(x)?;
        let coeff = self.coeff.clone();
        quad::integrate(
            &move |z| 1.0 / coeff.sigma(t, z),
            self.component.anchor,
            x,
            1e-11,
        )
    }

    /// Partial-t of H: - int_c^x dt_sigma / sigma^2 dz.
    pub fn dt_h(&self, t: f64, x: f64) -> Result<f64> {
        if let Some(f) = &self.closed_dt_h {
            return Ok(f(t, x));
        }
        if self.coeff.autonomous {
            return Ok(0.0);
        }
        let dts = self
            .coeff
            .dt_sigma
            .clone()
            .ok_or_else(|| Error::BadParameter("dt_sigma unavailable".into()))?;
        self.check_inside(x)?;
        let coeff = self.coeff.clone();
        quad::integrate(
            &move |z| {
                let s = coeff.sigma(t, z);
                -dts(t, z) / (s * s)
            },
            self.component.anchor,
            x,
            1e-11,
        )
    }

    /// K(t, y): the x with H(t, x) = y, found by bracketed root finding.
    /// `guess` warm-starts the bracket (pass the previous solution when
    /// marching along a path).
    pub fn k_with_guess(&self, t: f64, y: f64, guess: f64) -> Result<f64> {
        if let Some(k) = &self.closed_k {
            return Ok(k(t, y));
        }
        let sgn = self.orientation;
        let f = |x: f64| sgn * (self.h(t, x).unwrap_or(f64::NAN) - y);
        let lo = if self.component.lower_open_window {
            f64::NEG_INFINITY
        } else {
            self.component.lower
        };
        let hi = if self.component.upper_open_window {
            f64::INFINITY
        } else {
            self.component.upper
        };
        let g = if self.component.contains(guess) {
            guess
        } else {
            self.component.anchor
        };
        rootfind::monotone_solve(&f, g, lo, hi, 1e-12)
            .map_err(|_| Error::OutsideRange { y })
    }

    pub fn k(&self, t: f64, y: f64) -> Result<f64> {
        self.k_with_guess(t, y, self.component.anchor)
    }

    /// Consistency checks: round trip K(t, H(t, x)) = x, the governing
    /// equation d/dy K = sigma(t, K), and the anchor normalization H(t, c) = 0.
    pub fn verify(&self, times: &[f64], xs: &[f64]) -> Result<()> {
        for &t in times {
            let h0 = self.h(t, self.component.anchor)?;
            if h0.abs() > 1e-9 {
                return Err(Error::BadParameter(format!(
                    "H(t, anchor) = {h0}, expected 0"
                )));
            }
            for &x in xs {
                if !self.component.contains(x) {
                    continue;
                }
                let y = self.h(t, x)?;
                let back = self.k_with_guess(t, y, x)?;
                if (back - x).abs() > 1e-8 * (1.0 + x.abs()) {
                    return Err(Error::BadParameter(format!(
                        "round trip K(H(x)) = {back} != x = {x} at t = {t}"
                    )));
                }
                // d/dy K(t, y) should equal sigma(t, K)
                let hstep = 1e-5 * (1.0 + y.abs());
                let kp = self.k_with_guess(t, y + hstep, back)?;
                let km = self.k_with_guess(t, y - hstep, back)?;
                let slope = (kp - km) / (2.0 * hstep);
                let sig = self.coeff.sigma(t, back);
                if (slope - sig).abs() > 1e-5 * (1.0 + sig.abs()) {
                    return Err(Error::BadParameter(format!(
                        "dK/dy = {slope} but sigma(K) = {sig} at (t={t}, x={x})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Verdict of an endpoint-integrability probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

/// Probe whether int dz / |sigma(0, z)| diverges at a component endpoint
/// (the condition under which the transform maps the component onto the whole
/// line on that side). Geometric panels shrink toward a finite endpoint or
/// grow dyadically toward an unbounded one; divergence is declared when the
/// partial sums pass a cap with non-decaying panel contributions, convergence
/// when contributions decay geometrically with a small tail bound.
pub fn check_h2(pair: &HKPair, side: Side) -> Verdict {
    const CAP: f64 = 1e3;
    const TAIL: f64 = 1e-3;
    let coeff = pair.coeff.clone();
    let f = move |z: f64| 1.0 / coeff.sigma(0.0, z).abs();
    let comp = pair.component;
    let (endpoint, unbounded) = match side {
        Side::Lower => (comp.lower, comp.lower_open_window),
        Side::Upper => (comp.upper, comp.upper_open_window),
    };
    let panels: Vec<f64> = if !unbounded {
        quad::geometric_panels(&f, comp.anchor, endpoint, 48)
    } else {
        // dyadic panels toward +/- infinity starting from the anchor side
        let dir = match side {
            Side::Lower => -1.0,
            Side::Upper => 1.0,
        };
        let mut start = comp.anchor.abs().max(1.0);
        let mut out = Vec::new();
        for _ in 0..48 {
            let a = dir * start;
            let b = dir * start * 2.0;
            let v = match quad::integrate(&f, a.min(b), a.max(b), 1e-9) {
                Ok(v) => v,
                Err(_) => return Verdict::Diverges,
            };
            out.push(v);
            start *= 2.0;
        }
        out
    };
    if panels.iter().any(|p| !p.is_finite()) {
        return Verdict::Diverges;
    }
    let partial: f64 = panels.iter().sum();
    let n = panels.len();
    let last = &panels[n - 8..];
    // geometric decay over the last stretch => convergent with bounded tail
    let decaying = last.windows(2).all(|w| w[1] <= 0.8 * w[0] + 1e-300);
    let tail_bound = last[last.len() - 1] / (1.0 - 0.8);
    if decaying && tail_bound < TAIL {
        return Verdict::Converges;
    }
    // non-decaying contributions deep into the mesh, or a blown cap
    let flat = last.windows(2).all(|w| w[1] >= 0.9 * w[0]);
    if partial > CAP || (flat && last[0] > 1e-6) {
        return Verdict::Diverges;
    }
    Verdict::Inconclusive
}

/// Advisory regularity report: numeric probes of the standing assumptions on
/// the coefficients (time-regularity of log sigma, drift bounds, Hoelder
/// exponent of sigma near a vanishing endpoint).
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// sup over a probe lattice of |dt sigma / sigma| (0 for autonomous sigma).
    pub dt_log_sigma_sup: f64,
    /// sup |beta| over the lattice, when a drift is present.
    pub beta_sup: Option<f64>,
    /// crude Lipschitz constant of beta in x over the lattice.
    pub beta_lipschitz: Option<f64>,
    /// estimated Hoelder exponent of sigma in x near a vanishing finite
    /// endpoint (log-log fit), when one exists.
    pub sigma_holder_exponent: Option<f64>,
    pub notes: Vec<String>,
}

pub fn check_conditions(
    coeff: &Coefficient,
    components: &[SupportComponent],
) -> ConditionReport {
    let mut notes = Vec::new();
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let comp = components[0];
    let span = comp.upper - comp.lower;
    let xs: Vec<f64> = (0..64)
        .map(|i| comp.lower + span * (i as f64 + 0.5) / 64.0)
        .collect();

    let dt_log_sigma_sup = if coeff.autonomous {
        0.0
    } else if let Some(dts) = &coeff.dt_sigma {
        let mut sup: f64 = 0.0;
        for &t in &times {
            for &x in &xs {
                let s = coeff.sigma(t, x);
                if s.abs() > 1e-12 {
                    sup = sup.max((dts(t, x) / s).abs());
                }
            }
        }
        sup
    } else {
        notes.push("dt_sigma unavailable; time-regularity probe skipped".into());
        f64::NAN
    };

    let (beta_sup, beta_lipschitz) = if let Some(beta) = &coeff.beta {
        let mut sup: f64 = 0.0;
        let mut lip: f64 = 0.0;
        for &t in &times {
            for w in xs.windows(2) {
                let b0 = beta(t, w[0]);
                let b1 = beta(t, w[1]);
                sup = sup.max(b0.abs()).max(b1.abs());
                lip = lip.max((b1 - b0).abs() / (w[1] - w[0]));
            }
        }
        (Some(sup), Some(lip))
    } else {
        notes.push("no drift supplied; drift bounds trivially satisfied".into());
        (None, None)
    };

    // Hoelder exponent of sigma near a finite endpoint where it vanishes.
    let mut sigma_holder_exponent = None;
    for c in components {
        let endpoint = if !c.lower_open_window {
            Some(c.lower)
        } else if !c.upper_open_window {
            Some(c.upper)
        } else {
            None
        };
        if let Some(a) = endpoint {
            if coeff.sigma(0.0, a).abs() < 1e-8 {
                let dir = if a <= c.anchor { 1.0 } else { -1.0 };
                let mut pts = Vec::new();
                for k in 4..24 {
                    let d = 2.0_f64.powi(-k);
                    let v = (coeff.sigma(0.0, a + dir * d) - coeff.sigma(0.0, a)).abs();
                    if v > 0.0 {
                        pts.push((d.ln(), v.ln()));
                    }
                }
                if pts.len() >= 6 {
                    let n = pts.len() as f64;
                    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
                    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
                    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
                    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                    if sxx > 0.0 {
                        sigma_holder_exponent = Some(sxy / sxx);
                        break;
                    }
                }
            }
        }
    }

    ConditionReport {
        dt_log_sigma_sup,
        beta_sup,
        beta_lipschitz,
        sigma_holder_exponent,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_transform_is_log_exp() {
        let coeff = Coefficient::builtin("linear").unwrap();
        let comps = decompose_support(&coeff, (-8.0, 8.0), 1e-10).unwrap();
        assert_eq!(comps.len(), 2);
        let pos = comps.iter().find(|c| c.lower >= 0.0).unwrap();
        assert!(pos.lower.abs() < 1e-8);
        let pair = HKPair::numeric(*pos, &coeff).unwrap();
        // anchor = lower + 1 = 1, so H(x) = ln x, K(y) = e^y
        assert!((pair.component.anchor - 1.0).abs() < 1e-8);
        assert!((pair.h(0.0, 2.0).unwrap() - 2.0_f64.ln()).abs() < 1e-9);
        assert!((pair.k(0.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-7);
        pair.verify(&[0.0, 0.5], &[0.5, 1.0, 2.0, 4.0]).unwrap();
    }

    #[test]
    fn sqrt1px2_transform_is_asinh_sinh() {
        let coeff = Coefficient::builtin("sqrt1px2").unwrap();
        let comps = decompose_support(&coeff, (-8.0, 8.0), 1e-10).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].anchor, 0.0);
        let pair = HKPair::numeric(comps[0], &coeff).unwrap();
        for x in [-2.0, -0.3, 0.7, 3.0] {
            assert!(
                (pair.h(0.0, x).unwrap() - x.asinh()).abs() < 1e-9,
                "H({x})"
            );
        }
        for y in [-1.5, 0.2, 2.0] {
            assert!((pair.k(0.0, y).unwrap() - y.sinh()).abs() < 1e-7, "K({y})");
        }
        pair.verify(&[0.0], &[-3.0, -1.0, 0.5, 2.5]).unwrap();
    }

    #[test]
    fn time_dependent_coefficient() {
        // sigma(t, x) = (1 + t) x on x > 0: H(t, x) = ln(x) / (1 + t)
        let coeff = Coefficient::from_expr("(1 + t) * x").unwrap();
        assert!(!coeff.autonomous);
        coeff
            .validate_derivatives(&[(0.1, 0.5), (0.6, 2.0), (0.9, 4.0)])
            .unwrap();
        let comps = decompose_support(&coeff, (-8.0, 8.0), 1e-10).unwrap();
        let pos = *comps.iter().find(|c| c.lower >= 0.0).unwrap();
        let pair = HKPair::numeric(pos, &coeff).unwrap();
        let t = 1.0;
        let got = pair.h(t, 2.0).unwrap();
        let want = 2.0_f64.ln() / (1.0 + t);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        // dt H(t, x) = -ln(x) / (1+t)^2
        let dt = pair.dt_h(0.5, 2.0).unwrap();
        let want_dt = -2.0_f64.ln() / (1.5 * 1.5);
        assert!((dt - want_dt).abs() < 1e-8, "{dt} vs {want_dt}");
    }

    #[test]
    fn sin_pi_components() {
        let coeff = Coefficient::builtin("sin_pi").unwrap();
        let comps = decompose_support(&coeff, (-0.5, 3.5), 1e-9).unwrap();
        // zeros at 0, 1, 2, 3 -> interior components (0,1), (1,2), (2,3)
        let interior: Vec<_> = comps
            .iter()
            .filter(|c| !c.lower_open_window && !c.upper_open_window)
            .collect();
        assert_eq!(interior.len(), 3);
        for (k, c) in interior.iter().enumerate() {
            assert!((c.lower - k as f64).abs() < 1e-4, "lower of comp {k}");
            assert!((c.upper - (k as f64 + 1.0)).abs() < 1e-4, "upper of comp {k}");
            assert!((c.anchor - (k as f64 + 0.5)).abs() < 1e-4);
        }
    }

    #[test]
    fn moving_zero_set_rejected() {
        // zero at x = t moves with time
        let coeff = Coefficient::from_expr("x - t").unwrap();
        let err = decompose_support(&coeff, (-2.0, 2.0), 1e-10).unwrap_err();
        assert!(matches!(err, Error::Support(_)), "{err}");
    }

    #[test]
    fn endpoint_integrability_probe() {
        // |x|^0.5 near 0: integral of x^{-1/2} converges
        let coeff = Coefficient::builtin("abs_pow:0.5").unwrap();
        let comps = decompose_support(&coeff, (-4.0, 4.0), 1e-10).unwrap();
        let pos = *comps.iter().find(|c| c.lower >= -1e-6 && c.upper > 1.0).unwrap();
        let pair = HKPair::numeric(pos, &coeff).unwrap();
        assert_eq!(check_h2(&pair, Side::Lower), Verdict::Converges);

        // sigma = x near 0: integral of 1/x diverges
        let coeff = Coefficient::builtin("linear").unwrap();
        let comps = decompose_support(&coeff, (-4.0, 4.0), 1e-10).unwrap();
        let pos = *comps.iter().find(|c| c.lower >= -1e-6 && c.upper > 1.0).unwrap();
        let pair = HKPair::numeric(pos, &coeff).unwrap();
        assert_eq!(check_h2(&pair, Side::Lower), Verdict::Diverges);
        // and toward +infinity 1/x also diverges
        assert_eq!(check_h2(&pair, Side::Upper), Verdict::Diverges);

        // sigma = 1 + x^2 toward infinity: 1/(1+x^2) integrable
        let coeff = Coefficient::from_expr("1 + x^2").unwrap();
        let comps = decompose_support(&coeff, (-4.0, 4.0), 1e-10).unwrap();
        let pair = HKPair::numeric(comps[0], &coeff).unwrap();
        assert_eq!(check_h2(&pair, Side::Upper), Verdict::Converges);
    }

    #[test]
    fn holder_exponent_probe() {
        let coeff = Coefficient::builtin("abs_pow:0.8").unwrap();
        let comps = decompose_support(&coeff, (-4.0, 4.0), 1e-10).unwrap();
        let report = check_conditions(&coeff, &comps);
        let alpha = report.sigma_holder_exponent.expect("exponent estimated");
        assert!((alpha - 0.8).abs() < 0.05, "estimated exponent {alpha}");
    }

    #[test]
    fn autonomous_report() {
        let coeff = Coefficient::builtin("sqrt1px2").unwrap();
        let comps = decompose_support(&coeff, (-4.0, 4.0), 1e-10).unwrap();
        let report = check_conditions(&coeff, &comps);
        assert_eq!(report.dt_log_sigma_sup, 0.0);
        assert!(report.beta_sup.is_none());
    }

    #[test]
    fn outside_component_errors() {
        let coeff = Coefficient::builtin("linear").unwrap();
        let comps = decompose_support(&coeff, (-4.0, 4.0), 1e-10).unwrap();
        let pos = *comps.iter().find(|c| c.lower >= -1e-6).unwrap();
        let pair = HKPair::numeric(pos, &coeff).unwrap();
        assert!(matches!(
            pair.h(0.0, -1.0),
            Err(Error::OutsideRange { .. })
        ));
    }

    #[test]
    fn closed_form_override_and_cross_check() {
        let coeff = Coefficient::builtin("linear").unwrap();
        let comps = decompose_support(&coeff, (-8.0, 8.0), 1e-10).unwrap();
        let pos = *comps.iter().find(|c| c.lower >= -1e-6).unwrap();
        let pair = HKPair::numeric(pos, &coeff)
            .unwrap()
            .with_closed_forms(
                Arc::new(|_, x: f64| x.ln()),
                Arc::new(|_, y: f64| y.exp()),
                Some(Arc::new(|_, _| 0.0)),
            );
        for x in [0.3, 1.7, 5.0] {
            let closed = pair.h(0.0, x).unwrap();
            let numeric = pair.h_numeric(0.0, x).unwrap();
            assert!((closed - numeric).abs() < 1e-8, "at {x}");
        }
        assert!((pair.k(0.0, 2.0).unwrap() - 2.0_f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn resolve_dispatch() {
        assert!(Coefficient::resolve("linear").is_ok());
        assert!(Coefficient::resolve("abs_pow:0.5").is_ok());
        assert!(Coefficient::resolve("sqrt(1 + x^2)").is_ok());
        assert!(Coefficient::resolve("abs_pow:bad").is_err());
        assert!(Coefficient::resolve("nonsense(").is_err());
    }
}
