//! Residual checkers for the change-of-variable and bracket identities.
//!
//! Each checker assembles every constituent functional of an identity at the
//! same regularization parameter eps ("matching-eps discipline") and returns
//! the residual as a path; smallness of the sup over interior nodes across
//! the eps-ladder is the test. The left-hand increment F(. , xi_t) - F(., xi_0)
//! is itself evaluated as the regularized increment
//! (1/eps) int (F_{s+eps} - F_s) ds, which telescopes exactly against the
//! averaged symmetric estimator in the structural cases.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::SamplePath;
use crate::reginteg::{
    forward_integral_eps, ito_sum_path, symmetric_integral_avg_eps, trapezoid_sum_path,
};
use crate::regvar::{n_covariation_path, weighted_covariation_path, EpsLadder};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Evaluator of a field over (s, x).
pub type TimeFieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Evaluator of F(v_vec, x).
pub type VecFieldFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

pub fn time_field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> TimeFieldFn {
    Arc::new(f)
}

/// F(v_vec, x) with the analytic derivatives the change-of-variable formula
/// needs: one per bounded-variation component, plus first and third
/// x-derivatives.
#[derive(Clone)]
pub struct ItoFunction {
    pub f: VecFieldFn,
    pub dv: Vec<VecFieldFn>,
    pub dx: VecFieldFn,
    pub dx3: VecFieldFn,
}

impl ItoFunction {
    /// Autonomous scalar F(x) with derivatives F', F'''.
    pub fn autonomous(f: ScalarFn, dx: ScalarFn, dx3: ScalarFn) -> ItoFunction {
        ItoFunction {
            f: Arc::new(move |_, x| f(x)),
            dv: Vec::new(),
            dx: Arc::new(move |_, x| dx(x)),
            dx3: Arc::new(move |_, x| dx3(x)),
        }
    }

    /// Check dx and each dv against central finite differences at the probe
    /// points; relative tolerance 1e-6 on well-scaled inputs.
    pub fn validate(&self, probes: &[(Vec<f64>, f64)]) -> Result<()> {
        for (v, x) in probes {
            let h = 1e-6 * (1.0 + x.abs());
            let fd = ((self.f)(v, x + h) - (self.f)(v, x - h)) / (2.0 * h);
            let got = (self.dx)(v, *x);
            if (got - fd).abs() > 1e-4 * (1.0 + fd.abs()) {
                return Err(Error::BadParameter(format!(
                    "dx evaluator mismatch at x = {x}: analytic {got}, finite-difference {fd}"
                )));
            }
            for (i, dv) in self.dv.iter().enumerate() {
                let mut vp = v.clone();
                let mut vm = v.clone();
                let hv = 1e-6 * (1.0 + v[i].abs());
                vp[i] += hv;
                vm[i] -= hv;
                let fd = ((self.f)(&vp, *x) - (self.f)(&vm, *x)) / (2.0 * hv);
                let got = dv(v, *x);
                if (got - fd).abs() > 1e-4 * (1.0 + fd.abs()) {
                    return Err(Error::BadParameter(format!(
                        "dv[{i}] evaluator mismatch: analytic {got}, finite-difference {fd}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parametrized field X(t, x) = f(x) + sum_i int_0^t a^i(s, x) dN^i_s
/// + sum_j int_0^t b^j(s, x) dV^j_s with analytically supplied x-derivatives
/// (orders 1 and 3) of every evaluator.
pub struct ItoField {
    pub f: ScalarFn,
    pub df: ScalarFn,
    pub d3f: ScalarFn,
    pub a_coeffs: Vec<(TimeFieldFn, TimeFieldFn, TimeFieldFn)>, // (a, dx a, dx3 a)
    pub b_coeffs: Vec<(TimeFieldFn, TimeFieldFn, TimeFieldFn)>,
    pub martingale_paths: Vec<SamplePath>,
    pub bv_paths: Vec<SamplePath>,
}

impl ItoField {
    fn check(&self) -> Result<()> {
        if self.a_coeffs.len() != self.martingale_paths.len()
            || self.b_coeffs.len() != self.bv_paths.len()
        {
            return Err(Error::BadInput(
                "field coefficient/path counts disagree".into(),
            ));
        }
        let mut grids = self.martingale_paths.iter().chain(&self.bv_paths);
        if let Some(first) = grids.next() {
            for p in grids {
                first.same_grid(p)?;
            }
        }
        Ok(())
    }

    /// Evaluate the field and its x-derivatives at (t_i, x) by accumulating
    /// the defining left-point integral sums up to node i.
    /// `deriv` selects 0, 1 or 3.
    fn eval(&self, i: usize, x: f64, deriv: u8) -> f64 {
        let pick1 = |fns: &(TimeFieldFn, TimeFieldFn, TimeFieldFn), t: f64| match deriv {
            0 => fns.0(t, x),
            1 => fns.1(t, x),
            _ => fns.2(t, x),
        };
        let mut acc = match deriv {
            0 => (self.f)(x),
            1 => (self.df)(x),
            _ => (self.d3f)(x),
        };
        for (c, n) in self.a_coeffs.iter().zip(&self.martingale_paths) {
            let grid = n.grid();
            for j in 0..i {
                acc += pick1(c, grid.node(j)) * (n.values()[j + 1] - n.values()[j]);
            }
        }
        for (c, v) in self.b_coeffs.iter().zip(&self.bv_paths) {
            let grid = v.grid();
            for j in 0..i {
                acc += pick1(c, grid.node(j)) * (v.values()[j + 1] - v.values()[j]);
            }
        }
        acc
    }

    /// Check the supplied x-derivative evaluators against finite differences
    /// of the level-0 evaluators at the probe points.
    pub fn validate(&self, probes: &[(f64, f64)]) -> Result<()> {
        let check = |name: &str, f0: &TimeFieldFn, f1: &TimeFieldFn| -> Result<()> {
            for &(t, x) in probes {
                let h = 1e-6 * (1.0 + x.abs());
                let fd = (f0(t, x + h) - f0(t, x - h)) / (2.0 * h);
                let got = f1(t, x);
                if (got - fd).abs() > 1e-4 * (1.0 + fd.abs()) {
                    return Err(Error::BadParameter(format!(
                        "{name} x-derivative mismatch at (t={t}, x={x}): {got} vs {fd}"
                    )));
                }
            }
            Ok(())
        };
        let f = self.f.clone();
        let df = self.df.clone();
        check(
            "f",
            &time_field(move |_, x| f(x)),
            &time_field(move |_, x| df(x)),
        )?;
        for (i, c) in self.a_coeffs.iter().enumerate() {
            check(&format!("a[{i}]"), &c.0, &c.1)?;
        }
        for (i, c) in self.b_coeffs.iter().enumerate() {
            check(&format!("b[{i}]"), &c.0, &c.1)?;
        }
        Ok(())
    }
}

/// Sup of |residual| over the nodes with eps <= t <= 1 - eps.
pub fn interior_sup(path: &SamplePath, eps: f64) -> f64 {
    let grid = path.grid();
    path.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let t = grid.node(*i);
            t >= eps - 1e-15 && t <= 1.0 - eps + 1e-15
        })
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

/// Residual suprema per ladder point and replication.
pub struct ResidualReport {
    /// (eps, sup residual per replication)
    pub per_eps: Vec<(f64, Vec<f64>)>,
}

impl ResidualReport {
    pub fn new(ladder: &EpsLadder) -> ResidualReport {
        ResidualReport {
            per_eps: ladder.values().iter().map(|&e| (e, Vec::new())).collect(),
        }
    }

    /// Build from a per-(eps, replication) sup-residual function.
    pub fn build(
        ladder: &EpsLadder,
        replications: usize,
        f: impl Fn(f64, u64) -> Result<f64> + Sync,
    ) -> Result<ResidualReport> {
        let mut report = ResidualReport::new(ladder);
        for (k, &eps) in ladder.values().iter().enumerate() {
            for rep in 0..replications {
                let v = f(eps, rep as u64)?;
                if !v.is_finite() {
                    return Err(Error::BadInput(format!(
                        "non-finite residual at eps = {eps}, replication {rep}"
                    )));
                }
                report.per_eps[k].1.push(v);
            }
        }
        Ok(report)
    }

    pub fn medians(&self) -> Vec<(f64, f64)> {
        self.per_eps
            .iter()
            .map(|(e, v)| (*e, crate::regvar::median(v)))
            .collect()
    }

    pub fn quantiles(&self, q: f64) -> Vec<(f64, f64)> {
        self.per_eps
            .iter()
            .map(|(e, v)| (*e, crate::regvar::quantile(v, q)))
            .collect()
    }

    /// Number of increases of the median when moving from coarse to fine eps
    /// (ladder values are stored fine-to-coarse or coarse-to-fine as built;
    /// the check runs along decreasing eps).
    pub fn median_increases(&self) -> usize {
        let mut meds = self.medians();
        meds.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        meds.windows(2)
            .filter(|w| w[1].1 > w[0].1 + 1e-15)
            .count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "eps,replication,sup_residual")?;
        for (eps, sups) in &self.per_eps {
            for (rep, s) in sups.iter().enumerate() {
                writeln!(w, "{eps:.17e},{rep},{s:.17e}")?;
            }
        }
        Ok(())
    }
}

fn node_samples(
    xi: &SamplePath,
    f: impl Fn(f64, f64) -> f64,
    label: &str,
) -> SamplePath {
    let grid = xi.grid();
    let values = (0..grid.n_nodes())
        .map(|i| f(grid.node(i), xi.values()[i]))
        .collect();
    SamplePath::new(grid, values, label).expect("node samples finite")
}

/// Regularized increment (1/eps) int_0^t (P_{s+eps} - P_s) ds of a path.
fn reg_increment(p: &SamplePath, eps: f64) -> Result<SamplePath> {
    let ones = SamplePath::from_fn(p.grid(), "1", |_| 1.0)?;
    forward_integral_eps(&ones, p, eps)
}

/// Change-of-variable residual: regularized increment of F(V, xi) minus the
/// classical dV terms, the symmetric term in xi, and the cubic correction
/// -(1/12) int d3F d[xi,xi,xi], all at the same eps.
pub fn ito_residual_path(
    f: &ItoFunction,
    v_paths: &[&SamplePath],
    xi: &SamplePath,
    eps: f64,
) -> Result<SamplePath> {
    if f.dv.len() != v_paths.len() {
        return Err(Error::BadInput(format!(
            "{} dV derivatives supplied for {} bounded-variation paths",
            f.dv.len(),
            v_paths.len()
        )));
    }
    for v in v_paths {
        xi.same_grid(v)?;
    }
    let grid = xi.grid();
    let vvec = |i: usize| -> Vec<f64> { v_paths.iter().map(|p| p.values()[i]).collect() };
    let fpath = SamplePath::new(
        grid,
        (0..grid.n_nodes())
            .map(|i| (f.f)(&vvec(i), xi.values()[i]))
            .collect(),
        "F(V,xi)",
    )?;
    let mut residual = reg_increment(&fpath, eps)?;

    for (k, v) in v_paths.iter().enumerate() {
        let dvk = &f.dv[k];
        let integrand = SamplePath::new(
            grid,
            (0..grid.n_nodes())
                .map(|i| dvk(&vvec(i), xi.values()[i]))
                .collect(),
            "dF/dV",
        )?;
        let term = ito_sum_path(&integrand, v)?;
        residual = residual.add(&term.scale(-1.0, ""), "res")?;
    }

    let dxf = SamplePath::new(
        grid,
        (0..grid.n_nodes())
            .map(|i| (f.dx)(&vvec(i), xi.values()[i]))
            .collect(),
        "dF/dx",
    )?;
    let sym = symmetric_integral_avg_eps(&dxf, xi, eps)?;
    residual = residual.add(&sym.scale(-1.0, ""), "res")?;

    let d3: Vec<f64> = (0..grid.n_nodes())
        .map(|i| (f.dx3)(&vvec(i), xi.values()[i]))
        .collect();
    let cubic = weighted_covariation_path(Some(&d3), &[xi, xi, xi], eps)?;
    residual = residual.add(&cubic.scale(1.0 / 12.0, ""), "ito residual")?;
    Ok(residual)
}

pub fn ito_residual(
    f: &ItoFunction,
    v_paths: &[&SamplePath],
    xi: &SamplePath,
    ladder: &EpsLadder,
) -> Result<ResidualReport> {
    ResidualReport::build(ladder, 1, |eps, _| {
        Ok(interior_sup(&ito_residual_path(f, v_paths, xi, eps)?, eps))
    })
}

/// Composition residual: with X = int phi(s, xi) d-circ xi built at eps, the
/// outer integral int psi(s, xi) d-circ X (trapezoid sums against the
/// constructed path) minus int (psi phi)(s, xi) d-circ xi plus the
/// (1/4) int dpsi dphi d[xi,xi,xi] correction.
pub fn chain_rule_residual_path(
    psi: &(TimeFieldFn, TimeFieldFn),
    phi: &(TimeFieldFn, TimeFieldFn),
    xi: &SamplePath,
    eps: f64,
) -> Result<SamplePath> {
    let phin = node_samples(xi, |t, x| phi.0(t, x), "phi");
    let psin = node_samples(xi, |t, x| psi.0(t, x), "psi");
    let inner = symmetric_integral_avg_eps(&phin, xi, eps)?;
    let outer = trapezoid_sum_path(&psin, &inner)?;
    let prod = node_samples(xi, |t, x| psi.0(t, x) * phi.0(t, x), "psi*phi");
    let direct = symmetric_integral_avg_eps(&prod, xi, eps)?;
    let dd: Vec<f64> = {
        let grid = xi.grid();
        (0..grid.n_nodes())
            .map(|i| psi.1(grid.node(i), xi.values()[i]) * phi.1(grid.node(i), xi.values()[i]))
            .collect()
    };
    let cubic = weighted_covariation_path(Some(&dd), &[xi, xi, xi], eps)?;
    let mut residual = outer.add(&direct.scale(-1.0, ""), "res")?;
    residual = residual.add(&cubic.scale(0.25, ""), "chain rule residual")?;
    Ok(residual)
}

pub fn chain_rule_residual(
    psi: &(TimeFieldFn, TimeFieldFn),
    phi: &(TimeFieldFn, TimeFieldFn),
    xi: &SamplePath,
    ladder: &EpsLadder,
) -> Result<ResidualReport> {
    ResidualReport::build(ladder, 1, |eps, _| {
        Ok(interior_sup(
            &chain_rule_residual_path(psi, phi, xi, eps)?,
            eps,
        ))
    })
}

/// Field-expansion residual: regularized increment of X(., xi) minus the dN
/// and dV terms, the symmetric term with dx X(s, xi_s), the mixed bracket
/// terms (1/2) int dx a^i d[N^i, xi], and the cubic correction.
pub fn ito_wentzell_residual_path(
    field: &ItoField,
    xi: &SamplePath,
    eps: f64,
) -> Result<SamplePath> {
    field.check()?;
    for p in field.martingale_paths.iter().chain(&field.bv_paths) {
        xi.same_grid(p)?;
    }
    let grid = xi.grid();
    let n = grid.n_nodes();
    let diag = |deriv: u8| -> Vec<f64> {
        (0..n).map(|i| field.eval(i, xi.values()[i], deriv)).collect()
    };
    let xpath = SamplePath::new(grid, diag(0), "X(t,xi)")?;
    let mut residual = reg_increment(&xpath, eps)?;

    for (c, npath) in field.a_coeffs.iter().zip(&field.martingale_paths) {
        let a_nodes = node_samples(xi, |t, x| c.0(t, x), "a(s,xi)");
        let term = ito_sum_path(&a_nodes, npath)?;
        residual = residual.add(&term.scale(-1.0, ""), "res")?;
        // mixed bracket (1/2) int dx a d[N, xi]
        let dxa: Vec<f64> = (0..n)
            .map(|i| c.1(grid.node(i), xi.values()[i]))
            .collect();
        let mixed = weighted_covariation_path(Some(&dxa), &[npath, xi], eps)?;
        residual = residual.add(&mixed.scale(-0.5, ""), "res")?;
    }
    for (c, vpath) in field.b_coeffs.iter().zip(&field.bv_paths) {
        let b_nodes = node_samples(xi, |t, x| c.0(t, x), "b(s,xi)");
        let term = ito_sum_path(&b_nodes, vpath)?;
        residual = residual.add(&term.scale(-1.0, ""), "res")?;
    }

    let dx_diag = SamplePath::new(grid, diag(1), "dxX(t,xi)")?;
    let sym = symmetric_integral_avg_eps(&dx_diag, xi, eps)?;
    residual = residual.add(&sym.scale(-1.0, ""), "res")?;

    let d3_diag = diag(3);
    let cubic = weighted_covariation_path(Some(&d3_diag), &[xi, xi, xi], eps)?;
    residual = residual.add(&cubic.scale(1.0 / 12.0, ""), "field residual")?;
    Ok(residual)
}

pub fn ito_wentzell_residual(
    field: &ItoField,
    xi: &SamplePath,
    ladder: &EpsLadder,
) -> Result<ResidualReport> {
    ResidualReport::build(ladder, 1, |eps, _| {
        Ok(interior_sup(
            &ito_wentzell_residual_path(field, xi, eps)?,
            eps,
        ))
    })
}

/// Bracket-transport residual: with Y = int h dN as grid Ito sums,
/// [Q, Y]_eps(t) - int_0^t h d([Q, N]_eps), both brackets at the same eps.
/// `h` must be adapted by construction (its node values may depend only on
/// path values at times <= s).
pub fn bracket_residual_path(
    q: &SamplePath,
    h: &SamplePath,
    n: &SamplePath,
    eps: f64,
) -> Result<SamplePath> {
    let y = ito_sum_path(h, n)?;
    let left = n_covariation_path(&[q, &y], eps)?;
    let right = weighted_covariation_path(Some(h.values()), &[q, n], eps)?;
    left.add(&right.scale(-1.0, ""), "bracket residual")
}

pub fn bracket_residual(
    q: &SamplePath,
    h: &SamplePath,
    n: &SamplePath,
    ladder: &EpsLadder,
) -> Result<ResidualReport> {
    ResidualReport::build(ladder, 1, |eps, _| {
        Ok(interior_sup(&bracket_residual_path(q, h, n, eps)?, eps))
    })
}

/// [R, Y]_eps(1) with Y = int h dN; near zero when R carries no bracket
/// against the martingale part (independence or pathwise regularity).
pub fn zero_bracket_stat(
    r: &SamplePath,
    h: &SamplePath,
    n: &SamplePath,
    eps: f64,
) -> Result<f64> {
    let y = ito_sum_path(h, n)?;
    let path = n_covariation_path(&[r, &y], eps)?;
    Ok(*path.values().last().unwrap())
}

/// C^1 map of a path vector with its gradient evaluators.
#[derive(Clone)]
pub struct MapN {
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub grad: Vec<Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>>,
}

impl MapN {
    pub fn scalar(f: impl Fn(f64) -> f64 + Send + Sync + 'static, df: impl Fn(f64) -> f64 + Send + Sync + 'static) -> MapN {
        MapN {
            f: Arc::new(move |x| f(x[0])),
            grad: vec![Arc::new(move |x: &[f64]| df(x[0]))],
        }
    }
}

/// Mapping-stability residual for the 3-covariation: the eps-3-covariation of
/// (F^1(X), F^2(X), F^3(X)) minus
/// sum_{i,j,k} int dF^1_i dF^2_j dF^3_k d[X^i, X^j, X^k]_eps.
pub fn stability_residual_path(
    f_maps: &[MapN; 3],
    x_paths: &[&SamplePath],
    eps: f64,
) -> Result<SamplePath> {
    let m = x_paths.len();
    for f in f_maps {
        if f.grad.len() != m {
            return Err(Error::BadInput("gradient arity mismatch".into()));
        }
    }
    let grid = x_paths[0].grid();
    let nn = grid.n_nodes();
    let at = |i: usize| -> Vec<f64> { x_paths.iter().map(|p| p.values()[i]).collect() };
    let mapped: Vec<SamplePath> = f_maps
        .iter()
        .map(|f| SamplePath::new(grid, (0..nn).map(|i| (f.f)(&at(i))).collect(), "F(X)"))
        .collect::<Result<_>>()?;
    let left = n_covariation_path(&[&mapped[0], &mapped[1], &mapped[2]], eps)?;
    let mut residual = left;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let w: Vec<f64> = (0..nn)
                    .map(|node| {
                        let x = at(node);
                        (f_maps[0].grad[i])(&x) * (f_maps[1].grad[j])(&x) * (f_maps[2].grad[k])(&x)
                    })
                    .collect();
                let term =
                    weighted_covariation_path(Some(&w), &[x_paths[i], x_paths[j], x_paths[k]], eps)?;
                residual = residual.add(&term.scale(-1.0, ""), "stability residual")?;
            }
        }
    }
    Ok(residual)
}

pub fn stability_residual(
    f_maps: &[MapN; 3],
    x_paths: &[&SamplePath],
    ladder: &EpsLadder,
) -> Result<ResidualReport> {
    ResidualReport::build(ladder, 1, |eps, _| {
        Ok(interior_sup(
            &stability_residual_path(f_maps, x_paths, eps)?,
            eps,
        ))
    })
}
