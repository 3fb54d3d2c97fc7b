//! One-dimensional SDE solver for d°X = sigma(t, X)[d°xi + beta(t, X) d°M
//! + alpha(t, X) dV] via the space-transform reduction: Y = H(., X) satisfies
//! an equation with additive xi, which is time-stepped by explicit Euler and
//! mapped back through K. Includes the residual verifier and the Peano-type
//! non-uniqueness demonstration at an integrable zero of sigma.

use crate::error::{Error, Result};
use crate::grid::SamplePath;
use crate::pathgen::CompositePath;
use crate::reginteg::{ito_sum_path, symmetric_integral_avg_eps};
use crate::regvar::n_covariation_path;
use crate::transform::{
    check_conditions, check_h2, decompose_support, Coefficient, ConditionReport, HKPair, Side,
    SupportComponent, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// Rough driver with finite strong cubic variation: all correction terms
    /// including the 1/12 cubic-bracket integrand.
    Cubic,
    /// Finite quadratic variation, zero cubic variation: drops the cubic term.
    Quadratic,
    /// Forward (Ito-type) reading of the equation: sigma'-corrections with
    /// negative signs against [xi,xi], [M,xi], [M,M].
    Forward,
    /// Zero quadratic variation driver (Holder exponent > 1/2): drift is
    /// dtH + alpha only.
    Hoelder,
    /// Fractional Brownian driver with H > 1/2: same assembly as Hoelder.
    Fbm,
    /// Brownian driver read in the Stratonovich sense with merely measurable
    /// bounded alpha: same assembly as Hoelder.
    BrownianStratonovich,
}

impl CaseTag {
    pub fn parse(s: &str) -> Result<CaseTag> {
        Ok(match s {
            "cubic" => CaseTag::Cubic,
            "quadratic" => CaseTag::Quadratic,
            "forward" => CaseTag::Forward,
            "hoelder" => CaseTag::Hoelder,
            "fbm" => CaseTag::Fbm,
            "brownian_stratonovich" => CaseTag::BrownianStratonovich,
            other => {
                return Err(Error::BadParameter(format!("unknown case tag '{other}'")))
            }
        })
    }

    fn holder_style(self) -> bool {
        matches!(
            self,
            CaseTag::Hoelder | CaseTag::Fbm | CaseTag::BrownianStratonovich
        )
    }
}

/// Analytic overrides for the bracket paths the reduced equation integrates
/// against; any left as `None` is estimated from the paths when needed.
#[derive(Debug, Clone, Default)]
pub struct BracketInputs {
    pub mm: Option<SamplePath>,
    pub mxi: Option<SamplePath>,
    pub xixi: Option<SamplePath>,
    pub xi3: Option<SamplePath>,
}

pub struct ProblemSpec {
    pub coeff: Coefficient,
    pub xi: CompositePath,
    pub m_path: Option<SamplePath>,
    pub v_path: Option<SamplePath>,
    pub eta: f64,
    pub case_tag: CaseTag,
    pub bracket_inputs: BracketInputs,
    /// |sigma(0, eta)| at or below this means eta sits in the zero set D.
    pub zero_tol: f64,
    /// Spatial window scanned for support components.
    pub window: (f64, f64),
    /// Closed-form H/K override installed on the located component.
    pub closed_hk: Option<HKPair>,
    /// One fixed-point sweep per Euler step (midpoint drift).
    pub picard: bool,
    /// Regularization at which the solution residual is verified.
    pub residual_eps: f64,
    /// Regularization for estimated bracket paths when no analytic override
    /// is supplied.
    pub bracket_eps: f64,
}

impl ProblemSpec {
    pub fn new(coeff: Coefficient, xi: CompositePath, eta: f64, case_tag: CaseTag) -> Result<ProblemSpec> {
        if !eta.is_finite() {
            return Err(Error::BadParameter(format!("eta must be finite, got {eta}")));
        }
        let grid = xi.grid();
        let eps = (grid.step() * 64.0).min(0.25);
        Ok(ProblemSpec {
            coeff,
            xi,
            m_path: None,
            v_path: None,
            eta,
            case_tag,
            bracket_inputs: BracketInputs::default(),
            zero_tol: 1e-9,
            window: (-16.0, 16.0),
            closed_hk: None,
            picard: false,
            residual_eps: eps,
            bracket_eps: eps,
        })
    }

    fn check(&self) -> Result<()> {
        let grid = self.xi.grid();
        for p in [&self.m_path, &self.v_path].into_iter().flatten() {
            self.xi.xi.same_grid(p)?;
        }
        let _ = grid;
        Ok(())
    }
}

/// The assembled right-hand side of the reduced equation: every coefficient
/// is the transported g~(t, y) = g(t, K(t, y)), and the correction terms
/// integrate against the bracket paths resolved at assembly time.
pub struct ReducedDrift {
    hk: HKPair,
    coeff: Coefficient,
    case: CaseTag,
    mm: Option<SamplePath>,
    mxi: Option<SamplePath>,
    xixi: Option<SamplePath>,
    xi3: Option<SamplePath>,
}

impl ReducedDrift {
    /// Total drift increment over step k (everything except the additive
    /// Delta xi), evaluated at state y with the back-transformed x supplied
    /// by the caller.
    fn increment(
        &self,
        k: usize,
        t: f64,
        dt: f64,
        x: f64,
        m_step: f64,
        v_step: f64,
    ) -> Result<f64> {
        let c = &self.coeff;
        let mut dy = 0.0;
        // dtH + alpha dV + beta dM, common to all cases
        dy += self.hk.dt_h(t, x)? * dt;
        if let Some(alpha) = &c.alpha {
            dy += alpha(t, x) * v_step;
        }
        let beta = c.beta.as_ref().map(|b| b(t, x)).unwrap_or(0.0);
        dy += beta * m_step;

        let bracket = |p: &Option<SamplePath>| -> f64 {
            p.as_ref()
                .map(|b| b.values()[k + 1] - b.values()[k])
                .unwrap_or(0.0)
        };
        match self.case {
            CaseTag::Cubic | CaseTag::Quadratic => {
                if c.beta.is_some() {
                    let dxb = c
                        .dx_beta
                        .as_ref()
                        .ok_or_else(|| Error::BadParameter("dx_beta required".into()))?(
                        t, x
                    );
                    let s = c.sigma(t, x);
                    dy += 0.5 * dxb * beta * s * bracket(&self.mm);
                    dy += 0.5 * dxb * s * bracket(&self.mxi);
                }
                if self.case == CaseTag::Cubic {
                    let dxs = c
                        .dx_sigma
                        .as_ref()
                        .ok_or_else(|| Error::BadParameter("dx_sigma required".into()))?(
                        t, x
                    );
                    let dx2s = c
                        .dx2_sigma
                        .as_ref()
                        .ok_or_else(|| Error::BadParameter("dx2_sigma required".into()))?(
                        t, x
                    );
                    let s = c.sigma(t, x);
                    dy += (s * dx2s + dxs * dxs) / 12.0 * bracket(&self.xi3);
                }
            }
            CaseTag::Forward => {
                let dxs = c
                    .dx_sigma
                    .as_ref()
                    .ok_or_else(|| Error::BadParameter("dx_sigma required".into()))?(
                    t, x
                );
                dy -= 0.5 * dxs * bracket(&self.xixi);
                if c.beta.is_some() {
                    dy -= dxs * beta * bracket(&self.mxi);
                    dy -= 0.5 * dxs * beta * beta * bracket(&self.mm);
                }
            }
            _ => {}
        }
        Ok(dy)
    }
}

/// Resolve the bracket paths the case needs and freeze the transported
/// integrands into a [`ReducedDrift`].
pub fn assemble_reduced(
    problem: &ProblemSpec,
    hk: &HKPair,
    eps_for_brackets: f64,
) -> Result<ReducedDrift> {
    let xi = &problem.xi.xi;
    let inputs = &problem.bracket_inputs;
    let estimate = |supplied: &Option<SamplePath>,
                    paths: &[&SamplePath]|
     -> Result<Option<SamplePath>> {
        if let Some(p) = supplied {
            xi.same_grid(p)?;
            return Ok(Some(p.clone()));
        }
        Ok(Some(n_covariation_path(paths, eps_for_brackets)?))
    };
    let has_beta = problem.coeff.beta.is_some();
    let m = problem.m_path.as_ref();
    let need_m_brackets = has_beta && !problem.case_tag.holder_style();
    if need_m_brackets && m.is_none() && inputs.mm.is_none() {
        return Err(Error::BadInput(
            "beta supplied without a martingale path or analytic brackets".into(),
        ));
    }
    let mut drift = ReducedDrift {
        hk: hk.clone(),
        coeff: problem.coeff.clone(),
        case: problem.case_tag,
        mm: None,
        mxi: None,
        xixi: None,
        xi3: None,
    };
    match problem.case_tag {
        CaseTag::Cubic => {
            drift.xi3 = estimate(&inputs.xi3, &[xi, xi, xi])?;
            if need_m_brackets {
                let mp = m.unwrap();
                drift.mm = estimate(&inputs.mm, &[mp, mp])?;
                drift.mxi = estimate(&inputs.mxi, &[mp, xi])?;
            }
        }
        CaseTag::Quadratic => {
            if need_m_brackets {
                let mp = m.unwrap();
                drift.mm = estimate(&inputs.mm, &[mp, mp])?;
                drift.mxi = estimate(&inputs.mxi, &[mp, xi])?;
            }
        }
        CaseTag::Forward => {
            drift.xixi = estimate(&inputs.xixi, &[xi, xi])?;
            if has_beta {
                let mp = m.ok_or_else(|| {
                    Error::BadInput("forward case with beta needs a martingale path".into())
                })?;
                drift.mm = estimate(&inputs.mm, &[mp, mp])?;
                drift.mxi = estimate(&inputs.mxi, &[mp, xi])?;
            }
        }
        _ => {}
    }
    Ok(drift)
}

/// Explicit Euler on the reduced equation. The driver enters additively, so
/// its increments are inherited exactly; `nu_sigma` seeds Y_0.
pub fn solve_reduced(
    drift: &ReducedDrift,
    xi: &SamplePath,
    m_path: Option<&SamplePath>,
    v_path: Option<&SamplePath>,
    nu_sigma: f64,
    picard: bool,
) -> Result<SamplePath> {
    let grid = xi.grid();
    let dt = grid.step();
    let n = grid.n_steps();
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut y = nu_sigma;
    values.push(y);
    // warm-started back transform along the path
    let mut x_guess = drift.hk.k(0.0, y).map_err(|_| Error::OutsideRange { y })?;
    for k in 0..n {
        let t = grid.node(k);
        let xiv = xi.values();
        let dxi = xiv[k + 1] - xiv[k];
        let m_step = m_path.map(|m| m.values()[k + 1] - m.values()[k]).unwrap_or(0.0);
        let v_step = v_path.map(|v| v.values()[k + 1] - v.values()[k]).unwrap_or(dt);
        let x = drift
            .hk
            .k_with_guess(t, y, x_guess)
            .map_err(|_| Error::LeftComponent { step: k, x: x_guess })?;
        let mut dy = dxi + drift.increment(k, t, dt, x, m_step, v_step)?;
        if picard {
            // one fixed-point sweep with the midpoint state
            let y_mid = y + 0.5 * dy;
            let x_mid = drift
                .hk
                .k_with_guess(t + 0.5 * dt, y_mid, x)
                .map_err(|_| Error::LeftComponent { step: k, x })?;
            dy = dxi + drift.increment(k, t + 0.5 * dt, dt, x_mid, m_step, v_step)?;
        }
        y += dy;
        if !y.is_finite() {
            return Err(Error::NonFiniteState { step: k, t });
        }
        values.push(y);
        x_guess = x;
    }
    SamplePath::new(grid, values, "Y")
}

/// X = K(t, Y) node-wise; `None` component means eta sits in the zero set and
/// X is frozen at eta.
pub fn map_back(
    y: &SamplePath,
    hk: Option<&HKPair>,
    eta: f64,
) -> Result<SamplePath> {
    let grid = y.grid();
    let hk = match hk {
        None => return SamplePath::new(grid, vec![eta; grid.n_nodes()], "X"),
        Some(h) => h,
    };
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut guess = eta;
    for (i, &yv) in y.values().iter().enumerate() {
        let t = grid.node(i);
        let x = hk
            .k_with_guess(t, yv, guess)
            .map_err(|_| Error::LeftComponent { step: i, x: guess })?;
        values.push(x);
        guess = x;
    }
    SamplePath::new(grid, values, "X")
}

pub struct SolutionBundle {
    pub x_path: SamplePath,
    pub y_path: SamplePath,
    /// `None` when eta lies in the zero set D.
    pub component_used: Option<SupportComponent>,
    /// H(0, eta) when eta sits inside a support component.
    pub nu_sigma: Option<f64>,
    pub condition_report: ConditionReport,
    pub h2_lower: Verdict,
    pub h2_upper: Verdict,
    /// Sup-interior residual of the integral equation at `residual_eps`.
    pub residual: f64,
}

/// Full pipeline: support decomposition, component location, transform
/// construction, assembly, stepping, back transform, and verification.
pub fn solve_sde(problem: &ProblemSpec) -> Result<SolutionBundle> {
    problem.check()?;
    let coeff = &problem.coeff;
    let grid = problem.xi.grid();
    let comps = decompose_support(coeff, problem.window, problem.zero_tol)?;
    let condition_report = check_conditions(coeff, &comps);
    let eta = problem.eta;

    if coeff.sigma(0.0, eta).abs() <= problem.zero_tol {
        // eta in D: the solution freezes (autonomous coefficients assumed).
        let x_path = SamplePath::new(grid, vec![eta; grid.n_nodes()], "X")?;
        let y_path = problem.xi.xi.clone();
        let residual = residual_check(&x_path, problem, problem.residual_eps)?;
        return Ok(SolutionBundle {
            x_path,
            y_path,
            component_used: None,
            nu_sigma: None,
            condition_report,
            h2_lower: Verdict::Inconclusive,
            h2_upper: Verdict::Inconclusive,
            residual,
        });
    }

    let comp = *comps
        .iter()
        .find(|c| c.contains(eta))
        .ok_or_else(|| Error::Support(format!("eta = {eta} outside every support component")))?;
    // boundary-of-support eta is ambiguous input
    let near_lower = !comp.lower_open_window && (eta - comp.lower).abs() <= problem.zero_tol;
    let near_upper = !comp.upper_open_window && (comp.upper - eta).abs() <= problem.zero_tol;
    if near_lower || near_upper {
        return Err(Error::BoundaryEta(eta));
    }

    let hk = match &problem.closed_hk {
        Some(h) => h.clone(),
        None => HKPair::numeric(comp, coeff)?,
    };
    let h2_lower = check_h2(&hk, Side::Lower);
    let h2_upper = check_h2(&hk, Side::Upper);
    let nu_sigma = hk.h(0.0, eta)?;

    let drift = assemble_reduced(problem, &hk, problem.bracket_eps)?;
    let y_path = solve_reduced(
        &drift,
        &problem.xi.xi,
        problem.m_path.as_ref(),
        problem.v_path.as_ref(),
        nu_sigma,
        problem.picard,
    )?;
    let x_path = map_back(&y_path, Some(&hk), eta)?;

    // sanity identity H(t, X_t) = Y_t (transform consistency, subsampled)
    let stride = (grid.n_steps() / 16).max(1);
    for i in (0..grid.n_nodes()).step_by(stride) {
        let t = grid.node(i);
        let h = hk.h(t, x_path.values()[i])?;
        let y = y_path.values()[i];
        if (h - y).abs() > 1e-6 * (1.0 + y.abs()) {
            return Err(Error::BadInput(format!(
                "transform consistency violated at node {i}: H(t,X) = {h}, Y = {y}"
            )));
        }
    }

    let residual = residual_check(&x_path, problem, problem.residual_eps)?;
    Ok(SolutionBundle {
        x_path,
        y_path,
        component_used: Some(comp),
        nu_sigma: Some(nu_sigma),
        condition_report,
        h2_lower,
        h2_upper,
        residual,
    })
}

/// Sup over interior nodes of the defect of the integral equation:
/// |X_t - eta - int sigma(., X) d-circ xi - int (sigma beta)(., X) d-circ M
/// - int (sigma alpha)(., X) dV|.
pub fn residual_check(x: &SamplePath, problem: &ProblemSpec, eps: f64) -> Result<f64> {
    let grid = x.grid();
    x.same_grid(&problem.xi.xi)?;
    let coeff = &problem.coeff;
    let nodes = |f: &dyn Fn(f64, f64) -> f64, label: &str| -> Result<SamplePath> {
        SamplePath::new(
            grid,
            (0..grid.n_nodes())
                .map(|i| f(grid.node(i), x.values()[i]))
                .collect(),
            label,
        )
    };
    let sig = nodes(&|t, xv| coeff.sigma(t, xv), "sigma(.,X)")?;
    let mut rhs = symmetric_integral_avg_eps(&sig, &problem.xi.xi, eps)?;
    if let (Some(beta), Some(m)) = (&coeff.beta, &problem.m_path) {
        let sb = nodes(&|t, xv| coeff.sigma(t, xv) * beta(t, xv), "(sigma beta)(.,X)")?;
        let term = symmetric_integral_avg_eps(&sb, m, eps)?;
        rhs = rhs.add(&term, "rhs")?;
    }
    if let Some(alpha) = &coeff.alpha {
        let sa = nodes(&|t, xv| coeff.sigma(t, xv) * alpha(t, xv), "(sigma alpha)(.,X)")?;
        let term = match &problem.v_path {
            Some(v) => ito_sum_path(&sa, v)?,
            None => crate::reginteg::time_integral_path(&sa),
        };
        rhs = rhs.add(&term, "rhs")?;
    }
    // evaluate the left side with the same eps-regularization as the right
    // side, so both carry identical boundary smearing; at eps equal to one
    // grid step this telescopes to the plain increment X_t - X_0
    let ones = SamplePath::from_fn(grid, "1", |_| 1.0)?;
    let lhs = crate::reginteg::forward_integral_eps(&ones, x, eps)?;
    let mut sup: f64 = 0.0;
    for i in 0..grid.n_nodes() {
        let t = grid.node(i);
        if t < eps - 1e-15 || t > 1.0 - eps + 1e-15 {
            continue;
        }
        let r = lhs.values()[i] - rhs.values()[i];
        sup = sup.max(r.abs());
    }
    Ok(sup)
}

pub struct NonUniquenessReport {
    pub x1: SamplePath,
    pub x2: SamplePath,
    pub residual1: f64,
    pub residual2: f64,
    /// sup_t |X^1_t - X^2_t|.
    pub separation: f64,
    /// Integrability verdict of 1/sigma at the zero the two solutions share.
    pub h2_at_zero: Verdict,
}

/// Two distinct solutions of d°X = |X|^a d°xi from X_0 = 0 when 1/|x|^a is
/// integrable at 0: the frozen solution X ≡ 0 and X = K(xi⁺) with
/// K(y) = ((1-a) y)^{1/(1-a)} for y > 0, extended by 0 for y <= 0.
pub fn nonuniqueness_demo(a_exponent: f64, xi: &SamplePath) -> Result<NonUniquenessReport> {
    if !(a_exponent > 0.0 && a_exponent < 1.0) {
        return Err(Error::BadParameter(format!(
            "exponent must lie in (0, 1), got {a_exponent}"
        )));
    }
    let grid = xi.grid();
    let coeff = Coefficient::builtin(&format!("abs_pow:{a_exponent}"))?;
    let one_minus = 1.0 - a_exponent;
    let k_ext = move |y: f64| {
        if y > 0.0 {
            (one_minus * y).powf(1.0 / one_minus)
        } else {
            0.0
        }
    };
    let x1 = SamplePath::zero(grid);
    let x2 = SamplePath::new(
        grid,
        xi.values().iter().map(|&y| k_ext(y)).collect(),
        "K(xi+)",
    )?;

    let mut problem = ProblemSpec::new(
        coeff.clone(),
        CompositePath::from_r(xi.clone()),
        0.0,
        CaseTag::Hoelder,
    )?;
    // finest admissible regularization: one grid step
    problem.residual_eps = grid.step();
    let residual1 = residual_check(&x1, &problem, problem.residual_eps)?;
    let residual2 = residual_check(&x2, &problem, problem.residual_eps)?;
    let separation = x1
        .values()
        .iter()
        .zip(x2.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let comps = decompose_support(&coeff, (-4.0, 4.0), 1e-10)?;
    let pos = comps
        .iter()
        .find(|c| c.lower >= -1e-6 && c.upper > 0.5)
        .copied()
        .ok_or_else(|| Error::Support("positive component not found".into()))?;
    let hk = HKPair::numeric(pos, &coeff)?;
    let h2_at_zero = check_h2(&hk, Side::Lower);

    Ok(NonUniquenessReport {
        x1,
        x2,
        residual1,
        residual2,
        separation,
        h2_at_zero,
    })
}
