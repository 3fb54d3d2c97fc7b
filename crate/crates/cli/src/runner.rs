//! Command dispatch: each command reads only the config and the master
//! seed, so identical inputs reproduce identical output bytes.

use crate::config::{Command, Config};
use crate::output::{fmt, OutputDir};
use regsde_core::expr::Expr;
use regsde_core::itocheck::{self, scalar, ItoFunction};
use regsde_core::pathgen::{gen_composite, GeneratorSpec};
use regsde_core::reginteg::{forward_integral_eps, symmetric_integral_avg_eps};
use regsde_core::regvar::{mean_stderr, n_covariation_path};
use regsde_core::solver::{
    nonuniqueness_demo, solve_sde, CaseTag, ProblemSpec,
};
use regsde_core::transform::{Coefficient, FieldFn};
use regsde_core::{EpsLadder, Grid, SamplePath};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug)]
pub enum RunError {
    /// Bad config or referenced name; exit code 2.
    Config(String),
    /// Numeric failure at run time; exit code 3.
    Numeric(String),
    /// Acceptance criteria violated in suite mode; exit code 4.
    Acceptance(usize),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numeric(m) => write!(f, "numeric error: {m}"),
            RunError::Acceptance(n) => write!(f, "{n} acceptance criteria failed"),
        }
    }
}

pub type RunResult = Result<(), RunError>;

fn numeric(e: impl std::fmt::Display) -> RunError {
    RunError::Numeric(e.to_string())
}

fn io(e: std::io::Error) -> RunError {
    RunError::Numeric(format!("io: {e}"))
}

pub struct Context<'a> {
    pub config: &'a Config,
    pub config_hash: &'a str,
    pub seed: u64,
    pub out_dir: &'a Path,
    pub quiet: bool,
}

impl Context<'_> {
    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }
}

/// Resolve the pieces every estimator command shares. Done before any file
/// is created so config mistakes leave the output directory untouched.
struct Shared {
    grid: Grid,
    r_spec: GeneratorSpec,
    q_spec: GeneratorSpec,
}

impl Shared {
    /// Ladder commands resolve it here so e.g. `gen` never requires one.
    fn ladder(&self, cfg: &Config) -> Result<EpsLadder, RunError> {
        EpsLadder::dyadic(self.grid, cfg.ladder.coarse, cfg.ladder.fine)
            .map_err(|e| RunError::Config(e.to_string()))
    }
}

fn shared(cfg: &Config) -> Result<Shared, RunError> {
    let grid = Grid::new(cfg.grid.n_steps)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let r_spec = GeneratorSpec::parse(&cfg.driver.r)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let q_spec = GeneratorSpec::parse(&cfg.driver.q)
        .map_err(|e| RunError::Config(e.to_string()))?;
    Ok(Shared {
        grid,
        r_spec,
        q_spec,
    })
}

fn driver_path(s: &Shared, seed: u64, replication: u64) -> Result<SamplePath, RunError> {
    Ok(gen_composite(s.grid, &s.r_spec, &s.q_spec, seed, replication)
        .map_err(numeric)?
        .xi)
}

pub fn execute(ctx: &Context) -> RunResult {
    match ctx.config.command {
        Command::Gen => cmd_gen(ctx),
        Command::Var => cmd_var(ctx),
        Command::Integrate => cmd_integrate(ctx),
        Command::Check => cmd_check(ctx),
        Command::Solve => cmd_solve(ctx),
        Command::DemoNonuniq => cmd_nonuniq(ctx),
        Command::Suite => cmd_suite(ctx),
    }
}

fn outdir(ctx: &Context) -> Result<OutputDir, RunError> {
    OutputDir::new(ctx.out_dir, ctx.config_hash, ctx.seed).map_err(io)
}

fn cmd_gen(ctx: &Context) -> RunResult {
    let s = shared(ctx.config)?;
    let out = outdir(ctx)?;
    for rep in 0..ctx.config.driver.paths as u64 {
        let xi = driver_path(&s, ctx.seed, rep)?;
        let mut f = out.create(&format!("path_{rep:03}.csv")).map_err(io)?;
        writeln!(f, "t,value").map_err(io)?;
        for (i, v) in xi.values().iter().enumerate() {
            writeln!(f, "{},{}", fmt(s.grid.node(i)), fmt(*v)).map_err(io)?;
        }
    }
    ctx.say(&format!("wrote {} path files", ctx.config.driver.paths));
    Ok(())
}

fn cmd_var(ctx: &Context) -> RunResult {
    let s = shared(ctx.config)?;
    let var = ctx.config.var.clone().unwrap_or(crate::config::VarCfg {
        order: 2,
        times: vec![0.25, 0.5, 0.75, 1.0],
    });
    if var.order < 2 {
        return Err(RunError::Config("var.order must be >= 2".into()));
    }
    let reps = ctx.config.ensemble.replications;
    let ladder = s.ladder(ctx.config)?;
    let out = outdir(ctx)?;
    let mut f = out.create("variation.csv").map_err(io)?;
    writeln!(f, "eps,t,value,stderr").map_err(io)?;
    for &eps in ladder.values() {
        // per-replication estimates at each report time
        let mut by_time: Vec<Vec<f64>> = vec![Vec::new(); var.times.len()];
        for rep in 0..reps as u64 {
            let xi = driver_path(&s, ctx.seed, rep)?;
            let copies: Vec<&SamplePath> = (0..var.order).map(|_| &xi).collect();
            let c = n_covariation_path(&copies, eps).map_err(numeric)?;
            for (k, &t) in var.times.iter().enumerate() {
                by_time[k].push(c.eval(t));
            }
        }
        for (k, &t) in var.times.iter().enumerate() {
            let (m, se) = mean_stderr(&by_time[k]);
            writeln!(f, "{},{},{},{}", fmt(eps), fmt(t), fmt(m), fmt(se)).map_err(io)?;
        }
    }
    ctx.say("wrote variation.csv");
    Ok(())
}

fn cmd_integrate(ctx: &Context) -> RunResult {
    let s = shared(ctx.config)?;
    let icfg = ctx
        .config
        .integrate
        .as_ref()
        .ok_or_else(|| RunError::Config("command 'integrate' needs an [integrate] table".into()))?;
    let expr = Expr::parse(&icfg.integrand).map_err(|e| RunError::Config(e.to_string()))?;
    let ladder = s.ladder(ctx.config)?;
    let out = outdir(ctx)?;
    let xi = driver_path(&s, ctx.seed, 0)?;
    let y = SamplePath::new(
        s.grid,
        (0..s.grid.n_nodes())
            .map(|i| expr.eval(s.grid.node(i), xi.values()[i]))
            .collect(),
        "integrand",
    )
    .map_err(numeric)?;
    for (j, &eps) in ladder.values().iter().enumerate() {
        let sym = symmetric_integral_avg_eps(&y, &xi, eps).map_err(numeric)?;
        let fwd = forward_integral_eps(&y, &xi, eps).map_err(numeric)?;
        let mut f = out
            .create(&format!("integrate_{:02}.csv", ctx.config.ladder.coarse as usize + j))
            .map_err(io)?;
        writeln!(f, "t,symmetric,forward,bracket_half").map_err(io)?;
        for i in 0..s.grid.n_nodes() {
            writeln!(
                f,
                "{},{},{},{}",
                fmt(s.grid.node(i)),
                fmt(sym.values()[i]),
                fmt(fwd.values()[i]),
                fmt(sym.values()[i] - fwd.values()[i]),
            )
            .map_err(io)?;
        }
    }
    ctx.say(&format!("wrote {} integral tables", ladder.len()));
    Ok(())
}

fn cmd_check(ctx: &Context) -> RunResult {
    let s = shared(ctx.config)?;
    let ccfg = ctx
        .config
        .check
        .as_ref()
        .ok_or_else(|| RunError::Config("command 'check' needs a [check] table".into()))?;
    let e0 = Expr::parse(&ccfg.f).map_err(|e| RunError::Config(e.to_string()))?;
    if e0.depends_on_t() {
        return Err(RunError::Config("check.f must not depend on t".into()));
    }
    let e1 = e0.diff(true);
    let e3 = e1.diff(true).diff(true);
    let f = ItoFunction::autonomous(
        scalar(move |x| e0.eval(0.0, x)),
        scalar(move |x| e1.eval(0.0, x)),
        scalar(move |x| e3.eval(0.0, x)),
    );
    let seed = ctx.seed;
    let ladder = s.ladder(ctx.config)?;
    let r_spec = s.r_spec.clone();
    let q_spec = s.q_spec.clone();
    let grid = s.grid;
    let report = itocheck::ResidualReport::build(
        &ladder,
        ctx.config.ensemble.replications,
        |eps, rep| {
            let xi = gen_composite(grid, &r_spec, &q_spec, seed, rep)?.xi;
            let r = itocheck::ito_residual_path(&f, &[], &xi, eps)?;
            Ok(itocheck::interior_sup(&r, eps))
        },
    )
    .map_err(numeric)?;
    let out = outdir(ctx)?;
    let file = out.create("ito_residuals.csv").map_err(io)?;
    report.write_csv(file).map_err(numeric)?;
    ctx.say("wrote ito_residuals.csv");
    Ok(())
}

fn field_from_expr(src: &str) -> Result<(FieldFn, FieldFn), RunError> {
    let e = Expr::parse(src).map_err(|e| RunError::Config(e.to_string()))?;
    let d = e.diff(true);
    Ok((
        Arc::new(move |t, x| e.eval(t, x)) as FieldFn,
        Arc::new(move |t, x| d.eval(t, x)) as FieldFn,
    ))
}

fn cmd_solve(ctx: &Context) -> RunResult {
    let s = shared(ctx.config)?;
    let scfg = ctx
        .config
        .solve
        .as_ref()
        .ok_or_else(|| RunError::Config("command 'solve' needs a [solve] table".into()))?;
    let mut coeff =
        Coefficient::resolve(&scfg.coefficient).map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(b) = &scfg.beta {
        let (f, df) = field_from_expr(b)?;
        coeff = coeff.with_beta(f, Some(df));
    }
    if let Some(a) = &scfg.alpha {
        let (f, _) = field_from_expr(a)?;
        coeff = coeff.with_alpha(f);
    }
    let case = CaseTag::parse(&scfg.case).map_err(|e| RunError::Config(e.to_string()))?;
    let composite = gen_composite(s.grid, &s.r_spec, &s.q_spec, ctx.seed, 0).map_err(numeric)?;
    let companion = composite.companions.first().cloned();
    let mut problem =
        ProblemSpec::new(coeff, composite, scfg.eta, case).map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(w) = scfg.window {
        problem.window = w;
    }
    problem.picard = scfg.picard;
    if ctx.config.driver.q != "zero" {
        // the bracket-carrying part rides on the companion Brownian motion
        problem.m_path = companion;
    }
    let bundle = solve_sde(&problem).map_err(numeric)?;
    let out = outdir(ctx)?;
    let mut f = out.create("solution.csv").map_err(io)?;
    writeln!(f, "t,x,y").map_err(io)?;
    for i in 0..s.grid.n_nodes() {
        writeln!(
            f,
            "{},{},{}",
            fmt(s.grid.node(i)),
            fmt(bundle.x_path.values()[i]),
            fmt(bundle.y_path.values()[i]),
        )
        .map_err(io)?;
    }
    ctx.say(&format!(
        "wrote solution.csv ({}, residual sup {:.3e}, integrability verdicts {:?}/{:?})",
        match &bundle.component_used {
            Some(c) => format!("component ({:.4}, {:.4})", c.lower, c.upper),
            None => "frozen zero-set start".to_string(),
        },
        bundle.residual,
        bundle.h2_lower,
        bundle.h2_upper,
    ));
    Ok(())
}

fn cmd_nonuniq(ctx: &Context) -> RunResult {
    let s = shared(ctx.config)?;
    let exponent = ctx.config.nonuniq.map(|n| n.exponent).unwrap_or(0.5);
    let xi = driver_path(&s, ctx.seed, 0)?;
    let report = nonuniqueness_demo(exponent, &xi).map_err(numeric)?;
    let out = outdir(ctx)?;
    let mut f = out.create("nonuniqueness.csv").map_err(io)?;
    writeln!(f, "t,xi,x1,x2").map_err(io)?;
    for i in 0..s.grid.n_nodes() {
        writeln!(
            f,
            "{},{},{},{}",
            fmt(s.grid.node(i)),
            fmt(xi.values()[i]),
            fmt(report.x1.values()[i]),
            fmt(report.x2.values()[i]),
        )
        .map_err(io)?;
    }
    ctx.say(&format!(
        "wrote nonuniqueness.csv (residuals {:.3e} / {:.3e}, separation {:.6}, 1/sigma at 0: {:?})",
        report.residual1, report.residual2, report.separation, report.h2_at_zero
    ));
    Ok(())
}

fn cmd_suite(ctx: &Context) -> RunResult {
    let out = outdir(ctx)?;
    let results = crate::acceptance::run_all(ctx.seed).map_err(numeric)?;
    let mut f = out.create("acceptance.csv").map_err(io)?;
    writeln!(f, "criterion,name,value,threshold,pass").map_err(io)?;
    let mut failures = 0usize;
    for r in &results {
        writeln!(
            f,
            "{},{},{},{},{}",
            r.id,
            r.name,
            fmt(r.value),
            fmt(r.threshold),
            r.pass
        )
        .map_err(io)?;
        if !ctx.quiet {
            println!("{}", r.line());
        }
        if !r.pass {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(RunError::Acceptance(failures));
    }
    ctx.say("all acceptance criteria passed");
    Ok(())
}
