//! Epsilon-regularized n-covariation functionals
//! `[X^1,...,X^n]_eps(t) = (1/eps) int_0^t prod_k (X^k_{s+eps} - X^k_s) ds`
//! and their strong-norm companions, discretized by left-endpoint sums over
//! the grid nodes with the clamp convention on `s + eps`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Grid, SamplePath};

/// Strictly decreasing dyadic epsilon ladder; every value is an exact
/// multiple of the grid step, at least one step, at most `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsLadder {
    values: Vec<f64>,
}

impl EpsLadder {
    /// Ladder `{2^-j_coarse, ..., 2^-j_fine}` checked against the grid.
    pub fn dyadic(grid: Grid, j_coarse: u32, j_fine: u32) -> Result<EpsLadder> {
        if j_coarse < 1 || j_coarse > j_fine {
            return Err(Error::BadParameter(format!(
                "ladder exponents {j_coarse}..{j_fine} must satisfy 1 <= coarse <= fine"
            )));
        }
        let mut values = Vec::new();
        for j in j_coarse..=j_fine {
            let eps = 0.5f64.powi(j as i32);
            grid.eps_to_steps(eps)?;
            values.push(eps);
        }
        Ok(EpsLadder { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn finest(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn coarsest(&self) -> f64 {
        self.values[0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_family(paths: &[&SamplePath]) -> Result<Grid> {
    let first = paths
        .first()
        .ok_or_else(|| Error::BadInput("empty path family".into()))?;
    for p in &paths[1..] {
        first.same_grid(p)?;
    }
    Ok(first.grid())
}

/// Cumulative path of the epsilon n-covariation over all grid nodes.
pub fn n_covariation_path(paths: &[&SamplePath], eps: f64) -> Result<SamplePath> {
    weighted_covariation_path(None, paths, eps)
}

/// `[X^1,...,X^n]_eps(t)` at a single node time.
pub fn n_covariation_eps(paths: &[&SamplePath], eps: f64, t: f64) -> Result<f64> {
    let path = n_covariation_path(paths, eps)?;
    Ok(path.eval(t))
}

/// `(1/eps) int_0^t w_s prod_k (X^k_{s+eps} - X^k_s) ds` as a cumulative
/// path; `weight = None` drops the weight. This is the matching-epsilon
/// discretization of integrals against bracket differentials.
pub fn weighted_covariation_path(
    weight: Option<&[f64]>,
    paths: &[&SamplePath],
    eps: f64,
) -> Result<SamplePath> {
    let grid = check_family(paths)?;
    if let Some(w) = weight {
        if w.len() != grid.n_nodes() {
            return Err(Error::BadInput("weight length mismatch".into()));
        }
    }
    let e = grid.eps_to_steps(eps)? as i64;
    let n = grid.n_steps();
    let mut values = Vec::with_capacity(grid.n_nodes());
    values.push(0.0);
    let mut acc = 0.0;
    for j in 0..n as i64 {
        let mut prod = match weight {
            Some(w) => w[j as usize],
            None => 1.0,
        };
        for p in paths {
            prod *= p.at(j + e) - p.at(j);
        }
        acc += prod / e as f64;
        values.push(acc);
    }
    SamplePath::new(grid, values, format!("[cov]_eps({eps})"))
}

/// Strong norm `(1/eps) int_0^1 prod_k |X^k_{s+eps} - X^k_s| ds`.
pub fn strong_norm_eps(paths: &[&SamplePath], eps: f64) -> Result<f64> {
    let grid = check_family(paths)?;
    let e = grid.eps_to_steps(eps)? as i64;
    let n = grid.n_steps();
    let mut acc = 0.0;
    for j in 0..n as i64 {
        let mut prod = 1.0;
        for p in paths {
            prod *= (p.at(j + e) - p.at(j)).abs();
        }
        acc += prod;
    }
    Ok(acc / e as f64)
}

/// Slope of an [`EstimateReport`] power fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    /// Successive values identical to round-off; no decay to fit.
    Flat,
    Fitted(f64),
}

impl Slope {
    pub fn fitted(&self) -> Option<f64> {
        match self {
            Slope::Flat => None,
            Slope::Fitted(p) => Some(*p),
        }
    }
}

/// Values of an epsilon functional over a ladder with a Richardson-style
/// extrapolated limit and the fitted power-law exponent.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    /// `(eps, value, stderr)` rows, epsilon strictly decreasing.
    pub per_eps: Vec<(f64, f64, Option<f64>)>,
    pub extrapolated_limit: f64,
    pub slope: Slope,
}

/// Fits `value ~ L + A eps^p` from at least three ladder points. The
/// exponent comes from a least-squares fit of the log successive
/// differences; a constant sequence reports the `Flat` sentinel.
pub fn estimate_limit(per_eps: &[(f64, f64, Option<f64>)]) -> Result<EstimateReport> {
    if per_eps.len() < 3 {
        return Err(Error::BadInput(format!(
            "need at least 3 ladder points, got {}",
            per_eps.len()
        )));
    }
    for (eps, v, se) in per_eps {
        if !eps.is_finite() || !v.is_finite() || se.map_or(false, |s| !s.is_finite()) {
            return Err(Error::BadInput("non-finite ladder input".into()));
        }
    }
    for w in per_eps.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::BadInput("ladder must be strictly decreasing".into()));
        }
    }
    let scale = per_eps
        .iter()
        .map(|(_, v, _)| v.abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let diffs: Vec<(f64, f64)> = per_eps
        .windows(2)
        .map(|w| (w[0].0, w[0].1 - w[1].1))
        .collect();
    if diffs.iter().all(|(_, d)| d.abs() <= 1e-13 * scale) {
        return Ok(EstimateReport {
            per_eps: per_eps.to_vec(),
            extrapolated_limit: per_eps.last().unwrap().1,
            slope: Slope::Flat,
        });
    }
    // least squares of log|d_i| against log eps_i
    let pts: Vec<(f64, f64)> = diffs
        .iter()
        .filter(|(_, d)| d.abs() > 1e-300)
        .map(|(e, d)| (e.ln(), d.abs().ln()))
        .collect();
    let (p, intercept) = least_squares_line(&pts);
    // d_i = A eps_i^p (1 - 2^-p)  =>  A from the intercept
    let shrink = 1.0 - 0.5f64.powf(p);
    let a_abs = intercept.exp() / shrink.abs().max(1e-300);
    let sign = diffs.iter().map(|(_, d)| *d).sum::<f64>().signum();
    let a = sign * a_abs;
    let (eps_fine, v_fine, _) = *per_eps.last().unwrap();
    let extrapolated_limit = if p > 0.0 && p.is_finite() {
        v_fine - a * eps_fine.powf(p)
    } else {
        v_fine
    };
    Ok(EstimateReport {
        per_eps: per_eps.to_vec(),
        extrapolated_limit,
        slope: Slope::Fitted(p),
    })
}

fn least_squares_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n.max(1.0));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Least-squares log-log slope of `(x, y)` pairs with positive entries.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    least_squares_line(&pts).0
}

impl EstimateReport {
    /// CSV rows `eps,t,value,stderr` (t fixed at 1 for ladder summaries)
    /// with a trailing `#limit=...,slope=...` comment line.
    pub fn write_csv<W: Write>(&self, mut w: W, t: f64) -> Result<()> {
        writeln!(w, "eps,t,value,stderr")?;
        for (eps, v, se) in &self.per_eps {
            match se {
                Some(se) => writeln!(w, "{eps:.17e},{t:.17e},{v:.17e},{se:.17e}")?,
                None => writeln!(w, "{eps:.17e},{t:.17e},{v:.17e},")?,
            }
        }
        let slope = match self.slope {
            Slope::Flat => "flat".to_string(),
            Slope::Fitted(p) => format!("{p:.17e}"),
        };
        writeln!(w, "#limit={:.17e},slope={}", self.extrapolated_limit, slope)?;
        Ok(())
    }
}

/// Mean and standard error of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median (by sorting a copy).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical quantile in `[0, 1]` (nearest-rank).
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((v.len() as f64 - 1.0) * q).round() as usize;
    v[idx.min(v.len() - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathgen::gen_brownian_stream;
    use crate::rng::StreamTag;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    /// Brute-force oracle: recompute the left-endpoint sum directly at one
    /// node, independent of the cumulative implementation.
    fn brute_cov(paths: &[&SamplePath], eps: f64, t: f64) -> f64 {
        let g = paths[0].grid();
        let e = (eps * g.n_steps() as f64).round() as i64;
        let i = g.snap(t) as i64;
        let mut acc = 0.0;
        for j in 0..i {
            let mut prod = 1.0;
            for p in paths {
                prod *= p.at(j + e) - p.at(j);
            }
            acc += prod;
        }
        acc / e as f64
    }

    #[test]
    fn constant_factor_vanishes() {
        let g = grid(64);
        let c = SamplePath::from_fn(g, "c", |_| 3.5).unwrap();
        let w = gen_brownian_stream(g, 1, 0, StreamTag::Primary).unwrap();
        let v = n_covariation_eps(&[&c, &w], 0.125, 1.0).unwrap();
        assert_eq!(v, 0.0);
        let v3 = n_covariation_eps(&[&w, &c, &w], 0.125, 1.0).unwrap();
        assert_eq!(v3, 0.0);
    }

    #[test]
    fn linear_quadratic_variation_closed_form() {
        // X_t = t, n = 2: the left sum has the exact discrete value
        // e*dt^2*(n-e+1) + dt^2 * sum_{m=1}^{e-1} m^2 / e, which tends to
        // eps - (2/3) eps^2 as the grid refines.
        let g = grid(1 << 12);
        let x = SamplePath::from_fn(g, "t", |t| t).unwrap();
        let eps = 0.5f64.powi(4);
        let v = n_covariation_eps(&[&x, &x], eps, 1.0).unwrap();
        let n = g.n_steps() as f64;
        let e = (eps * n).round();
        let dt = g.step();
        let exact_discrete =
            e * dt * dt * (n - e + 1.0) + dt * dt * (e - 1.0) * e * (2.0 * e - 1.0) / (6.0 * e);
        assert!((v - exact_discrete).abs() < 1e-12, "{v} vs {exact_discrete}");
        let continuous = eps - 2.0 / 3.0 * eps * eps;
        assert!((v - continuous).abs() < 2.0 * dt, "{v} vs {continuous}");
    }

    #[test]
    fn brownian_quadratic_variation_mc() {
        // ensemble mean within 2% of 1, cross-checked against the grid
        // squared-increment sum
        let g = grid(1 << 12);
        let eps = 0.5f64.powi(7);
        let n_reps = 100;
        let mut vals = Vec::new();
        let mut sq_sums = Vec::new();
        for rep in 0..n_reps {
            let w = gen_brownian_stream(g, 77, rep, StreamTag::Primary).unwrap();
            vals.push(n_covariation_eps(&[&w, &w], eps, 1.0).unwrap());
            let sq: f64 = w
                .values()
                .windows(2)
                .map(|p| (p[1] - p[0]) * (p[1] - p[0]))
                .sum();
            sq_sums.push(sq);
        }
        let (mean, _) = mean_stderr(&vals);
        let (sq_mean, _) = mean_stderr(&sq_sums);
        assert!((mean - 1.0).abs() < 0.02, "eps estimate mean {mean}");
        assert!((sq_mean - 1.0).abs() < 0.01, "squared-increment mean {sq_mean}");
    }

    #[test]
    fn strong_norm_linear_cubic() {
        // |Delta X| = eps off the boundary for X_t = t, so the n = 3 norm is
        // about eps^2
        let g = grid(1 << 10);
        let x = SamplePath::from_fn(g, "t", |t| t).unwrap();
        let eps = 0.5f64.powi(5);
        let v = strong_norm_eps(&[&x, &x, &x], eps).unwrap();
        assert!(v < eps * eps, "{v}");
        assert!(v > 0.5 * eps * eps, "{v}");
        // decays with eps
        let v2 = strong_norm_eps(&[&x, &x, &x], eps / 2.0).unwrap();
        assert!(v2 < v);
    }

    #[test]
    fn strong_norm_dominates_covariation() {
        let g = grid(256);
        let w = gen_brownian_stream(g, 3, 0, StreamTag::Primary).unwrap();
        let u = gen_brownian_stream(g, 3, 1, StreamTag::Primary).unwrap();
        for eps in [0.25, 0.125, 0.0625] {
            let c = n_covariation_eps(&[&w, &u], eps, 1.0).unwrap().abs();
            let s = strong_norm_eps(&[&w, &u], eps).unwrap();
            assert!(s + 1e-14 >= c, "{s} < {c}");
        }
    }

    #[test]
    fn mismatched_grid_and_eps_errors() {
        let a = SamplePath::zero(grid(64));
        let b = SamplePath::zero(grid(128));
        assert!(n_covariation_eps(&[&a, &b], 0.25, 1.0).is_err());
        let c = SamplePath::zero(grid(64));
        assert!(n_covariation_eps(&[&a, &c], 0.1, 1.0).is_err());
    }

    #[test]
    fn estimate_limit_flat_and_powerlaw() {
        let flat = [(0.125, 2.0, None), (0.0625, 2.0, None), (0.03125, 2.0, None)];
        let r = estimate_limit(&flat).unwrap();
        assert_eq!(r.extrapolated_limit, 2.0);
        assert_eq!(r.slope, Slope::Flat);

        let ladder = [0.125, 0.0625, 0.03125];
        let vals: Vec<(f64, f64, Option<f64>)> =
            ladder.iter().map(|&e| (e, 1.0 + e, None)).collect();
        let r = estimate_limit(&vals).unwrap();
        assert!((r.extrapolated_limit - 1.0).abs() < 1e-12, "{}", r.extrapolated_limit);
        let p = r.slope.fitted().unwrap();
        assert!((p - 1.0).abs() < 1e-10, "{p}");
    }

    #[test]
    fn estimate_limit_noisy_mc() {
        // seeded noise oracle around a known limit
        use rand::Rng;
        let mut rng = crate::rng::stream(5150, 0, StreamTag::Noise);
        let ladder = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
        let sigma = 1e-4;
        let vals: Vec<(f64, f64, Option<f64>)> = ladder
            .iter()
            .map(|&e| {
                let noise: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * sigma;
                (e, 3.0 + 0.5 * e + noise, Some(sigma))
            })
            .collect();
        let r = estimate_limit(&vals).unwrap();
        // limit recovered within a few combined standard errors
        assert!((r.extrapolated_limit - 3.0).abs() < 5.0 * sigma, "{}", r.extrapolated_limit);
    }

    #[test]
    fn estimate_limit_rejects_bad_input() {
        assert!(estimate_limit(&[(0.5, 1.0, None), (0.25, 1.0, None)]).is_err());
        assert!(estimate_limit(&[
            (0.5, 1.0, None),
            (0.25, f64::NAN, None),
            (0.125, 1.0, None)
        ])
        .is_err());
    }

    #[test]
    fn report_csv_shape() {
        let r = estimate_limit(&[(0.125, 1.125, None), (0.0625, 1.0625, None), (0.03125, 1.03125, None)])
            .unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, 1.0).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("eps,t,value,stderr\n"));
        assert!(s.trim_end().lines().last().unwrap().starts_with("#limit="));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// Multilinearity in the first argument and permutation symmetry,
        /// cross-checked against the brute-force oracle.
        #[test]
        fn multilinear_symmetric_matches_oracle(seed in 0u64..500, scale in -2.0f64..2.0) {
            let g = grid(64);
            let x = gen_brownian_stream(g, seed, 0, StreamTag::Primary).unwrap();
            let y = gen_brownian_stream(g, seed, 1, StreamTag::Primary).unwrap();
            let z = gen_brownian_stream(g, seed, 2, StreamTag::Primary).unwrap();
            let eps = 0.125;
            let t = 0.75;

            let base = n_covariation_eps(&[&x, &y, &z], eps, t).unwrap();
            prop_assert!((base - brute_cov(&[&x, &y, &z], eps, t)).abs() < 1e-12);

            // permutation symmetry
            let perm = n_covariation_eps(&[&z, &x, &y], eps, t).unwrap();
            prop_assert!((base - perm).abs() < 1e-12);

            // homogeneity in one slot
            let xs = x.scale(scale, "sx");
            let scaled = n_covariation_eps(&[&xs, &y, &z], eps, t).unwrap();
            prop_assert!((scaled - scale * base).abs() < 1e-10);

            // additivity in one slot
            let xw = x.add(&z, "x+z").unwrap();
            let lhs = n_covariation_eps(&[&xw, &y, &z], eps, t).unwrap();
            let rhs = base + n_covariation_eps(&[&z, &y, &z], eps, t).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
