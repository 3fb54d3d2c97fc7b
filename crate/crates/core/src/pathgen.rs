//! Path generators: Brownian and (bi)fractional Brownian motion, composite
//! drivers realizing the decomposition `xi = R + Q`, and seeded ensembles.
//!
//! Fractional Brownian motion has stationary increments, so it is sampled
//! exactly by circulant embedding of the increment covariance (an exact
//! factorization of the embedded covariance matrix, O(n log n) per path).
//! The bifractional process has no stationary increments and goes through a
//! dense Cholesky factor of the node covariance, cached in memory and
//! optionally on disk.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{Grid, SamplePath};
use crate::rng::{stream, StreamTag};

/// Autocovariance of unit-spacing fractional Gaussian noise.
fn fgn_autocov(h: f64, lag: usize) -> f64 {
    let k = lag as f64;
    0.5 * ((k + 1.0).powf(2.0 * h) - 2.0 * k.powf(2.0 * h) + (k - 1.0).abs().powf(2.0 * h))
}

fn circulant_eigenvalues(h: f64, n: usize) -> Result<Vec<f64>> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex::new(fgn_autocov(h, lag), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut row);
    let max = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut eig = Vec::with_capacity(m);
    for (i, c) in row.iter().enumerate() {
        if c.re < -1e-8 * max {
            return Err(Error::NotPositiveDefinite { row: i, pivot: c.re });
        }
        eig.push(c.re.max(0.0));
    }
    Ok(eig)
}

static EIG_CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<Vec<f64>>>>> = OnceLock::new();

fn cached_eigenvalues(h: f64, n: usize) -> Result<Arc<Vec<f64>>> {
    let cache = EIG_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (h.to_bits(), n);
    if let Some(e) = cache.lock().unwrap().get(&key) {
        return Ok(e.clone());
    }
    let eig = Arc::new(circulant_eigenvalues(h, n)?);
    cache
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| eig.clone());
    Ok(eig)
}

/// Exact fractional Brownian motion sample on the grid, `B_0 = 0`.
pub fn gen_fbm(grid: Grid, hurst: f64, seed: u64) -> Result<SamplePath> {
    gen_fbm_stream(grid, hurst, seed, 0, StreamTag::Primary)
}

/// fBm draw from an explicit `(master_seed, replication, tag)` stream.
pub fn gen_fbm_stream(
    grid: Grid,
    hurst: f64,
    master_seed: u64,
    replication: u64,
    tag: StreamTag,
) -> Result<SamplePath> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::BadParameter(format!("hurst {hurst} not in (0, 1)")));
    }
    let n = grid.n_steps();
    let eig = cached_eigenvalues(hurst, n)?;
    let m = 2 * n;
    let mut rng = stream(master_seed, replication, tag);
    let mut coeff = vec![Complex::new(0.0, 0.0); m];
    let z0: f64 = rng.sample(StandardNormal);
    let zn: f64 = rng.sample(StandardNormal);
    coeff[0] = Complex::new((eig[0] / m as f64).sqrt() * z0, 0.0);
    coeff[n] = Complex::new((eig[n] / m as f64).sqrt() * zn, 0.0);
    for j in 1..n {
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        let s = (eig[j] / (2.0 * m as f64)).sqrt();
        coeff[j] = Complex::new(s * u, s * v);
        coeff[m - j] = coeff[j].conj();
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut coeff);
    let scale = grid.step().powf(hurst);
    let mut values = Vec::with_capacity(grid.n_nodes());
    values.push(0.0);
    let mut acc = 0.0;
    for c in coeff.iter().take(n) {
        acc += scale * c.re;
        values.push(acc);
    }
    SamplePath::new(grid, values, format!("fbm(H={hurst})"))
}

/// Standard Brownian motion (fBm with `H = 1/2`; the circulant embedding
/// degenerates to iid increments).
pub fn gen_brownian(grid: Grid, seed: u64) -> Result<SamplePath> {
    gen_fbm(grid, 0.5, seed)
}

pub fn gen_brownian_stream(
    grid: Grid,
    master_seed: u64,
    replication: u64,
    tag: StreamTag,
) -> Result<SamplePath> {
    gen_fbm_stream(grid, 0.5, master_seed, replication, tag)
}

/// fBm covariance `Cov(B_s, B_t) = (s^2H + t^2H - |t-s|^2H) / 2`.
pub fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

/// Bifractional covariance `2^-K ((t^2H + s^2H)^K - |t-s|^2HK)`.
pub fn bifbm_cov(h: f64, k: f64, s: f64, t: f64) -> f64 {
    ((t.powf(2.0 * h) + s.powf(2.0 * h)).powf(k) - (t - s).abs().powf(2.0 * h * k))
        / 2f64.powf(k)
}

/// Packed lower-triangular Cholesky factor of a node covariance matrix
/// (nodes `1..=n`; node 0 is pinned at zero for a process starting at 0).
pub struct CovFactor {
    pub n: usize,
    pub params: Vec<f64>,
    /// Row-major packed lower triangle, `n(n+1)/2` entries.
    pub lower: Vec<f64>,
}

const CACHE_MAGIC: &[u8; 8] = b"COVFACT\0";
const CACHE_VERSION: u32 = 1;

impl CovFactor {
    /// Factorizes the matrix `cov(i, j)`, `1 <= i, j <= n`. On a non-positive
    /// pivot the diagonal is bumped by `1e-12 * trace / n` once before giving
    /// up.
    pub fn build(n: usize, params: Vec<f64>, cov: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let trace: f64 = (1..=n).map(|i| cov(i, i)).sum();
        match Self::try_build(n, &cov, 0.0) {
            Ok(lower) => Ok(CovFactor { n, params, lower }),
            Err(_) => {
                let jitter = 1e-12 * trace / n as f64;
                let lower = Self::try_build(n, &cov, jitter)?;
                Ok(CovFactor { n, params, lower })
            }
        }
    }

    fn try_build(n: usize, cov: &impl Fn(usize, usize) -> f64, jitter: f64) -> Result<Vec<f64>> {
        let mut l = vec![0.0; n * (n + 1) / 2];
        let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
        for i in 0..n {
            for j in 0..=i {
                let mut sum = cov(i + 1, j + 1);
                if i == j {
                    sum += jitter;
                }
                for k in 0..j {
                    sum -= l[idx(i, k)] * l[idx(j, k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[idx(i, j)] = sum.sqrt();
                } else {
                    l[idx(i, j)] = sum / l[idx(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// One Gaussian sample through the factor; returns `n + 1` node values
    /// with a leading zero.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        let mut values = Vec::with_capacity(self.n + 1);
        values.push(0.0);
        for i in 0..self.n {
            let row = &self.lower[i * (i + 1) / 2..(i + 1) * (i + 2) / 2];
            values.push(row.iter().zip(&z).map(|(a, b)| a * b).sum());
        }
        values
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.params.len() as u32).to_le_bytes())?;
        for p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        for v in &self.lower {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a cached factor; `None` on any mismatch (magic, version, size,
    /// parameters) so the caller recomputes silently.
    pub fn read(mut r: impl Read, n: usize, params: &[f64]) -> Option<CovFactor> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).ok()?;
        if &magic != CACHE_MAGIC {
            return None;
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).ok()?;
        if u32::from_le_bytes(b4) != CACHE_VERSION {
            return None;
        }
        r.read_exact(&mut b8).ok()?;
        if u64::from_le_bytes(b8) != n as u64 {
            return None;
        }
        r.read_exact(&mut b4).ok()?;
        if u32::from_le_bytes(b4) as usize != params.len() {
            return None;
        }
        for p in params {
            r.read_exact(&mut b8).ok()?;
            if f64::from_le_bytes(b8) != *p {
                return None;
            }
        }
        let mut lower = vec![0.0; n * (n + 1) / 2];
        for v in lower.iter_mut() {
            r.read_exact(&mut b8).ok()?;
            *v = f64::from_le_bytes(b8);
        }
        Some(CovFactor {
            n,
            params: params.to_vec(),
            lower,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>, n: usize, params: &[f64]) -> Option<CovFactor> {
        let f = std::fs::File::open(path).ok()?;
        Self::read(std::io::BufReader::new(f), n, params)
    }
}

static FACTOR_CACHE: OnceLock<Mutex<HashMap<(String, usize, Vec<u64>), Arc<CovFactor>>>> =
    OnceLock::new();

fn cached_factor(
    name: &str,
    grid: Grid,
    params: &[f64],
    cov: impl Fn(f64, f64) -> f64,
) -> Result<Arc<CovFactor>> {
    let cache = FACTOR_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (
        name.to_string(),
        grid.n_steps(),
        params.iter().map(|p| p.to_bits()).collect::<Vec<_>>(),
    );
    if let Some(f) = cache.lock().unwrap().get(&key) {
        return Ok(f.clone());
    }
    let n = grid.n_steps();
    let factor = Arc::new(CovFactor::build(n, params.to_vec(), |i, j| {
        cov(grid.node(i), grid.node(j))
    })?);
    cache
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| factor.clone());
    Ok(factor)
}

/// Bifractional Brownian motion via a cached dense Cholesky factor.
pub fn gen_bifractional(grid: Grid, h: f64, k: f64, seed: u64) -> Result<SamplePath> {
    gen_bifractional_stream(grid, h, k, seed, 0, StreamTag::Primary)
}

pub fn gen_bifractional_stream(
    grid: Grid,
    h: f64,
    k: f64,
    master_seed: u64,
    replication: u64,
    tag: StreamTag,
) -> Result<SamplePath> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::BadParameter(format!("h {h} not in (0, 1)")));
    }
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::BadParameter(format!("k {k} not in (0, 1]")));
    }
    let factor = cached_factor("bifbm", grid, &[h, k], |s, t| bifbm_cov(h, k, s, t))?;
    let mut rng = stream(master_seed, replication, tag);
    let values = factor.sample(&mut rng);
    SamplePath::new(grid, values, format!("bifbm(H={h},K={k})"))
}

/// Dense-Cholesky fBm draw; the slow exact route, used to cross-check the
/// circulant sampler.
pub fn gen_fbm_cholesky(grid: Grid, hurst: f64, seed: u64) -> Result<SamplePath> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::BadParameter(format!("hurst {hurst} not in (0, 1)")));
    }
    let factor = cached_factor("fbm", grid, &[hurst], |s, t| fbm_cov(hurst, s, t))?;
    let mut rng = stream(seed, 0, StreamTag::Primary);
    let values = factor.sample(&mut rng);
    SamplePath::new(grid, values, format!("fbm-chol(H={hurst})"))
}

/// Descriptor of a one-path generator, parseable from a config string.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Zero,
    Brownian,
    Fbm { hurst: f64 },
    Bifractional { h: f64, k: f64 },
    /// Deterministic `t -> t`.
    Linear,
    /// Deterministic `t -> t^2`.
    Square,
    /// `Q_t = sin(W_t)` of the companion Brownian path.
    SinW,
}

impl GeneratorSpec {
    /// Parses `zero | brownian | fbm:H | bifbm:H:K | linear | square | sinw`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| -> Result<f64> {
            p.parse()
                .map_err(|_| Error::UnknownGenerator(s.to_string()))
        };
        match parts.as_slice() {
            ["zero"] => Ok(GeneratorSpec::Zero),
            ["brownian"] | ["bm"] | ["w"] => Ok(GeneratorSpec::Brownian),
            ["fbm", h] => Ok(GeneratorSpec::Fbm { hurst: num(h)? }),
            ["bifbm", h, k] => Ok(GeneratorSpec::Bifractional {
                h: num(h)?,
                k: num(k)?,
            }),
            ["linear"] | ["t"] => Ok(GeneratorSpec::Linear),
            ["square"] | ["t2"] => Ok(GeneratorSpec::Square),
            ["sinw"] => Ok(GeneratorSpec::SinW),
            _ => Err(Error::UnknownGenerator(s.to_string())),
        }
    }

    /// Draws one path from this generator on the given stream. `companion`
    /// is the Brownian path a functional generator reads.
    pub fn generate(
        &self,
        grid: Grid,
        master_seed: u64,
        replication: u64,
        tag: StreamTag,
        companion: Option<&SamplePath>,
    ) -> Result<SamplePath> {
        match self {
            GeneratorSpec::Zero => Ok(SamplePath::zero(grid)),
            GeneratorSpec::Brownian => match companion {
                Some(w) => Ok(w.clone()),
                None => gen_brownian_stream(grid, master_seed, replication, tag),
            },
            GeneratorSpec::Fbm { hurst } => {
                gen_fbm_stream(grid, *hurst, master_seed, replication, tag)
            }
            GeneratorSpec::Bifractional { h, k } => {
                gen_bifractional_stream(grid, *h, *k, master_seed, replication, tag)
            }
            GeneratorSpec::Linear => SamplePath::from_fn(grid, "t", |t| t),
            GeneratorSpec::Square => SamplePath::from_fn(grid, "t^2", |t| t * t),
            GeneratorSpec::SinW => {
                let w = match companion {
                    Some(w) => w.clone(),
                    None => gen_brownian_stream(grid, master_seed, replication, tag)?,
                };
                let values = w.values().iter().map(|v| v.sin()).collect();
                SamplePath::new(grid, values, "sin(W)")
            }
        }
    }
}

/// A driver `xi = R + Q` carried with its decomposition and the companion
/// martingale paths, so the hypothesis-(D) structure is available to the
/// checkers.
#[derive(Debug, Clone)]
pub struct CompositePath {
    pub xi: SamplePath,
    pub r_part: SamplePath,
    pub q_part: SamplePath,
    pub companions: Vec<SamplePath>,
}

impl CompositePath {
    /// Wraps a plain driver with the trivial decomposition `R = xi, Q = 0`.
    /// Suitable when `xi` itself has zero bracket against the companions.
    pub fn from_r(xi: SamplePath) -> Self {
        let q = SamplePath::zero(xi.grid());
        CompositePath {
            r_part: xi.clone(),
            q_part: q,
            companions: Vec::new(),
            xi,
        }
    }

    /// Wraps a semimartingale driver as `Q = xi, R = 0` with itself as the
    /// companion.
    pub fn from_q(xi: SamplePath) -> Self {
        let r = SamplePath::zero(xi.grid());
        CompositePath {
            r_part: r,
            q_part: xi.clone(),
            companions: vec![xi.clone()],
            xi,
        }
    }

    pub fn grid(&self) -> Grid {
        self.xi.grid()
    }
}

/// `xi = R + Q` with R independent of (Q, W) through disjoint RNG streams:
/// R reads the `RPart` stream, W the `Companion` stream, and Q is built from
/// W (or drawn from `QPart` when it does not reference W).
pub fn gen_composite(
    grid: Grid,
    r_spec: &GeneratorSpec,
    q_spec: &GeneratorSpec,
    master_seed: u64,
    replication: u64,
) -> Result<CompositePath> {
    let w = gen_brownian_stream(grid, master_seed, replication, StreamTag::Companion)?;
    let r_part = r_spec.generate(grid, master_seed, replication, StreamTag::RPart, None)?;
    let q_part = q_spec.generate(grid, master_seed, replication, StreamTag::QPart, Some(&w))?;
    let xi = r_part.add(&q_part, "xi")?;
    Ok(CompositePath {
        xi,
        r_part,
        q_part,
        companions: vec![w],
    })
}

/// Deterministic Weierstrass-type path
/// `f(t) = sum_k 2^(-alpha k) cos(2^k pi (t + phase))`, Holder continuous of
/// exponent exactly `alpha`; handy as a deterministic Holder test sample.
pub fn weierstrass_path(grid: Grid, alpha: f64, phase: f64) -> Result<SamplePath> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::BadParameter(format!("alpha {alpha} not in (0, 1)")));
    }
    SamplePath::from_fn(grid, format!("weierstrass({alpha})"), |t| {
        let mut acc = 0.0;
        for k in 1..=40u32 {
            let freq = 2f64.powi(k as i32);
            acc += freq.powf(-alpha) * (freq * std::f64::consts::PI * (t + phase)).cos();
        }
        acc
    })
}

/// A seeded batch of paths; replication `k` depends only on
/// `(master_seed, k)`, so the batch is reproducible under any scheduling.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub master_seed: u64,
    pub paths: Vec<SamplePath>,
}

impl PathEnsemble {
    /// Fills the ensemble concurrently, one replication per worker.
    pub fn generate(
        master_seed: u64,
        n_reps: usize,
        gen: impl Fn(u64) -> Result<SamplePath> + Sync,
    ) -> Result<PathEnsemble> {
        let paths: Result<Vec<SamplePath>> =
            (0..n_reps as u64).into_par_iter().map(&gen).collect();
        Ok(PathEnsemble {
            master_seed,
            paths: paths?,
        })
    }
}

/// Per-replication map over an ensemble-sized index range, in parallel,
/// preserving order.
pub fn par_replications<T: Send>(
    n_reps: usize,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    (0..n_reps as u64).into_par_iter().map(&f).collect()
}
