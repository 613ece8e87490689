use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::csv::fmt_num;
use super::slope::fit_loglog_slope;
use crate::config::KeyValueFile;
use crate::error::{Error, Result};
use crate::operators::{DenseOperator, DiagonalOperator, ForwardOperator, LinearOperator};
use crate::penalty::{bregman_taylor_lambda, kappa, WeightedPenalty};
use crate::seqspace::{norm2, TruncatedSequence, WeightSequence};
use crate::solvers::{solve_diagonal, solve_iterative, IterativeOptions, RegularizedProblem};
use crate::source::construct_sourced_instance;

/// Closed interval of acceptable fitted slopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeBand {
    pub lo: f64,
    pub hi: f64,
}

impl SlopeBand {
    pub fn around(center: f64, half_width: f64) -> Self {
        Self { lo: center - half_width, hi: center + half_width }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Diagonal testbed `sigma_k = k^{-s}` with a sparse sourced `u+` and the
/// parameter choice `alpha = c delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateExperimentConfig {
    pub n: usize,
    pub sigma_decay: f64,
    /// 1-based indices of the support of `u+`.
    pub support: Vec<usize>,
    /// Signed values of `u+` on the support.
    pub values: Vec<f64>,
    pub p: f64,
    pub weight: f64,
    /// Strictly decreasing noise levels.
    pub delta_grid: Vec<f64>,
    /// `c` in `alpha = c delta`.
    pub alpha_c: f64,
    pub noise_seed: u64,
    pub trials_per_delta: usize,
    /// Use `e = 0` in every trial (the data then is exact, `delta` only
    /// enters through `alpha` and the bounds).
    pub noiseless: bool,
    /// Re-solve the first trial at the largest `delta` iteratively and
    /// compare with the diagonal solution.
    pub cross_check: bool,
    /// Band for the slope of `||u - u+||_1` (checked at `p = 1`).
    pub band_slope1: SlopeBand,
    /// Band for the slope of `||u - u+||_2` (checked for `p > 1`).
    pub band_slope2: SlopeBand,
    /// Band for the slope of `sum w_k |u_k - u+_k|^2` (checked for `p > 1`).
    pub band_slope2_weighted_sq: SlopeBand,
}

/// `count` log-spaced points from `hi` down to `lo` (inclusive).
pub fn log_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.log10(), lo.log10());
    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count as f64 - 1.0))).collect()
}

impl RateExperimentConfig {
    /// `N = 200`, `sigma_k = 1/k`, `u+ = (1, -2, 0.5, 3, -1, 0, ...)`,
    /// `w = 1`, nine noise levels from `1e-1` to `1e-5`, ten trials each,
    /// `alpha = delta`.
    pub fn default_testbed(p: f64) -> Self {
        Self {
            n: 200,
            sigma_decay: 1.0,
            support: vec![1, 2, 3, 4, 5],
            values: vec![1.0, -2.0, 0.5, 3.0, -1.0],
            p,
            weight: 1.0,
            delta_grid: log_grid(1e-1, 1e-5, 9),
            alpha_c: 1.0,
            noise_seed: 0,
            trials_per_delta: 10,
            noiseless: false,
            cross_check: true,
            band_slope1: SlopeBand::around(0.5, 0.1),
            band_slope2: SlopeBand::around(0.5, 0.1),
            band_slope2_weighted_sq: SlopeBand::around(1.0, 0.2),
        }
    }

    pub const KEYS: &'static [&'static str] = &[
        "n",
        "sigma_decay",
        "support",
        "values",
        "p",
        "weight",
        "delta_grid",
        "delta_max",
        "delta_min",
        "delta_points",
        "alpha_c",
        "trials",
        "noiseless",
        "cross_check",
        "band_slope1",
        "band_slope2",
        "band_slope2_weighted_sq",
    ];

    /// Reads a flat key-value config; absent keys take the default testbed
    /// values. `p` is required.
    pub fn from_config_text(text: &str, noise_seed: u64) -> Result<Self> {
        let kv = KeyValueFile::parse(text, Self::KEYS)?;
        let mut cfg = Self::default_testbed(kv.float("p")?);
        cfg.noise_seed = noise_seed;
        cfg.n = kv.uint_or("n", cfg.n as u64)? as usize;
        cfg.sigma_decay = kv.float_or("sigma_decay", cfg.sigma_decay)?;
        if let Some(s) = kv.list::<usize>("support")? {
            cfg.support = s;
        }
        if let Some(v) = kv.list::<f64>("values")? {
            cfg.values = v;
        }
        cfg.weight = kv.float_or("weight", cfg.weight)?;
        if let Some(g) = kv.list::<f64>("delta_grid")? {
            cfg.delta_grid = g;
        } else if kv.contains("delta_max") || kv.contains("delta_min") || kv.contains("delta_points") {
            let hi = kv.float_or("delta_max", 1e-1)?;
            let lo = kv.float_or("delta_min", 1e-5)?;
            let count = kv.uint_or("delta_points", 9)? as usize;
            if count < 1 || !(hi > 0.0 && lo > 0.0) {
                return Err(Error::InvalidParameter("delta_max/min must be > 0 and delta_points >= 1".into()));
            }
            cfg.delta_grid = log_grid(hi, lo, count);
        }
        cfg.alpha_c = kv.float_or("alpha_c", cfg.alpha_c)?;
        cfg.trials_per_delta = kv.uint_or("trials", cfg.trials_per_delta as u64)? as usize;
        cfg.noiseless = kv.string_opt("noiseless")?.map(|s| parse_bool(&s)).transpose()?.unwrap_or(false);
        cfg.cross_check = kv.string_opt("cross_check")?.map(|s| parse_bool(&s)).transpose()?.unwrap_or(cfg.cross_check);
        for (key, band) in [
            ("band_slope1", &mut cfg.band_slope1),
            ("band_slope2", &mut cfg.band_slope2),
            ("band_slope2_weighted_sq", &mut cfg.band_slope2_weighted_sq),
        ] {
            if let Some(v) = kv.list::<f64>(key)? {
                if v.len() != 2 || v[0] > v[1] {
                    return Err(Error::InvalidParameter(format!("{key} needs 'lo hi' with lo <= hi")));
                }
                *band = SlopeBand { lo: v[0], hi: v[1] };
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1.0..=2.0).contains(&self.p) {
            return bad(format!("rate experiments need 1 <= p <= 2, got {}", self.p));
        }
        if self.n < 1 {
            return bad("n must be >= 1".into());
        }
        if !(self.sigma_decay.is_finite() && self.sigma_decay >= 0.0) {
            return bad(format!("sigma_decay must be >= 0, got {}", self.sigma_decay));
        }
        if self.support.is_empty() || self.support.len() != self.values.len() {
            return bad("support and values must be nonempty and of equal length".into());
        }
        if let Some(k) = self.support.iter().find(|&&k| k < 1 || k > self.n) {
            return bad(format!("support index {k} outside [1, {}]", self.n));
        }
        if self.values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return bad("values on the support must be nonzero".into());
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return bad(format!("weight must be > 0, got {}", self.weight));
        }
        if self.delta_grid.is_empty() || self.delta_grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return bad("delta_grid must be nonempty with positive entries".into());
        }
        if self.delta_grid.windows(2).any(|w| w[1] >= w[0]) {
            return bad("delta_grid must be strictly decreasing".into());
        }
        if !(self.alpha_c > 0.0 && self.alpha_c.is_finite()) {
            return bad(format!("alpha_c must be > 0, got {}", self.alpha_c));
        }
        if self.trials_per_delta < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.p == 1.0 && self.alpha_c * self.delta_grid[0] >= 1.0 {
            return bad("the p = 1 bound needs alpha = c delta < 1 on the whole grid".into());
        }
        Ok(())
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidParameter(format!("expected a boolean, got '{s}'"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub delta: f64,
    pub trial: usize,
    pub alpha: f64,
    /// `||K u - g^delta||`.
    pub residual_norm: f64,
    /// `sum w_k |u_k - u+_k|^2`.
    pub err2_weighted: f64,
    /// `||u - u+||_2`.
    pub err2: f64,
    /// `||u - u+||_1`.
    pub err1: f64,
    /// `delta + 2 alpha rho`.
    pub bound_data: f64,
    /// `(delta + alpha rho)^2 / (alpha kappa)` for `p > 1`, bounding
    /// `err2_weighted`; `(delta + alpha rho)^2 / (lambda alpha (1 - alpha))`
    /// for `p = 1`, bounding `err1^2`.
    pub bound_recon: f64,
}

impl RateRow {
    /// The quantity bounded by `bound_recon`.
    pub fn recon_value(&self, p: f64) -> f64 {
        if p == 1.0 {
            self.err1 * self.err1
        } else {
            self.err2_weighted
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub p: f64,
    pub rows: Vec<RateRow>,
    pub slope1: Option<f64>,
    pub slope2: Option<f64>,
    pub slope2_weighted_sq: Option<f64>,
    pub rho: f64,
    /// Certified `lambda` (p = 1 only).
    pub lambda: Option<f64>,
    /// Largest `1 / kappa` used over the rows (p > 1 only).
    pub max_inv_kappa: Option<f64>,
    /// `||u_iterative - u_diagonal||_2` for the cross-checked solve.
    pub cross_check_diff: Option<f64>,
    pub bounds_ok: bool,
    /// Descriptions of fitted slopes outside their bands.
    pub band_failures: Vec<String>,
}

impl RateReport {
    pub fn slopes_ok(&self) -> bool {
        self.band_failures.is_empty()
    }

    /// CSV with one row per `(delta, trial)` and a trailing `#` summary.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,alpha,residual_norm,err2_weighted,err1,bound_data,bound_recon\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                fmt_num(r.delta),
                fmt_num(r.alpha),
                fmt_num(r.residual_norm),
                fmt_num(r.err2_weighted),
                fmt_num(r.err1),
                fmt_num(r.bound_data),
                fmt_num(r.bound_recon)
            );
        }
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "NaN".into());
        let _ = writeln!(s, "# p {}", fmt_num(self.p));
        let _ = writeln!(s, "# slope2 {}", opt(self.slope2));
        let _ = writeln!(s, "# slope1 {}", opt(self.slope1));
        let _ = writeln!(s, "# slope2_weighted_sq {}", opt(self.slope2_weighted_sq));
        let _ = writeln!(s, "# rho {}", fmt_num(self.rho));
        if let Some(l) = self.lambda {
            let _ = writeln!(s, "# lambda {}", fmt_num(l));
        }
        if let Some(k) = self.max_inv_kappa {
            let _ = writeln!(s, "# max_inv_kappa {}", fmt_num(k));
        }
        if let Some(d) = self.cross_check_diff {
            let _ = writeln!(s, "# cross_check_diff {}", fmt_num(d));
        }
        let _ = writeln!(s, "# bounds_ok {}", self.bounds_ok);
        let _ = writeln!(s, "# slopes_ok {}", self.slopes_ok());
        s
    }
}

/// Noise uniformly distributed on the sphere of radius `delta` in `R^m`.
pub fn sphere_noise(m: usize, delta: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut e: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm2(&e);
        if n > 0.0 {
            e.iter_mut().for_each(|v| *v *= delta / n);
            return e;
        }
    }
}

/// Reports `1/kappa(p, C, L)` for each `p`, showing the blow-up as `p -> 1`.
pub fn kappa_constants_report(ps: &[f64], c: f64, l: f64) -> Result<Vec<(f64, f64)>> {
    ps.iter().map(|&p| Ok((p, 1.0 / kappa(p, c, l)?))).collect()
}

struct Testbed {
    op: DiagonalOperator,
    u_plus: TruncatedSequence,
    clean: Vec<f64>,
    pen: WeightedPenalty,
    rho: f64,
    lambda: Option<f64>,
    m_radius: f64,
}

fn build_testbed(cfg: &RateExperimentConfig) -> Result<Testbed> {
    let op = DiagonalOperator::power_decay(cfg.n, cfg.sigma_decay)?;
    let pen = WeightedPenalty::new(cfg.p, WeightSequence::uniform(cfg.n, cfg.weight)?)?;
    let support: Vec<usize> = cfg.support.iter().map(|k| k - 1).collect();
    let signs: Vec<f64> = cfg.values.iter().map(|v| v.signum()).collect();
    let mags: Vec<f64> = cfg.values.iter().map(|v| v.abs()).collect();
    let (u_plus, cert) = construct_sourced_instance(&op, &support, &signs, &mags, &pen)?;
    let clean = op.apply(&u_plus)?;
    let m_radius = 2.0 * u_plus.norm1() + 1.0;
    let lambda = if cfg.p == 1.0 {
        let dense = DenseOperator::from(&op);
        Some(bregman_taylor_lambda(&dense, &u_plus, pen.weights(), m_radius)?.lambda)
    } else {
        None
    };
    Ok(Testbed { op, u_plus, clean, pen, rho: cert.rho, lambda, m_radius })
}

const BOUND_SLACK: f64 = 1e-12;

fn run_trial(
    cfg: &RateExperimentConfig,
    tb: &Testbed,
    delta_index: usize,
    trial: usize,
) -> Result<(RateRow, Option<f64>, RegularizedProblem)> {
    let delta = cfg.delta_grid[delta_index];
    let alpha = cfg.alpha_c * delta;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
    rng.set_stream((delta_index * cfg.trials_per_delta + trial) as u64);
    let data: Vec<f64> = if cfg.noiseless {
        tb.clean.clone()
    } else {
        let e = sphere_noise(cfg.n, delta, &mut rng);
        tb.clean.iter().zip(&e).map(|(a, b)| a + b).collect()
    };
    let prob = RegularizedProblem::new(ForwardOperator::Diagonal(tb.op.clone()), data, delta, alpha, tb.pen.clone())?;
    let sol = solve_diagonal(&prob)?;
    let r = prob.residual(&sol.u)?;
    let diff = sol.u.checked_sub(&tb.u_plus)?;
    let w = tb.pen.weights();
    let err2_weighted: f64 = diff.iter().zip(w.as_slice()).map(|(d, wk)| wk * d * d).sum();
    let err1 = diff.norm1();
    let rho = tb.rho;
    let (bound_recon, inv_kappa) = if cfg.p == 1.0 {
        if err1 > tb.m_radius {
            return Err(Error::BoundViolation(format!(
                "delta={delta:e} trial={trial}: ||u - u+||_1 = {err1:e} leaves the ball of radius M = {}",
                tb.m_radius
            )));
        }
        let lam = tb.lambda.expect("lambda for p = 1");
        ((delta + alpha * rho).powi(2) / (lam * alpha * (1.0 - alpha)), None)
    } else {
        let c = tb.u_plus.norm_inf();
        let l = diff.norm_inf().max(f64::MIN_POSITIVE);
        let kap = kappa(cfg.p, c, l)?;
        ((delta + alpha * rho).powi(2) / (alpha * kap), Some(1.0 / kap))
    };
    let row = RateRow {
        delta,
        trial,
        alpha,
        residual_norm: norm2(&r),
        err2_weighted,
        err2: diff.norm2(),
        err1,
        bound_data: delta + 2.0 * alpha * rho,
        bound_recon,
    };
    if row.residual_norm > row.bound_data * (1.0 + BOUND_SLACK) {
        return Err(Error::BoundViolation(format!(
            "data-side bound: delta={delta:e} trial={trial} residual={:e} > delta + 2 alpha rho = {:e}",
            row.residual_norm, row.bound_data
        )));
    }
    let value = row.recon_value(cfg.p);
    if value > row.bound_recon * (1.0 + BOUND_SLACK) {
        return Err(Error::BoundViolation(format!(
            "reconstruction bound: delta={delta:e} trial={trial} value={value:e} > {:e}",
            row.bound_recon
        )));
    }
    Ok((row, inv_kappa, prob))
}

/// Runs the sweep over `delta_grid x trials`, checking the data-side and
/// reconstruction bounds on every row (a violation is an error) and
/// fitting log-log slopes of the trial-averaged errors.
pub fn run_rate_experiment(cfg: &RateExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    let tb = build_testbed(cfg)?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.delta_grid.len()).flat_map(|i| (0..cfg.trials_per_delta).map(move |t| (i, t))).collect();
    let results: Vec<Result<(RateRow, Option<f64>, RegularizedProblem)>> =
        jobs.par_iter().map(|&(i, t)| run_trial(cfg, &tb, i, t)).collect();
    let mut rows = Vec::with_capacity(jobs.len());
    let mut max_inv_kappa: Option<f64> = None;
    let mut first_problem = None;
    for res in results {
        let (row, ik, prob) = res?;
        if let Some(ik) = ik {
            max_inv_kappa = Some(max_inv_kappa.map_or(ik, |m| m.max(ik)));
        }
        if first_problem.is_none() {
            first_problem = Some(prob);
        }
        rows.push(row);
    }

    let cross_check_diff = if cfg.cross_check {
        let prob = first_problem.expect("at least one row");
        let exact = solve_diagonal(&prob)?;
        let iter = solve_iterative(&prob, None, IterativeOptions { max_iter: 200_000, tol: 1e-11 })?;
        let d = iter.u.checked_sub(&exact.u)?.norm2();
        if !iter.converged || d > 1e-8 {
            return Err(Error::BoundViolation(format!(
                "iterative cross-check disagrees with the diagonal solver: diff {d:e}, converged {}",
                iter.converged
            )));
        }
        Some(d)
    } else {
        None
    };

    let trials = cfg.trials_per_delta as f64;
    let mean = |f: &dyn Fn(&RateRow) -> f64| -> Vec<f64> {
        rows.chunks(cfg.trials_per_delta).map(|c| c.iter().map(f).sum::<f64>() / trials).collect()
    };
    let deltas = &cfg.delta_grid;
    let fit = |ys: Vec<f64>| fit_loglog_slope(deltas, &ys).ok();
    let slope1 = fit(mean(&|r| r.err1));
    let slope2 = fit(mean(&|r| r.err2));
    let slope2_weighted_sq = fit(mean(&|r| r.err2_weighted));

    let mut band_failures = Vec::new();
    let mut check = |name: &str, v: Option<f64>, band: SlopeBand| match v {
        Some(s) if band.contains(s) => {}
        Some(s) => band_failures.push(format!("{name} = {s:.4} outside [{}, {}]", band.lo, band.hi)),
        None => band_failures.push(format!("{name} could not be fitted")),
    };
    if cfg.p == 1.0 {
        check("slope1", slope1, cfg.band_slope1);
    } else {
        check("slope2", slope2, cfg.band_slope2);
        check("slope2_weighted_sq", slope2_weighted_sq, cfg.band_slope2_weighted_sq);
    }

    Ok(RateReport {
        p: cfg.p,
        rows,
        slope1,
        slope2,
        slope2_weighted_sq,
        rho: tb.rho,
        lambda: tb.lambda,
        max_inv_kappa,
        cross_check_diff,
        bounds_ok: true,
        band_failures,
    })
}
