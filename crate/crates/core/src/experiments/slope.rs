use crate::error::{check_dim, Error, Result};

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_dim(xs.len(), ys.len())?;
    if xs.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("log-log fit needs positive values, got {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all x values are equal".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Vec<f64> {
        (0..9).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).collect()
    }

    #[test]
    fn exact_power_laws() {
        let xs = grid();
        assert!((fit_loglog_slope(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let ys: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
        assert!((fit_loglog_slope(&xs, &ys).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jittered_half_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs = grid();
        let ys: Vec<f64> =
            xs.iter().map(|x| 3.0 * x.sqrt() * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0))).collect();
        let s = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((s - 0.5).abs() <= 0.05, "{s}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_loglog_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_loglog_slope(&[1.0, 2.0, 0.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_loglog_slope(&[1.0, 2.0, 3.0], &[1.0, -2.0, 3.0]).is_err());
        assert!(fit_loglog_slope(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
