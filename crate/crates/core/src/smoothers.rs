//! Kernel smoothers: locally constant fits, a partially local-linear fit,
//! and additive-model backfitting.
//!
//! All kernels are Gaussian. The fit at `(x0, xs0)` weights observation `i`
//! by `K_h1(x_i - x0) * prod_c L_h2c(xs_ic - xs0c)`; normalization constants
//! cancel in every estimator, so weights are computed as
//! `exp(-sum of squared scaled distances / 2)`.

use crate::data::{mean, std_dev};
use crate::error::{Error, Result};

/// Default bandwidth rule: half the empirical standard deviation of the
/// coordinate being smoothed.
pub const BANDWIDTH_FACTOR: f64 = 0.5;

/// Bandwidths for the intervention coordinate (`h1`) and each adjustment
/// coordinate (`h2`, one entry per coordinate).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub h1: f64,
    pub h2: Vec<f64>,
}

impl KernelSpec {
    pub fn new(h1: f64, h2: Vec<f64>) -> Result<Self> {
        for &h in std::iter::once(&h1).chain(h2.iter()) {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidBandwidth(format!("bandwidth {h} must be positive")));
            }
        }
        Ok(KernelSpec { h1, h2 })
    }

    /// The default rule applied to observed columns.
    pub fn from_data(x: &[f64], xs: &[&[f64]]) -> Result<Self> {
        KernelSpec::from_data_scaled(x, xs, BANDWIDTH_FACTOR)
    }

    /// The bandwidth rule with an explicit scale factor.
    pub fn from_data_scaled(x: &[f64], xs: &[&[f64]], factor: f64) -> Result<Self> {
        KernelSpec::new(rule_bandwidth(x, factor, "intervention coordinate")?, {
            let mut h2 = Vec::with_capacity(xs.len());
            for (c, col) in xs.iter().enumerate() {
                h2.push(rule_bandwidth(col, factor, &format!("adjustment coordinate {c}"))?);
            }
            h2
        })
    }
}

pub(crate) fn rule_bandwidth(col: &[f64], factor: f64, what: &str) -> Result<f64> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidBandwidth(format!("bandwidth factor {factor} must be positive")));
    }
    let s = std_dev(col);
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidBandwidth(format!("{what} has zero spread")));
    }
    Ok(factor * s)
}

fn check_design(x: &[f64], xs: &[&[f64]], r: &[f64], xs0: &[f64], ks: &KernelSpec) -> Result<()> {
    if x.is_empty() {
        return Err(Error::ShapeMismatch("empty design".into()));
    }
    if r.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} responses for {} design points",
            r.len(),
            x.len()
        )));
    }
    if xs.len() != xs0.len() || xs.len() != ks.h2.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} adjustment columns, {} query coordinates, {} bandwidths",
            xs.len(),
            xs0.len(),
            ks.h2.len()
        )));
    }
    for col in xs {
        if col.len() != x.len() {
            return Err(Error::ShapeMismatch("adjustment column length mismatch".into()));
        }
    }
    Ok(())
}

/// Squared scaled distance of observation `i` from the query, over the
/// intervention coordinate and all adjustment coordinates.
#[inline]
fn exponent(x: &[f64], xs: &[&[f64]], i: usize, x0: f64, xs0: &[f64], inv1: f64, inv2: &[f64]) -> f64 {
    let d = x[i] - x0;
    let mut e = d * d * inv1;
    for (col, (&q, &inv)) in xs.iter().zip(xs0.iter().zip(inv2)) {
        let d = col[i] - q;
        e += d * d * inv;
    }
    e
}

#[inline]
pub(crate) fn inv_2h2(h: f64) -> f64 {
    1.0 / (2.0 * h * h)
}

/// Locally constant fit: the kernel-weighted mean of `r` at `(x0, xs0)`.
/// Errors when every weight underflows to zero.
pub fn local_constant_fit(
    x: &[f64],
    xs: &[&[f64]],
    r: &[f64],
    x0: f64,
    xs0: &[f64],
    ks: &KernelSpec,
) -> Result<f64> {
    check_design(x, xs, r, xs0, ks)?;
    let inv1 = inv_2h2(ks.h1);
    let inv2: Vec<f64> = ks.h2.iter().map(|&h| inv_2h2(h)).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let w = (-exponent(x, xs, i, x0, xs0, inv1, &inv2)).exp();
        num += w * r[i];
        den += w;
    }
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::ZeroKernelWeight { x: x0, index: 0 });
    }
    Ok(num / den)
}

/// Partially local-linear fit: minimizes
/// `sum_i (r_i - alpha - beta (x_i - x0))^2 * w_i` with the product-kernel
/// weights, locally linear in the intervention coordinate only, and returns
/// `alpha`. Errors on vanished weights and on a singular normal system
/// (e.g. a single effective design point).
pub fn partial_local_linear_fit(
    x: &[f64],
    xs: &[&[f64]],
    r: &[f64],
    x0: f64,
    xs0: &[f64],
    ks: &KernelSpec,
) -> Result<f64> {
    check_design(x, xs, r, xs0, ks)?;
    let inv1 = inv_2h2(ks.h1);
    let inv2: Vec<f64> = ks.h2.iter().map(|&h| inv_2h2(h)).collect();
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let w = (-exponent(x, xs, i, x0, xs0, inv1, &inv2)).exp();
        let d = x[i] - x0;
        let wd = w * d;
        s0 += w;
        s1 += wd;
        s2 += wd * d;
        t0 += w * r[i];
        t1 += wd * r[i];
    }
    alpha_from_moments(s0, s1, s2, t0, t1, x0)
}

/// Solves the 2x2 weighted normal system for the local intercept.
#[inline]
pub(crate) fn alpha_from_moments(
    s0: f64,
    s1: f64,
    s2: f64,
    t0: f64,
    t1: f64,
    x0: f64,
) -> Result<f64> {
    if s0 <= 0.0 || !s0.is_finite() {
        return Err(Error::ZeroKernelWeight { x: x0, index: 0 });
    }
    let det = s0 * s2 - s1 * s1;
    // By Cauchy-Schwarz det >= 0; it degenerates when the weighted design
    // has no spread around the query.
    if det <= f64::EPSILON * s0 * s2 {
        return Err(Error::SingularFit { x: x0 });
    }
    Ok((s2 * t0 - s1 * t1) / det)
}

/// Univariate local-linear smooth of `t` on `x` evaluated at `q`.
pub(crate) fn ll_smooth(x: &[f64], t: &[f64], h: f64, q: f64) -> Result<f64> {
    let inv1 = inv_2h2(h);
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &ti) in x.iter().zip(t) {
        let d = xi - q;
        let w = (-(d * d * inv1)).exp();
        let wd = w * d;
        s0 += w;
        s1 += wd;
        s2 += wd * d;
        t0 += w * ti;
        t1 += wd * ti;
    }
    alpha_from_moments(s0, s1, s2, t0, t1, q)
}

/// Backfitting configuration.
#[derive(Debug, Clone)]
pub struct AdditiveConfig {
    /// Per-predictor bandwidth overrides; the rule applies when absent.
    pub bandwidths: Option<Vec<f64>>,
    pub bandwidth_factor: f64,
    pub max_sweeps: usize,
    /// Convergence threshold as a multiple of the response standard
    /// deviation, applied to the largest pointwise component update.
    pub tol: f64,
}

impl Default for AdditiveConfig {
    fn default() -> Self {
        AdditiveConfig {
            bandwidths: None,
            bandwidth_factor: BANDWIDTH_FACTOR,
            max_sweeps: 50,
            tol: 1e-6,
        }
    }
}

/// One fitted additive component. The component value at a point is the
/// local-linear smooth of the stored partial residuals minus the centering
/// constant, so components average to zero over the training sample.
#[derive(Debug, Clone)]
pub struct AdditiveComponent {
    x: Vec<f64>,
    target: Vec<f64>,
    h: f64,
    center: f64,
}

impl AdditiveComponent {
    pub fn value(&self, q: f64) -> Result<f64> {
        Ok(ll_smooth(&self.x, &self.target, self.h, q)? - self.center)
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }
}

/// A fitted additive model `y = intercept + sum_j m_j(x_j) + error`.
#[derive(Debug, Clone)]
pub struct AdditiveModel {
    intercept: f64,
    components: Vec<AdditiveComponent>,
    component_fits: Vec<Vec<f64>>,
    fitted: Vec<f64>,
    rss_by_sweep: Vec<f64>,
    converged: bool,
    response_std: f64,
}

impl AdditiveModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize) -> &AdditiveComponent {
        &self.components[j]
    }

    /// Fitted component values at the training points.
    pub fn component_fitted(&self, j: usize) -> &[f64] {
        &self.component_fits[j]
    }

    /// Fitted values at the training points.
    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn rss_by_sweep(&self) -> &[f64] {
        &self.rss_by_sweep
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn response_std(&self) -> f64 {
        self.response_std
    }

    /// Prediction at a point given in predictor order.
    pub fn predict(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.components.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates for {} components",
                point.len(),
                self.components.len()
            )));
        }
        let mut acc = self.intercept;
        for (comp, &q) in self.components.iter().zip(point) {
            acc += comp.value(q)?;
        }
        Ok(acc)
    }
}

/// Fits an additive model by backfitting with univariate local-linear
/// component smoothers. The intercept is the response mean and components
/// are mean-centered after every update. Sweeps stop when the largest
/// pointwise update falls below `tol * std(y)` or after `max_sweeps`.
pub fn fit_additive(y: &[f64], predictors: &[&[f64]], cfg: &AdditiveConfig) -> Result<AdditiveModel> {
    let n = y.len();
    if n < 2 {
        return Err(Error::ShapeMismatch("need at least two observations".into()));
    }
    if predictors.is_empty() {
        return Err(Error::InvalidParam("need at least one predictor".into()));
    }
    for col in predictors {
        if col.len() != n {
            return Err(Error::ShapeMismatch("predictor length mismatch".into()));
        }
    }
    if n < 10 * predictors.len() {
        log::warn!(
            "additive fit with {n} observations for {} predictors is poorly determined",
            predictors.len()
        );
    }
    let k = predictors.len();
    let bandwidths: Vec<f64> = match &cfg.bandwidths {
        Some(hs) => {
            if hs.len() != k {
                return Err(Error::InvalidBandwidth(format!(
                    "{} bandwidths for {k} predictors",
                    hs.len()
                )));
            }
            for &h in hs {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::InvalidBandwidth(format!("bandwidth {h} must be positive")));
                }
            }
            hs.clone()
        }
        None => {
            let mut hs = Vec::with_capacity(k);
            for (j, col) in predictors.iter().enumerate() {
                let s = std_dev(col);
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidBandwidth(format!("predictor {j} has zero spread")));
                }
                hs.push(cfg.bandwidth_factor * s);
            }
            hs
        }
    };

    let intercept = mean(y);
    let response_std = std_dev(y);
    let tol = cfg.tol * response_std;

    let mut comps: Vec<Vec<f64>> = vec![vec![0.0; n]; k];
    let mut targets: Vec<Vec<f64>> = vec![vec![0.0; n]; k];
    let mut centers = vec![0.0f64; k];
    // resid[i] = y[i] - intercept - sum_j comps[j][i]
    let mut resid: Vec<f64> = y.iter().map(|&v| v - intercept).collect();
    let mut rss_by_sweep = Vec::new();
    let mut converged = false;
    let mut smooth_buf = vec![0.0f64; n];

    for _sweep in 0..cfg.max_sweeps.max(1) {
        let mut max_change = 0.0f64;
        for j in 0..k {
            let (target, comp) = (&mut targets[j], &mut comps[j]);
            for i in 0..n {
                target[i] = resid[i] + comp[i];
            }
            for i in 0..n {
                smooth_buf[i] = ll_smooth(predictors[j], target, bandwidths[j], predictors[j][i])?;
            }
            let center = mean(&smooth_buf);
            centers[j] = center;
            for i in 0..n {
                let new = smooth_buf[i] - center;
                let change = (new - comp[i]).abs();
                if change > max_change {
                    max_change = change;
                }
                resid[i] += comp[i] - new;
                comp[i] = new;
            }
        }
        rss_by_sweep.push(resid.iter().map(|r| r * r).sum::<f64>());
        if max_change <= tol {
            converged = true;
            break;
        }
    }

    let fitted: Vec<f64> = y.iter().zip(&resid).map(|(&v, &r)| v - r).collect();
    let components = (0..k)
        .map(|j| AdditiveComponent {
            x: predictors[j].to_vec(),
            target: std::mem::take(&mut targets[j]),
            h: bandwidths[j],
            center: centers[j],
        })
        .collect();
    Ok(AdditiveModel {
        intercept,
        components,
        component_fits: comps,
        fitted,
        rss_by_sweep,
        converged,
        response_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    const FIVE_X: [f64; 5] = [-1.2, -0.3, 0.1, 0.8, 1.7];
    const FIVE_S: [f64; 5] = [0.4, -0.9, 0.2, 1.1, -0.5];
    const FIVE_R: [f64; 5] = [2.0, -1.0, 0.5, 3.0, 0.0];

    /// Direct recomputation of the weighted mean with normalized Gaussian
    /// densities, as an independent route to the same ratio.
    fn dense_weighted_mean(x0: f64, s0: f64, h1: f64, h2: f64) -> f64 {
        let norm = |t: f64, h: f64| {
            (-(t * t) / (2.0 * h * h)).exp() / (h * (2.0 * std::f64::consts::PI).sqrt())
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..5 {
            let w = norm(FIVE_X[i] - x0, h1) * norm(FIVE_S[i] - s0, h2);
            num += w * FIVE_R[i];
            den += w;
        }
        num / den
    }

    #[test]
    fn local_constant_matches_direct_weight_formula() {
        let ks = KernelSpec::new(0.7, vec![0.9]).unwrap();
        let s = FIVE_S;
        for (x0, s0) in [(0.0, 0.0), (-0.5, 0.8), (1.2, -0.4)] {
            let got = local_constant_fit(&FIVE_X, &[&s], &FIVE_R, x0, &[s0], &ks).unwrap();
            let want = dense_weighted_mean(x0, s0, 0.7, 0.9);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn local_constant_stays_within_response_range() {
        let ks = KernelSpec::new(0.4, vec![0.6]).unwrap();
        let s = FIVE_S;
        for x0 in [-2.0, -0.1, 0.3, 2.5] {
            let v = local_constant_fit(&FIVE_X, &[&s], &FIVE_R, x0, &[0.1], &ks).unwrap();
            assert!((-1.0..=3.0).contains(&v), "weighted mean {v} outside response range");
        }
    }

    #[test]
    fn vanished_weights_are_an_error() {
        let ks = KernelSpec::new(1.0, vec![]).unwrap();
        let err = local_constant_fit(&FIVE_X, &[], &FIVE_R, 1e6, &[], &ks);
        assert!(matches!(err, Err(Error::ZeroKernelWeight { .. })));
        let err = partial_local_linear_fit(&FIVE_X, &[], &FIVE_R, 1e6, &[], &ks);
        assert!(matches!(err, Err(Error::ZeroKernelWeight { .. })));
    }

    #[test]
    fn shifting_the_response_shifts_both_fits_by_the_constant() {
        let ks = KernelSpec::new(0.7, vec![0.9]).unwrap();
        let s = FIVE_S;
        let shifted: Vec<f64> = FIVE_R.iter().map(|r| r + 5.0).collect();
        let lc = local_constant_fit(&FIVE_X, &[&s], &FIVE_R, 0.2, &[0.3], &ks).unwrap();
        let lc_s = local_constant_fit(&FIVE_X, &[&s], &shifted, 0.2, &[0.3], &ks).unwrap();
        assert!((lc_s - lc - 5.0).abs() < 1e-12);
        let ll = partial_local_linear_fit(&FIVE_X, &[&s], &FIVE_R, 0.2, &[0.3], &ks).unwrap();
        let ll_s = partial_local_linear_fit(&FIVE_X, &[&s], &shifted, 0.2, &[0.3], &ks).unwrap();
        assert!((ll_s - ll - 5.0).abs() < 1e-12);
    }

    #[test]
    fn partial_local_linear_is_exact_on_affine_data() {
        let s = FIVE_S;
        let y: Vec<f64> = FIVE_X.iter().map(|&x| 3.0 - 2.0 * x).collect();
        let ks = KernelSpec::new(0.5, vec![0.8]).unwrap();
        for x0 in [-0.7, 0.0, 1.3] {
            let got = partial_local_linear_fit(&FIVE_X, &[&s], &y, x0, &[0.5], &ks).unwrap();
            let want = 3.0 - 2.0 * x0;
            assert!(
                (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                "{got} vs {want} at {x0}"
            );
        }
    }

    #[test]
    fn degenerate_design_is_singular() {
        let x = [0.5; 4];
        let r = [1.0, 2.0, 3.0, 4.0];
        let ks = KernelSpec::new(1.0, vec![]).unwrap();
        assert!(matches!(
            partial_local_linear_fit(&x, &[], &r, 0.5, &[], &ks),
            Err(Error::SingularFit { .. })
        ));
        // The locally constant fit handles the same design fine.
        let v = local_constant_fit(&x, &[], &r, 0.5, &[], &ks).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
    }

    fn noisy_additive_data(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x1 = Vec::with_capacity(n);
        let mut x2 = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let shared: f64 = StandardNormal.sample(&mut rng);
            let b = 0.6 * a + 0.8 * shared;
            let e: f64 = StandardNormal.sample(&mut rng);
            x1.push(a);
            x2.push(b);
            y.push((2.0 * a).sin() + 0.5 * b * b + 0.3 * e);
        }
        (x1, x2, y)
    }

    #[test]
    fn backfitting_converges_and_explains_structure() {
        let (x1, x2, y) = noisy_additive_data(300, 21);
        let model = fit_additive(&y, &[&x1, &x2], &AdditiveConfig::default()).unwrap();
        let rss = model.rss_by_sweep();
        assert!(rss.len() >= 2, "expected several sweeps, got {}", rss.len());
        // Local-linear smoothers are not symmetric projections, so sweeps may
        // wobble; the fit must still land well below where it started.
        assert!(rss.last().unwrap() <= &rss[0]);
        assert!(model.converged());
        let var_y = std_dev(&y).powi(2) * y.len() as f64;
        assert!(rss.last().unwrap() / var_y < 0.5, "fit explains most structure");
    }

    #[test]
    fn components_are_mean_centered_and_intercept_is_the_mean() {
        let (x1, x2, y) = noisy_additive_data(200, 5);
        let model = fit_additive(&y, &[&x1, &x2], &AdditiveConfig::default()).unwrap();
        assert_eq!(model.intercept(), mean(&y));
        let scale = std_dev(&y);
        for j in 0..2 {
            let m = mean(model.component_fitted(j));
            assert!(m.abs() <= 1e-8 * scale, "component {j} mean {m}");
        }
        // Stored components evaluate back to their training fits.
        for (i, &xv) in x1.iter().enumerate().step_by(40) {
            let direct = model.component(0).value(xv).unwrap();
            assert!((direct - model.component_fitted(0)[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_predictor_backfit_is_the_univariate_smoother_fit() {
        let (x1, _, y) = noisy_additive_data(120, 8);
        let model = fit_additive(&y, &[&x1], &AdditiveConfig::default()).unwrap();
        // One component: the fit must equal the centered univariate smooth of
        // y - mean(y), recomputed here through the public smoother.
        let mu = mean(&y);
        let target: Vec<f64> = y.iter().map(|&v| v - mu).collect();
        let h = model.component(0).bandwidth();
        let ks = KernelSpec::new(h, vec![]).unwrap();
        let smooth: Vec<f64> = x1
            .iter()
            .map(|&q| partial_local_linear_fit(&x1, &[], &target, q, &[], &ks).unwrap())
            .collect();
        let center = mean(&smooth);
        for i in (0..y.len()).step_by(17) {
            let want = mu + smooth[i] - center;
            let got = model.predict(&[x1[i]]).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn bandwidth_overrides_and_degenerate_predictors() {
        let (x1, x2, y) = noisy_additive_data(80, 2);
        let cfg = AdditiveConfig { bandwidths: Some(vec![0.8, 0.4]), ..Default::default() };
        let model = fit_additive(&y, &[&x1, &x2], &cfg).unwrap();
        assert_eq!(model.component(0).bandwidth(), 0.8);
        assert_eq!(model.component(1).bandwidth(), 0.4);
        let constant = vec![1.0; y.len()];
        assert!(matches!(
            fit_additive(&y, &[&constant], &AdditiveConfig::default()),
            Err(Error::InvalidBandwidth(_))
        ));
        let bad = AdditiveConfig { bandwidths: Some(vec![0.5]), ..Default::default() };
        assert!(fit_additive(&y, &[&x1, &x2], &bad).is_err());
    }

    #[test]
    fn constant_response_fits_exactly() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 10.0).collect();
        let y = vec![4.0; 40];
        let model = fit_additive(&y, &[&x], &AdditiveConfig::default()).unwrap();
        assert!(model.converged());
        for q in [0.1, 2.0, 3.9] {
            assert!((model.predict(&[q]).unwrap() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_response_is_reproduced_exactly_by_the_backfit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..60).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| 1.5 + 0.75 * v).collect();
        let model = fit_additive(&y, &[&x], &AdditiveConfig::default()).unwrap();
        for q in [-1.5, 0.0, 1.9] {
            let got = model.predict(&[q]).unwrap();
            let want = 1.5 + 0.75 * q;
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
        }
    }
}
