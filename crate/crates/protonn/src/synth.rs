//! A synthetic two-class family with analytic regression function, margin,
//! boundary distance and Bayes error.
//!
//! Instances are uniform on the unit ball in `R^d`; the class-1 conditional
//! probability grows piecewise-linearly in the radius and crosses 1/2 on the
//! sphere of radius `t`, which is therefore the decision boundary. The family
//! has a density bounded away from zero on bounded support, Lipschitz
//! conditionals, linear noise-mass decay near the boundary, and a margin that
//! grows linearly with the distance from the boundary — all with known
//! constants, which makes it a controlled testbed for rate measurements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{LabeledDataset, Label, Point};
use crate::util::sample_ball;

/// Tolerance for points numerically on the unit sphere.
const SUPPORT_SLACK: f64 = 1e-12;

/// The radial two-class distribution: uniform instances on the unit ball,
/// decision boundary on the sphere of radius `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSpec {
    d: usize,
    t: f64,
}

impl RadialSpec {
    pub fn new(d: usize, t: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::invalid(format!(
                "boundary radius must lie in (0,1), got {t}"
            )));
        }
        Ok(RadialSpec { d, t })
    }

    /// Default boundary radius `1 - 1/(3 * 2^(1/d))`, which balances the two
    /// class marginals.
    pub fn with_default_t(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let t = 1.0 - 1.0 / (3.0 * 2f64.powf(1.0 / d as f64));
        RadialSpec::new(d, t)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n_classes(&self) -> usize {
        2
    }

    /// Margin-growth constant: eta(x) = delta(x)/t inside the boundary and
    /// delta(x)/(1-t) outside, so eta >= c1 * delta with c1 = min of the two.
    pub fn gmc_constant(&self) -> f64 {
        (1.0 / self.t).min(1.0 / (1.0 - self.t))
    }

    /// Lipschitz constant of the class-1 conditional.
    pub fn lipschitz_constant(&self) -> f64 {
        (0.5 / self.t).max(0.5 / (1.0 - self.t))
    }

    fn radius_checked(&self, x: &Point) -> Result<f64> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.dim(),
            });
        }
        let r = x.norm();
        if r > 1.0 + SUPPORT_SLACK {
            return Err(Error::OutOfSupport(r));
        }
        Ok(r.min(1.0))
    }

    fn p1_radial(&self, r: f64) -> f64 {
        if r <= self.t {
            r / (2.0 * self.t)
        } else {
            0.5 + (r - self.t) / (2.0 * (1.0 - self.t))
        }
    }

    /// Class-1 conditional probability at `x`.
    pub fn p1(&self, x: &Point) -> Result<f64> {
        Ok(self.p1_radial(self.radius_checked(x)?))
    }

    /// Noise margin `|P1 - P0|`.
    pub fn eta(&self, x: &Point) -> Result<f64> {
        Ok((2.0 * self.p1(x)? - 1.0).abs())
    }

    /// Distance from `x` to the decision boundary (the sphere of radius `t`).
    pub fn delta(&self, x: &Point) -> Result<f64> {
        Ok((self.radius_checked(x)? - self.t).abs())
    }

    /// The optimal decision: class 1 strictly outside the boundary sphere,
    /// class 0 on and inside it.
    pub fn bayes_label(&self, x: &Point) -> Result<Label> {
        Ok(if self.p1(x)? > 0.5 { Label(1) } else { Label(0) })
    }

    /// The minimal achievable error, by adaptive-Simpson quadrature of
    /// `min(P1, P0)` against the radial density `d r^(d-1)` to 1e-8 absolute.
    pub fn bayes_error(&self) -> f64 {
        let integrand = |r: f64| {
            let p = self.p1_radial(r);
            p.min(1.0 - p) * self.d as f64 * r.powi(self.d as i32 - 1)
        };
        // The integrand kinks at t; integrate each smooth piece separately.
        adaptive_simpson(&integrand, 0.0, self.t, 5e-9)
            + adaptive_simpson(&integrand, self.t, 1.0, 5e-9)
    }

    /// `n` i.i.d. samples: uniform ball instances, labels Bernoulli(P1(x)).
    pub fn sample(&self, n: usize, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = vec![0.0; self.d];
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let coords = sample_ball(&mut rng, &center, 1.0);
            let r = coords.iter().map(|c| c * c).sum::<f64>().sqrt().min(1.0);
            let p1 = self.p1_radial(r);
            let y = if rng.gen::<f64>() < p1 { 1 } else { 0 };
            points.push(Point::from_raw(coords));
            labels.push(Label(y));
        }
        LabeledDataset::new(points, labels, self.d, 2).expect("constructed valid")
    }

    /// Numerically probes the distribution's standing assumptions and returns
    /// the measured constants.
    pub fn check_conditions(&self, n_probe: usize, seed: u64) -> ConditionReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = vec![0.0; self.d];
        let probes: Vec<Point> = (0..n_probe.max(100))
            .map(|_| Point::from_raw(sample_ball(&mut rng, &center, 1.0)))
            .collect();

        // Density lower bound: local density estimates at interior centers
        // against the uniform reference 1/vol(B_d). The window grows with the
        // dimension to keep the expected in-window count stable.
        let density_ref = 1.0 / unit_ball_volume(self.d);
        let h = (200.0 / probes.len() as f64)
            .powf(1.0 / self.d as f64)
            .clamp(0.2, 0.45);
        let mut density_min = f64::INFINITY;
        let mut centers = 0usize;
        for c in &probes {
            if centers >= 50 {
                break;
            }
            if c.norm() > 1.0 - h {
                continue;
            }
            centers += 1;
            let inside = probes
                .iter()
                .filter(|p| crate::geom::dist_sq(p.coords(), c.coords()) < h * h)
                .count();
            let est = inside as f64 / (probes.len() as f64 * unit_ball_volume(self.d) * h.powi(self.d as i32));
            density_min = density_min.min(est);
        }
        let density_pass = density_min > 0.25 * density_ref;

        // Noise-mass decay: P(eta <= s)/s over a grid of thresholds. The
        // piecewise-linear margin keeps the ratio below d.
        let mut tsybakov_max_ratio = 0.0f64;
        for step in 1..=10 {
            let s = step as f64 / 10.0;
            let mass = probes
                .iter()
                .filter(|p| self.eta(p).unwrap() <= s)
                .count() as f64
                / probes.len() as f64;
            tsybakov_max_ratio = tsybakov_max_ratio.max(mass / s);
        }
        let tsybakov_pass = tsybakov_max_ratio <= 2.0 * self.d as f64;

        // Smoothness of the conditional.
        let hoelder_bound = self.lipschitz_constant();
        let hoelder_max_ratio =
            hoelder_probe(|x| self.p1(x).unwrap(), self.d, 2000, seed ^ 0x5EED);
        let hoelder_pass = hoelder_max_ratio <= hoelder_bound * (1.0 + 1e-9);

        // Margin growth away from the boundary.
        let gmc_c1 = self.gmc_constant();
        let mut gmc_min_ratio = f64::INFINITY;
        for p in &probes {
            let delta = self.delta(p).unwrap();
            if delta > 1e-9 {
                let eta = self.eta(p).unwrap();
                gmc_min_ratio = gmc_min_ratio.min(eta / delta.min(1.0 / gmc_c1));
            }
        }
        let gmc_pass = gmc_min_ratio >= gmc_c1 * (1.0 - 1e-9);

        ConditionReport {
            n_probe: probes.len(),
            seed,
            density_min,
            density_ref,
            density_pass,
            tsybakov_max_ratio,
            tsybakov_pass,
            hoelder_max_ratio,
            hoelder_bound,
            hoelder_pass,
            gmc_min_ratio,
            gmc_c1,
            gmc_pass,
        }
    }
}

/// Maximum observed ratio `|f(x) - f(x')| / ||x - x'||` over random pairs at
/// several separation scales inside the unit ball. A Lipschitz `f` keeps this
/// near its constant; a discontinuous `f` blows it up as the scale shrinks.
pub fn hoelder_probe<F: Fn(&Point) -> f64>(f: F, d: usize, n_pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = vec![0.0; d];
    let mut max_ratio = 0.0f64;
    let scales = [1e-1, 1e-2, 1e-3, 1e-4];
    for i in 0..n_pairs {
        let x = sample_ball(&mut rng, &center, 1.0 - 2e-1);
        let step = scales[i % scales.len()];
        let x2 = sample_ball(&mut rng, &x, step);
        let px = Point::from_raw(x);
        let px2 = Point::from_raw(x2);
        let dist = crate::geom::distance(&px, &px2).unwrap();
        if dist > 1e-12 {
            max_ratio = max_ratio.max((f(&px) - f(&px2)).abs() / dist);
        }
    }
    max_ratio
}

/// Measured constants from probing a spec's standing assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub n_probe: usize,
    pub seed: u64,
    pub density_min: f64,
    pub density_ref: f64,
    pub density_pass: bool,
    pub tsybakov_max_ratio: f64,
    pub tsybakov_pass: bool,
    pub hoelder_max_ratio: f64,
    pub hoelder_bound: f64,
    pub hoelder_pass: bool,
    pub gmc_min_ratio: f64,
    pub gmc_c1: f64,
    pub gmc_pass: bool,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.density_pass && self.tsybakov_pass && self.hoelder_pass && self.gmc_pass
    }
}

/// Volume of the unit ball in `R^d` via the two-step recurrence.
pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= std::f64::consts::TAU / k as f64;
        k += 2;
    }
    v
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(f, a, m, fa, flm, fm);
    let right = simpson(f, m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature to the given absolute tolerance.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(f, a, b, fa, fm, fb);
    adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    /// Closed-form Bayes error for the radial family, used as an independent
    /// oracle for the quadrature:
    ///   inner piece  : d t^d / (2 (d+1))
    ///   outer piece  : ((1 - t^d) - d (1 - t^(d+1)) / (d+1)) / (2 (1-t))
    fn bayes_error_closed_form(d: usize, t: f64) -> f64 {
        let df = d as f64;
        let inner = df * t.powi(d as i32) / (2.0 * (df + 1.0));
        let outer = ((1.0 - t.powi(d as i32))
            - df * (1.0 - t.powi(d as i32 + 1)) / (df + 1.0))
            / (2.0 * (1.0 - t));
        inner + outer
    }

    #[test]
    fn p1_endpoints() {
        let spec = RadialSpec::with_default_t(2).unwrap();
        let t = spec.t();
        assert_eq!(spec.p1(&pt(&[0.0, 0.0])).unwrap(), 0.0);
        assert!((spec.p1(&pt(&[t, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        assert!((spec.p1(&pt(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn p1_outside_support_errors() {
        let spec = RadialSpec::with_default_t(2).unwrap();
        assert!(matches!(
            spec.p1(&pt(&[1.5, 0.0])),
            Err(Error::OutOfSupport(_))
        ));
    }

    #[test]
    fn eta_and_delta_spot_values() {
        let spec = RadialSpec::new(2, 0.6).unwrap();
        let origin = pt(&[0.0, 0.0]);
        assert_eq!(spec.eta(&origin).unwrap(), 1.0);
        assert_eq!(spec.delta(&origin).unwrap(), 0.6);
        let boundary = pt(&[0.6, 0.0]);
        assert!(spec.eta(&boundary).unwrap() < 1e-15);
        assert!(spec.delta(&boundary).unwrap() < 1e-15);
        // eta == |P1 - P0| pointwise.
        for r in [0.1, 0.3, 0.59, 0.61, 0.9] {
            let x = pt(&[r, 0.0]);
            let p1 = spec.p1(&x).unwrap();
            assert!((spec.eta(&x).unwrap() - (p1 - (1.0 - p1)).abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn gmc_tightness_pointwise() {
        let spec = RadialSpec::new(2, 0.7).unwrap();
        for r in [0.05, 0.2, 0.5, 0.69, 0.71, 0.85, 0.99] {
            let x = pt(&[r, 0.0]);
            let eta = spec.eta(&x).unwrap();
            let delta = spec.delta(&x).unwrap();
            let c = if r <= 0.7 { 1.0 / 0.7 } else { 1.0 / 0.3 };
            assert!((eta - c * delta).abs() < 1e-12, "r = {r}");
            assert!(eta >= spec.gmc_constant() * delta - 1e-12);
        }
    }

    #[test]
    fn bayes_label_cases() {
        let spec = RadialSpec::with_default_t(2).unwrap();
        assert_eq!(spec.bayes_label(&pt(&[0.0, 0.0])).unwrap(), Label(0));
        assert_eq!(spec.bayes_label(&pt(&[0.99, 0.0])).unwrap(), Label(1));
        // Exactly on the boundary ties to class 0.
        let t = spec.t();
        assert_eq!(spec.bayes_label(&pt(&[t, 0.0])).unwrap(), Label(0));
    }

    #[test]
    fn bayes_label_is_argmax_of_conditionals() {
        let spec = RadialSpec::with_default_t(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = Point::from_raw(sample_ball(&mut rng, &[0.0; 3], 1.0));
            let p1 = spec.p1(&x).unwrap();
            let want = if p1 > 1.0 - p1 { Label(1) } else { Label(0) };
            assert_eq!(spec.bayes_label(&x).unwrap(), want);
        }
    }

    #[test]
    fn bayes_error_matches_closed_form() {
        for d in [1usize, 2, 3, 5] {
            let spec = RadialSpec::with_default_t(d).unwrap();
            let got = spec.bayes_error();
            let want = bayes_error_closed_form(d, spec.t());
            assert!(
                (got - want).abs() < 1e-8,
                "d={d}: quadrature {got} vs closed form {want}"
            );
            assert!(got > 0.0 && got < 0.5);
        }
        let spec = RadialSpec::new(2, 0.5).unwrap();
        assert!((spec.bayes_error() - bayes_error_closed_form(2, 0.5)).abs() < 1e-8);
    }

    #[test]
    fn bayes_error_matches_monte_carlo() {
        let spec = RadialSpec::with_default_t(2).unwrap();
        let quad = spec.bayes_error();
        // Monte-Carlo oracle: error of the Bayes rule on a large sample.
        let n = 10_000_000usize;
        let data = spec.sample(n, 777);
        let mut wrong = 0usize;
        for i in 0..n {
            if spec.bayes_label(data.point(i)).unwrap() != data.label(i) {
                wrong += 1;
            }
        }
        let mc = wrong as f64 / n as f64;
        let se = (quad * (1.0 - quad) / n as f64).sqrt();
        assert!(
            (mc - quad).abs() <= 3.0 * se,
            "mc {mc} vs quadrature {quad} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn sample_is_deterministic_and_in_support() {
        let spec = RadialSpec::with_default_t(2).unwrap();
        let a = spec.sample(500, 9);
        let b = spec.sample(500, 9);
        assert_eq!(a, b);
        for p in a.points() {
            assert!(p.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sample_label_frequencies_match_p1() {
        let spec = RadialSpec::with_default_t(2).unwrap();
        let n = 100_000;
        let data = spec.sample(n, 31);
        // Empirical P(Y=1 | ||x|| < t/2) vs the mean of p1 there.
        let t = spec.t();
        let mut inside = 0usize;
        let mut ones = 0usize;
        let mut p1_sum = 0.0;
        for i in 0..n {
            if data.point(i).norm() < t / 2.0 {
                inside += 1;
                p1_sum += spec.p1(data.point(i)).unwrap();
                if data.label(i) == Label(1) {
                    ones += 1;
                }
            }
        }
        let freq = ones as f64 / inside as f64;
        let mean_p1 = p1_sum / inside as f64;
        let se = (mean_p1 * (1.0 - mean_p1) / inside as f64).sqrt();
        assert!(
            (freq - mean_p1).abs() <= 3.0 * se,
            "freq {freq} vs mean p1 {mean_p1}"
        );
    }

    #[test]
    fn conditions_pass_for_radial_specs() {
        for spec in [
            RadialSpec::with_default_t(2).unwrap(),
            RadialSpec::new(2, 0.5).unwrap(),
            RadialSpec::with_default_t(3).unwrap(),
        ] {
            let report = spec.check_conditions(20_000, 5);
            assert!(report.all_pass(), "{report:?}");
        }
    }

    #[test]
    fn hoelder_probe_rejects_discontinuous_conditional() {
        // A step function is not Lipschitz; the probe ratio explodes well
        // past the radial family's constant.
        let spec = RadialSpec::with_default_t(2).unwrap();
        let step = |x: &Point| if x.coords()[0] > 0.0 { 1.0 } else { 0.0 };
        let ratio = hoelder_probe(step, 2, 2000, 99);
        assert!(ratio > 100.0 * spec.lipschitz_constant());
    }

    #[test]
    fn quadrature_self_consistency() {
        // Halving the tolerance moves the result by less than the tolerance.
        let spec = RadialSpec::with_default_t(2).unwrap();
        let f = |r: f64| {
            let p = if r <= spec.t() {
                r / (2.0 * spec.t())
            } else {
                0.5 + (r - spec.t()) / (2.0 * (1.0 - spec.t()))
            };
            p.min(1.0 - p) * 2.0 * r
        };
        let coarse = adaptive_simpson(&f, 0.0, spec.t(), 1e-8)
            + adaptive_simpson(&f, spec.t(), 1.0, 1e-8);
        let fine = adaptive_simpson(&f, 0.0, spec.t(), 5e-10)
            + adaptive_simpson(&f, spec.t(), 1.0, 5e-10);
        assert!((coarse - fine).abs() < 1e-8);
    }

    #[test]
    fn ball_volume_known_values() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(RadialSpec::new(0, 0.5).is_err());
        assert!(RadialSpec::new(2, 0.0).is_err());
        assert!(RadialSpec::new(2, 1.0).is_err());
        let spec = RadialSpec::with_default_t(2).unwrap();
        assert!((spec.t() - (1.0 - 1.0 / (3.0 * 2f64.sqrt()))).abs() < 1e-15);
    }
}
