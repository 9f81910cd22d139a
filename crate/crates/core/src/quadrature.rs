//! One-dimensional rules, product rules on spheres, and ordered summation.

use std::f64::consts::PI;

/// Nodes and weights of a one-dimensional rule on an interval.
#[derive(Debug, Clone)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    /// Gauss-Legendre rule with `m` points mapped to `[a, b]`.
    pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Self {
        assert!(m >= 1);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: nodes.iter().map(|x| mid + half * x).collect(),
            weights: weights.iter().map(|w| half * w).collect(),
        }
    }

    /// Composite Simpson rule on `intervals` (rounded up to even) equal panels.
    pub fn simpson(intervals: usize, a: f64, b: f64) -> Self {
        let m = intervals.max(2).next_multiple_of(2);
        let h = (b - a) / m as f64;
        let nodes = (0..=m).map(|j| a + h * j as f64).collect();
        let weights = (0..=m)
            .map(|j| {
                let c = if j == 0 || j == m {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Self { nodes, weights }
    }

    /// Trapezoid rule on a uniform periodic grid of `m` points over `[0, period)`.
    pub fn periodic(m: usize, period: f64) -> Self {
        let h = period / m as f64;
        Self { nodes: (0..m).map(|j| h * j as f64).collect(), weights: vec![h; m] }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=m {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Area of the unit sphere S^{d} sitting in R^{d+1}.
pub fn sphere_area(d: usize) -> f64 {
    let k = (d + 1) as f64;
    2.0 * PI.powf(k / 2.0) / gamma_half_integer(d + 1)
}

/// Gamma(m / 2) for a positive integer m.
pub fn gamma_half_integer(m: usize) -> f64 {
    assert!(m >= 1);
    if m.is_multiple_of(2) {
        (1..m / 2).map(|j| j as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < m as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Product rule on the unit sphere S^{n-1} in R^n built from hyperspherical
/// angles: Gauss-Legendre in the polar angles, trapezoid in the azimuth.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(n: usize, polar: usize, azimuth: usize) -> Self {
        assert!(n >= 2);
        let phi = Rule1d::periodic(azimuth, 2.0 * PI);
        let thetas = Rule1d::gauss_legendre(polar, 0.0, PI);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let polar_count = n - 2;
        let total = thetas.len().pow(polar_count as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut angles = Vec::with_capacity(polar_count);
            let mut w = 1.0;
            for level in 0..polar_count {
                let t = rem % thetas.len();
                rem /= thetas.len();
                let th = thetas.nodes[t];
                // polar angle `level` carries sin^{n-2-level}
                w *= thetas.weights[t] * th.sin().powi((polar_count - level) as i32);
                angles.push(th);
            }
            for (p, &wp) in phi.nodes.iter().zip(&phi.weights) {
                let mut x = vec![0.0; n];
                let mut s = 1.0;
                for (level, &th) in angles.iter().enumerate() {
                    x[level] = s * th.cos();
                    s *= th.sin();
                }
                x[n - 2] = s * p.cos();
                x[n - 1] = s * p.sin();
                points.push(x);
                weights.push(w * wp);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = Rule1d::gauss_legendre(6, 0.0, 2.0);
        let v = rule.integrate(|x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let rule = Rule1d::simpson(4, -1.0, 3.0);
        let v = rule.integrate(|x| x * x * x - x);
        assert!((v - (81.0 / 4.0 - 1.0 / 4.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_rule_weights_sum_to_area() {
        for n in 2..=5 {
            let rule = SphereRule::new(n, 14, 10);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - sphere_area(n - 1)).abs() < 1e-10, "n = {n} {total} {}", sphere_area(n - 1));
            for p in &rule.points {
                let r: f64 = p.iter().map(|x| x * x).sum();
                assert!((r - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_rule_second_moments() {
        let rule = SphereRule::new(4, 14, 12);
        for axis in 0..4 {
            let m: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[axis] * p[axis]).sum();
            assert!((m - sphere_area(3) / 4.0).abs() < 1e-10);
        }
    }
}
