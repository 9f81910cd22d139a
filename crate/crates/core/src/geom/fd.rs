//! Finite-difference stencils on smooth callbacks.
//!
//! Interior derivatives use fourth-order central stencils; within two steps of
//! a boundary face the normal direction switches to a third-order one-sided
//! stencil pointing into the domain.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central4,
    Forward3,
    Backward3,
}

impl Stencil {
    /// (offsets in units of h, weights) of the first-derivative stencil.
    pub fn first(self) -> (&'static [f64], &'static [f64]) {
        match self {
            Stencil::Central4 => (&[-2.0, -1.0, 1.0, 2.0], &[1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0]),
            Stencil::Forward3 => (&[0.0, 1.0, 2.0, 3.0], &[-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0]),
            Stencil::Backward3 => (&[0.0, -1.0, -2.0, -3.0], &[11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0]),
        }
    }
}

/// A boundary face `x[axis] = at` with the domain on the side `x[axis] >= at`
/// (or `<=` when `inward` is negative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub axis: usize,
    pub at: f64,
    pub inward: f64,
}

/// Chooses a stencil per point and axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilPolicy {
    pub h: f64,
    pub face: Option<Face>,
}

impl StencilPolicy {
    pub fn central(h: f64) -> Self {
        Self { h, face: None }
    }

    pub fn with_face(h: f64, face: Face) -> Self {
        Self { h, face: Some(face) }
    }

    pub fn stencil(&self, x: &[f64], axis: usize) -> Stencil {
        match self.face {
            Some(f) if f.axis == axis && (x[axis] - f.at) * f.inward < 2.0 * self.h * (1.0 - 1e-9) => {
                if f.inward > 0.0 {
                    Stencil::Forward3
                } else {
                    Stencil::Backward3
                }
            }
            _ => Stencil::Central4,
        }
    }

    /// Partial derivative along `axis` of a vector-valued callback.
    pub fn partial(&self, f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], axis: usize) -> Vec<f64> {
        let (offsets, weights) = self.stencil(x, axis).first();
        let mut out: Option<Vec<f64>> = None;
        let mut y = x.to_vec();
        for (o, w) in offsets.iter().zip(weights) {
            y[axis] = x[axis] + o * self.h;
            let v = f(&y);
            match &mut out {
                None => out = Some(v.iter().map(|a| a * w).collect()),
                Some(acc) => acc.iter_mut().zip(&v).for_each(|(a, b)| *a += w * b),
            }
        }
        out.unwrap().into_iter().map(|a| a / self.h).collect()
    }

    /// All partial derivatives, stacked as `[axis][component]`.
    pub fn gradient(&self, f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Vec<Vec<f64>> {
        (0..x.len()).map(|k| self.partial(f, x, k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_exact_on_cubics() {
        let f = |x: &[f64]| vec![x[0].powi(3) - 2.0 * x[0]];
        for st in [StencilPolicy::central(0.1), StencilPolicy::with_face(0.1, Face { axis: 0, at: 0.5, inward: 1.0 })] {
            let d = st.partial(&f, &[0.5], 0)[0];
            assert!((d - (3.0 * 0.25 - 2.0)).abs() < 1e-12);
        }
        let st = StencilPolicy::with_face(0.1, Face { axis: 0, at: 0.5, inward: -1.0 });
        assert_eq!(st.stencil(&[0.45], 0), Stencil::Backward3);
        assert!((st.partial(&f, &[0.5], 0)[0] - (0.75 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn one_sided_error_is_third_order() {
        let f = |x: &[f64]| vec![x[0].exp()];
        let face = Face { axis: 0, at: 0.0, inward: 1.0 };
        let e = |h: f64| (StencilPolicy::with_face(h, face).partial(&f, &[0.0], 0)[0] - 1.0).abs();
        let order = (e(0.04) / e(0.02)).log2();
        assert!(order > 2.7 && order < 3.3, "order {order}");
    }
}
