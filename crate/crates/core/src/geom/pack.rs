//! Per-node curvature over a chart.

use super::chart::Chart;
use super::geometry::{conformal_schouten, PointCurvature, PointGeometry};
use super::tensor::{kulkarni_nomizu, norm_sq, riemann_symmetry_residual, weyl, Tensor};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::io::Write;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PackOptions {
    /// Also compute the Cotton tensor (one more level of differentiation).
    pub cotton: bool,
}

/// Immutable per-node curvature data; `nodes[i]` and `cotton[i]` refer to the same point.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub chart: Chart,
    pub nodes: Vec<PointCurvature>,
    pub cotton: Option<Vec<Tensor>>,
}

/// Curvature at one point; conformally flat charts take `A` from the exact formula
/// and the Weyl tensor as `Riem - A o g`.
pub fn curvature_at(chart: &Chart, x: &[f64]) -> Result<PointCurvature> {
    let metric = chart.metric_fn();
    let geo = PointGeometry::new(chart.n, chart.policy(), &*metric);
    let mut pc = geo.curvature(x)?;
    if chart.is_conformally_flat() {
        if let Some(w) = &chart.w {
            pc.schouten = conformal_schouten(&w.gradient(x), &w.hessian(x));
        } else {
            pc.schouten = DMatrix::zeros(chart.n, chart.n);
        }
        pc.weyl = weyl(&pc.riem, &pc.schouten, &pc.g);
    }
    Ok(pc)
}

/// Schouten tensor field used for derivatives of `A`.
pub fn schouten_at(chart: &Chart, x: &[f64]) -> Result<DMatrix<f64>> {
    if chart.is_conformally_flat() {
        return Ok(match &chart.w {
            Some(w) => conformal_schouten(&w.gradient(x), &w.hessian(x)),
            None => DMatrix::zeros(chart.n, chart.n),
        });
    }
    let metric = chart.metric_fn();
    PointGeometry::new(chart.n, chart.policy(), &*metric).schouten(x)
}

/// `C_{ijk} = A_{ij,k} - A_{ik,j}` at one point.
pub fn cotton_at(chart: &Chart, x: &[f64]) -> Result<Tensor> {
    let n = chart.n;
    let metric = chart.metric_fn();
    let geo = PointGeometry::new(n, chart.policy(), &*metric);
    let field = |y: &[f64]| {
        schouten_at(chart, y).map(|a| Tensor::from_matrix(&a)).unwrap_or_else(|_| Tensor {
            n,
            rank: 2,
            data: vec![f64::NAN; n * n],
        })
    };
    let da = geo.covariant(&field, x)?;
    if da.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Geometry { node: x.to_vec() });
    }
    let mut c = Tensor::zeros(n, 3);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                c.set(&[i, j, k], da.get(&[i, j, k]) - da.get(&[i, k, j]));
            }
        }
    }
    Ok(c)
}

/// Curvature at every grid node of the chart.
pub fn build_curvature(chart: &Chart) -> Result<CurvaturePack> {
    build_curvature_with(chart, PackOptions::default())
}

pub fn build_curvature_with(chart: &Chart, opts: PackOptions) -> Result<CurvaturePack> {
    build_curvature_at(chart, &chart.nodes(), opts)
}

/// Curvature at the given points; evaluation is per point, so the result does not
/// depend on scheduling.
pub fn build_curvature_at(chart: &Chart, points: &[Vec<f64>], opts: PackOptions) -> Result<CurvaturePack> {
    for x in points {
        if chart.metric(x).cholesky().is_none() {
            return Err(Error::Geometry { node: x.clone() });
        }
    }
    let nodes = points.par_iter().map(|x| curvature_at(chart, x)).collect::<Result<Vec<_>>>()?;
    let cotton = if opts.cotton {
        Some(points.par_iter().map(|x| cotton_at(chart, x)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    Ok(CurvaturePack { chart: chart.clone(), nodes, cotton })
}

impl CurvaturePack {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest pointwise `|W|_g`.
    pub fn max_weyl_norm(&self) -> f64 {
        self.nodes.iter().map(|p| norm_sq(&p.weyl, &p.ginv).max(0.0).sqrt()).fold(0.0, f64::max)
    }

    pub fn max_cotton(&self) -> Option<f64> {
        self.cotton.as_ref().map(|c| c.iter().map(Tensor::max_abs).fold(0.0, f64::max))
    }

    /// Largest violation of the Riemann symmetries and the first Bianchi identity.
    pub fn max_symmetry_residual(&self) -> f64 {
        self.nodes.iter().map(|p| riemann_symmetry_residual(&p.riem)).fold(0.0, f64::max)
    }

    /// Largest entry of `Riem - W - A o g`.
    pub fn max_decomposition_residual(&self) -> f64 {
        self.nodes
            .iter()
            .map(|p| {
                let kn = kulkarni_nomizu(&p.schouten, &p.g);
                let mut r = 0.0f64;
                for (idx, v) in p.riem.data.iter().enumerate() {
                    r = r.max((v - p.weyl.data[idx] - kn.data[idx]).abs());
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of `A - g/2`, the defect from the round-sphere Schouten tensor.
    pub fn max_half_metric_defect(&self) -> f64 {
        self.nodes.iter().map(|p| (&p.schouten - &p.g * 0.5).abs().max()).fold(0.0, f64::max)
    }

    /// CSV with node coordinates, `R`, `|W|`, and the components of `g` and `A`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.chart.n;
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        header.push("scalar".into());
        header.push("weyl_norm".into());
        for name in ["g", "A"] {
            for i in 0..n {
                for j in i..n {
                    header.push(format!("{name}{i}{j}"));
                }
            }
        }
        wtr.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for p in &self.nodes {
            let mut row: Vec<String> = p.x.iter().map(|v| v.to_string()).collect();
            row.push(p.scal.to_string());
            row.push(norm_sq(&p.weyl, &p.ginv).max(0.0).sqrt().to_string());
            for m in [&p.g, &p.schouten] {
                for i in 0..n {
                    for j in i..n {
                        row.push(m[(i, j)].to_string());
                    }
                }
            }
            wtr.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        wtr.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::field::{Radial, RoundSphere};
    use std::sync::Arc;

    #[test]
    fn flat_half_ball_has_no_curvature() {
        let chart = Chart::half_ball_flat(3, 7).unwrap();
        let pack = build_curvature_with(&chart, PackOptions { cotton: true }).unwrap();
        assert!(!pack.is_empty());
        for p in &pack.nodes {
            assert!(p.riem.max_abs() < 1e-12);
            assert!(p.schouten.abs().max() < 1e-12);
        }
        assert!(pack.max_cotton().unwrap() < 1e-12);
    }

    #[test]
    fn round_ball_model_has_half_metric_schouten() {
        let chart = Chart::ball_conformally_flat(4, 7, Arc::new(Radial::new(RoundSphere))).unwrap();
        let pack = build_curvature(&chart).unwrap();
        assert!(pack.max_half_metric_defect() < 1e-12);
        assert!(pack.max_decomposition_residual() < 1e-12);
        let fine = chart.with_resolution(81).unwrap();
        let pts = vec![vec![0.1, 0.2, -0.3, 0.0], vec![-0.5, 0.4, 0.1, 0.6]];
        let pack = build_curvature_at(&fine, &pts, PackOptions::default()).unwrap();
        assert!(pack.max_weyl_norm() < 1e-4, "{}", pack.max_weyl_norm());
    }

    #[test]
    fn pack_is_independent_of_thread_count() {
        let chart = Chart::ball_conformally_flat(3, 7, Arc::new(Radial::new(RoundSphere))).unwrap();
        let a = build_curvature(&chart).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| build_curvature(&chart).unwrap());
        for (p, q) in a.nodes.iter().zip(&b.nodes) {
            assert_eq!(p.riem.data, q.riem.data);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let chart = Chart::half_ball_flat(2, 5).unwrap();
        let pack = build_curvature(&chart).unwrap();
        let mut buf = Vec::new();
        pack.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,x1,scalar,weyl_norm,g00"));
        assert_eq!(text.lines().count(), pack.len() + 1);
    }

    #[test]
    fn indefinite_metric_reports_node() {
        let metric: crate::geom::chart::MetricFn =
            Arc::new(|x: &[f64]| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, x[0] - 0.5])));
        let face = crate::geom::fd::Face { axis: 1, at: 0.0, inward: 1.0 };
        let chart = Chart::general(5, vec![0.0, 0.0], vec![1.0, 1.0], face, metric).unwrap();
        match build_curvature(&chart) {
            Err(Error::Geometry { node }) => assert!(node[0] <= 0.5),
            other => panic!("{other:?}"),
        }
    }
}
