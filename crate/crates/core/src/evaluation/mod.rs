//! Scoring detections against ground truth over a tolerance sweep.

mod io;
mod matching;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use io::{curve_csv, curves_svg, summary_json};
pub use matching::{iou_setwise, match_detections, nearest_ground_truth, Correspondence, Counts};

use crate::groundtruth::GroundTruthTable;
use crate::mesh::{geodesic_distances, TriMesh};
use crate::{exec, Error, Result};

/// Tolerances as fractions of the diameter: 0, 0.01, ..., 0.12.
pub fn default_r_grid() -> Vec<f64> {
    (0..=12).map(|i| i as f64 / 100.0).collect()
}

/// Trapezoidal area under `ys` sampled at `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

/// Curves for one (σ, n) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub sigma: f64,
    pub n: usize,
    pub iou: Vec<f64>,
    pub fne: Vec<f64>,
    pub fpe: Vec<f64>,
    /// Area under the IOU curve.
    pub auc: f64,
    /// Pooled counts per tolerance; summed over folds after aggregation.
    pub counts: Vec<Counts>,
    /// Mean of the per-fold AUCs; equals `auc` for a single fold.
    pub fold_auc_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub r: Vec<f64>,
    pub curves: Vec<Curve>,
    pub folds: usize,
}

impl EvalReport {
    pub fn curve(&self, sigma: f64, n: usize) -> Option<&Curve> {
        self.curves.iter().find(|c| c.n == n && c.sigma == sigma)
    }
}

/// One test model: its mesh, detected vertices and ground truth.
pub struct EvalModel<'a> {
    pub mesh: &'a TriMesh,
    pub detections: Vec<usize>,
    pub ground_truth: &'a GroundTruthTable,
}

fn check_grid(r: &[f64]) -> Result<()> {
    if r.is_empty() || r.iter().any(|x| !(*x >= 0.0)) || r.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "r grid must be nonempty, nonnegative and strictly ascending: {r:?}"
        )));
    }
    Ok(())
}

/// Geodesic distance from each detection to every vertex in `targets`.
fn detection_distances(
    mesh: &TriMesh,
    detections: &[usize],
    targets: &[usize],
) -> Result<Vec<BTreeMap<usize, f64>>> {
    exec::map_slice(detections, |&a| {
        let d = geodesic_distances(mesh, &[a])?;
        Ok(targets.iter().map(|&t| (t, d[t])).collect())
    })
    .into_iter()
    .collect()
}

/// Pooled curves over a set of models, one per requested cell.
pub fn sweep(models: &[EvalModel], cells: &[(f64, usize)], r: &[f64]) -> Result<EvalReport> {
    check_grid(r)?;
    // counts[cell][r] pooled over models.
    let mut pooled = vec![vec![Counts::default(); r.len()]; cells.len()];
    for m in models {
        let mut missing = Vec::new();
        let gts: Vec<Vec<usize>> = cells
            .iter()
            .map(|&(s, n)| match m.ground_truth.get(s, n) {
                Some(c) => c.vertices(),
                None => {
                    missing.push(format!("{s}:{n}"));
                    Vec::new()
                }
            })
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingCells(format!(
                "model {}: {}",
                m.ground_truth.model,
                missing.join(", ")
            )));
        }
        let targets: Vec<usize> = gts
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if let Some(&v) = m
            .detections
            .iter()
            .chain(&targets)
            .find(|&&v| v >= m.mesh.vertex_count())
        {
            return Err(Error::InvalidArgument(format!(
                "model {}: vertex {v} out of range",
                m.ground_truth.model
            )));
        }
        let dist = detection_distances(m.mesh, &m.detections, &targets)?;
        for (ci, gt) in gts.iter().enumerate() {
            let matrix: Vec<Vec<f64>> = dist
                .iter()
                .map(|row| gt.iter().map(|g| row[g]).collect())
                .collect();
            for (ri, &rv) in r.iter().enumerate() {
                let eps = rv * m.mesh.diameter();
                let corr = match_detections(&matrix, gt.len(), eps);
                pooled[ci][ri] = pooled[ci][ri] + corr.counts();
            }
        }
    }
    let curves = cells
        .iter()
        .zip(pooled)
        .map(|(&(sigma, n), counts)| {
            let iou: Vec<f64> = counts.iter().map(Counts::iou).collect();
            let auc = trapezoid(r, &iou);
            Curve {
                sigma,
                n,
                fne: counts.iter().map(Counts::fne).collect(),
                fpe: counts.iter().map(Counts::fpe).collect(),
                iou,
                auc,
                counts,
                fold_auc_mean: auc,
            }
        })
        .collect();
    Ok(EvalReport {
        r: r.to_vec(),
        curves,
        folds: 1,
    })
}

/// Pointwise mean of fold curves with the AUC recomputed on the mean.
pub fn crossval_aggregate(folds: &[EvalReport]) -> Result<EvalReport> {
    let first = folds
        .first()
        .ok_or_else(|| Error::InvalidArgument("no fold reports to aggregate".into()))?;
    for f in folds {
        let same_cells = f.curves.len() == first.curves.len()
            && f.curves
                .iter()
                .zip(&first.curves)
                .all(|(a, b)| a.sigma == b.sigma && a.n == b.n);
        if f.r != first.r || !same_cells {
            return Err(Error::InvalidArgument(
                "fold reports use different (sigma, n, r) grids".into(),
            ));
        }
    }
    let k = folds.len() as f64;
    let mean = |pick: &dyn Fn(&Curve) -> &Vec<f64>, ci: usize| -> Vec<f64> {
        (0..first.r.len())
            .map(|ri| folds.iter().map(|f| pick(&f.curves[ci])[ri]).sum::<f64>() / k)
            .collect()
    };
    let curves = first
        .curves
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let iou = mean(&|c| &c.iou, ci);
            Curve {
                sigma: c.sigma,
                n: c.n,
                auc: trapezoid(&first.r, &iou),
                fne: mean(&|c| &c.fne, ci),
                fpe: mean(&|c| &c.fpe, ci),
                iou,
                counts: (0..first.r.len())
                    .map(|ri| folds.iter().map(|f| f.curves[ci].counts[ri]).sum())
                    .collect(),
                fold_auc_mean: folds.iter().map(|f| f.curves[ci].auc).sum::<f64>() / k,
            }
        })
        .collect();
    Ok(EvalReport {
        r: first.r.clone(),
        curves,
        folds: folds.iter().map(|f| f.folds).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::icosphere;
    use crate::groundtruth::{GroundTruth, GroundTruthPoint};

    fn table(vs: &[usize]) -> GroundTruthTable {
        GroundTruthTable {
            model: "m".into(),
            cells: vec![GroundTruth {
                model: "m".into(),
                sigma: 0.03,
                n: 2,
                points: vs
                    .iter()
                    .map(|&vertex| GroundTruthPoint { vertex, support: 2 })
                    .collect(),
            }],
        }
    }

    #[test]
    fn perfect_detections_give_ones() {
        let mesh = icosphere(2, 1.0);
        let gt = table(&[0, 10, 50]);
        let m = EvalModel {
            mesh: &mesh,
            detections: vec![50, 0, 10],
            ground_truth: &gt,
        };
        let rep = sweep(&[m], &[(0.03, 2)], &default_r_grid()).unwrap();
        let c = &rep.curves[0];
        assert!(c.iou.iter().all(|&x| x == 1.0));
        assert!((c.auc - 0.12).abs() < 1e-15);
        assert!(c.fne.iter().chain(&c.fpe).all(|&x| x == 0.0));
    }

    #[test]
    fn missing_cell_is_an_error() {
        let mesh = icosphere(1, 1.0);
        let gt = table(&[0]);
        let m = EvalModel {
            mesh: &mesh,
            detections: vec![],
            ground_truth: &gt,
        };
        assert!(matches!(
            sweep(&[m], &[(0.05, 2)], &[0.0]),
            Err(Error::MissingCells(_))
        ));
    }

    #[test]
    fn iou_grows_with_tolerance() {
        let mesh = icosphere(3, 1.0);
        let gt = table(&[0, 100, 200, 300]);
        let m = EvalModel {
            mesh: &mesh,
            detections: vec![1, 101, 250, 400, 9],
            ground_truth: &gt,
        };
        let rep = sweep(&[m], &[(0.03, 2)], &default_r_grid()).unwrap();
        let c = &rep.curves[0];
        assert!(c.iou.windows(2).all(|w| w[0] <= w[1]));
        assert!(c.auc >= 0.0 && c.auc <= 0.12 * c.iou.iter().cloned().fold(0.0, f64::max) + 1e-15);
    }

    #[test]
    fn trapezoid_matches_midpoint_refinement() {
        let xs = default_r_grid();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 31.0).sin().abs()).collect();
        // Independent integration of the piecewise-linear interpolant.
        let mut fine = 0.0;
        let steps = 1000;
        for w in 0..xs.len() - 1 {
            let h = (xs[w + 1] - xs[w]) / steps as f64;
            for s in 0..steps {
                let t = (s as f64 + 0.5) / steps as f64;
                fine += h * (ys[w] * (1.0 - t) + ys[w + 1] * t);
            }
        }
        assert!((trapezoid(&xs, &ys) - fine).abs() < 1e-12);
    }

    fn report(iou: Vec<f64>) -> EvalReport {
        let r = default_r_grid();
        let auc = trapezoid(&r, &iou);
        EvalReport {
            curves: vec![Curve {
                sigma: 0.03,
                n: 2,
                fne: vec![0.0; r.len()],
                fpe: vec![0.0; r.len()],
                counts: vec![Counts::default(); r.len()],
                iou,
                auc,
                fold_auc_mean: auc,
            }],
            r,
            folds: 1,
        }
    }

    #[test]
    fn aggregate_means() {
        let a = report(vec![0.0; 13]);
        let b = report(vec![1.0; 13]);
        let agg = crossval_aggregate(&[a.clone(), b]).unwrap();
        assert!(agg.curves[0].iou.iter().all(|&x| x == 0.5));
        assert_eq!(agg.folds, 2);
        let same = crossval_aggregate(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(same.curves, a.curves);
        let mut bad = a.clone();
        bad.r[3] = 0.5;
        assert!(crossval_aggregate(&[a, bad]).is_err());
    }
}
