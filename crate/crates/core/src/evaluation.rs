//! Number-of-failures predictive validity.
//!
//! For a history with `q` failures by `t_q`, each cut `t_e <= t_q` refits a
//! model on the data up to `t_e`, predicts `μ̂(t_q)` and records the relative
//! error `(μ̂(t_q) - q) / q` against the normalised time `t_e / t_q`. Curves
//! from several projects are combined by taking medians over a grid of
//! normalised-time cells.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::ModelFitter;
use crate::data::FailureDataset;
use crate::error::{Error, Result};

pub const DEFAULT_CUTS: usize = 20;
/// Earliest default cut as a fraction of `t_q`.
pub const DEFAULT_FIRST_CUT: f64 = 0.2;
pub const DEFAULT_BINS: usize = 10;

/// `count` evenly spaced cuts from `DEFAULT_FIRST_CUT · t_q` to `t_q`.
pub fn default_cut_points(final_time: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![final_time],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    final_time
                } else {
                    let frac = DEFAULT_FIRST_CUT
                        + (1.0 - DEFAULT_FIRST_CUT) * i as f64 / (count - 1) as f64;
                    frac * final_time
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityPoint {
    pub normalized_time: f64,
    pub relative_error: f64,
    pub cut_time: f64,
    pub predicted_final_count: f64,
    pub converged: bool,
}

/// A cut that produced no prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub normalized_time: f64,
    pub cut_time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityCurve {
    pub model_name: String,
    pub dataset_label: String,
    pub final_time: f64,
    pub final_count: u64,
    pub points: Vec<ValidityPoint>,
    pub gaps: Vec<Gap>,
}

impl ValidityCurve {
    pub fn max_abs_error(&self) -> Option<f64> {
        self.points
            .iter()
            .map(|p| p.relative_error.abs())
            .max_by(f64::total_cmp)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["normalized_time", "relative_error", "model", "dataset"])?;
        for p in &self.points {
            w.write_record([
                p.normalized_time.to_string(),
                p.relative_error.to_string(),
                self.model_name.clone(),
                self.dataset_label.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

enum CutOutcome {
    Point(ValidityPoint),
    Gap(Gap),
}

/// Runs the number-of-failures protocol for one model on one dataset.
///
/// Cuts leaving fewer than two usable points, and cuts whose fit fails, become
/// [`Gap`]s; no value is ever substituted for them.
pub fn number_of_failures_eval(
    fitter: &dyn ModelFitter,
    ds: &FailureDataset,
    cut_points: &[f64],
) -> Result<ValidityCurve> {
    let (t_q, q) = (ds.final_time(), ds.final_count());
    if q == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            found: 0,
        });
    }
    let mut cuts = cut_points.to_vec();
    if let Some(bad) = cuts.iter().find(|&&c| !(c > 0.0 && c <= t_q)) {
        return Err(Error::InvalidParameter(format!(
            "cut point {bad} outside (0, {t_q}]"
        )));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let outcomes: Vec<CutOutcome> = cuts
        .par_iter()
        .map(|&cut| evaluate_cut(fitter, ds, cut, t_q, q as f64))
        .collect();

    let mut points = Vec::new();
    let mut gaps = Vec::new();
    for outcome in outcomes {
        match outcome {
            CutOutcome::Point(p) => points.push(p),
            CutOutcome::Gap(g) => gaps.push(g),
        }
    }
    Ok(ValidityCurve {
        model_name: fitter.name().to_string(),
        dataset_label: ds.label().to_string(),
        final_time: t_q,
        final_count: q,
        points,
        gaps,
    })
}

fn evaluate_cut(
    fitter: &dyn ModelFitter,
    ds: &FailureDataset,
    cut: f64,
    t_q: f64,
    q: f64,
) -> CutOutcome {
    let normalized_time = cut / t_q;
    let gap = |reason: String| {
        CutOutcome::Gap(Gap {
            normalized_time,
            cut_time: cut,
            reason,
        })
    };
    let truncated = match ds.truncated(cut) {
        Ok(t) => t,
        Err(e) => return gap(e.to_string()),
    };
    let usable = truncated.usable_len();
    if usable < 2 {
        return gap(format!("only {usable} usable point(s) up to the cut"));
    }
    match fitter.fit_model(&truncated) {
        Ok(outcome) => {
            let predicted = outcome.model.predict_mean(t_q);
            if !predicted.is_finite() {
                return gap(format!("prediction {predicted} is not finite"));
            }
            CutOutcome::Point(ValidityPoint {
                normalized_time,
                relative_error: (predicted - q) / q,
                cut_time: cut,
                predicted_final_count: predicted,
                converged: outcome.converged,
            })
        }
        Err(e) => gap(e.to_string()),
    }
}

/// Median with the even-count convention of averaging the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCell {
    pub lower: f64,
    pub upper: f64,
    /// Cell centre.
    pub normalized_time: f64,
    pub median_relative_error: f64,
    pub contributing_project_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCurve {
    pub model_name: String,
    pub grid_cells: usize,
    /// Non-empty cells in increasing time order.
    pub cells: Vec<AggregateCell>,
}

impl AggregateCurve {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["normalized_time", "relative_error", "model", "dataset"])?;
        for c in &self.cells {
            w.write_record([
                c.normalized_time.to_string(),
                c.median_relative_error.to_string(),
                self.model_name.clone(),
                "median".to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cell of `(0, 1]` holding `normalized_time`; cell `k` is `(k/n, (k+1)/n]`.
pub fn cell_index(normalized_time: f64, grid_cells: usize) -> usize {
    let k = (normalized_time * grid_cells as f64).ceil();
    (k.max(1.0) as usize).min(grid_cells) - 1
}

/// Per-cell value of one curve: the median of its points falling in the cell.
pub fn binned_curve(curve: &ValidityCurve, grid_cells: usize) -> Vec<Option<f64>> {
    let mut cells: Vec<Vec<f64>> = vec![Vec::new(); grid_cells];
    for p in &curve.points {
        cells[cell_index(p.normalized_time, grid_cells)].push(p.relative_error);
    }
    cells.iter().map(|c| median(c)).collect()
}

/// Median-aggregates curves of one model over `grid_cells` equal-width cells.
///
/// Each curve first collapses to one value per cell (the median of its points
/// there); the cell's aggregate is the median over the curves present.
pub fn aggregate_median(curves: &[ValidityCurve], grid_cells: usize) -> Result<AggregateCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidParameter("no curves to aggregate".into()))?;
    if grid_cells == 0 {
        return Err(Error::InvalidParameter(
            "grid needs at least one cell".into(),
        ));
    }
    if let Some(other) = curves.iter().find(|c| c.model_name != first.model_name) {
        return Err(Error::MixedModels {
            first: first.model_name.clone(),
            other: other.model_name.clone(),
        });
    }
    let mut per_cell: Vec<Vec<f64>> = vec![Vec::new(); grid_cells];
    for curve in curves {
        for (k, v) in binned_curve(curve, grid_cells).into_iter().enumerate() {
            if let Some(v) = v {
                per_cell[k].push(v);
            }
        }
    }
    let width = 1.0 / grid_cells as f64;
    let cells = per_cell
        .iter()
        .enumerate()
        .filter_map(|(k, values)| {
            median(values).map(|m| AggregateCell {
                lower: k as f64 * width,
                upper: (k + 1) as f64 * width,
                normalized_time: (k as f64 + 0.5) * width,
                median_relative_error: m,
                contributing_project_count: values.len(),
            })
        })
        .collect();
    Ok(AggregateCurve {
        model_name: first.model_name.clone(),
        grid_cells,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outlier {
    pub dataset_label: String,
    pub model_name: String,
    pub max_abs_relative_error: f64,
}

/// Curves whose absolute relative error exceeds `threshold` anywhere.
pub fn outlier_report(curves: &[ValidityCurve], threshold: f64) -> Result<Vec<Outlier>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    Ok(curves
        .iter()
        .filter_map(|c| {
            let max = c.max_abs_error()?;
            (max > threshold).then(|| Outlier {
                dataset_label: c.dataset_label.clone(),
                model_name: c.model_name.clone(),
                max_abs_relative_error: max,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::{FitOutcome, ModelKind, ModelSpec, ReliabilityModel};
    use crate::data::{FailurePoint, TimeUnit};
    use proptest::prelude::*;

    /// Always predicts `factor` times the last observed count.
    struct Scaled {
        factor: f64,
        target: f64,
    }

    impl ReliabilityModel for Scaled {
        fn model_name(&self) -> &str {
            "stub"
        }
        fn predict_mean(&self, t: f64) -> f64 {
            if t > 0.0 {
                self.factor * self.target
            } else {
                0.0
            }
        }
    }

    struct StubFitter {
        factor: f64,
        target: f64,
    }

    impl ModelFitter for StubFitter {
        fn name(&self) -> &str {
            "stub"
        }
        fn fit_model(&self, _: &FailureDataset) -> Result<FitOutcome> {
            Ok(FitOutcome {
                model: Box::new(Scaled {
                    factor: self.factor,
                    target: self.target,
                }),
                converged: true,
            })
        }
    }

    fn dataset() -> FailureDataset {
        let points = (1..=30)
            .map(|k| FailurePoint::new(k as f64 * 3.0, (10.0 * (k as f64).ln_1p()).round() as u64))
            .collect();
        FailureDataset::new("d", TimeUnit::Incident, points).unwrap()
    }

    fn curve(model: &str, label: &str, pts: &[(f64, f64)]) -> ValidityCurve {
        ValidityCurve {
            model_name: model.into(),
            dataset_label: label.into(),
            final_time: 1.0,
            final_count: 1,
            points: pts
                .iter()
                .map(|&(nt, e)| ValidityPoint {
                    normalized_time: nt,
                    relative_error: e,
                    cut_time: nt,
                    predicted_final_count: 1.0 + e,
                    converged: true,
                })
                .collect(),
            gaps: Vec::new(),
        }
    }

    #[test]
    fn default_cuts_span_fifth_to_end() {
        let cuts = default_cut_points(200.0, 20);
        assert_eq!(cuts.len(), 20);
        assert!((cuts[0] - 40.0).abs() < 1e-12);
        assert_eq!(cuts[19], 200.0);
        assert!(cuts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_cut_points(5.0, 1), vec![5.0]);
    }

    #[test]
    fn stub_doubling_gives_unit_error() {
        let ds = dataset();
        let stub = StubFitter {
            factor: 2.0,
            target: ds.final_count() as f64,
        };
        let c =
            number_of_failures_eval(&stub, &ds, &default_cut_points(ds.final_time(), 20)).unwrap();
        assert_eq!(c.points.len(), 20);
        assert!(c.points.iter().all(|p| p.relative_error == 1.0));
        assert!(c
            .points
            .windows(2)
            .all(|w| w[0].normalized_time < w[1].normalized_time));
        assert_eq!(c.points[19].normalized_time, 1.0);
    }

    #[test]
    fn sparse_cuts_become_gaps() {
        let ds = dataset();
        let stub = StubFitter {
            factor: 1.0,
            target: 1.0,
        };
        let c = number_of_failures_eval(&stub, &ds, &[3.0, 6.0, 90.0]).unwrap();
        assert_eq!(c.gaps.len(), 1);
        assert_eq!(c.gaps[0].cut_time, 3.0);
        assert_eq!(c.points.len(), 2);
    }

    #[test]
    fn failed_fits_become_gaps() {
        let points = (1..=30).map(|k| FailurePoint::new(k as f64, k)).collect();
        let ds = FailureDataset::new("d", TimeUnit::Incident, points).unwrap();
        let lv = ModelSpec::new(ModelKind::LittlewoodVerrall);
        // three failures at the first cut, fewer than the model needs
        let c = number_of_failures_eval(&lv, &ds, &[3.0, 30.0]).unwrap();
        assert_eq!(c.gaps.len(), 1, "{:?}", c.gaps);
        assert!(c.gaps[0].reason.contains("littlewood-verrall"));
    }

    #[test]
    fn rejects_cuts_beyond_window() {
        let ds = dataset();
        let stub = StubFitter {
            factor: 1.0,
            target: 1.0,
        };
        assert!(number_of_failures_eval(&stub, &ds, &[91.0]).is_err());
        assert!(number_of_failures_eval(&stub, &ds, &[0.0]).is_err());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let ds = dataset();
        let spec = ModelSpec::new(ModelKind::Geometric);
        let cuts = default_cut_points(ds.final_time(), 8);
        let a = number_of_failures_eval(&spec, &ds, &cuts).unwrap();
        let b = number_of_failures_eval(&spec, &ds, &cuts).unwrap();
        assert_eq!(a, b);
        let bits = |c: &ValidityCurve| {
            c.points
                .iter()
                .map(|p| p.relative_error.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[-0.5, 0.1, 6.0]), Some(0.1));
        assert_eq!(median(&[0.2, 0.4]), Some(0.30000000000000004));
        assert!((median(&[0.2, 0.4]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn single_curve_aggregate_is_its_binning() {
        let c = curve(
            "m",
            "a",
            &[(0.25, 0.3), (0.3, 0.1), (0.55, -0.2), (1.0, 0.01)],
        );
        let agg = aggregate_median(std::slice::from_ref(&c), 10).unwrap();
        let binned = binned_curve(&c, 10);
        let expected: Vec<(usize, f64)> = binned
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect();
        let got: Vec<(usize, f64)> = agg
            .cells
            .iter()
            .map(|c| (cell_index(c.normalized_time, 10), c.median_relative_error))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(got[0], (2, 0.2));
        assert!(agg.cells.iter().all(|c| c.contributing_project_count == 1));
    }

    #[test]
    fn far_off_project_does_not_move_median() {
        let good_a = curve("m", "a", &[(0.5, -0.5), (1.0, 0.0)]);
        let good_b = curve("m", "b", &[(0.5, 0.1), (1.0, 0.02)]);
        let far = curve("m", "c", &[(0.5, 6.0), (1.0, 6.0)]);
        let agg = aggregate_median(&[good_a, good_b, far], 10).unwrap();
        assert_eq!(agg.cells.len(), 2);
        assert_eq!(agg.cells[0].median_relative_error, 0.1);
        assert_eq!(agg.cells[0].contributing_project_count, 3);
    }

    #[test]
    fn aggregate_rejects_mixed_models() {
        let a = curve("m", "a", &[(0.5, 0.0)]);
        let b = curve("n", "b", &[(0.5, 0.0)]);
        assert!(matches!(
            aggregate_median(&[a.clone(), b], 10),
            Err(Error::MixedModels { .. })
        ));
        assert!(aggregate_median(&[], 10).is_err());
        assert!(aggregate_median(&[a], 0).is_err());
    }

    #[test]
    fn outliers() {
        let peak = curve("lv", "siemens", &[(0.5, 1.0), (0.8, 6.0), (1.0, 0.1)]);
        let calm = curve("lv", "dacs", &[(0.5, 0.5), (1.0, -0.9)]);
        let report = outlier_report(&[peak.clone(), calm.clone()], 5.0).unwrap();
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].dataset_label, "siemens");
        assert_eq!(report[0].max_abs_relative_error, 6.0);
        assert!(outlier_report(&[calm], 5.0).unwrap().is_empty());
        let stub = curve("stub", "s", &[(0.2, 1.0), (1.0, 1.0)]);
        let r = outlier_report(&[stub], 0.5).unwrap();
        assert_eq!(r[0].max_abs_relative_error, 1.0);
        assert!(outlier_report(&[], 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let c = curve("geometric", "p1", &[(0.5, -0.25), (1.0, 0.0)]);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "normalized_time,relative_error,model,dataset\n0.5,-0.25,geometric,p1\n1,0,geometric,p1\n"
        );
    }

    fn arb_curves() -> impl Strategy<Value = Vec<ValidityCurve>> {
        prop::collection::vec(
            prop::collection::vec((0.01f64..=1.0, -10.0f64..10.0), 1..15),
            1..8,
        )
        .prop_map(|curves| {
            curves
                .iter()
                .enumerate()
                .map(|(i, pts)| curve("m", &format!("c{i}"), pts))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn cell_medians_within_contributor_range(curves in arb_curves(), cells in 1usize..20) {
            let agg = aggregate_median(&curves, cells).unwrap();
            for cell in &agg.cells {
                let k = cell_index(cell.normalized_time, cells);
                let values: Vec<f64> = curves
                    .iter()
                    .filter_map(|c| binned_curve(c, cells)[k])
                    .collect();
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(cell.median_relative_error >= lo && cell.median_relative_error <= hi);
            }
        }

        #[test]
        fn removing_a_curve_only_touches_its_cells(curves in arb_curves(), cells in 1usize..20) {
            prop_assume!(curves.len() >= 2);
            let full = aggregate_median(&curves, cells).unwrap();
            let removed = &curves[0];
            let touched: Vec<usize> = binned_curve(removed, cells)
                .iter()
                .enumerate()
                .filter_map(|(k, v)| v.map(|_| k))
                .collect();
            let rest = aggregate_median(&curves[1..], cells).unwrap();
            for cell in &full.cells {
                let k = cell_index(cell.normalized_time, cells);
                if !touched.contains(&k) {
                    let other = rest.cells.iter().find(|c| cell_index(c.normalized_time, cells) == k);
                    prop_assert_eq!(Some(cell), other);
                }
            }
        }
    }
}
