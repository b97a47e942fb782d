//! Failure histories: ingestion, validation and time-unit conversion.
//!
//! Two text formats are read:
//!
//! * `cumulative_csv` with header `time,cumulative_failures`, one row per
//!   measurement;
//! * `tbf_csv` with header `tbf`, one positive time-between-failures per row.
//!
//! Both reduce to a [`FailureDataset`]: strictly increasing times paired with
//! non-decreasing cumulative failure counts. Time zero with zero failures is
//! implicit and never stored.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time bases a failure history can be measured in.
///
/// Incidents (one usage task of the system) are the model's native unit; the
/// other units are reached through a [`TimeConversionProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Incident,
    TestCase,
    InServiceHour,
    CalendarDay,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 4] = [
        TimeUnit::Incident,
        TimeUnit::TestCase,
        TimeUnit::InServiceHour,
        TimeUnit::CalendarDay,
    ];
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TimeUnit::Incident => "incident",
            TimeUnit::TestCase => "test_case",
            TimeUnit::InServiceHour => "in_service_hour",
            TimeUnit::CalendarDay => "calendar_day",
        };
        f.write_str(s)
    }
}

/// Input file layouts understood by [`parse_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// `time,cumulative_failures`
    #[value(name = "cumulative")]
    CumulativeCsv,
    /// `tbf`
    #[value(name = "tbf")]
    TbfCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailurePoint {
    pub time: f64,
    pub cumulative_failures: u64,
}

impl FailurePoint {
    pub fn new(time: f64, cumulative_failures: u64) -> Self {
        Self {
            time,
            cumulative_failures,
        }
    }
}

/// An ordered failure history.
///
/// Construction validates the ordering invariants, so every value of this type
/// has at least one point, strictly increasing positive times and
/// non-decreasing counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureDataset {
    label: String,
    unit: TimeUnit,
    points: Vec<FailurePoint>,
}

impl FailureDataset {
    pub fn new(
        label: impl Into<String>,
        unit: TimeUnit,
        points: Vec<FailurePoint>,
    ) -> Result<Self> {
        let lines: Vec<u64> = (1..=points.len() as u64).collect();
        validate(&points, &lines)?;
        Ok(Self {
            label: label.into(),
            unit,
            points,
        })
    }

    /// Builds a dataset from unsorted individual failure times, grouping
    /// failures that share a time stamp into one point.
    pub fn from_failure_times(
        label: impl Into<String>,
        unit: TimeUnit,
        times: &[f64],
    ) -> Result<Self> {
        let mut sorted = times.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut points: Vec<FailurePoint> = Vec::new();
        for (i, &t) in sorted.iter().enumerate() {
            let count = i as u64 + 1;
            match points.last_mut() {
                Some(last) if last.time == t => last.cumulative_failures = count,
                _ => points.push(FailurePoint::new(t, count)),
            }
        }
        Self::new(label, unit, points)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn unit(&self) -> TimeUnit {
        self.unit
    }

    pub fn points(&self) -> &[FailurePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_unit(mut self, unit: TimeUnit) -> Self {
        self.unit = unit;
        self
    }

    /// End of the observation window, `t_q`.
    pub fn final_time(&self) -> f64 {
        self.points[self.points.len() - 1].time
    }

    /// Failures observed by the end of the window, `q`.
    pub fn final_count(&self) -> u64 {
        self.points[self.points.len() - 1].cumulative_failures
    }

    /// Points with at least one failure; only these carry a finite log count.
    pub fn usable_points(&self) -> impl Iterator<Item = &FailurePoint> {
        self.points.iter().filter(|p| p.cumulative_failures >= 1)
    }

    pub fn usable_len(&self) -> usize {
        self.usable_points().count()
    }

    /// Restricts the history to measurements taken at or before `cutoff`.
    pub fn truncated(&self, cutoff: f64) -> Result<Self> {
        let points: Vec<FailurePoint> = self
            .points
            .iter()
            .copied()
            .take_while(|p| p.time <= cutoff)
            .collect();
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            label: self.label.clone(),
            unit: self.unit,
            points,
        })
    }

    /// Times of the individual failures.
    ///
    /// When a point records several new failures they are spread evenly over
    /// the interval since the previous point, the last one landing on the
    /// point's own time.
    pub fn failure_times(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.final_count() as usize);
        let (mut prev_t, mut prev_r) = (0.0, 0u64);
        for p in &self.points {
            let k = p.cumulative_failures - prev_r;
            for i in 1..=k {
                if i == k {
                    out.push(p.time);
                } else {
                    out.push(prev_t + (p.time - prev_t) * i as f64 / k as f64);
                }
            }
            prev_t = p.time;
            prev_r = p.cumulative_failures;
        }
        out
    }

    /// Successive differences of [`failure_times`](Self::failure_times).
    pub fn times_between_failures(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.failure_times()
            .into_iter()
            .map(|t| {
                let d = t - prev;
                prev = t;
                d
            })
            .collect()
    }

    /// Writes the history in `cumulative_csv` form.
    pub fn write_cumulative_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_cumulative_points(&self.points, writer)
    }

    pub fn to_cumulative_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_cumulative_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

pub(crate) fn write_cumulative_points<W: Write>(points: &[FailurePoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "cumulative_failures"])?;
    for p in points {
        w.write_record([p.time.to_string(), p.cumulative_failures.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn validate(points: &[FailurePoint], lines: &[u64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut previous: Option<&FailurePoint> = None;
    for (p, &line) in points.iter().zip(lines) {
        if !p.time.is_finite() {
            return Err(Error::Malformed {
                line,
                message: format!("time {} is not finite", p.time),
            });
        }
        if p.time < 0.0 {
            return Err(Error::NegativeValue {
                line,
                value: p.time.to_string(),
            });
        }
        if p.time == 0.0 {
            return Err(Error::Malformed {
                line,
                message: "time must be positive".into(),
            });
        }
        if let Some(prev) = previous {
            if p.time <= prev.time {
                return Err(Error::NonMonotoneTime {
                    line,
                    time: p.time,
                    previous: prev.time,
                });
            }
            if p.cumulative_failures < prev.cumulative_failures {
                return Err(Error::NonMonotoneCount {
                    line,
                    count: p.cumulative_failures,
                    previous: prev.cumulative_failures,
                });
            }
        }
        previous = Some(p);
    }
    Ok(())
}

/// Parses a failure history from UTF-8 CSV text.
///
/// Errors carry the 1-based line number of the offending row. A leading
/// `0,0` row in cumulative data is the implicit origin and is dropped.
pub fn parse_dataset<R: Read>(source: R, format: DataFormat) -> Result<FailureDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let expected: &[&str] = match format {
        DataFormat::CumulativeCsv => &["time", "cumulative_failures"],
        DataFormat::TbfCsv => &["tbf"],
    };
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Malformed {
            line: 1,
            message: format!(
                "expected header '{}', found '{}'",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut points = Vec::new();
    let mut lines = Vec::new();
    let mut elapsed = 0.0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Malformed {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != expected.len() {
            return Err(Error::Malformed {
                line,
                message: format!(
                    "expected {} field(s), found {}",
                    expected.len(),
                    record.len()
                ),
            });
        }
        match format {
            DataFormat::CumulativeCsv => {
                let time = parse_real(&record[0], line)?;
                let count = parse_count(&record[1], line)?;
                if points.is_empty() && time == 0.0 && count == 0 {
                    continue;
                }
                points.push(FailurePoint::new(time, count));
            }
            DataFormat::TbfCsv => {
                let tbf = parse_real(&record[0], line)?;
                if tbf == 0.0 {
                    return Err(Error::Malformed {
                        line,
                        message: "time between failures must be positive".into(),
                    });
                }
                elapsed += tbf;
                points.push(FailurePoint::new(elapsed, points.len() as u64 + 1));
            }
        }
        lines.push(line);
    }
    validate(&points, &lines)?;
    Ok(FailureDataset {
        label: "dataset".into(),
        unit: TimeUnit::Incident,
        points,
    })
}

/// Reads a dataset from disk, labelling it with the file stem.
pub fn read_dataset(path: &Path, format: DataFormat) -> Result<FailureDataset> {
    let file = std::fs::File::open(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(parse_dataset(file, format)?.with_label(label))
}

fn parse_real(field: &str, line: u64) -> Result<f64> {
    let value: f64 = field.parse().map_err(|_| Error::Malformed {
        line,
        message: format!("'{field}' is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::Malformed {
            line,
            message: format!("'{field}' is not finite"),
        });
    }
    if value < 0.0 {
        return Err(Error::NegativeValue {
            line,
            value: field.to_string(),
        });
    }
    Ok(value)
}

fn parse_count(field: &str, line: u64) -> Result<u64> {
    match field.parse::<i64>() {
        Ok(v) if v < 0 => Err(Error::NegativeValue {
            line,
            value: field.to_string(),
        }),
        Ok(v) => Ok(v as u64),
        Err(_) => Err(Error::Malformed {
            line,
            message: format!("'{field}' is not a non-negative integer"),
        }),
    }
}

/// Factors linking incidents, test cases, in-service hours and calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct TimeConversionProfile {
    incidents_per_client_per_day: f64,
    client_count: u64,
    test_case_incident_equivalent: f64,
    avg_test_case_duration: f64,
}

#[derive(Deserialize)]
struct RawProfile {
    incidents_per_client_per_day: f64,
    client_count: u64,
    #[serde(default = "default_equivalent")]
    test_case_incident_equivalent: f64,
    avg_test_case_duration: f64,
}

fn default_equivalent() -> f64 {
    1.0
}

impl TryFrom<RawProfile> for TimeConversionProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        Self::new(
            raw.incidents_per_client_per_day,
            raw.client_count,
            raw.test_case_incident_equivalent,
            raw.avg_test_case_duration,
        )
    }
}

impl TimeConversionProfile {
    pub fn new(
        incidents_per_client_per_day: f64,
        client_count: u64,
        test_case_incident_equivalent: f64,
        avg_test_case_duration: f64,
    ) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("incidents_per_client_per_day", incidents_per_client_per_day)?;
        positive(
            "test_case_incident_equivalent",
            test_case_incident_equivalent,
        )?;
        positive("avg_test_case_duration", avg_test_case_duration)?;
        if client_count == 0 {
            return Err(Error::InvalidParameter(
                "client_count must be positive".into(),
            ));
        }
        Ok(Self {
            incidents_per_client_per_day,
            client_count,
            test_case_incident_equivalent,
            avg_test_case_duration,
        })
    }

    /// Profile with one test case per incident and one hour per test case.
    pub fn with_usage(incidents_per_client_per_day: f64, client_count: u64) -> Result<Self> {
        Self::new(incidents_per_client_per_day, client_count, 1.0, 1.0)
    }

    pub fn incidents_per_client_per_day(&self) -> f64 {
        self.incidents_per_client_per_day
    }

    pub fn client_count(&self) -> u64 {
        self.client_count
    }

    pub fn test_case_incident_equivalent(&self) -> f64 {
        self.test_case_incident_equivalent
    }

    pub fn avg_test_case_duration(&self) -> f64 {
        self.avg_test_case_duration
    }

    /// Incidents represented by one unit of `unit`.
    pub fn incidents_per(&self, unit: TimeUnit) -> f64 {
        match unit {
            TimeUnit::Incident => 1.0,
            TimeUnit::TestCase => self.test_case_incident_equivalent,
            TimeUnit::InServiceHour => {
                self.test_case_incident_equivalent / self.avg_test_case_duration
            }
            TimeUnit::CalendarDay => self.incidents_per_client_per_day * self.client_count as f64,
        }
    }

    pub fn convert(&self, value: f64, from: TimeUnit, to: TimeUnit) -> f64 {
        if from == to {
            return value;
        }
        value * self.incidents_per(from) / self.incidents_per(to)
    }
}

pub fn convert_time(
    value: f64,
    from: TimeUnit,
    profile: &TimeConversionProfile,
    to: TimeUnit,
) -> f64 {
    profile.convert(value, from, to)
}

/// Re-expresses every time coordinate in `target`; counts are untouched.
pub fn rescale_dataset(
    ds: &FailureDataset,
    profile: &TimeConversionProfile,
    target: TimeUnit,
) -> Result<FailureDataset> {
    let points = ds
        .points
        .iter()
        .map(|p| {
            FailurePoint::new(
                profile.convert(p.time, ds.unit, target),
                p.cumulative_failures,
            )
        })
        .collect();
    FailureDataset::new(ds.label.clone(), target, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cumulative(text: &str) -> Result<FailureDataset> {
        parse_dataset(text.as_bytes(), DataFormat::CumulativeCsv)
    }

    fn tbf(text: &str) -> Result<FailureDataset> {
        parse_dataset(text.as_bytes(), DataFormat::TbfCsv)
    }

    #[test]
    fn tbf_rows_are_cumulated() {
        let ds = tbf("tbf\n3\n2\n5\n").unwrap();
        assert_eq!(
            ds.points(),
            &[
                FailurePoint::new(3.0, 1),
                FailurePoint::new(5.0, 2),
                FailurePoint::new(10.0, 3)
            ]
        );
    }

    #[test]
    fn cumulative_rows_read_verbatim() {
        let ds = cumulative("time,cumulative_failures\n10,4\n20,7\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.final_count(), 7);
        assert_eq!(ds.final_time(), 20.0);
    }

    #[test]
    fn rejects_decreasing_time() {
        let err = cumulative("time,cumulative_failures\n10,4\n5,6\n").unwrap_err();
        assert!(
            matches!(err, Error::NonMonotoneTime { line: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn rejects_duplicate_time() {
        let err = cumulative("time,cumulative_failures\n10,4\n10,6\n").unwrap_err();
        assert!(matches!(err, Error::NonMonotoneTime { .. }));
    }

    #[test]
    fn rejects_decreasing_count() {
        let err = cumulative("time,cumulative_failures\n10,4\n12,3\n").unwrap_err();
        assert!(matches!(err, Error::NonMonotoneCount { line: 3, .. }));
    }

    #[test]
    fn reports_line_of_malformed_row() {
        let err = cumulative("time,cumulative_failures\n10,4\n11,x\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
        let err = cumulative("time,cumulative_failures\n10,4\n11\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
        let err = cumulative("time,cumulative_failures\n10,4.5\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_negative_values() {
        assert!(matches!(
            cumulative("time,cumulative_failures\n-1,4\n").unwrap_err(),
            Error::NegativeValue { line: 2, .. }
        ));
        assert!(matches!(
            cumulative("time,cumulative_failures\n1,-4\n").unwrap_err(),
            Error::NegativeValue { line: 2, .. }
        ));
        assert!(matches!(
            tbf("tbf\n1\n-2\n").unwrap_err(),
            Error::NegativeValue { line: 3, .. }
        ));
    }

    #[test]
    fn rejects_zero_tbf_and_wrong_header() {
        assert!(matches!(
            tbf("tbf\n1\n0\n").unwrap_err(),
            Error::Malformed { line: 3, .. }
        ));
        assert!(matches!(
            tbf("time\n1\n").unwrap_err(),
            Error::Malformed { line: 1, .. }
        ));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(tbf("tbf\n").unwrap_err(), Error::EmptyDataset));
        assert!(matches!(
            FailureDataset::new("x", TimeUnit::Incident, vec![]).unwrap_err(),
            Error::EmptyDataset
        ));
    }

    #[test]
    fn leading_origin_row_is_dropped() {
        let ds = cumulative("time,cumulative_failures\n0,0\n4,1\n").unwrap();
        assert_eq!(ds.points(), &[FailurePoint::new(4.0, 1)]);
    }

    #[test]
    fn csv_output_parses_back() {
        let ds = cumulative("time,cumulative_failures\n0.5,1\n2.25,3\n7,3\n").unwrap();
        let again = cumulative(&ds.to_cumulative_csv()).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn grouped_failures_spread_over_interval() {
        let ds = cumulative("time,cumulative_failures\n10,2\n14,2\n20,3\n").unwrap();
        assert_eq!(ds.failure_times(), vec![5.0, 10.0, 20.0]);
        assert_eq!(ds.times_between_failures(), vec![5.0, 5.0, 10.0]);
    }

    #[test]
    fn from_failure_times_groups_ties() {
        let ds = FailureDataset::from_failure_times("s", TimeUnit::Incident, &[4.0, 1.0, 4.0, 9.0])
            .unwrap();
        assert_eq!(
            ds.points(),
            &[
                FailurePoint::new(1.0, 1),
                FailurePoint::new(4.0, 3),
                FailurePoint::new(9.0, 4)
            ]
        );
    }

    #[test]
    fn truncation_keeps_points_up_to_cutoff() {
        let ds = cumulative("time,cumulative_failures\n1,1\n2,2\n3,3\n").unwrap();
        assert_eq!(ds.truncated(2.0).unwrap().len(), 2);
        assert_eq!(ds.truncated(2.5).unwrap().final_count(), 2);
        assert!(ds.truncated(0.5).is_err());
    }

    #[test]
    fn test_case_equals_incident_by_default() {
        let profile = TimeConversionProfile::with_usage(2.0, 10).unwrap();
        assert_eq!(
            profile.convert(1.0, TimeUnit::TestCase, TimeUnit::Incident),
            1.0
        );
    }

    #[test]
    fn incidents_to_calendar_days() {
        let profile = TimeConversionProfile::with_usage(2.0, 10).unwrap();
        assert_eq!(
            convert_time(100.0, TimeUnit::Incident, &profile, TimeUnit::CalendarDay),
            5.0
        );
    }

    #[test]
    fn rescale_to_days() {
        // 2 incidents per day: one incident is half a day
        let profile = TimeConversionProfile::with_usage(2.0, 1).unwrap();
        let ds = FailureDataset::new(
            "r",
            TimeUnit::Incident,
            vec![FailurePoint::new(3.0, 1), FailurePoint::new(5.0, 2)],
        )
        .unwrap();
        let days = rescale_dataset(&ds, &profile, TimeUnit::CalendarDay).unwrap();
        assert_eq!(days.unit(), TimeUnit::CalendarDay);
        assert_eq!(
            days.points(),
            &[FailurePoint::new(1.5, 1), FailurePoint::new(2.5, 2)]
        );
        assert_eq!(
            rescale_dataset(&ds, &profile, TimeUnit::Incident).unwrap(),
            ds
        );
    }

    #[test]
    fn profile_rejects_non_positive_factors() {
        assert!(TimeConversionProfile::new(0.0, 1, 1.0, 1.0).is_err());
        assert!(TimeConversionProfile::new(1.0, 0, 1.0, 1.0).is_err());
        assert!(TimeConversionProfile::new(1.0, 1, -1.0, 1.0).is_err());
        assert!(TimeConversionProfile::new(1.0, 1, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn profile_json_defaults_equivalence() {
        let p: TimeConversionProfile = serde_json::from_str(
            r#"{"incidents_per_client_per_day": 2, "client_count": 10, "avg_test_case_duration": 0.5}"#,
        )
        .unwrap();
        assert_eq!(p.test_case_incident_equivalent(), 1.0);
        assert!(serde_json::from_str::<TimeConversionProfile>(
            r#"{"incidents_per_client_per_day": -2, "client_count": 10, "avg_test_case_duration": 0.5}"#
        )
        .is_err());
    }

    fn unit() -> impl Strategy<Value = TimeUnit> {
        prop::sample::select(TimeUnit::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn conversion_round_trips(
            x in 1e-6f64..1e9,
            rate in 1e-3f64..1e3,
            clients in 1u64..10_000,
            equiv in 0.01f64..100.0,
            dur in 1e-3f64..100.0,
            a in unit(),
            b in unit(),
        ) {
            let profile = TimeConversionProfile::new(rate, clients, equiv, dur).unwrap();
            let back = profile.convert(profile.convert(x, a, b), b, a);
            prop_assert!(((back - x) / x).abs() <= 1e-9);
        }

        #[test]
        fn tbf_differences_are_preserved(tbfs in prop::collection::vec(1u32..100_000, 1..60)) {
            let values: Vec<f64> = tbfs.iter().map(|&v| v as f64 / 8.0).collect();
            let text = std::iter::once("tbf".to_string())
                .chain(values.iter().map(|v| v.to_string()))
                .collect::<Vec<_>>()
                .join("\n");
            let ds = tbf(&text).unwrap();
            let mut prev = 0.0;
            for (p, v) in ds.points().iter().zip(&values) {
                prop_assert_eq!(p.time - prev, *v);
                prev = p.time;
            }
        }

        #[test]
        fn rescale_keeps_counts(
            increments in prop::collection::vec((1u32..1000, 0u64..5), 1..40),
            rate in 0.01f64..100.0,
            clients in 1u64..100,
            b in unit(),
        ) {
            let mut t = 0.0;
            let mut r = 0;
            let points: Vec<FailurePoint> = increments
                .iter()
                .map(|&(dt, dr)| {
                    t += dt as f64;
                    r += dr;
                    FailurePoint::new(t, r)
                })
                .collect();
            let ds = FailureDataset::new("p", TimeUnit::Incident, points).unwrap();
            let profile = TimeConversionProfile::with_usage(rate, clients).unwrap();
            let out = rescale_dataset(&ds, &profile, b).unwrap();
            prop_assert_eq!(out.len(), ds.len());
            for (x, y) in out.points().iter().zip(ds.points()) {
                prop_assert_eq!(x.cumulative_failures, y.cumulative_failures);
            }
        }
    }
}
