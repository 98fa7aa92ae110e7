//! Dependent measures: accuracy and movement-time summaries, Fitts
//! regressions, and effective (Crossman-corrected) throughput aggregated as a
//! mean of per-participant means.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::experiment::TrialRecord;
use crate::geometry::{DisplayGeometry, SurfacePoint};
use crate::scalar::Scalar;
use crate::transfer::TechniqueId;

/// `We = 4.133·σ` normalizes endpoint spread to a 96 % hit rate.
pub const EFFECTIVE_WIDTH_FACTOR: f64 = 4.133;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("regression needs at least two distinct IDs")]
    DegenerateIds,
    #[error("missing or under-filled cells: {0}")]
    MissingCells(String),
    #[error("unknown grouping key {0:?} (expected participant, technique, distance, offset, amplitude, width or id)")]
    UnknownKey(String),
    #[error("no records to analyze")]
    Empty,
}

/// Sums in ascending order so the result does not depend on input order.
fn sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let mut v: Vec<T> = xs.into_iter().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v.into_iter().fold(T::zero(), |a, x| a + x)
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    sum(xs.iter().copied()) / T::from_usize(xs.len()).expect("length")
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd<T: Scalar>(xs: &[T]) -> Result<T, AnalysisError> {
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewSamples { needed: 2, got: xs.len() });
    }
    let m = mean(xs);
    let ss = sum(xs.iter().map(|&x| (x - m) * (x - m)));
    Ok((ss / T::from_usize(xs.len() - 1).expect("length")).sqrt())
}

/// Effective width of signed endpoint deviations along the task axis.
pub fn effective_width<T: Scalar>(deviations: &[T]) -> Result<T, AnalysisError> {
    Ok(T::lit(EFFECTIVE_WIDTH_FACTOR) * sample_sd(deviations)?)
}

/// Effective measures of one participant × technique × A × W cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMeasures<T> {
    pub effective_amplitude_m: T,
    pub effective_width_m: T,
    pub effective_id_bits: T,
    pub mean_mt_s: T,
    pub throughput_bps: T,
    /// We was zero and replaced by `width / 100`.
    pub width_floored: bool,
}

/// `deviations` and `extents` are endpoint projections on the start→target
/// axis, relative to the target center and to the start respectively.
pub fn cell_measures<T: Scalar>(
    deviations: &[T],
    extents: &[T],
    movement_times: &[T],
    nominal_width_m: T,
) -> Result<CellMeasures<T>, AnalysisError> {
    let we = effective_width(deviations)?;
    if extents.is_empty() || movement_times.is_empty() {
        return Err(AnalysisError::TooFewSamples { needed: 1, got: 0 });
    }
    let floor = nominal_width_m / T::lit(100.0);
    let width_floored = !(we > T::zero());
    let we = if width_floored { floor } else { we };
    let ae = mean(extents);
    let ide = (ae.max(T::zero()) / we + T::one()).log2();
    let mt = mean(movement_times);
    Ok(CellMeasures {
        effective_amplitude_m: ae,
        effective_width_m: we,
        effective_id_bits: ide,
        mean_mt_s: mt,
        throughput_bps: ide / mt,
        width_floored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittsFit<T> {
    pub intercept_s: T,
    pub slope_s_per_bit: T,
    pub r_squared: T,
}

/// Ordinary least squares of mean MT on ID. A constant MT gives slope 0 and
/// R² = 0 by convention.
pub fn fitts_fit<T: Scalar>(points: &[(T, T)]) -> Result<FittsFit<T>, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::TooFewSamples { needed: 2, got: points.len() });
    }
    let xs: Vec<T> = points.iter().map(|p| p.0).collect();
    let ys: Vec<T> = points.iter().map(|p| p.1).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx = xs.iter().fold(T::zero(), |a, &x| a + (x - mx) * (x - mx));
    if !(sxx > T::zero()) {
        return Err(AnalysisError::DegenerateIds);
    }
    let sxy = points.iter().fold(T::zero(), |a, &(x, y)| a + (x - mx) * (y - my));
    let syy = ys.iter().fold(T::zero(), |a, &y| a + (y - my) * (y - my));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > T::zero() {
        let ss_res = points.iter().fold(T::zero(), |a, &(x, y)| {
            let e = y - (intercept + slope * x);
            a + e * e
        });
        T::one() - ss_res / syy
    } else {
        T::zero()
    };
    Ok(FittsFit { intercept_s: intercept, slope_s_per_bit: slope, r_squared })
}

/// Mean over groups of the per-group means; group and member order are irrelevant.
pub fn means_of_means<T: Scalar>(groups: &[Vec<T>]) -> Option<T> {
    let means: Vec<T> = groups.iter().filter(|g| !g.is_empty()).map(|g| mean(g)).collect();
    (!means.is_empty()).then(|| mean(&means))
}

/// Projects a trial's endpoint onto the unrolled start→target axis. Returns
/// `(deviation from target center, extent from start)`.
pub fn endpoint_projection(r: &TrialRecord, geom: &DisplayGeometry<f64>) -> (f64, f64) {
    let (su, sh) = geom.unroll(SurfacePoint::new(r.start_azimuth_rad, r.start_height_m));
    let (tu, th) = geom.unroll(SurfacePoint::new(r.target_azimuth_rad, r.target_height_m));
    let (eu, eh) = geom.unroll(SurfacePoint::new(r.endpoint_azimuth_rad, r.endpoint_height_m));
    let (au, ah) = (tu - su, th - sh);
    let len = au.hypot(ah);
    let (au, ah) = if len > 0.0 { (au / len, ah / len) } else { (1.0, 0.0) };
    let extent = (eu - su) * au + (eh - sh) * ah;
    let deviation = (eu - tu) * au + (eh - th) * ah;
    (deviation, extent)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellThroughput {
    pub participant_id: u32,
    pub technique: TechniqueId,
    pub amplitude_m: f64,
    pub width_m: f64,
    pub n_trials: usize,
    pub measures: CellMeasures<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TechniqueThroughput {
    pub technique: TechniqueId,
    pub participants: usize,
    /// Mean over participants of each participant's mean cell throughput.
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub cells: Vec<CellThroughput>,
    pub techniques: Vec<TechniqueThroughput>,
    pub warnings: Vec<String>,
}

/// Total order on `f64` for grouping keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Throughput per participant × technique × (A, W) cell, pooled over user
/// positions, then averaged per participant and across participants.
pub fn throughput(records: &[TrialRecord], geom: &DisplayGeometry<f64>) -> Result<ThroughputReport, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::Empty);
    }
    type CellKey = (TechniqueId, u32, OrdF64, OrdF64);
    let mut cells: BTreeMap<CellKey, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.technique, r.participant_id, OrdF64(r.amplitude_m), OrdF64(r.width_m))).or_default().push(r);
    }

    // Every participant × technique must cover every task cell seen for that technique.
    let mut missing = Vec::new();
    type Coverage = (BTreeSet<u32>, BTreeSet<(OrdF64, OrdF64)>);
    let mut by_technique: BTreeMap<TechniqueId, Coverage> = BTreeMap::new();
    for &(t, p, a, w) in cells.keys() {
        let e = by_technique.entry(t).or_default();
        e.0.insert(p);
        e.1.insert((a, w));
    }
    for (t, (participants, tasks)) in &by_technique {
        for p in participants {
            for (a, w) in tasks {
                match cells.get(&(*t, *p, *a, *w)) {
                    None => missing.push(format!("{t} participant {p} A={} W={} (no trials)", a.0, w.0)),
                    Some(v) if v.len() < 2 => {
                        missing.push(format!("{t} participant {p} A={} W={} ({} trial)", a.0, w.0, v.len()))
                    }
                    _ => {}
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(AnalysisError::MissingCells(missing.join("; ")));
    }

    let mut out_cells = Vec::new();
    let mut warnings = Vec::new();
    let mut per_participant: BTreeMap<(TechniqueId, u32), Vec<f64>> = BTreeMap::new();
    for ((t, p, a, w), rs) in &cells {
        let (devs, extents): (Vec<f64>, Vec<f64>) = rs.iter().map(|r| endpoint_projection(r, geom)).unzip();
        let mts: Vec<f64> = rs.iter().map(|r| r.movement_time_s).collect();
        let m = cell_measures(&devs, &extents, &mts, w.0)?;
        if m.width_floored {
            let msg = format!("{t} participant {p} A={} W={}: zero endpoint spread, We floored at W/100", a.0, w.0);
            log::warn!("{msg}");
            warnings.push(msg);
        }
        per_participant.entry((*t, *p)).or_default().push(m.throughput_bps);
        out_cells.push(CellThroughput {
            participant_id: *p,
            technique: *t,
            amplitude_m: a.0,
            width_m: w.0,
            n_trials: rs.len(),
            measures: m,
        });
    }

    let mut techniques = Vec::new();
    for t in by_technique.keys() {
        let groups: Vec<Vec<f64>> =
            per_participant.iter().filter(|((tt, _), _)| tt == t).map(|(_, v)| v.clone()).collect();
        techniques.push(TechniqueThroughput {
            technique: *t,
            participants: groups.len(),
            throughput_bps: means_of_means(&groups).expect("non-empty"),
        });
    }
    Ok(ThroughputReport { cells: out_cells, techniques, warnings })
}

/// Factor a summary can be grouped by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Participant,
    Technique,
    Distance,
    Offset,
    Amplitude,
    Width,
    Id,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Participant => "participant",
            GroupKey::Technique => "technique",
            GroupKey::Distance => "distance",
            GroupKey::Offset => "offset",
            GroupKey::Amplitude => "amplitude",
            GroupKey::Width => "width",
            GroupKey::Id => "id",
        }
    }

    fn value(self, r: &TrialRecord) -> GroupValue {
        match self {
            GroupKey::Participant => GroupValue::Int(r.participant_id),
            GroupKey::Technique => GroupValue::Technique(r.technique),
            GroupKey::Distance => GroupValue::Num(OrdF64(r.distance_multiple)),
            GroupKey::Offset => GroupValue::Num(OrdF64(r.lateral_offset_m)),
            GroupKey::Amplitude => GroupValue::Num(OrdF64(r.amplitude_m)),
            GroupKey::Width => GroupValue::Num(OrdF64(r.width_m)),
            GroupKey::Id => GroupValue::Num(OrdF64(r.id_bits)),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKey {
    type Err = AnalysisError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "participant" => GroupKey::Participant,
            "technique" => GroupKey::Technique,
            "distance" => GroupKey::Distance,
            "offset" => GroupKey::Offset,
            "amplitude" => GroupKey::Amplitude,
            "width" => GroupKey::Width,
            "id" => GroupKey::Id,
            other => return Err(AnalysisError::UnknownKey(other.to_string())),
        })
    }
}

/// Parses a comma-separated key list; the empty string means no grouping.
pub fn parse_group_keys(s: &str) -> Result<Vec<GroupKey>, AnalysisError> {
    s.split(',').filter(|k| !k.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupValue {
    Int(u32),
    Technique(TechniqueId),
    Num(OrdF64),
}

impl fmt::Display for GroupValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupValue::Int(i) => write!(f, "{i}"),
            GroupValue::Technique(t) => write!(f, "{t}"),
            GroupValue::Num(k) => write!(f, "{}", k.0),
        }
    }
}

impl GroupValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            GroupValue::Int(i) => Some(f64::from(*i)),
            GroupValue::Num(k) => Some(k.0),
            GroupValue::Technique(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSummary {
    pub key: Vec<(GroupKey, GroupValue)>,
    pub mean_mt_s: f64,
    /// Student-t 95 % half-width; 0 when fewer than two trials.
    pub mt_ci95_halfwidth: f64,
    pub ci_defined: bool,
    pub accuracy: f64,
    pub n_trials: usize,
}

/// Student-t 95 % confidence half-width of the mean.
pub fn ci95_halfwidth(xs: &[f64]) -> Option<f64> {
    let sd = sample_sd(xs).ok()?;
    let n = xs.len() as f64;
    let t = StudentsT::new(0.0, 1.0, n - 1.0).ok()?.inverse_cdf(0.975);
    Some(t * sd / n.sqrt())
}

fn group<'a>(records: &'a [TrialRecord], keys: &[GroupKey]) -> BTreeMap<Vec<GroupValue>, Vec<&'a TrialRecord>> {
    let mut groups: BTreeMap<Vec<GroupValue>, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(keys.iter().map(|k| k.value(r)).collect()).or_default().push(r);
    }
    groups
}

/// Mean MT with CI and accuracy per group, ordered by key values.
pub fn summarize(records: &[TrialRecord], keys: &[GroupKey]) -> Vec<ConditionSummary> {
    group(records, keys)
        .into_iter()
        .map(|(values, rs)| {
            let mts: Vec<f64> = rs.iter().map(|r| r.movement_time_s).collect();
            let ci = ci95_halfwidth(&mts);
            ConditionSummary {
                key: keys.iter().copied().zip(values).collect(),
                mean_mt_s: mean(&mts),
                mt_ci95_halfwidth: ci.unwrap_or(0.0),
                ci_defined: ci.is_some(),
                accuracy: rs.iter().filter(|r| r.success).count() as f64 / rs.len() as f64,
                n_trials: rs.len(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFit {
    pub key: Vec<(GroupKey, GroupValue)>,
    /// `(ID, mean MT)` per task cell.
    pub points: Vec<(f64, f64)>,
    pub fit: FittsFit<f64>,
}

/// One Fitts regression per group over the group's (A, W) cell means.
pub fn fitts_by_group(records: &[TrialRecord], keys: &[GroupKey]) -> Result<Vec<GroupFit>, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::Empty);
    }
    group(records, keys)
        .into_iter()
        .map(|(values, rs)| {
            let owned: Vec<TrialRecord> = rs.into_iter().cloned().collect();
            let points: Vec<(f64, f64)> = summarize(&owned, &[GroupKey::Amplitude, GroupKey::Width])
                .iter()
                .map(|s| {
                    let (a, w) = (s.key[0].1.as_f64().expect("numeric"), s.key[1].1.as_f64().expect("numeric"));
                    (crate::tasks::fitts_id(a, w), s.mean_mt_s)
                })
                .collect();
            let fit = fitts_fit(&points)?;
            Ok(GroupFit { key: keys.iter().copied().zip(values).collect(), points, fit })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn record(participant: u32, technique: TechniqueId, a: f64, w: f64, mt: f64, success: bool) -> TrialRecord {
        TrialRecord {
            participant_id: participant,
            technique,
            distance_multiple: 1.0,
            lateral_offset_m: 0.0,
            amplitude_m: a,
            width_m: w,
            id_bits: crate::tasks::fitts_id(a, w),
            repetition: 0,
            seed: 0,
            movement_time_s: mt,
            success,
            endpoint_azimuth_rad: a / 3.27,
            endpoint_height_m: 1.5,
            target_azimuth_rad: a / 3.27,
            target_height_m: 1.5,
            click_diameter_m: 0.025,
            start_azimuth_rad: 0.0,
            start_height_m: 1.5,
        }
    }

    #[test]
    fn effective_width_examples() {
        assert!(effective_width::<f64>(&[1.0]).is_err());
        assert_eq!(effective_width(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        // Two symmetric points: sd = d·√2.
        let d = 0.03;
        assert_abs_diff_eq!(effective_width(&[-d, d]).unwrap(), 4.133 * d * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn floored_cell_still_reports_throughput() {
        let m = cell_measures::<f64>(&[0.0, 0.0], &[2.5, 2.5], &[1.0, 1.0], 0.1).unwrap();
        assert!(m.width_floored);
        assert_eq!(m.effective_width_m, 0.001);
        assert!(m.throughput_bps.is_finite());
    }

    #[test]
    fn throughput_is_ide_over_mt() {
        // Ae/We = 15 gives IDe = 4 bits.
        let sd = 0.1 / 4.133 / 2f64.sqrt();
        let m = cell_measures(&[-sd, sd], &[1.5, 1.5], &[1.0, 1.0], 0.1).unwrap();
        assert_abs_diff_eq!(m.effective_width_m, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(m.effective_id_bits, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.throughput_bps, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn means_of_means_examples() {
        assert_eq!(means_of_means(&[vec![2.0, 4.0]]), Some(3.0));
        assert_eq!(means_of_means(&[vec![2.0, 4.0], vec![1.0]]), Some(2.0));
        assert_eq!(means_of_means::<f64>(&[]), None);
    }

    #[test]
    fn fit_examples() {
        let pts: Vec<(f64, f64)> = [2.0, 3.0, 4.5, 6.0].iter().map(|&x| (x, 0.41 + 0.21 * x)).collect();
        let f = fitts_fit(&pts).unwrap();
        assert_abs_diff_eq!(f.intercept_s, 0.41, epsilon = 1e-12);
        assert_abs_diff_eq!(f.slope_s_per_bit, 0.21, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let flat = fitts_fit(&[(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]).unwrap();
        assert_eq!((flat.slope_s_per_bit, flat.r_squared), (0.0, 0.0));
        assert_eq!(fitts_fit(&[(2.0, 0.5), (2.0, 0.7)]), Err(AnalysisError::DegenerateIds));
    }

    #[test]
    fn summary_examples() {
        let one = [record(0, TechniqueId::Pa, 2.5, 0.1, 1.2, true)];
        let s = summarize(&one, &[GroupKey::Technique]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_mt_s, 1.2);
        assert!(!s[0].ci_defined);
        assert_eq!(s[0].mt_ci95_halfwidth, 0.0);

        let half = [record(0, TechniqueId::Pa, 2.5, 0.1, 1.0, true), record(0, TechniqueId::Pa, 2.5, 0.1, 2.0, false)];
        let s = summarize(&half, &[]);
        assert_eq!(s[0].accuracy, 0.5);
        // t(0.975, 1) = 12.706; sd = 0.7071; n = 2.
        assert_abs_diff_eq!(s[0].mt_ci95_halfwidth, 12.7062 * 0.5, epsilon = 1e-3);
        assert!(parse_group_keys("distance,bogus").is_err());
        assert_eq!(parse_group_keys("").unwrap(), vec![]);
    }

    #[test]
    fn throughput_reports_missing_cells() {
        let recs = vec![
            record(0, TechniqueId::Pa, 2.5, 0.1, 1.0, true),
            record(0, TechniqueId::Pa, 2.5, 0.1, 1.0, true),
            record(1, TechniqueId::Pa, 7.5, 0.1, 1.0, true),
            record(1, TechniqueId::Pa, 7.5, 0.1, 1.0, true),
        ];
        assert!(matches!(throughput(&recs, &DisplayGeometry::default()), Err(AnalysisError::MissingCells(_))));
    }

    #[test]
    fn technique_throughput_is_mean_of_cells() {
        let g = DisplayGeometry::default();
        let mut recs = Vec::new();
        for (a, mt) in [(2.5, 1.0), (7.5, 2.0)] {
            for dev in [-0.01, 0.01] {
                let mut r = record(0, TechniqueId::PaDist, a, 0.1, mt, true);
                r.endpoint_azimuth_rad = (a + dev) / 3.27;
                recs.push(r);
            }
        }
        let rep = throughput(&recs, &g).unwrap();
        assert_eq!(rep.cells.len(), 2);
        let mean_cell = (rep.cells[0].measures.throughput_bps + rep.cells[1].measures.throughput_bps) / 2.0;
        assert_abs_diff_eq!(rep.techniques[0].throughput_bps, mean_cell, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn effective_width_translation_and_scale(xs in proptest::collection::vec(-1.0f64..1.0, 2..40), c in -5.0f64..5.0, k in 0.1f64..10.0) {
            let we = effective_width(&xs).unwrap();
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
            prop_assert!((effective_width(&shifted).unwrap() - we).abs() <= 1e-9);
            prop_assert!((effective_width(&scaled).unwrap() - k * we).abs() <= 1e-9 * (1.0 + k * we));
        }

        #[test]
        fn means_of_means_permutation_invariant(mut groups in proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, 1..6), 1..6)) {
            let before = means_of_means(&groups).unwrap();
            groups.reverse();
            for g in groups.iter_mut() { g.reverse(); }
            let after = means_of_means(&groups).unwrap();
            prop_assert!((before - after).abs() <= 1e-12);
        }
    }
}
