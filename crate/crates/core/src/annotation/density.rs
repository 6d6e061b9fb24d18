use super::{AnnotationInstance, EntityKind};
use crate::error::AnnotationError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How annotated seconds are totalled for the density denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// Every video contributes its full duration, including each POV of a
    /// synchronized set.
    #[default]
    SumDurations,
    /// A synchronized set contributes only its longest video.
    MaxPerSyncGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindShare {
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityStats {
    pub n_labels: usize,
    pub total_seconds: f64,
    /// Labels per second.
    pub rho: f64,
    pub per_kind: BTreeMap<EntityKind, KindShare>,
}

/// Per-kind counts and shares of true labels. Every kind is present in the
/// map; shares are zero when there are no labels.
pub fn label_distribution(inst: &AnnotationInstance) -> BTreeMap<EntityKind, KindShare> {
    distribution_of(inst.true_labels.iter().map(|l| l.kind))
}

fn distribution_of(kinds: impl Iterator<Item = EntityKind>) -> BTreeMap<EntityKind, KindShare> {
    let mut counts: BTreeMap<EntityKind, usize> = EntityKind::ALL.iter().map(|k| (*k, 0)).collect();
    let mut total = 0usize;
    for k in kinds {
        *counts.get_mut(&k).expect("all kinds seeded") += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|(k, count)| {
            let share = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            (k, KindShare { count, share })
        })
        .collect()
}

fn annotated_seconds(inst: &AnnotationInstance, mode: DensityMode) -> f64 {
    let durations = inst.videos.iter().map(|v| v.duration_s);
    match mode {
        DensityMode::MaxPerSyncGroup if inst.synced => durations.fold(0.0, f64::max),
        _ => durations.sum(),
    }
}

/// Labels per annotated second for one instance.
pub fn decision_density(inst: &AnnotationInstance, mode: DensityMode) -> Result<DensityStats, AnnotationError> {
    decision_density_many(std::slice::from_ref(inst), mode)
}

/// Density over a corpus: label counts and annotated seconds are summed
/// across instances before dividing.
pub fn decision_density_many(
    insts: &[AnnotationInstance],
    mode: DensityMode,
) -> Result<DensityStats, AnnotationError> {
    let total_seconds: f64 = insts.iter().map(|i| annotated_seconds(i, mode)).sum();
    if total_seconds.is_nan() || total_seconds <= 0.0 {
        return Err(AnnotationError::ZeroDuration);
    }
    let per_kind = distribution_of(insts.iter().flat_map(|i| i.true_labels.iter().map(|l| l.kind)));
    let n_labels = per_kind.values().map(|s| s.count).sum();
    Ok(DensityStats {
        n_labels,
        total_seconds,
        rho: n_labels as f64 / total_seconds,
        per_kind,
    })
}
