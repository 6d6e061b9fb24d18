use super::{Condition, EvalError};
use crate::rng::stream;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Where a 1 FPS frame sits inside its one-second slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    #[default]
    Start,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FramePolicy {
    pub fps: f64,
    pub max_frames: usize,
    pub resize_long_side_px: u32,
    pub alignment: Alignment,
}

impl Default for FramePolicy {
    fn default() -> Self {
        FramePolicy {
            fps: 1.0,
            max_frames: 32,
            resize_long_side_px: 720,
            alignment: Alignment::Start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub video_id: String,
    pub timestamps_s: Vec<f64>,
    /// Indices into `timestamps_s` in the order frames are shown.
    pub presentation_order: Vec<usize>,
    pub resize_long_side_px: u32,
}

impl FramePlan {
    pub fn presented(&self) -> impl Iterator<Item = f64> + '_ {
        self.presentation_order.iter().map(|&i| self.timestamps_s[i])
    }
}

pub fn frame_plan(video_id: &str, duration_s: f64, policy: &FramePolicy) -> Result<FramePlan, EvalError> {
    if !duration_s.is_finite() || duration_s <= 0.0 {
        return Err(EvalError::Duration(duration_s));
    }
    if policy.fps.is_nan() || policy.fps <= 0.0 || policy.max_frames == 0 {
        return Err(EvalError::Policy(format!(
            "fps {} and max_frames {} must be positive",
            policy.fps, policy.max_frames
        )));
    }
    let slots = duration_s * policy.fps;
    let timestamps_s: Vec<f64> = if slots <= policy.max_frames as f64 {
        // tolerate 31.999999 style products
        let n = (slots + 1e-9).floor() as usize;
        let shift = match policy.alignment {
            Alignment::Start => 0.0,
            Alignment::Center => 0.5,
        };
        (0..n).map(|i| (i as f64 + shift) / policy.fps).collect()
    } else {
        let n = policy.max_frames;
        (0..n).map(|i| (i as f64 + 0.5) * duration_s / n as f64).collect()
    };
    Ok(FramePlan {
        video_id: video_id.to_string(),
        presentation_order: (0..timestamps_s.len()).collect(),
        timestamps_s,
        resize_long_side_px: policy.resize_long_side_px,
    })
}

/// Per-video frame limit when a model caps the total across all inputs.
pub fn per_video_cap(policy_max: usize, model_cap: Option<usize>, n_videos: usize) -> usize {
    match model_cap {
        Some(cap) => (cap / n_videos.max(1)).clamp(1, policy_max.max(1)),
        None => policy_max,
    }
}

/// `key` separates draws for different items sharing a video.
pub fn apply_ablation(plan: &FramePlan, condition: Condition, seed: u64, key: &str) -> FramePlan {
    let mut out = plan.clone();
    let mut rng = stream(seed, &["ablation", condition.as_str(), key, &plan.video_id]);
    match condition {
        Condition::Baseline => {}
        Condition::NoVideo => {
            out.timestamps_s.clear();
            out.presentation_order.clear();
        }
        Condition::RandomFrame => {
            if !plan.timestamps_s.is_empty() {
                let i = rng.gen_range(0..plan.timestamps_s.len());
                out.timestamps_s = vec![plan.timestamps_s[i]];
                out.presentation_order = vec![0];
            }
        }
        Condition::ShuffledFrames => out.presentation_order.shuffle(&mut rng),
    }
    out
}
