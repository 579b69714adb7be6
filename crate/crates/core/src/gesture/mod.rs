//! Hand-keypoint gesture recognition: feature extraction, MLP classifiers
//! trained from scratch, evaluation metrics and a synthetic data generator.

pub mod dataset;
pub mod keypoints;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod synth;
pub mod train;

pub use dataset::Dataset;
pub use keypoints::{normalize_dynamic, normalize_static, GestureKind, GestureObservation, KeypointFrame};
pub use metrics::{evaluate, ConfusionMatrix, Metrics};
pub use mlp::Mlp;
pub use model::ClassifierModel;
pub use train::{train, TrainConfig, TrainReport};

/// Frames in one dynamic-gesture window.
pub const DYNAMIC_WINDOW: usize = 16;

/// Default static label table. The first eight are the core set.
pub const STATIC_LABELS: [&str; 16] = [
    "open_palm",
    "fist",
    "point_up",
    "victory",
    "three",
    "four",
    "thumb_up",
    "call",
    "rock",
    "l_shape",
    "pinky_up",
    "three_thumb",
    "point_left",
    "point_right",
    "ok",
    "thumb_down",
];

pub const DYNAMIC_LABELS: [&str; 2] = ["swipe_left", "circle"];
