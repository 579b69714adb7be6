//! Keypoint frames in, commands out: classify, fuse, convert.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::command::{Command, Mode};
use crate::error::{Error, Result};
use crate::fusion::{FusionBuffer, FusionConfig, FusionDecision, PushOutcome};
use crate::gesture::keypoints::INDEX_TIP;
use crate::gesture::{
    normalize_dynamic, normalize_static, ClassifierModel, GestureKind, GestureObservation, KeypointFrame,
    DYNAMIC_WINDOW,
};
use crate::mapping::MappingRules;
use crate::netproto::RecognitionStatus;

/// Gesture-issued commands number from here so they never collide with
/// operator-console sequence numbers.
pub const GESTURE_SEQ_BASE: u64 = 1 << 32;

/// Fingertip travel over the window, in image units, above which the
/// dynamic classifier is used.
pub const DEFAULT_MOTION_THRESHOLD: f64 = 0.06;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub observation: Option<GestureObservation>,
    pub push: Option<PushOutcome>,
    pub decision: Option<FusionDecision>,
    pub command: Option<Command>,
}

#[derive(Debug, Clone)]
pub struct GesturePipeline {
    pub static_model: ClassifierModel,
    pub dynamic_model: Option<ClassifierModel>,
    pub rules: MappingRules,
    pub fusion: FusionBuffer,
    pub motion_threshold: f64,
    history: VecDeque<KeypointFrame>,
    next_seq: u64,
    /// Decisions whose label has no binding in the current mode.
    pub unmatched: u64,
    last_label: Option<String>,
    last_decision: Option<String>,
    last_frame: u64,
}

impl GesturePipeline {
    pub fn new(
        static_model: ClassifierModel,
        dynamic_model: Option<ClassifierModel>,
        rules: MappingRules,
        fusion: FusionConfig,
    ) -> Result<Self> {
        if static_model.kind != GestureKind::Static {
            return Err(Error::Model("static slot holds a dynamic model".into()));
        }
        if let Some(d) = &dynamic_model {
            if d.kind != GestureKind::Dynamic || d.network.input_size() != 2 * DYNAMIC_WINDOW {
                return Err(Error::Model(format!(
                    "dynamic model must take {} inputs",
                    2 * DYNAMIC_WINDOW
                )));
            }
        }
        Ok(Self {
            static_model,
            dynamic_model,
            rules,
            fusion: FusionBuffer::new(fusion)?,
            motion_threshold: DEFAULT_MOTION_THRESHOLD,
            history: VecDeque::with_capacity(DYNAMIC_WINDOW),
            next_seq: GESTURE_SEQ_BASE,
            unmatched: 0,
            last_label: None,
            last_decision: None,
            last_frame: 0,
        })
    }

    fn fingertip_travel(&self) -> f64 {
        let Some(first) = self.history.front() else {
            return 0.0;
        };
        let [x0, y0] = first.points[INDEX_TIP];
        self.history
            .iter()
            .map(|f| {
                let [x, y] = f.points[INDEX_TIP];
                (x - x0).hypot(y - y0)
            })
            .fold(0.0, f64::max)
    }

    /// Classifies one frame without touching the fusion buffer.
    pub fn classify(&mut self, frame: &KeypointFrame) -> Result<GestureObservation> {
        frame.validate()?;
        if self.history.len() == DYNAMIC_WINDOW {
            self.history.pop_front();
        }
        self.history.push_back(frame.clone());
        let moving = self.history.len() == DYNAMIC_WINDOW && self.fingertip_travel() > self.motion_threshold;
        let (model, features, kind) = match (&self.dynamic_model, moving) {
            (Some(d), true) => {
                let window: Vec<KeypointFrame> = self.history.iter().cloned().collect();
                (d, normalize_dynamic(&window)?, GestureKind::Dynamic)
            }
            _ => (&self.static_model, normalize_static(frame)?, GestureKind::Static),
        };
        let (idx, p) = model.predict(&features)?;
        Ok(GestureObservation {
            label: model.labels[idx].clone(),
            confidence: p,
            frame_index: frame.frame_index,
            kind,
        })
    }

    pub fn process(&mut self, frame: &KeypointFrame, mode: Mode, tick: u64) -> Result<FrameOutcome> {
        let obs = self.classify(frame)?;
        self.last_label = Some(obs.label.clone());
        self.last_frame = frame.frame_index;
        let (push, decision) = self.fusion.observe(obs.clone());
        if let Some(d) = &decision {
            self.last_decision = Some(d.label.clone());
        }
        let command = match &decision {
            Some(d) => match self.rules.convert(&d.label, mode) {
                Some(action) => {
                    let cmd = Command::new(self.next_seq, tick, action);
                    self.next_seq += 1;
                    Some(cmd)
                }
                None => {
                    log::info!("gesture {} has no binding in {} mode", d.label, mode.name());
                    self.unmatched += 1;
                    None
                }
            },
            None => None,
        };
        Ok(FrameOutcome {
            observation: Some(obs),
            push: Some(push),
            decision,
            command,
        })
    }
}

impl GesturePipeline {
    /// Recognition feedback for telemetry.
    pub fn status(&self) -> RecognitionStatus {
        RecognitionStatus {
            last_label: self.last_label.clone(),
            last_decision: self.last_decision.clone(),
            cooldown_frames: self.fusion.cooldown_remaining(self.last_frame),
            buffered: self.fusion.len(),
            below_threshold: self.fusion.counters.below_threshold,
            blanked: self.fusion.counters.blanked,
            unmatched: self.unmatched,
        }
    }
}
