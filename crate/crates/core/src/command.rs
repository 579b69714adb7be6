//! Typed operator commands, their mode/priority classes, and the inbound
//! command queue.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::formation::FormationKind;
use crate::geom::{Rect, Vec3};

/// Command context. Local commands are only honored in their own mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    Navigation,
    Formation,
    Task,
    Configuration,
    Safety,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::Navigation,
        Mode::Formation,
        Mode::Task,
        Mode::Configuration,
        Mode::Safety,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Navigation => "Navigation",
            Mode::Formation => "Formation",
            Mode::Task => "Task",
            Mode::Configuration => "Configuration",
            Mode::Safety => "Safety",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Local,
    Global,
}

/// Verb plus verb-specific arguments. On the wire this is the pair
/// `"verb": "<name>", "args": {...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verb", content = "args", rename_all = "snake_case")]
pub enum Action {
    MoveDir {
        direction: Vec3,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        distance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<u32>,
    },
    SetFormation {
        kind: FormationKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec3>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<u32>,
    },
    Expand {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factor: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<u32>,
    },
    Split {
        k: usize,
    },
    Merge {
        groups: Vec<u32>,
    },
    StartSearch {
        center: Vec3,
        radius: f64,
        lane_spacing: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        formation: Option<FormationKind>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<u32>,
    },
    StartTrack {
        target_id: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        perception_range: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        standoff_radius: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<u32>,
    },
    StartCoverage {
        region: Rect,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_iters: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        altitude: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        group: Option<u32>,
    },
    SetGroupCount {
        count: usize,
    },
    SetParam {
        path: String,
        value: f64,
    },
    Hold {},
    Land {},
    EmergencyStop {},
    SwitchMode {
        mode: Mode,
    },
}

pub const VERBS: [&str; 14] = [
    "move_dir",
    "set_formation",
    "expand",
    "split",
    "merge",
    "start_search",
    "start_track",
    "start_coverage",
    "set_group_count",
    "set_param",
    "hold",
    "land",
    "emergency_stop",
    "switch_mode",
];

impl Action {
    pub fn verb(&self) -> &'static str {
        match self {
            Action::MoveDir { .. } => "move_dir",
            Action::SetFormation { .. } => "set_formation",
            Action::Expand { .. } => "expand",
            Action::Split { .. } => "split",
            Action::Merge { .. } => "merge",
            Action::StartSearch { .. } => "start_search",
            Action::StartTrack { .. } => "start_track",
            Action::StartCoverage { .. } => "start_coverage",
            Action::SetGroupCount { .. } => "set_group_count",
            Action::SetParam { .. } => "set_param",
            Action::Hold {} => "hold",
            Action::Land {} => "land",
            Action::EmergencyStop {} => "emergency_stop",
            Action::SwitchMode { .. } => "switch_mode",
        }
    }

    pub fn scope(&self) -> Scope {
        match self {
            Action::Hold {} | Action::Land {} | Action::EmergencyStop {} | Action::SwitchMode { .. } => {
                Scope::Global
            }
            _ => Scope::Local,
        }
    }

    /// The mode a command belongs to. `switch_mode` reports the mode it
    /// switches into; the other Global verbs belong to Safety.
    pub fn home_mode(&self) -> Mode {
        match self {
            Action::MoveDir { .. } => Mode::Navigation,
            Action::SetFormation { .. } | Action::Expand { .. } | Action::Split { .. } | Action::Merge { .. } => {
                Mode::Formation
            }
            Action::StartSearch { .. } | Action::StartTrack { .. } | Action::StartCoverage { .. } => Mode::Task,
            Action::SetGroupCount { .. } | Action::SetParam { .. } => Mode::Configuration,
            Action::Hold {} | Action::Land {} | Action::EmergencyStop {} => Mode::Safety,
            Action::SwitchMode { mode } => *mode,
        }
    }

    /// Builds an action from a verb name and a JSON args object.
    pub fn from_verb(verb: &str, args: serde_json::Value) -> Result<Action, String> {
        let args = if args.is_null() { serde_json::json!({}) } else { args };
        serde_json::from_value(serde_json::json!({ "verb": verb, "args": args })).map_err(|e| {
            if VERBS.contains(&verb) {
                format!("bad arguments for {verb}: {e}")
            } else {
                format!("unknown verb {verb:?}")
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub seq: u64,
    #[serde(default)]
    pub issued_tick: u64,
    pub mode: Mode,
    pub scope: Scope,
    #[serde(flatten)]
    pub action: Action,
}

impl Command {
    /// A command whose mode and scope follow from its action.
    pub fn new(seq: u64, issued_tick: u64, action: Action) -> Self {
        Self {
            seq,
            issued_tick,
            mode: action.home_mode(),
            scope: action.scope(),
            action,
        }
    }

    pub fn verb(&self) -> &'static str {
        self.action.verb()
    }

    pub fn is_global(&self) -> bool {
        self.scope == Scope::Global
    }

    /// Checks that scope and mode agree with the verb.
    pub fn validate(&self) -> Result<(), String> {
        if self.scope != self.action.scope() {
            return Err(format!(
                "{} is a {:?} command, not {:?}",
                self.verb(),
                self.action.scope(),
                self.scope
            ));
        }
        if self.scope == Scope::Local && self.mode != self.action.home_mode() {
            return Err(format!(
                "{} belongs to {} mode, not {}",
                self.verb(),
                self.action.home_mode().name(),
                self.mode.name()
            ));
        }
        Ok(())
    }
}

/// Sliding window of recently seen sequence numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeqWindow {
    capacity: usize,
    order: VecDeque<u64>,
    members: BTreeSet<u64>,
}

impl SeqWindow {
    pub const DEFAULT_CAPACITY: usize = 256;

    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            order: VecDeque::new(),
            members: BTreeSet::new(),
        }
    }

    pub fn contains(&self, seq: u64) -> bool {
        self.members.contains(&seq)
    }

    /// Records `seq`; returns false when it was already present.
    pub fn insert(&mut self, seq: u64) -> bool {
        if !self.members.insert(seq) {
            return false;
        }
        self.order.push_back(seq);
        if self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.members.remove(&old);
            }
        }
        true
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Bounded inbox between the network layer and the dispatcher.
///
/// When full, the oldest Local command is evicted to make room. Global
/// commands are never dropped, even if that takes the queue over capacity;
/// a Local command arriving at a queue full of Globals is refused.
#[derive(Debug, Clone, Default)]
pub struct CommandQueue {
    capacity: usize,
    items: VecDeque<Command>,
    dropped: u64,
}

impl CommandQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: VecDeque::new(),
            dropped: 0,
        }
    }

    /// Enqueues `cmd`; returns the command dropped to make room, if any.
    pub fn push(&mut self, cmd: Command) -> Option<Command> {
        if self.items.len() < self.capacity {
            self.items.push_back(cmd);
            return None;
        }
        if let Some(pos) = self.items.iter().position(|c| !c.is_global()) {
            let evicted = self.items.remove(pos);
            self.items.push_back(cmd);
            self.dropped += 1;
            return evicted;
        }
        if cmd.is_global() {
            self.items.push_back(cmd);
            None
        } else {
            self.dropped += 1;
            Some(cmd)
        }
    }

    /// Removes everything, sorted by sequence number.
    pub fn drain(&mut self) -> Vec<Command> {
        let mut out: Vec<Command> = self.items.drain(..).collect();
        out.sort_by_key(|c| c.seq);
        out
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_json_shape() {
        let cmd = Command::new(7, 0, Action::SetFormation {
            kind: FormationKind::Circle,
            scale: Some(10.0),
            heading: None,
            center: None,
            group: None,
        });
        let json = serde_json::to_string(&cmd).unwrap();
        assert_eq!(
            json,
            r#"{"seq":7,"issued_tick":0,"mode":"Formation","scope":"Local","verb":"set_formation","args":{"kind":"Circle","scale":10.0}}"#
        );
        let back: Command = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cmd);
        let stop: Command =
            serde_json::from_str(r#"{"seq":1,"mode":"Safety","scope":"Global","verb":"emergency_stop","args":{}}"#).unwrap();
        assert_eq!(stop.action, Action::EmergencyStop {});
    }

    #[test]
    fn unknown_verb_rejected() {
        let err = Action::from_verb("barrel_roll", serde_json::json!({})).unwrap_err();
        assert!(err.contains("unknown verb"));
        let err = Action::from_verb("split", serde_json::json!({"k": "three"})).unwrap_err();
        assert!(err.contains("bad arguments"));
        assert!(serde_json::from_str::<Command>(
            r#"{"seq":1,"mode":"Safety","scope":"Global","verb":"barrel_roll","args":{}}"#
        )
        .is_err());
    }

    #[test]
    fn verb_table_matches_actions() {
        for verb in VERBS {
            let err = Action::from_verb(verb, serde_json::json!({}));
            if let Ok(a) = err {
                assert_eq!(a.verb(), verb);
            }
        }
    }

    #[test]
    fn validation_checks_scope_and_mode() {
        let mut c = Command::new(1, 0, Action::Split { k: 2 });
        assert!(c.validate().is_ok());
        c.mode = Mode::Task;
        assert!(c.validate().is_err());
        let mut g = Command::new(2, 0, Action::EmergencyStop {});
        g.mode = Mode::Navigation;
        assert!(g.validate().is_ok());
        g.scope = Scope::Local;
        assert!(g.validate().is_err());
    }

    #[test]
    fn seq_window_evicts_oldest() {
        let mut w = SeqWindow::new(3);
        assert!(w.insert(1) && w.insert(2) && w.insert(3));
        assert!(!w.insert(2));
        assert!(w.insert(4));
        assert!(!w.contains(1) && w.contains(4));
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn queue_never_drops_globals() {
        let mut q = CommandQueue::new(2);
        assert!(q.push(Command::new(1, 0, Action::Split { k: 1 })).is_none());
        assert!(q.push(Command::new(2, 0, Action::EmergencyStop {})).is_none());
        let evicted = q.push(Command::new(3, 0, Action::Land {})).unwrap();
        assert_eq!(evicted.seq, 1);
        // full of globals: locals are refused, globals still admitted
        assert_eq!(q.push(Command::new(4, 0, Action::Split { k: 2 })).unwrap().seq, 4);
        assert!(q.push(Command::new(5, 0, Action::Hold {})).is_none());
        let seqs: Vec<u64> = q.drain().iter().map(|c| c.seq).collect();
        assert_eq!(seqs, vec![2, 3, 5]);
        assert_eq!(q.dropped(), 2);
    }
}
