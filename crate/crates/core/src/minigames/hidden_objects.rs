//! Hidden objects: place the second marker, then find every object in any
//! order, then use the key on the chest.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::MinigameError;
use crate::narrative::{HiddenObjectsLayout, PoseTolerance};
use crate::types::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HiddenPhase {
    MarkerPlacement,
    ObjectHunt,
    KeyFound,
    ChestOpen,
}

impl HiddenPhase {
    pub const ALL: [HiddenPhase; 4] = [
        HiddenPhase::MarkerPlacement,
        HiddenPhase::ObjectHunt,
        HiddenPhase::KeyFound,
        HiddenPhase::ChestOpen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HiddenPhase::MarkerPlacement => "marker_placement",
            HiddenPhase::ObjectHunt => "object_hunt",
            HiddenPhase::KeyFound => "key_found",
            HiddenPhase::ChestOpen => "chest_open",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenObjectsState {
    phase: HiddenPhase,
    marker_pose: Option<Pose>,
    target_pose: Pose,
    tolerance: PoseTolerance,
    object_ids: Vec<String>,
    objects_found: BTreeSet<String>,
    abandoned: bool,
}

/// Whether `pose` is within `tolerance` of `target`. Both bounds are closed;
/// distance and rotation are checked independently.
pub fn pose_within(pose: Pose, target: Pose, tolerance: PoseTolerance) -> bool {
    let dx = pose.x - target.x;
    let dy = pose.y - target.y;
    let within_distance = dx * dx + dy * dy <= tolerance.distance * tolerance.distance;
    within_distance && angle_between(pose.rot_deg, target.rot_deg) <= tolerance.angle_deg
}

/// Smallest absolute difference between two headings, in [0, 180].
pub fn angle_between(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % 360.0;
    if d < 0.0 {
        d += 360.0;
    }
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

impl HiddenObjectsState {
    pub fn new(layout: &HiddenObjectsLayout) -> Self {
        HiddenObjectsState {
            phase: HiddenPhase::MarkerPlacement,
            marker_pose: None,
            target_pose: layout.target_pose,
            tolerance: layout.tolerance,
            object_ids: layout.objects.iter().map(|o| o.id.clone()).collect(),
            objects_found: BTreeSet::new(),
            abandoned: false,
        }
    }

    pub fn phase(&self) -> HiddenPhase {
        self.phase
    }

    pub fn marker_pose(&self) -> Option<Pose> {
        self.marker_pose
    }

    pub fn objects_found(&self) -> &BTreeSet<String> {
        &self.objects_found
    }

    pub fn objects_total(&self) -> usize {
        self.object_ids.len()
    }

    pub fn object_ids(&self) -> &[String] {
        &self.object_ids
    }

    pub fn is_abandoned(&self) -> bool {
        self.abandoned
    }

    pub fn is_finished(&self) -> bool {
        self.abandoned || self.phase == HiddenPhase::ChestOpen
    }

    fn require(&self, phase: HiddenPhase) -> Result<(), MinigameError> {
        if self.is_finished() {
            Err(MinigameError::GameOver)
        } else if self.phase != phase {
            Err(MinigameError::WrongPhase)
        } else {
            Ok(())
        }
    }

    /// Returns `true` when the pose was accepted. A rejected pose leaves
    /// the state untouched.
    pub fn place_marker(&mut self, pose: Pose) -> Result<bool, MinigameError> {
        self.require(HiddenPhase::MarkerPlacement)?;
        if !pose.is_finite() {
            return Err(MinigameError::InvalidPose);
        }
        if pose_within(pose, self.target_pose, self.tolerance) {
            self.marker_pose = Some(pose);
            self.phase = HiddenPhase::ObjectHunt;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn find_object(&mut self, object_id: &str) -> Result<(), MinigameError> {
        self.require(HiddenPhase::ObjectHunt)?;
        if !self.object_ids.iter().any(|id| id == object_id) {
            return Err(MinigameError::UnknownObject);
        }
        if !self.objects_found.insert(object_id.into()) {
            return Err(MinigameError::AlreadyFound);
        }
        if self.objects_found.len() == self.object_ids.len() {
            self.phase = HiddenPhase::KeyFound;
        }
        Ok(())
    }

    pub fn use_key(&mut self) -> Result<(), MinigameError> {
        self.require(HiddenPhase::KeyFound)?;
        self.phase = HiddenPhase::ChestOpen;
        Ok(())
    }

    pub fn abandon(&mut self) -> Result<(), MinigameError> {
        if self.is_finished() {
            return Err(MinigameError::GameOver);
        }
        self.abandoned = true;
        Ok(())
    }

    /// 1 for the marker, 2 for all objects, 1 for the chest.
    pub fn earned_points(&self) -> u32 {
        let mut points = 0;
        if self.phase >= HiddenPhase::ObjectHunt {
            points += 1;
        }
        if self.phase >= HiddenPhase::KeyFound {
            points += 2;
        }
        if self.phase == HiddenPhase::ChestOpen {
            points += 1;
        }
        points
    }
}
