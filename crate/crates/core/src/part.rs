//! The 17 body part labels and the canonical kinematic tree.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartLabel {
    Head,
    Neck,
    UpperTorso,
    LowerTorso,
    Pelvis,
    LeftUpperLeg,
    RightUpperLeg,
    LeftLowerLeg,
    RightLowerLeg,
    LeftUpperArm,
    RightUpperArm,
    LeftLowerArm,
    RightLowerArm,
    LeftHand,
    RightHand,
    LeftFoot,
    RightFoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Sign of the lateral (x) coordinate on this side of the body.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

impl PartLabel {
    /// All labels in the fixed order used everywhere for deterministic iteration.
    pub const ALL: [PartLabel; 17] = [
        PartLabel::Head,
        PartLabel::Neck,
        PartLabel::UpperTorso,
        PartLabel::LowerTorso,
        PartLabel::Pelvis,
        PartLabel::LeftUpperLeg,
        PartLabel::RightUpperLeg,
        PartLabel::LeftLowerLeg,
        PartLabel::RightLowerLeg,
        PartLabel::LeftUpperArm,
        PartLabel::RightUpperArm,
        PartLabel::LeftLowerArm,
        PartLabel::RightLowerArm,
        PartLabel::LeftHand,
        PartLabel::RightHand,
        PartLabel::LeftFoot,
        PartLabel::RightFoot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PartLabel::Head => "head",
            PartLabel::Neck => "neck",
            PartLabel::UpperTorso => "upper-torso",
            PartLabel::LowerTorso => "lower-torso",
            PartLabel::Pelvis => "pelvis",
            PartLabel::LeftUpperLeg => "left-upper-leg",
            PartLabel::RightUpperLeg => "right-upper-leg",
            PartLabel::LeftLowerLeg => "left-lower-leg",
            PartLabel::RightLowerLeg => "right-lower-leg",
            PartLabel::LeftUpperArm => "left-upper-arm",
            PartLabel::RightUpperArm => "right-upper-arm",
            PartLabel::LeftLowerArm => "left-lower-arm",
            PartLabel::RightLowerArm => "right-lower-arm",
            PartLabel::LeftHand => "left-hand",
            PartLabel::RightHand => "right-hand",
            PartLabel::LeftFoot => "left-foot",
            PartLabel::RightFoot => "right-foot",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn side(self) -> Option<Side> {
        use PartLabel::*;
        match self {
            LeftUpperLeg | LeftLowerLeg | LeftUpperArm | LeftLowerArm | LeftHand | LeftFoot => {
                Some(Side::Left)
            }
            RightUpperLeg | RightLowerLeg | RightUpperArm | RightLowerArm | RightHand
            | RightFoot => Some(Side::Right),
            _ => None,
        }
    }

    /// Parent in the canonical kinematic tree (pelvis is the root).
    pub fn canonical_parent(self) -> Option<PartLabel> {
        use PartLabel::*;
        Some(match self {
            Pelvis => return None,
            LowerTorso => Pelvis,
            UpperTorso => LowerTorso,
            Neck => UpperTorso,
            Head => Neck,
            LeftUpperArm | RightUpperArm => UpperTorso,
            LeftLowerArm => LeftUpperArm,
            RightLowerArm => RightUpperArm,
            LeftHand => LeftLowerArm,
            RightHand => RightLowerArm,
            LeftUpperLeg | RightUpperLeg => Pelvis,
            LeftLowerLeg => LeftUpperLeg,
            RightLowerLeg => RightUpperLeg,
            LeftFoot => LeftLowerLeg,
            RightFoot => RightLowerLeg,
        })
    }
}

impl fmt::Display for PartLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PartLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Schema(format!("unknown part label {s:?}")))
    }
}

impl Serialize for PartLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PartLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}
