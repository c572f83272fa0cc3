//! The fixed 34-slot measurement vector and its 16 reporting categories.
//!
//! | slot | source |
//! |------|--------|
//! | `head_circ` | head circumference |
//! | `neck_circ` | neck circumference |
//! | `shoulder_crotch_len` | upper torso + lower torso + pelvis lengths |
//! | `chest_circ` | upper torso circumference |
//! | `waist_circ` | lower torso circumference |
//! | `pelvis_circ` | pelvis circumference |
//! | `{left,right}_wrist_circ` | hand side of the wrist interface |
//! | `{left,right}_bicep_circ` | upper arm circumference |
//! | `{left,right}_forearm_circ` | lower arm circumference |
//! | `{left,right}_arm_len` | upper arm + lower arm lengths |
//! | `{left,right}_inside_leg_len` | upper leg + lower leg lengths |
//! | `{left,right}_thigh_circ` | upper leg circumference |
//! | `{left,right}_calf_circ` | lower leg circumference |
//! | `{left,right}_ankle_circ` | foot side of the ankle interface |
//! | `overall_height` | vertical extent of the mesh |
//! | `shoulder_breadth` | distance between the upper-arm interface centres |
//! | `{left,right}_hand_circ`, `{left,right}_hand_len` | hand |
//! | `{left,right}_foot_circ`, `{left,right}_foot_len` | foot |
//! | `head_len`, `neck_len` | head and neck lengths |

use std::fmt::Write as _;

use crate::part::{PartLabel, Side};
use crate::{Error, Result};

pub const SLOT_COUNT: usize = 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Circumference,
    Length,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotInfo {
    pub name: &'static str,
    pub kind: SlotKind,
    /// Reporting category letter `a`..`p`, if the slot feeds one.
    pub category: Option<char>,
}

const fn slot(name: &'static str, kind: SlotKind, category: Option<char>) -> SlotInfo {
    SlotInfo {
        name,
        kind,
        category,
    }
}

use SlotKind::{Circumference as C, Length as L};

pub const SLOTS: [SlotInfo; SLOT_COUNT] = [
    slot("head_circ", C, Some('a')),
    slot("neck_circ", C, Some('b')),
    slot("shoulder_crotch_len", L, Some('c')),
    slot("chest_circ", C, Some('d')),
    slot("waist_circ", C, Some('e')),
    slot("pelvis_circ", C, Some('f')),
    slot("left_wrist_circ", C, Some('g')),
    slot("right_wrist_circ", C, Some('g')),
    slot("left_bicep_circ", C, Some('h')),
    slot("right_bicep_circ", C, Some('h')),
    slot("left_forearm_circ", C, Some('i')),
    slot("right_forearm_circ", C, Some('i')),
    slot("left_arm_len", L, Some('j')),
    slot("right_arm_len", L, Some('j')),
    slot("left_inside_leg_len", L, Some('k')),
    slot("right_inside_leg_len", L, Some('k')),
    slot("left_thigh_circ", C, Some('l')),
    slot("right_thigh_circ", C, Some('l')),
    slot("left_calf_circ", C, Some('m')),
    slot("right_calf_circ", C, Some('m')),
    slot("left_ankle_circ", C, Some('n')),
    slot("right_ankle_circ", C, Some('n')),
    slot("overall_height", L, Some('o')),
    slot("shoulder_breadth", L, Some('p')),
    slot("left_hand_circ", C, None),
    slot("right_hand_circ", C, None),
    slot("left_hand_len", L, None),
    slot("right_hand_len", L, None),
    slot("left_foot_circ", C, None),
    slot("right_foot_circ", C, None),
    slot("left_foot_len", L, None),
    slot("right_foot_len", L, None),
    slot("head_len", L, None),
    slot("neck_len", L, None),
];

/// The 16 reporting categories with their display names.
pub const CATEGORIES: [(char, &str); 16] = [
    ('a', "head circumference"),
    ('b', "neck circumference"),
    ('c', "shoulder-crotch length"),
    ('d', "chest circumference"),
    ('e', "waist circumference"),
    ('f', "pelvis circumference"),
    ('g', "wrist circumference"),
    ('h', "bicep circumference"),
    ('i', "forearm circumference"),
    ('j', "arm length"),
    ('k', "inside leg length"),
    ('l', "thigh circumference"),
    ('m', "calf circumference"),
    ('n', "ankle circumference"),
    ('o', "overall height"),
    ('p', "shoulder breadth"),
];

/// Exact slot name lookup.
pub fn slot_index(name: &str) -> Option<usize> {
    SLOTS.iter().position(|s| s.name == name)
}

/// Resolves a slot from its exact name or a unique prefix; dashes are
/// accepted in place of underscores (`waist` → `waist_circ`).
pub fn resolve_slot(alias: &str) -> Result<usize> {
    let key = alias.trim().replace('-', "_");
    if let Some(i) = slot_index(&key) {
        return Ok(i);
    }
    let hits: Vec<usize> = (0..SLOT_COUNT)
        .filter(|&i| SLOTS[i].name.starts_with(&key))
        .collect();
    match hits.as_slice() {
        [i] => Ok(*i),
        [] => Err(Error::InvalidArgument(format!("unknown measurement slot {alias:?}"))),
        _ => Err(Error::InvalidArgument(format!(
            "ambiguous measurement slot {alias:?}: {}",
            hits.iter().map(|&i| SLOTS[i].name).collect::<Vec<_>>().join(", ")
        ))),
    }
}

pub(crate) fn sided(side: Side, base: &str) -> usize {
    let prefix = match side {
        Side::Left => "left_",
        Side::Right => "right_",
    };
    slot_index(&format!("{prefix}{base}")).expect("sided slot exists")
}

/// Slots forming the measurement row of a part in the linear map: the part's
/// own circumference and length followed by the measurements that fix its
/// interface rings.
pub fn part_slots(label: PartLabel) -> Vec<usize> {
    use PartLabel::*;
    let s = |n: &str| slot_index(n).expect("slot exists");
    match label {
        Head => vec![s("head_circ"), s("head_len"), s("neck_circ")],
        Neck => vec![s("neck_circ"), s("neck_len")],
        UpperTorso => vec![
            s("chest_circ"),
            s("shoulder_crotch_len"),
            s("waist_circ"),
            s("neck_circ"),
        ],
        LowerTorso => vec![s("waist_circ"), s("shoulder_crotch_len"), s("chest_circ")],
        Pelvis => vec![
            s("pelvis_circ"),
            s("shoulder_crotch_len"),
            s("waist_circ"),
            s("chest_circ"),
        ],
        _ => {
            let side = label.side().expect("limb parts are sided");
            let names: &[&str] = match label {
                LeftUpperArm | RightUpperArm => &["bicep_circ", "arm_len", "forearm_circ"],
                LeftLowerArm | RightLowerArm => &["forearm_circ", "arm_len", "wrist_circ"],
                LeftHand | RightHand => &["hand_circ", "hand_len", "wrist_circ"],
                LeftUpperLeg | RightUpperLeg => &["thigh_circ", "inside_leg_len", "calf_circ"],
                LeftLowerLeg | RightLowerLeg => &["calf_circ", "inside_leg_len", "ankle_circ"],
                LeftFoot | RightFoot => &["foot_circ", "foot_len", "ankle_circ"],
                _ => unreachable!(),
            };
            let mut out: Vec<usize> = names.iter().map(|n| sided(side, n)).collect();
            if matches!(label, LeftUpperArm | RightUpperArm) {
                out.push(s("chest_circ"));
            }
            if matches!(label, LeftUpperLeg | RightUpperLeg) {
                out.push(s("pelvis_circ"));
            }
            out
        }
    }
}

/// One body's 34 measurements in millimetres, in slot order. Slots that
/// could not be measured hold NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementVector(pub [f64; SLOT_COUNT]);

impl Default for MeasurementVector {
    fn default() -> Self {
        MeasurementVector([f64::NAN; SLOT_COUNT])
    }
}

impl MeasurementVector {
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; SLOT_COUNT] = values.try_into().map_err(|_| Error::DimensionMismatch {
            expected: SLOT_COUNT,
            got: values.len(),
        })?;
        Ok(MeasurementVector(arr))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        slot_index(name).map(|i| self.0[i])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = resolve_slot(name)?;
        self.0[i] = value;
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn missing(&self) -> Vec<&'static str> {
        (0..SLOT_COUNT)
            .filter(|&i| !self.0[i].is_finite())
            .map(|i| SLOTS[i].name)
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        MeasurementVector(self.0.map(|v| v * s))
    }

    /// Mean per category over the slots that feed it.
    pub fn categories(&self) -> [(char, f64); 16] {
        CATEGORIES.map(|(c, _)| {
            let vals: Vec<f64> = (0..SLOT_COUNT)
                .filter(|&i| SLOTS[i].category == Some(c))
                .map(|i| self.0[i])
                .collect();
            (c, vals.iter().sum::<f64>() / vals.len() as f64)
        })
    }
}

pub fn csv_header() -> String {
    SLOTS.iter().map(|s| s.name).collect::<Vec<_>>().join(",")
}

/// Measurement CSV: a header of the 34 slot names, one row per subject, two
/// decimals.
pub fn to_csv(rows: &[MeasurementVector]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r
            .0
            .iter()
            .map(|v| if v.is_finite() { format!("{v:.2}") } else { "NaN".into() })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<MeasurementVector>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Schema("empty measurement CSV".into()))?;
    if header.trim() != csv_header() {
        return Err(Error::Schema("measurement CSV header does not list the 34 slots".into()));
    }
    lines
        .map(|(ln, line)| {
            let vals = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: ln + 1,
                        message: format!("{c:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            MeasurementVector::from_slice(&vals).map_err(|_| Error::Parse {
                line: ln + 1,
                message: format!("expected {SLOT_COUNT} values, got {}", vals.len()),
            })
        })
        .collect()
}
