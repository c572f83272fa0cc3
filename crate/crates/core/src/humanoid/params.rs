use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shoulder ring half-width relative to the chest half-width.
pub(crate) const SHOULDER_WIDTH: f64 = 1.3;
/// Shoulder ring depth-to-width ratio.
pub(crate) const SHOULDER_DEPTH: f64 = 0.6;
/// Minimum shoulder ring depth relative to the chest depth.
pub(crate) const SHOULDER_OVER_CHEST: f64 = 1.06;
/// Seams splitting the top cap, as a fraction of the shoulder half-width.
pub(crate) const SEAM_X: f64 = 0.475;
/// Centre of the shoulder stub holes, as a fraction of the shoulder half-width.
pub(crate) const STUB_X: f64 = 0.7375;
pub(crate) const STUB_MAX_RADIUS: f64 = 0.2;
/// Bend radius of the shoulder stub relative to its tube radius.
pub(crate) const STUB_BEND: f64 = 1.5;
/// Leg hole radius relative to the hip half-width.
pub(crate) const LEG_HOLE: f64 = 0.34;
/// Waist junction rings relative to the waist ellipse.
pub(crate) const JUNCTION: f64 = 0.9;
/// Arm abduction from vertical (degrees).
pub const ARM_ABDUCTION_DEG: f64 = 30.0;

/// Dimensions of one arm and one leg (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimbDims {
    pub bicep_r: f64,
    pub forearm_r: f64,
    pub wrist_r: f64,
    pub upper_arm_len: f64,
    pub lower_arm_len: f64,
    pub hand_r: f64,
    pub hand_len: f64,
    pub thigh_r: f64,
    pub calf_r: f64,
    pub ankle_r: f64,
    pub upper_leg_len: f64,
    pub lower_leg_len: f64,
    pub foot_r: f64,
    pub foot_len: f64,
}

impl Default for LimbDims {
    fn default() -> Self {
        LimbDims {
            bicep_r: 50.0,
            forearm_r: 42.0,
            wrist_r: 30.0,
            upper_arm_len: 280.0,
            lower_arm_len: 280.0,
            hand_r: 38.0,
            hand_len: 180.0,
            thigh_r: 75.0,
            calf_r: 58.0,
            ankle_r: 34.0,
            upper_leg_len: 405.6,
            lower_leg_len: 374.4,
            foot_r: 42.0,
            foot_len: 140.0,
        }
    }
}

impl LimbDims {
    pub fn arm_len(&self) -> f64 {
        self.upper_arm_len + self.lower_arm_len
    }

    pub fn leg_len(&self) -> f64 {
        self.upper_leg_len + self.lower_leg_len
    }

    pub(crate) fn values_mut(&mut self) -> [&mut f64; 14] {
        [
            &mut self.bicep_r,
            &mut self.forearm_r,
            &mut self.wrist_r,
            &mut self.upper_arm_len,
            &mut self.lower_arm_len,
            &mut self.hand_r,
            &mut self.hand_len,
            &mut self.thigh_r,
            &mut self.calf_r,
            &mut self.ankle_r,
            &mut self.upper_leg_len,
            &mut self.lower_leg_len,
            &mut self.foot_r,
            &mut self.foot_len,
        ]
    }
}

/// Generator parameters. Torso levels are ellipses with half-width `*_a`
/// (left-right) and half-depth `*_b` (front-back); limbs are circular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanoidParams {
    pub head_r: f64,
    pub head_len: f64,
    pub neck_r: f64,
    pub neck_len: f64,
    pub chest_a: f64,
    pub chest_b: f64,
    pub waist_a: f64,
    pub waist_b: f64,
    pub hip_a: f64,
    pub hip_b: f64,
    pub upper_torso_len: f64,
    pub lower_torso_len: f64,
    pub pelvis_len: f64,
    pub left: LimbDims,
    pub right: LimbDims,
    /// Points per ring; a multiple of 8.
    pub radial_segments: usize,
    /// Uniformly spaced rings per part, before profile key levels are added.
    pub rings_per_part: usize,
}

impl Default for HumanoidParams {
    fn default() -> Self {
        HumanoidParams {
            head_r: 85.0,
            head_len: 220.0,
            neck_r: 55.0,
            neck_len: 80.0,
            chest_a: 150.0,
            chest_b: 110.0,
            waist_a: 140.0,
            waist_b: 105.0,
            hip_a: 180.0,
            hip_b: 135.0,
            upper_torso_len: 280.0,
            lower_torso_len: 95.2,
            pelvis_len: 184.8,
            left: LimbDims::default(),
            right: LimbDims::default(),
            radial_segments: 64,
            rings_per_part: 12,
        }
    }
}

/// Derived shoulder geometry of one side, in the left-side frame (x > 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Shoulder {
    pub hole_x: f64,
    pub radius: f64,
    pub bend: f64,
}

impl Shoulder {
    /// Centre of the stub's end ring, relative to the top cap centre.
    pub fn end(&self) -> (f64, f64) {
        let phi = std::f64::consts::PI - ARM_ABDUCTION_DEG.to_radians();
        (
            self.hole_x + self.bend * (1.0 - phi.cos()),
            self.bend * phi.sin(),
        )
    }
}

impl HumanoidParams {
    pub fn shoulder_a(&self) -> f64 {
        SHOULDER_WIDTH * self.chest_a
    }

    pub fn shoulder_b(&self) -> f64 {
        (SHOULDER_DEPTH * self.shoulder_a()).max(SHOULDER_OVER_CHEST * self.chest_b)
    }

    pub fn torso_len(&self) -> f64 {
        self.upper_torso_len + self.lower_torso_len + self.pelvis_len
    }

    /// Height of the crotch plane above the floor.
    pub fn crotch_height(&self) -> f64 {
        (self.left.leg_len() + self.left.foot_len).max(self.right.leg_len() + self.right.foot_len)
    }

    /// Height of the top cap plane.
    pub fn shoulder_height(&self) -> f64 {
        self.crotch_height() + self.torso_len()
    }

    /// Floor to the top of the head.
    pub fn height(&self) -> f64 {
        self.shoulder_height() + self.neck_len + self.head_len
    }

    pub(crate) fn limb(&self, left: bool) -> &LimbDims {
        if left {
            &self.left
        } else {
            &self.right
        }
    }

    pub(crate) fn shoulder(&self, left: bool) -> Shoulder {
        let a = self.shoulder_a();
        let radius = (STUB_MAX_RADIUS * a).min(0.85 * self.limb(left).bicep_r);
        Shoulder {
            hole_x: STUB_X * a,
            radius,
            bend: STUB_BEND * radius,
        }
    }

    pub(crate) fn leg_hole_radius(&self) -> f64 {
        LEG_HOLE * self.hip_a
    }

    /// Uniformly scales every length and radius.
    pub fn scaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        for v in p.values_mut() {
            *v *= s;
        }
        p
    }

    /// Scales the body so that [`height`](Self::height) equals `height`.
    pub fn with_height(&self, height: f64) -> Self {
        self.scaled(height / self.height())
    }

    /// Every length and radius, in a fixed order.
    pub(crate) fn values_mut(&mut self) -> Vec<&mut f64> {
        let HumanoidParams {
            head_r,
            head_len,
            neck_r,
            neck_len,
            chest_a,
            chest_b,
            waist_a,
            waist_b,
            hip_a,
            hip_b,
            upper_torso_len,
            lower_torso_len,
            pelvis_len,
            left,
            right,
            ..
        } = self;
        let mut v = vec![
            head_r,
            head_len,
            neck_r,
            neck_len,
            chest_a,
            chest_b,
            waist_a,
            waist_b,
            hip_a,
            hip_b,
            upper_torso_len,
            lower_torso_len,
            pelvis_len,
        ];
        v.extend(left.values_mut());
        v.extend(right.values_mut());
        v
    }

    /// Checks positivity and that neighbouring parts cannot intersect.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Generation(m));
        if self.radial_segments < 16 || self.radial_segments % 8 != 0 {
            return fail(format!(
                "radial segments {} must be a multiple of 8 and at least 16",
                self.radial_segments
            ));
        }
        if self.rings_per_part < 2 {
            return fail("at least two rings per part are required".into());
        }
        if self.clone().values_mut().iter().any(|v| !(v.is_finite() && **v > 0.0)) {
            return fail("all radii and lengths must be positive".into());
        }
        let check = |ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Generation(what.to_string()))
            }
        };
        let a_sh = self.shoulder_a();
        let j = JUNCTION;
        check(
            self.chest_a > j * self.waist_a && self.chest_b > j * self.waist_b,
            "chest must exceed the waist junction",
        )?;
        check(
            self.hip_a > j * self.waist_a && self.hip_b > j * self.waist_b,
            "hips must exceed the waist junction",
        )?;
        check(self.neck_r <= 0.95 * SEAM_X * a_sh, "neck does not fit between the shoulders")?;
        check(self.head_r > 0.95 * self.neck_r, "head must be wider than the neck")?;
        check(self.head_len > 2.1 * self.head_r, "head must be taller than wide")?;
        let hole = self.leg_hole_radius();
        for left in [true, false] {
            let l = self.limb(left);
            let sh = self.shoulder(left);
            let side = if left { "left" } else { "right" };
            let inner = sh.hole_x - sh.radius;
            check(
                inner > SEAM_X * a_sh,
                &format!("{side} shoulder stub overlaps the neck region"),
            )?;
            check(
                inner >= 1.05 * self.head_r,
                &format!("{side} shoulder stub collides with the head"),
            )?;
            let (ex, _) = sh.end();
            let c30 = ARM_ABDUCTION_DEG.to_radians().cos();
            check(
                ex - c30 * sh.radius.max(l.bicep_r) > 1.02 * a_sh,
                &format!("{side} upper arm collides with the torso"),
            )?;
            check(
                l.thigh_r <= 0.95 * self.hip_a / 2.0,
                &format!("{side} thigh collides with the other leg"),
            )?;
            let plateau = [
                (l.bicep_r > sh.radius && l.bicep_r > 0.85 * l.forearm_r, "bicep"),
                (l.forearm_r > l.wrist_r, "forearm"),
                (l.hand_r > l.wrist_r, "hand"),
                (l.thigh_r > hole && l.thigh_r > 0.85 * l.calf_r, "thigh"),
                (l.calf_r > l.ankle_r, "calf"),
                (l.foot_r > l.ankle_r, "foot"),
                (l.hand_len > 2.1 * l.hand_r, "hand length"),
                (l.foot_len > 1.5 * l.foot_r, "foot length"),
            ];
            for (ok, what) in plateau {
                check(ok, &format!("{side} {what} profile is not a proper bulge"))?;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: HumanoidParams =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}
