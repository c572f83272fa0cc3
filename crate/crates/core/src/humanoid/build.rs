//! Mesh construction: rings lofted into tubes, apex fans and planar caps
//! with holes.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;

use crate::part::PartLabel;
use crate::Vec3;

use super::params::{HumanoidParams, Shoulder, ARM_ABDUCTION_DEG, JUNCTION, SEAM_X};

/// Profile key: fraction along the part, half-width, half-depth.
pub(crate) type Key = (f64, f64, f64);

pub(crate) fn round_key(f: f64, r: f64) -> Key {
    (f, r, r)
}

fn interp(keys: &[Key], f: f64) -> (f64, f64) {
    let first = keys[0];
    if f <= first.0 {
        return (first.1, first.2);
    }
    for w in keys.windows(2) {
        let (k0, k1) = (w[0], w[1]);
        if f <= k1.0 {
            let t = if k1.0 > k0.0 { (f - k0.0) / (k1.0 - k0.0) } else { 1.0 };
            return (k0.1 + t * (k1.1 - k0.1), k0.2 + t * (k1.2 - k0.2));
        }
    }
    let last = keys[keys.len() - 1];
    (last.1, last.2)
}

/// Uniform ring fractions merged with the profile key fractions.
fn fractions(keys: &[Key], rings: usize) -> Vec<f64> {
    let mut f: Vec<f64> = (0..rings).map(|i| i as f64 / (rings - 1) as f64).collect();
    f.extend(keys.iter().map(|k| k.0));
    f.sort_by(|a, b| a.total_cmp(b));
    f.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    f
}

/// Angular layout of torso rings. Points sit at `(a sin t, b cos t)` with the
/// left and right arcs spanning the top-cap seams, so every ring has a vertex
/// exactly on each seam and on the sagittal plane.
pub(crate) fn torso_thetas(segments: usize) -> Vec<f64> {
    let q = segments / 4;
    let ts = SEAM_X.asin();
    let mut t: Vec<f64> = Vec::with_capacity(segments);
    let arc = |t: &mut Vec<f64>, from: f64| {
        for k in 0..=q {
            t.push(from + (PI - 2.0 * ts) * k as f64 / q as f64);
        }
    };
    let gap = |t: &mut Vec<f64>, from: f64| {
        for k in 1..q {
            t.push(from + 2.0 * ts * k as f64 / q as f64);
        }
    };
    arc(&mut t, ts);
    gap(&mut t, PI - ts);
    arc(&mut t, PI + ts);
    gap(&mut t, 2.0 * PI - ts);
    t
}

pub(crate) fn torso_ring(a: f64, b: f64, y: f64, segments: usize) -> Vec<Vec3> {
    torso_thetas(segments)
        .into_iter()
        .map(|t| Vec3::new(a * t.sin(), y, b * t.cos()))
        .collect()
}

fn circle(center: Vec3, u: Vec3, w: Vec3, r: f64, segments: usize) -> Vec<Vec3> {
    (0..segments)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / segments as f64;
            center + (u * a.cos() + w * a.sin()) * r
        })
        .collect()
}

struct Tube<'a> {
    part: PartLabel,
    base: Vec3,
    dir: Vec3,
    u: Vec3,
    w: Vec3,
    len: f64,
    keys: &'a [Key],
    apex: bool,
}

/// Accumulates the body surface with a part label per face.
#[derive(Default)]
pub(crate) struct Builder {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub owner: Vec<PartLabel>,
    pub interfaces: Vec<(PartLabel, PartLabel, Vec<usize>)>,
    segments: usize,
    rings: usize,
    /// Cap triangulations, recorded or replayed so that every body shares
    /// the template's faces.
    zips: Vec<Zip>,
    replay: Option<std::vec::IntoIter<Zip>>,
}

/// Vertex orders of a zipped outer/inner loop pair and the merge steps
/// (`true` advances the outer loop).
#[derive(Clone)]
pub(crate) struct Zip {
    outer: Vec<usize>,
    inner: Vec<usize>,
    steps: Vec<bool>,
}

impl Builder {
    fn ring(&mut self, pts: Vec<Vec3>) -> Vec<usize> {
        let start = self.vertices.len();
        self.vertices.extend(pts);
        (start..self.vertices.len()).collect()
    }

    fn tri(&mut self, f: [usize; 3], part: PartLabel) {
        self.faces.push(f);
        self.owner.push(part);
    }

    fn loft(&mut self, a: &[usize], b: &[usize], part: PartLabel) {
        let n = a.len();
        for i in 0..n {
            let j = (i + 1) % n;
            self.tri([a[i], a[j], b[j]], part);
            self.tri([a[i], b[j], b[i]], part);
        }
    }

    fn fan(&mut self, ring: &[usize], apex: usize, part: PartLabel) {
        let n = ring.len();
        for i in 0..n {
            self.tri([ring[i], ring[(i + 1) % n], apex], part);
        }
    }

    /// Triangulates the planar annulus between an outer boundary and a hole,
    /// both star-shaped around `center` in the horizontal plane, by merging
    /// their vertices in angular order.
    fn zip(&mut self, outer: &[usize], inner: &[usize], center: (f64, f64), part: PartLabel) {
        let plan = match self.replay.as_mut() {
            Some(it) => it.next().expect("replayed template has the same caps"),
            None => self.plan_zip(outer, inner, center),
        };
        let (o, h) = (&plan.outer, &plan.inner);
        let (mut i, mut j) = (0, 0);
        for &advance_outer in &plan.steps {
            let (oi, hj) = (o[i % o.len()], h[j % h.len()]);
            if advance_outer {
                self.tri([oi, o[(i + 1) % o.len()], hj], part);
                i += 1;
            } else {
                self.tri([oi, h[(j + 1) % h.len()], hj], part);
                j += 1;
            }
        }
        self.zips.push(plan);
    }

    /// Sorts both loops by angle around `center` in the (x, z) plane and
    /// merges them by unwrapped angle.
    fn plan_zip(&self, outer: &[usize], inner: &[usize], center: (f64, f64)) -> Zip {
        let angle = |i: usize| {
            let v = self.vertices[i];
            (v.z - center.1).atan2(v.x - center.0)
        };
        let sorted = |idx: &[usize]| {
            let mut v: Vec<(f64, usize)> = idx.iter().map(|&i| (angle(i), i)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        };
        let (o, h) = (sorted(outer), sorted(inner));
        let (m, n) = (o.len(), h.len());
        let unwrapped = |s: &[(f64, usize)], k: usize| s[k % s.len()].0 + 2.0 * PI * (k / s.len()) as f64;
        let (mut i, mut j) = (0, 0);
        let mut steps = Vec::with_capacity(m + n);
        while i < m || j < n {
            let advance_outer = j == n || (i < m && unwrapped(&o, i + 1) <= unwrapped(&h, j + 1));
            steps.push(advance_outer);
            if advance_outer {
                i += 1;
            } else {
                j += 1;
            }
        }
        Zip {
            outer: o.into_iter().map(|e| e.1).collect(),
            inner: h.into_iter().map(|e| e.1).collect(),
            steps,
        }
    }

    /// Lofts a tube along `dir`, reusing `start` as the first ring. Returns
    /// the last ring, or an empty list when the tube closes in an apex.
    fn tube(&mut self, t: &Tube, start: Vec<usize>) -> Vec<usize> {
        let mut prev = start;
        for f in fractions(t.keys, self.rings).into_iter().skip(1) {
            if t.apex && f >= 1.0 - 1e-12 {
                break;
            }
            let (r, _) = interp(t.keys, f);
            let ring = self.ring(circle(t.base + t.dir * (f * t.len), t.u, t.w, r, self.segments));
            self.loft(&prev, &ring, t.part);
            prev = ring;
        }
        if t.apex {
            let tip = self.vertices.len();
            self.vertices.push(t.base + t.dir * t.len);
            self.fan(&prev, tip, t.part);
            return Vec::new();
        }
        prev
    }

    fn link(&mut self, child: PartLabel, ring: &[usize]) {
        let parent = child.canonical_parent().expect("child part");
        self.interfaces.push((child, parent, ring.to_vec()));
    }

    /// Orients every face consistently with its neighbours, outward.
    fn orient(&mut self) {
        let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        let directed = |f: &[usize; 3], a: usize, b: usize| {
            (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b)
        };
        let mut seen = vec![false; self.faces.len()];
        for seed in 0..self.faces.len() {
            if seen[seed] {
                continue;
            }
            seen[seed] = true;
            let mut queue = VecDeque::from([seed]);
            while let Some(fi) = queue.pop_front() {
                let f = self.faces[fi];
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    for &g in &edges[&(a.min(b), a.max(b))] {
                        if seen[g] {
                            continue;
                        }
                        seen[g] = true;
                        if directed(&self.faces[g], a, b) {
                            self.faces[g].swap(1, 2);
                        }
                        queue.push_back(g);
                    }
                }
            }
        }
        let volume: f64 = self
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                a.dot(&b.cross(&c))
            })
            .sum();
        if volume < 0.0 {
            for f in &mut self.faces {
                f.swap(1, 2);
            }
        }
    }

    /// Vertex lists per part, from face ownership.
    pub fn part_vertices(&self) -> BTreeMap<PartLabel, Vec<usize>> {
        let mut parts: BTreeMap<PartLabel, Vec<usize>> = BTreeMap::new();
        for (f, &l) in self.faces.iter().zip(&self.owner) {
            parts.entry(l).or_default().extend_from_slice(f);
        }
        for v in parts.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        parts
    }
}

/// Profile keys of every part, as fractions of the part length.
pub(crate) struct Profiles {
    pub pelvis: Vec<Key>,
    pub lower_torso: Vec<Key>,
    pub upper_torso: Vec<Key>,
}

pub(crate) fn torso_profiles(p: &HumanoidParams) -> Profiles {
    let (wa, wb) = (JUNCTION * p.waist_a, JUNCTION * p.waist_b);
    let (sa, sb) = (p.shoulder_a(), p.shoulder_b());
    Profiles {
        pelvis: vec![(0.0, p.hip_a, p.hip_b), (0.9, p.hip_a, p.hip_b), (1.0, wa, wb)],
        lower_torso: vec![
            (0.0, wa, wb),
            (0.15, p.waist_a, p.waist_b),
            (0.85, p.waist_a, p.waist_b),
            (1.0, wa, wb),
        ],
        upper_torso: vec![
            (0.0, wa, wb),
            (0.2, p.chest_a, p.chest_b),
            (0.9, p.chest_a, p.chest_b),
            (1.0, sa, sb),
        ],
    }
}

fn limb_keys(points: &[(f64, f64)]) -> Vec<Key> {
    points.iter().map(|&(f, r)| round_key(f, r)).collect()
}

/// Builds the body surface. Faces are oriented outward. The cap
/// triangulation is taken from the default body at the same resolution, so
/// all bodies of one resolution share a face list.
pub(crate) fn build(p: &HumanoidParams) -> Builder {
    let template = HumanoidParams {
        radial_segments: p.radial_segments,
        rings_per_part: p.rings_per_part,
        ..HumanoidParams::default()
    };
    let zips = build_with(&template, None).zips;
    build_with(p, Some(zips))
}

fn build_with(p: &HumanoidParams, replay: Option<Vec<Zip>>) -> Builder {
    use PartLabel::*;
    let n = p.radial_segments;
    let mut b = Builder {
        segments: n,
        rings: p.rings_per_part,
        replay: replay.map(Vec::into_iter),
        ..Builder::default()
    };
    let x = Vec3::x();
    let y = Vec3::y();
    let z = Vec3::z();
    let y_crotch = p.crotch_height();
    let y_top = p.shoulder_height();

    // Trunk: pelvis, lower torso, upper torso stacked along y.
    let prof = torso_profiles(p);
    let mut y0 = y_crotch;
    let mut prev: Vec<usize> = Vec::new();
    let mut bottom: Vec<usize> = Vec::new();
    for (part, keys, len) in [
        (Pelvis, &prof.pelvis, p.pelvis_len),
        (LowerTorso, &prof.lower_torso, p.lower_torso_len),
        (UpperTorso, &prof.upper_torso, p.upper_torso_len),
    ] {
        if !prev.is_empty() {
            b.link(part, &prev);
        }
        for f in fractions(keys, p.rings_per_part) {
            if f == 0.0 && !prev.is_empty() {
                continue;
            }
            let (ra, rb) = interp(keys, f);
            let ring = b.ring(torso_ring(ra, rb, y0 + f * len, n));
            if prev.is_empty() {
                bottom = ring.clone();
            } else {
                b.loft(&prev, &ring, part);
            }
            prev = ring;
        }
        y0 += len;
    }
    let top = prev;

    let q = n / 4;
    let seam = |b: &mut Builder, ring: &[usize], from: usize, to: usize, x: f64| {
        let (z0, z1) = (b.vertices[ring[from]].z, b.vertices[ring[to]].z);
        let y = b.vertices[ring[from]].y;
        b.ring(
            (1..q)
                .map(|k| Vec3::new(x, y, z0 + (z1 - z0) * k as f64 / q as f64))
                .collect(),
        )
    };

    // Top cap: a central region around the neck and two lateral regions
    // around the shoulder stubs, split by straight seams.
    let a_sh = p.shoulder_a();
    let seam_l = seam(&mut b, &top, 0, q, SEAM_X * a_sh);
    let seam_r = seam(&mut b, &top, 2 * q, 3 * q, -SEAM_X * a_sh);
    let neck_ring = b.ring(circle(Vec3::new(0.0, y_top, 0.0), x, z, p.neck_r, n));
    let shoulders = [true, false].map(|left| p.shoulder(left));
    let stub_rings: Vec<Vec<usize>> = [true, false]
        .into_iter()
        .zip(shoulders)
        .map(|(left, sh)| b.ring(stub_ring(sh, 0.0, y_top, left, n)))
        .collect();
    let mut lateral_l: Vec<usize> = top[0..=q].to_vec();
    lateral_l.extend(&seam_l);
    b.zip(&lateral_l, &stub_rings[0], (shoulders[0].hole_x, 0.0), UpperTorso);
    let mut lateral_r: Vec<usize> = top[2 * q..=3 * q].to_vec();
    lateral_r.extend(&seam_r);
    b.zip(&lateral_r, &stub_rings[1], (-shoulders[1].hole_x, 0.0), UpperTorso);
    let mut central: Vec<usize> = top[q..=2 * q].to_vec();
    central.extend(&top[3 * q..]);
    central.push(top[0]);
    central.extend(&seam_l);
    central.extend(&seam_r);
    b.zip(&central, &neck_ring, (0.0, 0.0), UpperTorso);

    // Shoulder stubs bend from straight up to the arm direction.
    let bend = PI - ARM_ABDUCTION_DEG.to_radians();
    let mut arm_starts = Vec::new();
    for (k, left) in [true, false].into_iter().enumerate() {
        let sh = shoulders[k];
        let mut prev = stub_rings[k].clone();
        for i in 1..p.rings_per_part {
            let phi = bend * i as f64 / (p.rings_per_part - 1) as f64;
            let ring = b.ring(stub_ring(sh, phi, y_top, left, n));
            b.loft(&prev, &ring, UpperTorso);
            prev = ring;
        }
        arm_starts.push(prev);
    }

    // Bottom cap: two halves split on the sagittal plane, one leg hole each.
    let mid_back = q + q / 2;
    let mid_front = 3 * q + q / 2;
    let seam_mid = seam(&mut b, &bottom, mid_front, mid_back, 0.0);
    let hole_r = p.leg_hole_radius();
    let mut leg_starts = Vec::new();
    for left in [true, false] {
        let s = if left { 1.0 } else { -1.0 };
        let c = Vec3::new(s * p.hip_a / 2.0, y_crotch, 0.0);
        let hole = b.ring(circle(c, x, z, hole_r, n));
        let mut half: Vec<usize> = if left {
            bottom[mid_front..].iter().chain(&bottom[..=mid_back]).copied().collect()
        } else {
            bottom[mid_back..=mid_front].to_vec()
        };
        half.extend(&seam_mid);
        b.zip(&half, &hole, (c.x, 0.0), Pelvis);
        leg_starts.push(hole);
    }

    // Neck and head.
    b.link(Neck, &neck_ring);
    let neck_keys = limb_keys(&[(0.0, p.neck_r), (0.5, p.neck_r), (1.0, 0.95 * p.neck_r)]);
    let neck_end = b.tube(
        &Tube {
            part: Neck,
            base: Vec3::new(0.0, y_top, 0.0),
            dir: y,
            u: x,
            w: z,
            len: p.neck_len,
            keys: &neck_keys,
            apex: false,
        },
        neck_ring,
    );
    b.link(Head, &neck_end);
    let hr = p.head_r;
    let head_keys = limb_keys(&[
        (0.0, 0.95 * p.neck_r),
        (0.13, hr),
        (0.87, hr),
        (0.93, 0.8 * hr),
        (0.97, 0.5 * hr),
        (1.0, 0.0),
    ]);
    b.tube(
        &Tube {
            part: Head,
            base: Vec3::new(0.0, y_top + p.neck_len, 0.0),
            dir: y,
            u: x,
            w: z,
            len: p.head_len,
            keys: &head_keys,
            apex: true,
        },
        neck_end,
    );

    // Arms hang from the stub ends along the abduction direction.
    let ab = ARM_ABDUCTION_DEG.to_radians();
    for (k, left) in [true, false].into_iter().enumerate() {
        let s = if left { 1.0 } else { -1.0 };
        let l = p.limb(left);
        let sh = shoulders[k];
        let (ex, ey) = sh.end();
        let dir = Vec3::new(s * ab.sin(), -ab.cos(), 0.0);
        let u = Vec3::new(s * bend.cos(), -bend.sin(), 0.0);
        let (ua, la, hand) = if left {
            (LeftUpperArm, LeftLowerArm, LeftHand)
        } else {
            (RightUpperArm, RightLowerArm, RightHand)
        };
        let mut base = Vec3::new(s * ex, y_top + ey, 0.0);
        let f = 0.85 * l.forearm_r;
        let segments: [(PartLabel, f64, Vec<Key>, bool); 3] = [
            (
                ua,
                l.upper_arm_len,
                limb_keys(&[(0.0, sh.radius), (0.15, l.bicep_r), (0.7, l.bicep_r), (1.0, f)]),
                false,
            ),
            (
                la,
                l.lower_arm_len,
                limb_keys(&[(0.0, f), (0.2, l.forearm_r), (0.6, l.forearm_r), (1.0, l.wrist_r)]),
                false,
            ),
            (
                hand,
                l.hand_len,
                limb_keys(&[
                    (0.0, l.wrist_r),
                    (0.2, l.hand_r),
                    (0.7, l.hand_r),
                    (0.85, 0.8 * l.hand_r),
                    (0.95, 0.45 * l.hand_r),
                    (1.0, 0.0),
                ]),
                true,
            ),
        ];
        let mut ring = arm_starts[k].clone();
        for (part, len, keys, apex) in segments {
            b.link(part, &ring);
            ring = b.tube(
                &Tube {
                    part,
                    base,
                    dir,
                    u,
                    w: z,
                    len,
                    keys: &keys,
                    apex,
                },
                ring,
            );
            base += dir * len;
        }
    }

    // Legs hang straight down from the hip holes.
    for (k, left) in [true, false].into_iter().enumerate() {
        let s = if left { 1.0 } else { -1.0 };
        let l = p.limb(left);
        let (ul, ll, foot) = if left {
            (LeftUpperLeg, LeftLowerLeg, LeftFoot)
        } else {
            (RightUpperLeg, RightLowerLeg, RightFoot)
        };
        let c = 0.85 * l.calf_r;
        let segments: [(PartLabel, f64, Vec<Key>, bool); 3] = [
            (
                ul,
                l.upper_leg_len,
                limb_keys(&[(0.0, hole_r), (0.25, l.thigh_r), (0.7, l.thigh_r), (1.0, c)]),
                false,
            ),
            (
                ll,
                l.lower_leg_len,
                limb_keys(&[(0.0, c), (0.25, l.calf_r), (0.65, l.calf_r), (1.0, l.ankle_r)]),
                false,
            ),
            (
                foot,
                l.foot_len,
                limb_keys(&[
                    (0.0, l.ankle_r),
                    (0.2, l.foot_r),
                    (0.8, l.foot_r),
                    (0.9, 0.8 * l.foot_r),
                    (0.97, 0.4 * l.foot_r),
                    (1.0, 0.0),
                ]),
                true,
            ),
        ];
        let mut base = Vec3::new(s * p.hip_a / 2.0, y_crotch, 0.0);
        let mut ring = leg_starts[k].clone();
        for (part, len, keys, apex) in segments {
            b.link(part, &ring);
            ring = b.tube(
                &Tube {
                    part,
                    base,
                    dir: -y,
                    u: x,
                    w: z,
                    len,
                    keys: &keys,
                    apex,
                },
                ring,
            );
            base -= y * len;
        }
    }

    b.orient();
    b
}

/// Ring of a shoulder stub at bend angle `phi` (0 = in the top cap plane).
fn stub_ring(sh: Shoulder, phi: f64, y_top: f64, left: bool, segments: usize) -> Vec<Vec3> {
    let center = Vec3::new(
        sh.hole_x + sh.bend * (1.0 - phi.cos()),
        y_top + sh.bend * phi.sin(),
        0.0,
    );
    let normal = Vec3::new(phi.cos(), -phi.sin(), 0.0);
    let mut pts = circle(center, normal, Vec3::z(), sh.radius, segments);
    if !left {
        for v in &mut pts {
            v.x = -v.x;
        }
    }
    pts
}
