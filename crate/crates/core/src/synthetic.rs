//! Seeded synthetic scenes: static boxes, one UAV on a known path, and
//! random clutter, as seen by a fixed sensor at the origin.
//!
//! Every coordinate and timestamp is rounded to 9 significant digits at
//! generation time, so a generated scene is identical to what its CSV
//! export reads back as.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterLabeling;
use crate::numfmt::quantize_sig9;
use crate::pointcloud::ScanSequence;
use crate::trajectory::{Sample, Trajectory};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene config: {0}")]
    InvalidConfig(String),
}

/// Axis-aligned box; only faces turned toward the sensor are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticBox {
    pub center: [f64; 3],
    pub dimensions: [f64; 3],
    /// Mean surface returns per frame (Poisson).
    pub points_per_frame: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UavPath {
    /// Constant-speed flight along the waypoints, hovering at the last one.
    Polyline { waypoints: Vec<[f64; 3]>, speed: f64 },
    /// Horizontal circle around `center`, counter-clockwise.
    Circle {
        center: [f64; 3],
        radius: f64,
        speed: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `center + amplitude * sin(2π frequency t + phase)` per axis.
    Lissajous {
        center: [f64; 3],
        amplitude: [f64; 3],
        frequency: [f64; 3],
        #[serde(default)]
        phase: [f64; 3],
    },
}

impl UavPath {
    pub fn position(&self, t: f64) -> [f64; 3] {
        match self {
            UavPath::Polyline { waypoints, speed } => {
                let mut remaining = speed * t;
                for seg in waypoints.windows(2) {
                    let d = [seg[1][0] - seg[0][0], seg[1][1] - seg[0][1], seg[1][2] - seg[0][2]];
                    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    if remaining <= len && len > 0.0 {
                        let s = remaining / len;
                        return std::array::from_fn(|i| seg[0][i] + s * d[i]);
                    }
                    remaining -= len;
                }
                *waypoints.last().expect("validated non-empty")
            }
            UavPath::Circle {
                center,
                radius,
                speed,
                phase,
            } => {
                let a = phase + speed / radius * t;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin(), center[2]]
            }
            UavPath::Lissajous {
                center,
                amplitude,
                frequency,
                phase,
            } => std::array::from_fn(|i| {
                center[i] + amplitude[i] * (std::f64::consts::TAU * frequency[i] * t + phase[i]).sin()
            }),
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            UavPath::Polyline { waypoints, speed } => {
                if waypoints.is_empty() {
                    return Err("polyline path needs at least one waypoint".into());
                }
                if !waypoints.iter().all(|w| finite(w)) || !(speed.is_finite() && *speed >= 0.0) {
                    return Err("polyline waypoints and speed must be finite, speed >= 0".into());
                }
            }
            UavPath::Circle {
                center,
                radius,
                speed,
                phase,
            } => {
                if !(finite(center) && radius.is_finite() && *radius > 0.0 && speed.is_finite() && phase.is_finite()) {
                    return Err("circle path needs a finite center, radius > 0 and finite speed".into());
                }
            }
            UavPath::Lissajous {
                center,
                amplitude,
                frequency,
                phase,
            } => {
                if !(finite(center) && finite(amplitude) && finite(frequency) && finite(phase)) {
                    return Err("lissajous parameters must be finite".into());
                }
            }
        }
        Ok(())
    }
}

/// Probability that a UAV return is lost, linear in sensor range from
/// `near` at the origin to `far` at `far_range` and constant beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeDropout {
    pub near: f64,
    pub far: f64,
    pub far_range: f64,
}

impl Default for RangeDropout {
    fn default() -> Self {
        Self {
            near: 0.0,
            far: 0.0,
            far_range: 100.0,
        }
    }
}

impl RangeDropout {
    pub fn probability(&self, range: f64) -> f64 {
        let s = (range / self.far_range).clamp(0.0, 1.0);
        self.near + (self.far - self.near) * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub rng_seed: u64,
    /// Seconds.
    pub duration: f64,
    /// Hz.
    pub frame_rate: f64,
    #[serde(default)]
    pub static_structures: Vec<StaticBox>,
    pub uav_path: UavPath,
    /// Mean UAV returns per frame (Poisson) before dropout.
    pub uav_returns_per_frame: f64,
    /// Emit exactly `round(uav_returns_per_frame)` returns per frame instead
    /// of a Poisson draw.
    #[serde(default)]
    pub uav_returns_exact: bool,
    /// Radius of the ball around the path point from which UAV returns are
    /// drawn, modeling the airframe's extent.
    #[serde(default)]
    pub uav_extent: f64,
    #[serde(default)]
    pub range_dropout: RangeDropout,
    /// Per-axis Gaussian noise on UAV and clutter returns; static surfaces
    /// get a fifth of it.
    pub noise_sigma: f64,
    /// Mean isolated clutter points per frame (Poisson).
    #[serde(default)]
    pub clutter_rate: f64,
    #[serde(default = "default_clutter_bounds")]
    pub clutter_bounds: Bounds,
}

fn default_clutter_bounds() -> Bounds {
    Bounds {
        min: [0.0, -60.0, 0.0],
        max: [120.0, 60.0, 50.0],
    }
}

impl SceneConfig {
    pub fn frame_count(&self) -> usize {
        ((self.duration * self.frame_rate).floor() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return bad(format!("frame_rate must be > 0, got {}", self.frame_rate));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad(format!("duration must be > 0, got {}", self.duration));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        let rate_ok = |r: f64| r.is_finite() && r >= 0.0;
        if !rate_ok(self.uav_returns_per_frame) || !rate_ok(self.clutter_rate) || !rate_ok(self.uav_extent) {
            return bad("uav_returns_per_frame, clutter_rate and uav_extent must be >= 0".into());
        }
        for (i, b) in self.static_structures.iter().enumerate() {
            if !rate_ok(b.points_per_frame)
                || !b.dimensions.iter().all(|d| rate_ok(*d))
                || !b.center.iter().all(|c| c.is_finite())
            {
                return bad(format!("static structure {i} has invalid center, dimensions or rate"));
            }
        }
        let d = &self.range_dropout;
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !(prob(d.near) && prob(d.far) && d.far_range.is_finite() && d.far_range > 0.0) {
            return bad("range_dropout probabilities must lie in [0, 1] and far_range > 0".into());
        }
        let cb = &self.clutter_bounds;
        if !(0..3).all(|i| cb.min[i].is_finite() && cb.max[i].is_finite() && cb.min[i] <= cb.max[i]) {
            return bad("clutter_bounds must be finite with min <= max".into());
        }
        self.uav_path.validate().map_err(SynthError::InvalidConfig)
    }
}

/// Provenance of a generated point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointTag {
    Static,
    Uav,
    Clutter,
}

/// Knows which generated points are UAV returns.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingClusterOracle {
    tags: Vec<PointTag>,
}

impl MovingClusterOracle {
    /// Tags in full-window superposition order.
    pub fn tags(&self) -> &[PointTag] {
        &self.tags
    }

    pub fn uav_point_count(&self) -> usize {
        self.tags.iter().filter(|t| **t == PointTag::Uav).count()
    }

    /// The cluster holding the most UAV-tagged points (lowest id on ties),
    /// or `None` if every UAV point is noise.
    pub fn uav_cluster(&self, labeling: &ClusterLabeling) -> Option<usize> {
        self.majority_cluster(labeling, PointTag::Uav)
    }

    /// Clusters whose members are mostly tagged `tag`.
    pub fn clusters_dominated_by(&self, labeling: &ClusterLabeling, tag: PointTag) -> Vec<usize> {
        let mut total = vec![0usize; labeling.cluster_count()];
        let mut hits = vec![0usize; labeling.cluster_count()];
        for (l, t) in labeling.labels().iter().zip(&self.tags) {
            if let Some(k) = l {
                total[*k] += 1;
                if *t == tag {
                    hits[*k] += 1;
                }
            }
        }
        (0..total.len()).filter(|&k| 2 * hits[k] > total[k]).collect()
    }

    fn majority_cluster(&self, labeling: &ClusterLabeling, tag: PointTag) -> Option<usize> {
        let mut votes = vec![0usize; labeling.cluster_count()];
        for (l, t) in labeling.labels().iter().zip(&self.tags) {
            if let (Some(k), true) = (l, *t == tag) {
                votes[*k] += 1;
            }
        }
        let (k, &n) = votes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
        (n > 0).then_some(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub sequence: ScanSequence,
    /// UAV path sampled at every frame timestamp.
    pub ground_truth: Trajectory,
    pub oracle: MovingClusterOracle,
}

struct Face {
    origin: [f64; 3],
    u: [f64; 3],
    v: [f64; 3],
    area: f64,
}

/// Faces of `b` whose outward normal points toward the sensor at the origin.
fn visible_faces(b: &StaticBox) -> Vec<Face> {
    let c = b.center;
    let h = b.dimensions.map(|d| 0.5 * d);
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            let face_center_coord = c[axis] + sign * h[axis];
            // outward normal is sign * e_axis; visible if origin lies on that side
            if sign * (0.0 - face_center_coord) <= 0.0 {
                continue;
            }
            let mut origin = c;
            origin[axis] = face_center_coord;
            origin[a1] -= h[a1];
            origin[a2] -= h[a2];
            let mut u = [0.0; 3];
            let mut v = [0.0; 3];
            u[a1] = b.dimensions[a1];
            v[a2] = b.dimensions[a2];
            let area = b.dimensions[a1] * b.dimensions[a2];
            if area > 0.0 {
                faces.push(Face { origin, u, v, area });
            }
        }
    }
    faces
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("mean validated positive and finite");
    d.sample(rng) as usize
}

fn jitter(rng: &mut ChaCha8Rng, normal: &Normal<f64>, p: [f64; 3]) -> [f64; 3] {
    [
        p[0] + normal.sample(rng),
        p[1] + normal.sample(rng),
        p[2] + normal.sample(rng),
    ]
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 3] {
    if radius <= 0.0 {
        return [0.0; 3];
    }
    loop {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0 {
            return p.map(|c| c * radius);
        }
    }
}

fn norm(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Generate a scene. Equal configs give bit-identical output.
pub fn generate(config: &SceneConfig) -> Result<SyntheticScene, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let uav_noise = Normal::new(0.0, config.noise_sigma).expect("sigma validated");
    let static_noise = Normal::new(0.0, config.noise_sigma / 5.0).expect("sigma validated");
    let faces: Vec<(Vec<Face>, f64)> = config
        .static_structures
        .iter()
        .map(|b| {
            let f = visible_faces(b);
            let total = f.iter().map(|f| f.area).sum();
            (f, total)
        })
        .collect();

    let n = config.frame_count();
    let mut frames = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut tags = Vec::new();
    for i in 0..n {
        let t = quantize_sig9(i as f64 / config.frame_rate);
        let center = config.uav_path.position(t);
        let mut points = Vec::new();

        for (b, (fs, total)) in config.static_structures.iter().zip(&faces) {
            let count = poisson(&mut rng, b.points_per_frame);
            if fs.is_empty() {
                continue;
            }
            for _ in 0..count {
                let mut pick = rng.random::<f64>() * total;
                let face = fs
                    .iter()
                    .find(|f| {
                        pick -= f.area;
                        pick < 0.0
                    })
                    .unwrap_or(&fs[fs.len() - 1]);
                let (s, r) = (rng.random::<f64>(), rng.random::<f64>());
                let p = std::array::from_fn(|k| face.origin[k] + s * face.u[k] + r * face.v[k]);
                points.push(jitter(&mut rng, &static_noise, p));
                tags.push(PointTag::Static);
            }
        }

        let drop_p = config.range_dropout.probability(norm(center));
        let returns = if config.uav_returns_exact {
            config.uav_returns_per_frame.round() as usize
        } else {
            poisson(&mut rng, config.uav_returns_per_frame)
        };
        for _ in 0..returns {
            let offset = uniform_in_ball(&mut rng, config.uav_extent);
            let p = jitter(&mut rng, &uav_noise, std::array::from_fn(|k| center[k] + offset[k]));
            if rng.random::<f64>() < drop_p {
                continue;
            }
            points.push(p);
            tags.push(PointTag::Uav);
        }

        let cb = config.clutter_bounds;
        for _ in 0..poisson(&mut rng, config.clutter_rate) {
            let p: [f64; 3] = std::array::from_fn(|k| {
                if cb.max[k] > cb.min[k] {
                    rng.random_range(cb.min[k]..cb.max[k])
                } else {
                    cb.min[k]
                }
            });
            points.push(p);
            tags.push(PointTag::Clutter);
        }

        frames.push((t, points.into_iter().map(|p| p.map(quantize_sig9)).collect::<Vec<_>>()));
        truth.push(Sample {
            t,
            position: center.map(quantize_sig9),
        });
    }
    let sequence = ScanSequence::from_frames(frames)
        .map_err(|e| SynthError::InvalidConfig(format!("generated sequence is invalid: {e}")))?;
    let ground_truth = Trajectory::new(truth)
        .map_err(|e| SynthError::InvalidConfig(format!("generated ground truth is invalid: {e}")))?;
    Ok(SyntheticScene {
        sequence,
        ground_truth,
        oracle: MovingClusterOracle { tags },
    })
}

/// Named scenes used by tests, acceptance runs and the CLI.
pub mod presets {
    use super::*;

    /// Wall 20 × 10 × 0.5 m at 30 m range, UAV circling at 60 m.
    pub fn s1(seed: u64) -> SceneConfig {
        SceneConfig {
            rng_seed: seed,
            duration: 5.0,
            frame_rate: 20.0,
            static_structures: vec![StaticBox {
                center: [30.0, 0.0, 5.0],
                dimensions: [0.5, 20.0, 10.0],
                points_per_frame: 300.0,
            }],
            uav_path: UavPath::Circle {
                center: [60.0, 0.0, 20.0],
                radius: 8.0,
                speed: 10.0,
                phase: 0.0,
            },
            uav_returns_per_frame: 3.0,
            uav_returns_exact: false,
            uav_extent: 0.15,
            range_dropout: RangeDropout {
                near: 0.0,
                far: 0.2,
                far_range: 100.0,
            },
            noise_sigma: 0.05,
            clutter_rate: 2.0,
            clutter_bounds: default_clutter_bounds(),
        }
    }

    /// A dense 4 × 4 m wall alone: no UAV returns, no clutter. Its edges
    /// sit mid-voxel so jitter does not toggle boundary voxels.
    pub fn s2(seed: u64) -> SceneConfig {
        SceneConfig {
            uav_returns_per_frame: 0.0,
            clutter_rate: 0.0,
            static_structures: vec![StaticBox {
                center: [30.0, 0.25, 2.25],
                dimensions: [0.5, 4.0, 4.0],
                points_per_frame: 2000.0,
            }],
            ..s1(seed)
        }
    }

    /// Randomized scene for selection-accuracy runs: one to three static
    /// boxes at 15–60 m, a UAV at 40–100 m flying at 3–15 m/s on a circle
    /// or a polyline, noise up to 0.1 m and range dropout up to 0.3.
    pub fn randomized(seed: u64) -> SceneConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5cee_e000_0001);
        let boxes = (0..rng.random_range(1..=3))
            .map(|_| {
                let range = rng.random_range(15.0..60.0);
                let bearing: f64 = rng.random_range(-1.0..1.0);
                let dims = [
                    rng.random_range(0.3..3.0),
                    rng.random_range(4.0..25.0),
                    rng.random_range(3.0..12.0),
                ];
                StaticBox {
                    center: [range * bearing.cos(), range * bearing.sin(), 0.5 * dims[2]],
                    dimensions: dims,
                    points_per_frame: rng.random_range(100.0..400.0),
                }
            })
            .collect();
        let speed = rng.random_range(3.0..15.0);
        let range = rng.random_range(40.0..100.0);
        let bearing: f64 = rng.random_range(-1.0..1.0);
        let altitude = rng.random_range(15.0..40.0);
        let anchor = [range * bearing.cos(), range * bearing.sin(), altitude];
        let uav_path = if rng.random_bool(0.5) {
            UavPath::Circle {
                center: anchor,
                radius: rng.random_range(5.0..15.0),
                speed,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            }
        } else {
            let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let leg = speed * 3.0;
            let mid = [
                anchor[0] + leg * heading.cos(),
                anchor[1] + leg * heading.sin(),
                anchor[2] + rng.random_range(-3.0..3.0),
            ];
            let turn = heading + rng.random_range(-1.5..1.5);
            let end = [mid[0] + leg * turn.cos(), mid[1] + leg * turn.sin(), mid[2]];
            UavPath::Polyline {
                waypoints: vec![anchor, mid, end],
                speed,
            }
        };
        SceneConfig {
            rng_seed: seed,
            duration: 5.0,
            frame_rate: 20.0,
            static_structures: boxes,
            uav_path,
            uav_returns_per_frame: 3.0,
            uav_returns_exact: false,
            uav_extent: 0.15,
            range_dropout: RangeDropout {
                near: 0.0,
                far: rng.random_range(0.0..0.3),
                far_range: 100.0,
            },
            noise_sigma: rng.random_range(0.01..0.1),
            clutter_rate: rng.random_range(0.0..4.0),
            clutter_bounds: default_clutter_bounds(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(seed: u64) -> SceneConfig {
        SceneConfig {
            rng_seed: seed,
            duration: 5.0,
            frame_rate: 10.0,
            static_structures: vec![StaticBox {
                center: [30.0, 0.0, 5.0],
                dimensions: [0.5, 20.0, 10.0],
                points_per_frame: 50.0,
            }],
            uav_path: UavPath::Polyline {
                waypoints: vec![[50.0, -20.0, 20.0], [50.0, 30.0, 20.0]],
                speed: 10.0,
            },
            uav_returns_per_frame: 2.0,
            uav_returns_exact: false,
            uav_extent: 0.0,
            range_dropout: RangeDropout::default(),
            noise_sigma: 0.0,
            clutter_rate: 0.0,
            clutter_bounds: default_clutter_bounds(),
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&straight(7)).unwrap();
        let b = generate(&straight(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sequence.to_csv_string(), b.sequence.to_csv_string());
        let c = generate(&straight(8)).unwrap();
        assert_ne!(a.sequence, c.sequence);
    }

    #[test]
    fn uav_count_matches_seeded_poisson_draws() {
        let cfg = straight(11);
        let scene = generate(&cfg).unwrap();
        assert_eq!(scene.sequence.frame_count(), 50);
        // replay the generator's draw order: static count, its samples, UAV count
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let normal = Normal::new(0.0, 0.0).unwrap();
        let mut expected = 0;
        for _ in 0..50 {
            let statics = poisson(&mut rng, 50.0);
            for _ in 0..statics {
                let _: f64 = rng.random();
                let _: (f64, f64) = (rng.random(), rng.random());
                let _ = jitter(&mut rng, &normal, [0.0; 3]);
            }
            let returns = poisson(&mut rng, 2.0);
            for _ in 0..returns {
                let _ = jitter(&mut rng, &normal, [0.0; 3]);
                let _: f64 = rng.random();
            }
            expected += returns;
        }
        assert_eq!(scene.oracle.uav_point_count(), expected);
    }

    #[test]
    fn one_exact_return_per_frame() {
        let mut cfg = straight(3);
        cfg.static_structures.clear();
        cfg.uav_returns_per_frame = 1.0;
        cfg.uav_returns_exact = true;
        cfg.noise_sigma = 0.0;
        let scene = generate(&cfg).unwrap();
        for (frame, gt) in scene.sequence.frames().iter().zip(scene.ground_truth.samples()) {
            assert_eq!(frame.timestamp(), gt.t);
            assert_eq!(frame.len(), 1);
            assert_eq!(frame.points()[0].position(), gt.position);
        }

        cfg.noise_sigma = 0.05;
        let scene = generate(&cfg).unwrap();
        for (frame, gt) in scene.sequence.frames().iter().zip(scene.ground_truth.samples()) {
            assert_eq!(frame.len(), 1);
            let p = frame.points()[0].position();
            for a in 0..3 {
                assert!((p[a] - gt.position[a]).abs() < 6.0 * cfg.noise_sigma);
            }
        }
    }

    #[test]
    fn ground_truth_is_the_path() {
        let cfg = presets::s1(1);
        let scene = generate(&cfg).unwrap();
        for s in scene.ground_truth.samples() {
            assert_eq!(s.position, cfg.uav_path.position(s.t).map(quantize_sig9));
        }
        assert_eq!(scene.ground_truth.len(), scene.sequence.frame_count());
    }

    #[test]
    fn static_points_lie_on_visible_faces() {
        let mut cfg = straight(5);
        cfg.uav_returns_per_frame = 0.0;
        let scene = generate(&cfg).unwrap();
        for f in scene.sequence.frames() {
            for p in f.points() {
                assert_eq!(p.x, 29.75);
                assert!((-10.0..=10.0).contains(&p.y) && (0.0..=10.0).contains(&p.z));
            }
        }
    }

    #[test]
    fn visible_face_selection() {
        let b = StaticBox {
            center: [30.0, 0.0, 5.0],
            dimensions: [0.5, 20.0, 10.0],
            points_per_frame: 1.0,
        };
        let faces = visible_faces(&b);
        assert_eq!(faces.len(), 1);
        assert_eq!(faces[0].origin[0], 29.75);
        assert_eq!(faces[0].area, 200.0);
        // a box hovering above and beside the sensor shows three faces
        let c = StaticBox {
            center: [10.0, 10.0, 10.0],
            dimensions: [1.0, 1.0, 1.0],
            points_per_frame: 1.0,
        };
        assert_eq!(visible_faces(&c).len(), 3);
    }

    #[test]
    fn paths() {
        let p = UavPath::Polyline {
            waypoints: vec![[0.0; 3], [10.0, 0.0, 0.0], [10.0, 10.0, 0.0]],
            speed: 2.0,
        };
        assert_eq!(p.position(2.5), [5.0, 0.0, 0.0]);
        assert_eq!(p.position(7.5), [10.0, 5.0, 0.0]);
        assert_eq!(p.position(100.0), [10.0, 10.0, 0.0]);
        let c = UavPath::Circle {
            center: [1.0, 2.0, 3.0],
            radius: 2.0,
            speed: 0.0,
            phase: 0.0,
        };
        assert_eq!(c.position(4.0), [3.0, 2.0, 3.0]);
    }

    #[test]
    fn dropout_model() {
        let d = RangeDropout {
            near: 0.1,
            far: 0.3,
            far_range: 100.0,
        };
        assert_eq!(d.probability(0.0), 0.1);
        assert!((d.probability(50.0) - 0.2).abs() < 1e-15);
        assert_eq!(d.probability(500.0), 0.3);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = straight(1);
        c.frame_rate = 0.0;
        assert!(generate(&c).is_err());
        let mut c = straight(1);
        c.noise_sigma = -1.0;
        assert!(generate(&c).is_err());
        let mut c = straight(1);
        c.range_dropout.far = 1.5;
        assert!(generate(&c).is_err());
        let mut c = straight(1);
        c.uav_path = UavPath::Circle {
            center: [0.0; 3],
            radius: 0.0,
            speed: 1.0,
            phase: 0.0,
        };
        assert!(generate(&c).is_err());
    }
}
