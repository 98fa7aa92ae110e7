//! Synthetic pointing agent.
//!
//! A trial runs at a fixed tick rate: a reaction delay, then a ballistic
//! minimum-jerk rotation of the controller toward the target followed by up
//! to `max_corrections` corrective submovements, each planned closed-loop
//! from the cursor the agent saw one tick earlier. Submovement amplitudes
//! carry multiplicative undershoot noise; smoothed angular tremor is added to
//! the controller every tick. Corrections wait one reaction delay after the
//! previous submovement ends.
//!
//! Before committing, the agent plays its own movement forward through the
//! dwell (its plan continued, tremor held) and clicks only if the cursor is
//! predicted to stay over the target with a margin. The click lands
//! `dwell_ticks_before_click` ticks later wherever the cursor really is.
//! Movement time runs from the end of the initial reaction delay to the click.
//!
//! The controller is held at the end of an arm that swings about a pivot
//! behind the user position, so rotations also translate the controller and
//! positional-speed techniques see realistic speeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DisplayGeometry, SurfacePoint, UserPosition, WorldVector};
use crate::math::{Rotation, Vec3};
use crate::pointer::{ControllerSample, CursorState, PointerError};
use crate::tasks::{hit_test, SelectionMode, TrialLayout};
use crate::transfer::TechniqueConfig;

/// Trials still running after this long are cut and count as misses.
pub const TRIAL_TIMEOUT_S: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("invalid agent parameters: {0}")]
    InvalidParams(&'static str),
    #[error("start circle is not reachable from this position: {0}")]
    Unreachable(#[from] PointerError),
    #[error("invalid user position: {0}")]
    Position(#[from] crate::geometry::GeometryError),
}

/// Ballistic duration `a0_s + b_s_per_rad · angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationCoeffs {
    pub a0_s: f64,
    pub b_s_per_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentParams {
    pub peak_angular_speed_radps: f64,
    pub min_jerk_duration_coeffs: DurationCoeffs,
    pub undershoot_mean: f64,
    pub undershoot_sd: f64,
    pub tremor_sd_rad: f64,
    pub tremor_smoothing: f64,
    pub reaction_ticks: u32,
    pub dwell_ticks_before_click: u32,
    pub max_corrections: u32,
    /// Distance from the swing pivot to the controller.
    pub arm_length_m: f64,
    /// Mean amplitude factor of the ballistic submovement when the cursor
    /// grows with speed: the agent sweeps through the target and clicks
    /// while the cursor is still enlarged.
    pub sweep_overshoot_mean: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            peak_angular_speed_radps: 12.0,
            min_jerk_duration_coeffs: DurationCoeffs { a0_s: 0.35, b_s_per_rad: 0.1 },
            undershoot_mean: 0.95,
            undershoot_sd: 0.02,
            tremor_sd_rad: 0.004,
            tremor_smoothing: 0.8,
            reaction_ticks: 9,
            dwell_ticks_before_click: 6,
            max_corrections: 5,
            arm_length_m: 0.6,
            sweep_overshoot_mean: 1.3,
        }
    }
}

impl AgentParams {
    /// An agent without motor noise.
    pub fn noiseless() -> Self {
        Self { undershoot_mean: 1.0, undershoot_sd: 0.0, tremor_sd_rad: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let p = self;
        if !(p.peak_angular_speed_radps > 0.0) {
            return Err(AgentError::InvalidParams("peak_angular_speed_radps must be positive"));
        }
        let c = p.min_jerk_duration_coeffs;
        if !(c.a0_s >= 0.0 && c.b_s_per_rad >= 0.0 && c.a0_s + c.b_s_per_rad > 0.0) {
            return Err(AgentError::InvalidParams("duration coefficients must be non-negative"));
        }
        if !(p.undershoot_mean > 0.0 && p.undershoot_mean <= 1.0) {
            return Err(AgentError::InvalidParams("undershoot_mean must lie in (0, 1]"));
        }
        if !(p.undershoot_sd >= 0.0 && p.tremor_sd_rad >= 0.0) {
            return Err(AgentError::InvalidParams("noise levels must be non-negative"));
        }
        if !(0.0..1.0).contains(&p.tremor_smoothing) {
            return Err(AgentError::InvalidParams("tremor_smoothing must lie in [0, 1)"));
        }
        if !(p.arm_length_m >= 0.0 && p.arm_length_m.is_finite()) {
            return Err(AgentError::InvalidParams("arm_length_m must be non-negative"));
        }
        if !(p.sweep_overshoot_mean > 0.0 && p.sweep_overshoot_mean.is_finite()) {
            return Err(AgentError::InvalidParams("sweep_overshoot_mean must be positive"));
        }
        Ok(())
    }

    fn duration_s(&self, angle_rad: f64) -> f64 {
        let c = self.min_jerk_duration_coeffs;
        // A minimum-jerk profile peaks at 1.875× its mean velocity.
        (c.a0_s + c.b_s_per_rad * angle_rad).max(1.875 * angle_rad / self.peak_angular_speed_radps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub movement_time_s: f64,
    pub success: bool,
    pub endpoint: SurfacePoint<f64>,
    pub click_diameter_m: f64,
    pub tick_count: u32,
    /// Ballistic plus corrective submovements started.
    pub submovements: u32,
}

/// Everything a trial needs besides the seed.
#[derive(Debug, Clone, Copy)]
pub struct TrialContext<'a> {
    pub params: &'a AgentParams,
    pub technique: &'a TechniqueConfig<f64>,
    pub position: &'a UserPosition<f64>,
    pub geom: &'a DisplayGeometry<f64>,
    pub tick_rate_hz: f64,
    pub selection: SelectionMode,
}

/// Normalized minimum-jerk position profile.
pub fn min_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

#[derive(Debug, Clone, Copy)]
struct Arm {
    pivot: WorldVector<f64>,
    length: f64,
}

impl Arm {
    fn new(ctx: &TrialContext<'_>) -> Self {
        let user = ctx.geom.user_world_position(ctx.position);
        let length = ctx.params.arm_length_m;
        // Pointing straight ahead puts the controller at the user position.
        Self { pivot: user - Vec3::unit_z().scale(length), length }
    }

    fn hand(&self, q: Rotation<f64>) -> WorldVector<f64> {
        self.pivot + q.forward().scale(self.length)
    }

    fn sample(&self, q: Rotation<f64>, time_s: f64) -> ControllerSample<f64> {
        ControllerSample::new(self.hand(q), q, time_s)
    }
}

/// Planned change of the pointing ray in yaw and pitch, and the gain the
/// hand motion is scaled by to produce it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AimPlan {
    pub ray_yaw: f64,
    pub ray_pitch: f64,
    pub yaw_delta: f64,
    pub pitch_delta: f64,
    pub gain: f64,
}

impl AimPlan {
    /// Angular extent of the ray path (radians, small-step metric).
    pub fn ray_angle(&self) -> f64 {
        (self.yaw_delta * self.ray_pitch.cos()).hypot(self.pitch_delta)
    }

    /// Angular extent the controller has to cover.
    pub fn hand_angle(&self) -> f64 {
        self.ray_angle() / self.gain
    }

    fn ray_at(&self, s: f64) -> Rotation<f64> {
        Rotation::from_yaw_pitch(self.ray_yaw + self.yaw_delta * s, self.ray_pitch + self.pitch_delta * s)
    }
}

/// Minimum-jerk sweep of the ray along a yaw/pitch line. Each tick the hand
/// turns about the same world axis as that tick's ray step, by the step over
/// the planned gain.
#[derive(Debug, Clone, Copy)]
struct Submovement {
    plan: AimPlan,
    ticks: u32,
    elapsed: u32,
    sweep: bool,
}

impl Submovement {
    fn progress(&self) -> f64 {
        f64::from(self.elapsed) / f64::from(self.ticks)
    }

    fn done(&self) -> bool {
        self.elapsed >= self.ticks
    }

    fn advance(&mut self, hand: Rotation<f64>) -> Rotation<f64> {
        let before = self.plan.ray_at(min_jerk(self.progress()));
        self.elapsed += 1;
        let after = self.plan.ray_at(min_jerk(self.progress()));
        let (angle, axis) = (after * before.inverse()).to_angle_axis();
        (Rotation::from_angle_axis(angle / self.plan.gain, axis) * hand).normalized()
    }
}

/// Ray sweep that should carry the cursor from its current point onto
/// `target`, under the technique's gain at the speed the movement itself is
/// expected to reach. Yaw is not wrapped: the ±π seam faces the open side of
/// the display, so the sweep always turns through the front.
pub fn plan_aim(state: &CursorState<f64>, target: SurfacePoint<f64>, ctx: &TrialContext<'_>) -> AimPlan {
    let geom = ctx.geom;
    let arm = Arm::new(ctx);
    if !ctx.technique.id.is_relative() {
        // Every ray from the controller passes through the pivot.
        let (ray_yaw, ray_pitch) = state.last_controller.orientation.yaw_pitch();
        let (ty, tp) = geom.aim_yaw_pitch(arm.pivot, target);
        return AimPlan { ray_yaw, ray_pitch, yaw_delta: ty - ray_yaw, pitch_delta: tp - ray_pitch, gain: 1.0 };
    }
    let hand = state.last_controller.orientation;
    let (ray_yaw, ray_pitch) = state.virtual_orientation.yaw_pitch();
    let distance = ctx.position.interaction_distance_m(geom);
    let mut plan = AimPlan { ray_yaw, ray_pitch, yaw_delta: 0.0, pitch_delta: 0.0, gain: ctx.technique.gain(0.0, distance, geom) };
    // The ray origin moves with the hand and the gain depends on the speed
    // the movement produces; a few fixed-point rounds settle both.
    for _ in 0..6 {
        let (angle, axis) = (plan.ray_at(1.0) * plan.ray_at(0.0).inverse()).to_angle_axis();
        let origin = arm.hand(Rotation::from_angle_axis(angle / plan.gain, axis) * hand);
        let (ty, tp) = geom.aim_yaw_pitch(origin, target);
        plan.yaw_delta = ty - ray_yaw;
        plan.pitch_delta = tp - ray_pitch;
        let hand_angle = plan.hand_angle();
        let speed = if hand_angle > 0.0 { arm.length * hand_angle / ctx.params.duration_s(hand_angle) } else { 0.0 };
        plan.gain = ctx.technique.gain(speed, distance, geom);
    }
    plan
}

struct Tremor {
    yaw: f64,
    pitch: f64,
    keep: f64,
    innovation_sd: f64,
}

impl Tremor {
    fn new(p: &AgentParams) -> Self {
        let keep = p.tremor_smoothing;
        Self { yaw: 0.0, pitch: 0.0, keep, innovation_sd: p.tremor_sd_rad * (1.0 - keep * keep).sqrt() }
    }

    /// AR(1) update whose stationary standard deviation is `tremor_sd_rad`,
    /// returned as a rotation in the hand's own frame.
    fn next(&mut self, rng: &mut ChaCha8Rng) -> Rotation<f64> {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        self.yaw = self.keep * self.yaw + self.innovation_sd * a;
        self.pitch = self.keep * self.pitch + self.innovation_sd * b;
        Rotation::from_yaw_pitch(self.yaw, self.pitch)
    }
}

/// Signed room (m) the cursor would have inside the selection threshold at
/// the click tick and one tick later, if the hand followed the current plan
/// with its present tremor frozen. Also returns the threshold.
#[allow(clippy::too_many_arguments)]
fn predicted_margins(
    perceived: &CursorState<f64>,
    mut movement: Option<Submovement>,
    mut command: Rotation<f64>,
    shake: Rotation<f64>,
    tick: u32,
    dwell: u32,
    arm: &Arm,
    layout: &TrialLayout<f64>,
    ctx: &TrialContext<'_>,
) -> (f64, f64, f64) {
    let dt = 1.0 / ctx.tick_rate_hz;
    let mut s = *perceived;
    let mut out = [f64::NEG_INFINITY; 2];
    let mut threshold = 0.0;
    for (i, t) in (tick..=tick + dwell).enumerate() {
        if let Some(m) = movement.as_mut() {
            if !m.done() {
                command = m.advance(command);
            }
        }
        match s.step(arm.sample(command * shake, f64::from(t) * dt), ctx.technique, ctx.position, ctx.geom) {
            Ok(next) => s = next.state,
            Err(_) => break,
        }
        if i + 1 >= dwell as usize {
            let th = ctx.selection.threshold(layout.spec.width_m, s.diameter_m);
            if i + 1 == dwell as usize {
                threshold = th;
            }
            out[i + 1 - dwell as usize] = th - ctx.geom.geodesic_distance(s.surface, layout.target);
        }
    }
    (out[0], out[1], threshold)
}

/// Room the agent wants before it commits: the surface excursion one tremor
/// standard deviation produces at the reference viewing distance.
fn safety_margin(ctx: &TrialContext<'_>) -> f64 {
    ctx.params.tremor_sd_rad * ctx.geom.radius_m
}

/// Simulates one start-to-target selection.
pub fn run_trial(seed: u64, layout: &TrialLayout<f64>, ctx: &TrialContext<'_>) -> Result<TrialOutcome, AgentError> {
    let p = ctx.params;
    p.validate()?;
    ctx.geom.validate_position(ctx.position)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = ctx.geom;
    let arm = Arm::new(ctx);
    let dt = 1.0 / ctx.tick_rate_hz;
    let max_ticks = (TRIAL_TIMEOUT_S * ctx.tick_rate_hz).round() as u32;
    let is_hit = |s: &CursorState<f64>| hit_test(s.surface, s.diameter_m, layout, ctx.selection, geom);

    // Start selected: controller and virtual ray both aim at the start center.
    let (yaw, pitch) = geom.aim_yaw_pitch(arm.pivot, layout.start);
    let mut command = Rotation::from_yaw_pitch(yaw, pitch);
    let mut state = CursorState::aligned(arm.sample(command, 0.0), geom)?;
    state.diameter_m = ctx.technique.cursor_diameter(0.0);

    let mut tremor = Tremor::new(p);
    let mut shake = Rotation::identity();
    let mut movement: Option<Submovement> = None;
    let mut submovements = 0u32;
    let mut click_tick: Option<u32> = None;
    let dwell = p.dwell_ticks_before_click.max(1);
    let safety = safety_margin(ctx);
    // Each correction reacts to what the previous submovement left behind.
    let mut settled_at = 0u32;

    for tick in 1..=max_ticks {
        // Decisions use the cursor as it looked after the previous tick.
        let perceived = state;
        if click_tick.is_none() && tick > p.reaction_ticks {
            // Commits wait for the homing phase, except on a sweep through the target.
            let ready = movement.is_none_or(|m| m.sweep || m.done() || m.progress() >= 0.5);
            let commit = ready && {
                let (now, later, threshold) =
                    predicted_margins(&perceived, movement, command, shake, tick, dwell, &arm, layout, ctx);
                // Click once inside with room to spare, unless waiting a tick would land deeper.
                now >= safety && (later <= now || now >= 0.5 * threshold)
            };
            if commit {
                click_tick = Some(tick - 1 + dwell);
            } else if movement.is_none_or(|m| m.done()) && tick >= settled_at + p.reaction_ticks {
                if submovements > p.max_corrections {
                    click_tick = Some(tick - 1 + dwell);
                } else {
                    let mut plan = plan_aim(&perceived, layout.target, ctx);
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let sweep = submovements == 0 && ctx.technique.id.enlarges_cursor();
                    let mean = if sweep { p.sweep_overshoot_mean } else { p.undershoot_mean };
                    let factor = (mean + p.undershoot_sd * noise).max(0.0);
                    let ticks = (p.duration_s(plan.hand_angle()) * ctx.tick_rate_hz).round().max(1.0) as u32;
                    plan.yaw_delta *= factor;
                    plan.pitch_delta *= factor;
                    movement = Some(Submovement { plan, ticks, elapsed: 0, sweep });
                    settled_at = tick + ticks;
                    submovements += 1;
                }
            }
        }
        if let Some(m) = movement.as_mut() {
            if !m.done() {
                command = m.advance(command);
            }
        }
        shake = tremor.next(&mut rng);
        let sample = arm.sample(command * shake, f64::from(tick) * dt);
        state = state.step(sample, ctx.technique, ctx.position, geom)?.state;

        // The clock starts once the reaction to the start selection is over.
        if click_tick == Some(tick) {
            return Ok(TrialOutcome {
                movement_time_s: f64::from(tick - p.reaction_ticks) * dt,
                success: is_hit(&state),
                endpoint: state.surface,
                click_diameter_m: state.diameter_m,
                tick_count: tick,
                submovements,
            });
        }
    }
    Ok(TrialOutcome {
        movement_time_s: f64::from(max_ticks.saturating_sub(p.reaction_ticks)) * dt,
        success: false,
        endpoint: state.surface,
        click_diameter_m: state.diameter_m,
        tick_count: max_ticks,
        submovements,
    })
}
