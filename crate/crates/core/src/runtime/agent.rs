use nalgebra::{Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::client::ClientCore;
use super::config::ConfigError;
use super::host::{BUTTON_PRIMARY, BUTTON_RETRY};
use crate::Role;
use crate::awareness::{ChannelMatchReport, channel_report_with, perceived_cell};
use crate::board::{BoardSpec, BoardState, Cell, CubeId};
use crate::geometry::{
    ConditionSpec, Entity, Point, Pose, RigidMap, Stance, Vector, WorkspaceVolume, aim_orientation, glue_transform, ray_direction,
};
use crate::protocol::{ClickMode, EmbodimentFrame, JOINT_COUNT, PointSample};
use crate::tasks::{PuzzleSpec, RuleSet, generate_puzzle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    /// Always resolves instructions in the right frame.
    FrameAware,
    /// Takes instructions at face value, so channels that do not match may be misread.
    FrameNaive,
}

/// Chance that a naive agent misreads an instruction on a channel the
/// condition does not preserve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MisreadProbabilities {
    pub lateral_pointing: f64,
    pub depth_pointing: f64,
    pub lateral_verbal: f64,
    pub depth_verbal: f64,
}

impl MisreadProbabilities {
    pub fn uniform(p: f64) -> Self {
        Self { lateral_pointing: p, depth_pointing: p, lateral_verbal: p, depth_verbal: p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub role: Role,
    /// Standard deviation of the pointing error, radians.
    pub aiming_noise: f64,
    pub interpretation: Interpretation,
    pub misread: MisreadProbabilities,
}

impl AgentPolicy {
    pub fn frame_aware(role: Role) -> Self {
        Self { role, aiming_noise: 0.0, interpretation: Interpretation::FrameAware, misread: MisreadProbabilities::default() }
    }

    pub fn frame_naive(role: Role, misread: f64) -> Self {
        Self {
            role,
            aiming_noise: 0.0,
            interpretation: Interpretation::FrameNaive,
            misread: MisreadProbabilities::uniform(misread),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.misread;
        for (name, p) in [
            ("lateral_pointing", m.lateral_pointing),
            ("depth_pointing", m.depth_pointing),
            ("lateral_verbal", m.lateral_verbal),
            ("depth_verbal", m.depth_verbal),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!("misread.{name} = {p} is not a probability")));
            }
        }
        if !(self.aiming_noise >= 0.0 && self.aiming_noise.is_finite()) {
            return Err(ConfigError::Invalid(format!("aiming_noise = {} must be a finite non-negative angle", self.aiming_noise)));
        }
        Ok(())
    }
}

/// Reaction times of the scripted participants, microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentTiming {
    /// Hold still on a target before clicking.
    pub dwell_us: u64,
    /// Give up waiting for a click's effect and click again.
    pub click_timeout_us: u64,
    /// Re-aim when the expected highlight has not shown up.
    pub reaim_us: u64,
    /// Pause with the pointer raised after each drop.
    pub rest_us: u64,
    pub embodiment_period_us: u64,
}

impl Default for AgentTiming {
    fn default() -> Self {
        Self { dwell_us: 250_000, click_timeout_us: 500_000, reaim_us: 1_000_000, rest_us: 200_000, embodiment_period_us: 100_000 }
    }
}

impl AgentTiming {
    /// Every interval multiplied by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        let f = |us: u64| (us as f64 * factor).round().max(1.0) as u64;
        Self {
            dwell_us: f(self.dwell_us),
            click_timeout_us: f(self.click_timeout_us),
            reaim_us: f(self.reaim_us),
            rest_us: f(self.rest_us),
            embodiment_period_us: f(self.embodiment_period_us),
        }
    }
}

/// What an agent does on one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentOutput {
    pub pose: Option<Pose>,
    pub click: Option<u8>,
    pub embodiment: Option<EmbodimentFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Hand {
    Rest { until: u64 },
    AimCube { cube: CubeId, since: u64, clicked: Option<u64>, noise: (f64, f64) },
    AimCell { cube: CubeId, cell: Cell, since: u64, clicked: Option<u64>, noise: (f64, f64) },
}

/// Interpretation of the instruction for one solution step.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StepPlan {
    progress: usize,
    cube: CubeId,
    target: Cell,
    picks: u32,
}

struct TaskContext {
    condition: ConditionSpec,
    workspace: RigidMap,
    puzzle: PuzzleSpec,
    report: ChannelMatchReport,
}

/// Scripted participant driving a `ClientCore`. Plays whichever role the
/// server assigns, using the matching policy.
pub struct Agent {
    policies: Vec<AgentPolicy>,
    volume: WorkspaceVolume,
    board: BoardSpec,
    rules: RuleSet,
    stance: Stance,
    timing: AgentTiming,
    click_mode: ClickMode,
    rng: ChaCha8Rng,
    generation: u64,
    ctx: Option<TaskContext>,
    hand: Hand,
    plan: Option<StepPlan>,
    seen_rejects: usize,
    next_body_us: u64,
    body_seq: u32,
}

impl Agent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        policies: Vec<AgentPolicy>,
        volume: WorkspaceVolume,
        board: BoardSpec,
        rules: RuleSet,
        timing: AgentTiming,
        click_mode: ClickMode,
        seed: u64,
    ) -> Self {
        Self {
            policies,
            volume,
            board,
            rules,
            stance: Stance::default(),
            timing,
            click_mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            generation: 0,
            ctx: None,
            hand: Hand::Rest { until: 0 },
            plan: None,
            seen_rejects: 0,
            next_body_us: 0,
            body_seq: 0,
        }
    }

    fn policy(&self, role: Role) -> AgentPolicy {
        self.policies.iter().copied().find(|p| p.role == role).unwrap_or(AgentPolicy::frame_aware(role))
    }

    pub fn tick(&mut self, now_us: u64, core: &ClientCore) -> AgentOutput {
        let Some(role) = core.role() else {
            return AgentOutput { pose: None, click: None, embodiment: None };
        };
        if core.task_generation() != self.generation {
            self.generation = core.task_generation();
            self.ctx = core.task().and_then(|t| {
                let puzzle = generate_puzzle(t.puzzle as u64, &self.board, &self.rules).ok()?;
                let report = channel_report_with(t.condition, &self.volume, &self.board, &self.stance);
                Some(TaskContext {
                    condition: t.condition,
                    workspace: glue_transform(t.condition, Entity::Workspace),
                    puzzle,
                    report,
                })
            });
            self.hand = Hand::Rest { until: now_us + self.timing.rest_us };
            self.plan = None;
        }
        self.seen_rejects = self.seen_rejects.min(core.rejects().len());
        let embodiment = self.embodiment(now_us, role);
        let (pose, click) = match role {
            Role::Instructor => (self.instructor_pose(core), None),
            Role::Assembler => self.assembler(now_us, core),
        };
        AgentOutput { pose: Some(pose), click, embodiment }
    }

    fn rest_pose(&self, role: Role) -> Pose {
        let hand = self.stance.hand(role, &self.volume);
        let up = hand + Vector::y();
        Pose::new(self.stance.eye(role, &self.volume), hand, aim_orientation(&hand, &up)).expect("unit quaternion")
    }

    fn aimed_pose(&self, role: Role, target: &Point, noise: (f64, f64)) -> Pose {
        let eye = self.stance.eye(role, &self.volume);
        let hand = self.stance.hand(role, &self.volume);
        let mut dir = (target - hand).normalize();
        if noise != (0.0, 0.0) {
            let side = Unit::new_normalize(dir.cross(&Vector::y()));
            let lift = Unit::new_normalize(side.cross(&dir));
            dir = Rotation3::from_axis_angle(&lift, noise.0) * Rotation3::from_axis_angle(&side, noise.1) * dir;
        }
        Pose::new(eye, hand, aim_orientation(&hand, &(hand + dir))).expect("unit quaternion")
    }

    /// The instructor points at the next cube, or at its target while it is held.
    fn instructor_pose(&self, core: &ClientCore) -> Pose {
        let Some(ctx) = &self.ctx else { return self.rest_pose(Role::Instructor) };
        let board = core.replica().board();
        let progress = ctx.puzzle.progress_on(board);
        let Some(step) = ctx.puzzle.solution.get(progress) else { return self.rest_pose(Role::Instructor) };
        let cell = match board.cube(step.cube).and_then(|c| c.cell()) {
            Some(cell) if board.held() != Some(step.cube) => cell,
            _ => step.target,
        };
        self.aimed_pose(Role::Instructor, &self.board.cube_center(cell), (0.0, 0.0))
    }

    fn sample_noise(&mut self, sigma: f64) -> (f64, f64) {
        if sigma == 0.0 {
            return (0.0, 0.0);
        }
        let n = Normal::new(0.0, sigma).expect("valid sigma");
        (n.sample(&mut self.rng), n.sample(&mut self.rng))
    }

    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.random::<f64>() < p
    }

    /// Reads the instruction for the next step; naive agents may misread
    /// channels the condition does not preserve until they have been corrected.
    fn plan_step(&mut self, board: &BoardState, progress: usize, corrected: bool) -> Option<StepPlan> {
        let ctx = self.ctx.as_ref()?;
        let step = *ctx.puzzle.solution.get(progress)?;
        let start = board.cube(step.cube)?.cell()?;
        let policy = self.policy(Role::Assembler);
        let (mut cube, mut target) = (step.cube, step.target);
        if policy.interpretation == Interpretation::FrameNaive && !corrected {
            let report = ctx.report;
            let m = policy.misread;
            let seen = perceived_cell(ctx.condition, &self.volume, &self.board, &self.stance, start);
            let reference = ctx.puzzle.initial.cell;
            let (lp, dp) = (
                !report.lateral_pointing.is_match() && self.chance(m.lateral_pointing),
                !report.depth_pointing.is_match() && self.chance(m.depth_pointing),
            );
            let (lv, dv) = (
                !report.lateral_verbal.is_match() && self.chance(m.lateral_verbal),
                !report.depth_verbal.is_match() && self.chance(m.depth_verbal),
            );
            if let Some(seen) = seen {
                let cell = Cell::new(if lp { seen.col } else { start.col }, if dp { seen.row } else { start.row });
                if let Some(c) = board.cube_at(cell) {
                    cube = c.id;
                }
            }
            let flip = |v: u8, r: u8, n: u8| {
                let m = 2 * r as i32 - v as i32;
                if (0..n as i32).contains(&m) { m as u8 } else { v }
            };
            let misread = Cell::new(
                if lv { flip(target.col, reference.col, self.board.columns) } else { target.col },
                if dv { flip(target.row, reference.row, self.board.rows) } else { target.row },
            );
            target = misread;
        }
        Some(StepPlan { progress, cube, target, picks: 0 })
    }

    fn assembler(&mut self, now_us: u64, core: &ClientCore) -> (Pose, Option<u8>) {
        let role = Role::Assembler;
        let board = core.replica().board().clone();
        let Some(ctx) = &self.ctx else { return (self.rest_pose(role), None) };
        if board.cubes().is_empty() || core.task().is_none() {
            return (self.rest_pose(role), None);
        }
        let workspace = ctx.workspace;
        let puzzle = ctx.puzzle.clone();
        let progress = puzzle.progress_on(&board);
        let sigma = self.policy(role).aiming_noise;
        let rejected = core.rejects().len() > self.seen_rejects;
        self.seen_rejects = core.rejects().len();

        if let Some(held) = board.held() {
            let step = puzzle.solution[progress];
            if rejected && held == step.cube {
                // the drop bounced: go with the instructor's correction
                if let Some(p) = &mut self.plan {
                    p.target = step.target;
                }
            }
            let cell = match self.plan {
                _ if held != step.cube => puzzle.expected_cell(held, progress).unwrap_or(step.target),
                Some(p) if p.progress == progress => p.target,
                _ => step.target,
            };
            let fresh = !matches!(self.hand, Hand::AimCell { cube, cell: c, .. } if cube == held && c == cell);
            if fresh || rejected {
                let noise = self.sample_noise(sigma);
                self.hand = Hand::AimCell { cube: held, cell, since: now_us, clicked: None, noise };
            }
            let Hand::AimCell { since, clicked, noise, .. } = self.hand else { unreachable!() };
            let pose = self.aimed_pose(role, &workspace.apply_point(&self.board.cube_center(cell)), noise);
            let click = self.click_due(now_us, since, clicked);
            if click.is_some()
                && let Hand::AimCell { clicked, .. } = &mut self.hand {
                    *clicked = Some(now_us);
                }
            return (pose, click);
        }

        if let Hand::AimCell { .. } = self.hand {
            self.hand = Hand::Rest { until: now_us + self.timing.rest_us };
        }
        if let Hand::Rest { until } = self.hand
            && now_us < until {
                return (self.rest_pose(role), None);
            }
        let plan = match self.plan {
            Some(p) if p.progress == progress && p.picks == 0 => p,
            Some(p) if p.progress == progress => self.plan_step(&board, progress, true).unwrap_or(p),
            _ => match self.plan_step(&board, progress, false) {
                Some(p) => p,
                None => return (self.rest_pose(role), None),
            },
        };
        self.plan = Some(plan);
        let Some(cell) = board.cube(plan.cube).and_then(|c| c.cell()) else { return (self.rest_pose(role), None) };

        let stale = match self.hand {
            Hand::AimCube { cube, since, clicked, .. } => {
                cube != plan.cube
                    || rejected
                    || (clicked.is_none() && board.selection() != Some(cube) && now_us >= since + self.timing.reaim_us)
            }
            _ => true,
        };
        if stale {
            let noise = self.sample_noise(sigma);
            self.hand = Hand::AimCube { cube: plan.cube, since: now_us, clicked: None, noise };
        }
        let Hand::AimCube { since, clicked, noise, .. } = self.hand else { unreachable!() };
        let pose = self.aimed_pose(role, &workspace.apply_point(&self.board.cube_center(cell)), noise);
        let click = if board.selection() == Some(plan.cube) { self.click_due(now_us, since, clicked) } else { None };
        if click.is_some()
            && let Hand::AimCube { clicked, .. } = &mut self.hand {
                if clicked.is_none()
                    && let Some(p) = &mut self.plan {
                        p.picks += 1;
                    }
                *clicked = Some(now_us);
            }
        (pose, click)
    }

    /// First click after the dwell; in faithful mode, a retry once the previous click timed out.
    fn click_due(&self, now_us: u64, since: u64, clicked: Option<u64>) -> Option<u8> {
        match clicked {
            None if now_us >= since + self.timing.dwell_us => Some(BUTTON_PRIMARY),
            Some(t) if self.click_mode == ClickMode::Faithful && now_us >= t + self.timing.click_timeout_us => {
                Some(BUTTON_PRIMARY | BUTTON_RETRY)
            }
            _ => None,
        }
    }

    /// Synthetic skeleton and a small point cloud around the torso.
    fn embodiment(&mut self, now_us: u64, role: Role) -> Option<EmbodimentFrame> {
        if now_us < self.next_body_us {
            return None;
        }
        self.next_body_us = now_us + self.timing.embodiment_period_us;
        let eye = self.stance.eye(role, &self.volume);
        let hand = self.stance.hand(role, &self.volume);
        let torso = eye - Vector::new(0.0, 0.35, 0.0);
        let other_hand = Point::new(-hand.x - 0.2, hand.y - 0.2, torso.z);
        let f = |p: Point| [p.x as f32, p.y as f32, p.z as f32];
        let joints: [[f32; 3]; JOINT_COUNT] = [f(eye), f(hand), f(other_hand), f(torso)];
        let points = (0..32)
            .map(|i| {
                let a = i as f64 / 32.0 * std::f64::consts::TAU;
                let p = torso + Vector::new(0.18 * a.cos(), 0.25 * a.sin(), 0.0);
                PointSample { position: f(p), rgb: [180, 140, 120] }
            })
            .collect();
        self.body_seq += 1;
        Some(EmbodimentFrame { frame_seq: self.body_seq, capture_us: now_us, joints, points })
    }
}

/// Direction an agent's pointer aims in, for diagnostics.
pub fn pointing_direction(pose: &Pose) -> Vector {
    ray_direction(pose.orientation).expect("poses carry unit quaternions")
}
