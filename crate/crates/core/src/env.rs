//! Cooperative navigation particle world.
//!
//! `N` agents and `L` landmarks live in the plane. Agents are point masses
//! with radius, driven by damped force integration. The discrete task shares
//! one team reward; the continuous variant gives each agent a localized reward
//! for reaching its own landmark.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("episode already finished at t = {0}")]
    EpisodeDone(usize),
    #[error("expected {expected} actions, got {actual}")]
    ActionCount { expected: usize, actual: usize },
    #[error("invalid discrete action {0}")]
    InvalidAction(usize),
    #[error("non-finite continuous action for agent {0}")]
    NonFiniteAction(usize),
    #[error("world needs at least one agent and one landmark")]
    EmptyWorld,
}

/// Number of discrete actions: stay, +x, -x, +y, -y.
pub const NUM_DISCRETE_ACTIONS: usize = 5;

const ACTION_FORCES: [[f64; 2]; NUM_DISCRETE_ACTIONS] =
    [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicsParams {
    pub dt: f64,
    pub damping: f64,
    pub force_scale: f64,
    pub agent_radius: f64,
    pub mass: f64,
    pub episode_length: usize,
    pub collision_penalty: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            dt: 0.1,
            damping: 0.25,
            force_scale: 5.0,
            agent_radius: 0.15,
            mass: 1.0,
            episode_length: 25,
            collision_penalty: 1.0,
        }
    }
}

/// Which reward and action structure a world is driven with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    /// Five discrete actions, shared team reward.
    Nav,
    /// 2-D force actions in `[-1, 1]^2`, per-agent reward for agent `i` reaching landmark `i`.
    NavContinuous,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Nav => "nav",
            TaskKind::NavContinuous => "nav_continuous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nav" => Some(TaskKind::Nav),
            "nav_continuous" | "nav-continuous" => Some(TaskKind::NavContinuous),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub collisions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NavWorld {
    n_agents: usize,
    n_landmarks: usize,
    pub agent_pos: Vec<[f64; 2]>,
    pub agent_vel: Vec<[f64; 2]>,
    pub landmark_pos: Vec<[f64; 2]>,
    t: usize,
    params: PhysicsParams,
}

impl NavWorld {
    /// A world with one landmark per agent, everything at the origin until [`NavWorld::reset`].
    pub fn new(n_agents: usize, params: PhysicsParams) -> Result<Self, EnvError> {
        Self::with_landmarks(n_agents, n_agents, params)
    }

    pub fn with_landmarks(
        n_agents: usize,
        n_landmarks: usize,
        params: PhysicsParams,
    ) -> Result<Self, EnvError> {
        if n_agents == 0 || n_landmarks == 0 {
            return Err(EnvError::EmptyWorld);
        }
        Ok(NavWorld {
            n_agents,
            n_landmarks,
            agent_pos: vec![[0.0; 2]; n_agents],
            agent_vel: vec![[0.0; 2]; n_agents],
            landmark_pos: vec![[0.0; 2]; n_landmarks],
            t: 0,
            params,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_landmarks(&self) -> usize {
        self.n_landmarks
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.params.episode_length
    }

    /// Per-agent observation length: own velocity, own position, landmark
    /// offsets, then offsets to every other agent.
    pub fn obs_dim(&self) -> usize {
        4 + 2 * self.n_landmarks + 2 * (self.n_agents - 1)
    }

    /// Draws agents then landmarks uniformly from `[-1, 1]^2`, zeroes velocities and `t`.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<Vec<f64>> {
        let mut draw = || [2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0];
        for p in self.agent_pos.iter_mut() {
            *p = draw();
        }
        for l in self.landmark_pos.iter_mut() {
            *l = draw();
        }
        self.agent_vel.iter_mut().for_each(|v| *v = [0.0; 2]);
        self.t = 0;
        self.observations()
    }

    pub fn observation(&self, i: usize) -> Vec<f64> {
        let [px, py] = self.agent_pos[i];
        let mut obs = Vec::with_capacity(self.obs_dim());
        obs.extend_from_slice(&self.agent_vel[i]);
        obs.extend_from_slice(&self.agent_pos[i]);
        for l in &self.landmark_pos {
            obs.push(l[0] - px);
            obs.push(l[1] - py);
        }
        for (j, a) in self.agent_pos.iter().enumerate() {
            if j != i {
                obs.push(a[0] - px);
                obs.push(a[1] - py);
            }
        }
        obs
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        (0..self.n_agents).map(|i| self.observation(i)).collect()
    }

    /// Advances with discrete actions; every agent receives the team reward.
    pub fn step(&mut self, actions: &[usize]) -> Result<StepResult, EnvError> {
        self.check_step(actions.len())?;
        if let Some(&bad) = actions.iter().find(|&&a| a >= NUM_DISCRETE_ACTIONS) {
            return Err(EnvError::InvalidAction(bad));
        }
        let forces: Vec<[f64; 2]> = actions.iter().map(|&a| ACTION_FORCES[a]).collect();
        self.integrate(&forces);
        let reward = self.team_reward();
        Ok(StepResult {
            observations: self.observations(),
            rewards: vec![reward; self.n_agents],
            done: self.is_done(),
            collisions: self.collision_count(),
        })
    }

    /// Advances with per-agent force vectors; components are clamped to `[-1, 1]`.
    /// Agent `i` is rewarded for its distance to landmark `i mod L` and
    /// penalized for each collision it takes part in.
    pub fn step_continuous(&mut self, actions: &[[f64; 2]]) -> Result<StepResult, EnvError> {
        self.check_step(actions.len())?;
        if let Some(i) = actions
            .iter()
            .position(|a| !a[0].is_finite() || !a[1].is_finite())
        {
            return Err(EnvError::NonFiniteAction(i));
        }
        let forces: Vec<[f64; 2]> = actions
            .iter()
            .map(|a| [a[0].clamp(-1.0, 1.0), a[1].clamp(-1.0, 1.0)])
            .collect();
        self.integrate(&forces);
        Ok(StepResult {
            observations: self.observations(),
            rewards: self.local_rewards(),
            done: self.is_done(),
            collisions: self.collision_count(),
        })
    }

    fn check_step(&self, n_actions: usize) -> Result<(), EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeDone(self.t));
        }
        if n_actions != self.n_agents {
            return Err(EnvError::ActionCount {
                expected: self.n_agents,
                actual: n_actions,
            });
        }
        Ok(())
    }

    fn integrate(&mut self, unit_forces: &[[f64; 2]]) {
        let p = &self.params;
        let gain = p.force_scale / p.mass * p.dt;
        for ((pos, vel), u) in self
            .agent_pos
            .iter_mut()
            .zip(self.agent_vel.iter_mut())
            .zip(unit_forces)
        {
            for d in 0..2 {
                vel[d] = vel[d] * (1.0 - p.damping) + u[d] * gain;
                pos[d] += vel[d] * p.dt;
            }
        }
        self.t += 1;
    }

    fn colliding(&self, i: usize, j: usize) -> bool {
        dist(self.agent_pos[i], self.agent_pos[j]) < 2.0 * self.params.agent_radius
    }

    /// Unordered agent pairs whose centres are strictly closer than two radii.
    pub fn collision_count(&self) -> usize {
        let mut count = 0;
        for i in 0..self.n_agents {
            for j in i + 1..self.n_agents {
                if self.colliding(i, j) {
                    count += 1;
                }
            }
        }
        count
    }

    /// `-(sum over landmarks of the nearest-agent distance) - penalty * collisions`.
    pub fn team_reward(&self) -> f64 {
        let coverage: f64 = self
            .landmark_pos
            .iter()
            .map(|&l| {
                self.agent_pos
                    .iter()
                    .map(|&a| dist(a, l))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        -coverage - self.params.collision_penalty * self.collision_count() as f64
    }

    pub fn local_rewards(&self) -> Vec<f64> {
        (0..self.n_agents)
            .map(|i| {
                let target = self.landmark_pos[i % self.n_landmarks];
                let hits = (0..self.n_agents)
                    .filter(|&j| j != i && self.colliding(i, j))
                    .count();
                -dist(self.agent_pos[i], target) - self.params.collision_penalty * hits as f64
            })
            .collect()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Writes one tab-separated line per step:
/// `t <TAB> x0,y0;x1,y1;... <TAB> a0;a1;... <TAB> r0,r1,...`.
/// Continuous actions are written as `ax,ay`.
pub struct TrajectoryWriter<W: std::io::Write> {
    out: W,
}

impl<W: std::io::Write> TrajectoryWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "# t\tpositions\tactions\trewards")?;
        Ok(TrajectoryWriter { out })
    }

    pub fn record(
        &mut self,
        world: &NavWorld,
        actions: &[String],
        rewards: &[f64],
    ) -> std::io::Result<()> {
        let mut line = format!("{}\t", world.t());
        let pos: Vec<String> = world
            .agent_pos
            .iter()
            .map(|p| format!("{:e},{:e}", p[0], p[1]))
            .collect();
        line.push_str(&pos.join(";"));
        let _ = write!(line, "\t{}\t", actions.join(";"));
        let rs: Vec<String> = rewards.iter().map(|r| format!("{r:e}")).collect();
        line.push_str(&rs.join(","));
        writeln!(self.out, "{line}")
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world(n: usize) -> NavWorld {
        NavWorld::new(n, PhysicsParams::default()).unwrap()
    }

    #[test]
    fn reset_is_deterministic_and_zeroes_velocity() {
        let mut a = world(3);
        let mut b = world(3);
        a.agent_vel[1] = [3.0, 3.0];
        let oa = a.reset(&mut ChaCha8Rng::seed_from_u64(4));
        let ob = b.reset(&mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert_eq!(oa, ob);
        assert!(a.agent_vel.iter().all(|v| *v == [0.0, 0.0]));
        assert_eq!(oa.len(), 3);
        assert!(oa.iter().all(|o| o.len() == 14));
        assert!(a
            .agent_pos
            .iter()
            .chain(&a.landmark_pos)
            .all(|p| p.iter().all(|c| (-1.0..=1.0).contains(c))));
    }

    #[test]
    fn motionless_agents_stay_put() {
        let mut w = world(3);
        w.reset(&mut ChaCha8Rng::seed_from_u64(1));
        let before = w.agent_pos.clone();
        let expected = -w
            .landmark_pos
            .iter()
            .map(|&l| before.iter().map(|&a| dist(a, l)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            - w.collision_count() as f64;
        let r = w.step(&[0, 0, 0]).unwrap();
        assert_eq!(w.agent_pos, before);
        assert_eq!(r.rewards, vec![expected; 3]);
    }

    #[test]
    fn single_push_follows_update_rule() {
        let mut w = world(1);
        let r = w.step(&[1]).unwrap();
        // vel = 5.0 / 1.0 * 0.1, pos = vel * 0.1
        assert_abs_diff_eq!(w.agent_vel[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.agent_pos[0][0], 0.05, epsilon = 1e-15);
        assert_eq!(w.agent_pos[0][1], 0.0);
        assert!(!r.done);
        w.step(&[0]).unwrap();
        assert_abs_diff_eq!(w.agent_vel[0][0], 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(w.agent_pos[0][0], 0.0875, epsilon = 1e-15);
    }

    #[test]
    fn overlapping_agents_are_penalized() {
        let mut w = world(2);
        w.agent_pos = vec![[0.0, 0.0], [0.1, 0.0]];
        w.landmark_pos = vec![[0.0, 0.0], [0.1, 0.0]];
        let r = w.step(&[0, 0]).unwrap();
        assert!(r.collisions >= 1);
        assert_abs_diff_eq!(r.rewards[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn covered_landmarks_give_zero_reward() {
        let mut w = world(3);
        w.agent_pos = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        w.landmark_pos = w.agent_pos.clone();
        assert_eq!(w.team_reward(), 0.0);
    }

    #[test]
    fn three_four_five_distance() {
        let mut w = world(1);
        w.landmark_pos = vec![[3.0, 4.0]];
        assert_eq!(w.team_reward(), -5.0);
    }

    #[test]
    fn coincident_pair_two_landmarks() {
        let mut w = world(2);
        w.agent_pos = vec![[0.5, 0.5], [0.5, 0.5]];
        w.landmark_pos = vec![[1.5, 0.5], [0.5, 2.5]];
        assert_abs_diff_eq!(w.team_reward(), -4.0, epsilon = 1e-12);
    }

    #[test]
    fn collision_counting_conventions() {
        let mut w = world(3);
        w.agent_pos = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert_eq!(w.collision_count(), 0);
        w.agent_pos = vec![[0.2, 0.2]; 3];
        assert_eq!(w.collision_count(), 3);
        w.agent_pos = vec![[0.0, 0.0], [0.3, 0.0], [5.0, 5.0]];
        assert_eq!(w.collision_count(), 0);
        w.agent_pos[1] = [0.299_999_999, 0.0];
        assert_eq!(w.collision_count(), 1);
    }

    #[test]
    fn episode_ends_at_25_and_rejects_further_steps() {
        let mut w = world(2);
        w.reset(&mut ChaCha8Rng::seed_from_u64(0));
        for t in 1..=25 {
            let r = w.step(&[1, 3]).unwrap();
            assert_eq!(r.done, t == 25);
        }
        assert_eq!(w.step(&[0, 0]), Err(EnvError::EpisodeDone(25)));
        assert!(w.step_continuous(&[[0.0; 2]; 2]).is_err());
    }

    #[test]
    fn invalid_actions_are_rejected() {
        let mut w = world(2);
        assert_eq!(w.step(&[0]), Err(EnvError::ActionCount { expected: 2, actual: 1 }));
        assert_eq!(w.step(&[0, 5]), Err(EnvError::InvalidAction(5)));
        assert_eq!(
            w.step_continuous(&[[0.0, f64::NAN], [0.0, 0.0]]),
            Err(EnvError::NonFiniteAction(0))
        );
        assert_eq!(w.t(), 0);
    }

    #[test]
    fn continuous_zero_action_and_local_rewards() {
        let mut w = world(2);
        w.agent_pos = vec![[0.0, 0.0], [1.0, 1.0]];
        w.landmark_pos = vec![[0.0, 0.0], [1.0, 2.0]];
        let r = w.step_continuous(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(w.agent_pos, vec![[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(r.rewards, vec![0.0, -1.0]);
    }

    #[test]
    fn continuous_actions_are_clamped() {
        let mut a = world(1);
        let mut b = world(1);
        a.step_continuous(&[[7.0, -3.0]]).unwrap();
        b.step_continuous(&[[1.0, -1.0]]).unwrap();
        assert_eq!(a.agent_pos, b.agent_pos);
    }

    #[test]
    fn swapping_agents_swaps_local_rewards() {
        let mut w = world(2);
        w.agent_pos = vec![[0.3, 0.1], [-0.5, 0.9]];
        w.landmark_pos = vec![[1.0, 1.0], [-1.0, -1.0]];
        let r = w.local_rewards();
        let mut s = w.clone();
        s.agent_pos.swap(0, 1);
        s.landmark_pos.swap(0, 1);
        let rs = s.local_rewards();
        assert_eq!(r, vec![rs[1], rs[0]]);
    }

    #[test]
    fn trajectory_lines_have_four_fields() {
        let mut w = world(2);
        w.reset(&mut ChaCha8Rng::seed_from_u64(2));
        let mut tw = TrajectoryWriter::new(Vec::new()).unwrap();
        let r = w.step(&[1, 2]).unwrap();
        tw.record(&w, &["1".into(), "2".into()], &r.rewards).unwrap();
        let text = String::from_utf8(tw.into_inner()).unwrap();
        let line = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[0], "1");
        assert_eq!(fields[1].split(';').count(), 2);
    }
}
