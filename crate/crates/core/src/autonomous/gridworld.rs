//! Small grid environments for navigation and decision tasks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    /// Unit step, with y growing downward.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
    pub reached_goal: bool,
    pub hit_hazard: bool,
    pub collided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub start: Pos,
    pub agent: Pos,
    pub goal: Pos,
    pub obstacles: BTreeSet<Pos>,
    pub hazards: BTreeSet<Pos>,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub hazard_reward: f64,
    pub collision_penalty: f64,
    /// Cells moved per action.
    pub speed: f64,
}

impl GridWorld {
    /// Open `width x height` grid, agent at `start`, no obstacles or hazards.
    pub fn open(width: usize, height: usize, start: Pos, goal: Pos) -> Result<Self> {
        let g = Self {
            width,
            height,
            start,
            agent: start,
            goal,
            obstacles: BTreeSet::new(),
            hazards: BTreeSet::new(),
            step_reward: 0.0,
            goal_reward: 1.0,
            hazard_reward: -1.0,
            collision_penalty: 0.0,
            speed: 1.0,
        };
        g.validate()?;
        Ok(g)
    }

    /// 5x5 task: start in the centre, goal in one corner, hazard in the
    /// opposite one, a small cost per step and for bumping into walls.
    pub fn five_by_five() -> Self {
        let mut g = Self::open(5, 5, Pos::new(2, 2), Pos::new(4, 4)).expect("fixed layout is valid");
        g.hazards.insert(Pos::new(0, 0));
        g.step_reward = -0.02;
        g.collision_penalty = -0.1;
        g
    }

    pub fn with_speed(mut self, speed: f64) -> Result<Self> {
        self.speed = speed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("grid", "width and height must be positive"));
        }
        if !(self.speed >= 1.0 && self.speed.is_finite()) {
            return Err(Error::param("speed", "must be finite and >= 1"));
        }
        for (name, p) in [("start", self.start), ("agent", self.agent), ("goal", self.goal)] {
            if !self.inside(p) || self.obstacles.contains(&p) {
                return Err(Error::param(name, "must be a free cell on the grid"));
            }
        }
        if let Some(p) = self.obstacles.iter().chain(&self.hazards).find(|p| !self.inside(**p)) {
            return Err(Error::param("cells", format!("({}, {}) is off the grid", p.x, p.y)));
        }
        let rewards = [self.step_reward, self.goal_reward, self.hazard_reward, self.collision_penalty];
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("grid rewards".into()));
        }
        Ok(())
    }

    pub fn inside(&self, p: Pos) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// Row-major index of a cell, the place-cell code.
    pub fn state(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    pub fn pos_of(&self, state: usize) -> Option<Pos> {
        (state < self.cells()).then(|| Pos::new(state % self.width, state / self.width))
    }

    pub fn reset(&mut self) {
        self.agent = self.start;
    }

    /// Swap goal and hazard rewards.
    pub fn flip_rewards(&mut self) {
        std::mem::swap(&mut self.goal_reward, &mut self.hazard_reward);
    }

    /// Move `floor(speed)` cells, one at a time, stopping before walls and
    /// obstacles. Goal and hazard cells end the episode when entered.
    pub fn step(&mut self, action: Action) -> StepOutcome {
        let (dx, dy) = action.delta();
        let mut out = StepOutcome {
            reward: self.step_reward,
            done: false,
            reached_goal: false,
            hit_hazard: false,
            collided: false,
        };
        for _ in 0..self.speed.floor() as usize {
            let nx = self.agent.x as isize + dx;
            let ny = self.agent.y as isize + dy;
            let next = Pos::new(nx as usize, ny as usize);
            if nx < 0 || ny < 0 || !self.inside(next) || self.obstacles.contains(&next) {
                out.collided = true;
                out.reward += self.collision_penalty;
                break;
            }
            self.agent = next;
            if next == self.goal {
                out.reward += self.goal_reward;
                out.reached_goal = true;
                out.done = true;
                break;
            }
            if self.hazards.contains(&next) {
                out.reward += self.hazard_reward;
                out.hit_hazard = true;
                out.done = true;
                break;
            }
        }
        out
    }

    /// Free cells between the agent and the first obstacle straight ahead,
    /// or `None` if the way is clear to the edge.
    pub fn distance_ahead(&self, action: Action) -> Option<usize> {
        let (dx, dy) = action.delta();
        let mut p = (self.agent.x as isize, self.agent.y as isize);
        let mut d = 0;
        loop {
            p = (p.0 + dx, p.1 + dy);
            if p.0 < 0 || p.1 < 0 {
                return None;
            }
            let q = Pos::new(p.0 as usize, p.1 as usize);
            if !self.inside(q) {
                return None;
            }
            if self.obstacles.contains(&q) {
                return Some(d);
            }
            d += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walls_stop_the_agent() {
        let mut g = GridWorld::open(3, 3, Pos::new(0, 0), Pos::new(2, 2)).unwrap();
        let o = g.step(Action::Up);
        assert!(o.collided);
        assert_eq!(g.agent, Pos::new(0, 0));
    }

    #[test]
    fn goal_ends_the_episode() {
        let mut g = GridWorld::open(3, 1, Pos::new(0, 0), Pos::new(2, 0)).unwrap();
        assert!(!g.step(Action::Right).done);
        let o = g.step(Action::Right);
        assert!(o.done && o.reached_goal);
        assert_eq!(o.reward, 1.0);
    }

    #[test]
    fn fast_agent_cannot_jump_obstacles() {
        let mut g = GridWorld::open(6, 1, Pos::new(0, 0), Pos::new(5, 0)).unwrap().with_speed(4.0).unwrap();
        g.obstacles.insert(Pos::new(2, 0));
        let o = g.step(Action::Right);
        assert!(o.collided);
        assert_eq!(g.agent, Pos::new(1, 0));
    }

    #[test]
    fn invalid_layouts_are_rejected() {
        assert!(GridWorld::open(3, 3, Pos::new(3, 0), Pos::new(0, 0)).is_err());
        assert!(GridWorld::five_by_five().with_speed(0.5).is_err());
        let mut g = GridWorld::five_by_five();
        g.obstacles.insert(g.goal);
        assert!(g.validate().is_err());
    }

    #[test]
    fn state_codes_round_trip() {
        let g = GridWorld::five_by_five();
        for s in 0..g.cells() {
            assert_eq!(g.state(g.pos_of(s).unwrap()), s);
        }
        assert_eq!(g.pos_of(25), None);
    }

    #[test]
    fn distance_ahead_counts_free_cells() {
        let mut g = GridWorld::open(10, 1, Pos::new(0, 0), Pos::new(1, 0)).unwrap();
        assert_eq!(g.distance_ahead(Action::Right), None);
        g.obstacles.insert(Pos::new(7, 0));
        assert_eq!(g.distance_ahead(Action::Right), Some(6));
    }
}
