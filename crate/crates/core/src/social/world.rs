//! Shared gridworld snapshots and what one agent can see of them.
//!
//! Cells are unit squares centred on integer coordinates, with y growing
//! downward. A cell is visible when it lies inside the viewer's field-of-view
//! cone and the straight segment between the two cell centres does not pass
//! through the interior of an occluder cell. Only grazing a corner does not
//! block, so line of sight is symmetric.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::autonomous::Pos;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    North,
    East,
    South,
    West,
}

impl Facing {
    pub const ALL: [Facing; 4] = [Facing::North, Facing::East, Facing::South, Facing::West];

    /// Unit vector, y down.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Facing::North => (0, -1),
            Facing::East => (1, 0),
            Facing::South => (0, 1),
            Facing::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub id: String,
    pub position: Pos,
    pub facing: Facing,
    /// Half-angle of the view cone, degrees; 90 sees the forward half-plane,
    /// 180 sees all round.
    pub fov_half_deg: f64,
    /// Absent agents perceive nothing.
    pub present: bool,
}

impl AgentPose {
    pub fn new(id: impl Into<String>, position: Pos, facing: Facing, fov_half_deg: f64) -> Self {
        Self {
            id: id.into(),
            position,
            facing,
            fov_half_deg,
            present: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov_half_deg > 0.0 && self.fov_half_deg <= 180.0) {
            return Err(Error::param("fov_half_deg", "must be in (0, 180]"));
        }
        Ok(())
    }

    /// Whether the direction to `cell` lies inside the view cone.
    pub fn in_cone(&self, cell: Pos) -> bool {
        let dx = cell.x as i64 - self.position.x as i64;
        let dy = cell.y as i64 - self.position.y as i64;
        if (dx, dy) == (0, 0) || self.fov_half_deg >= 180.0 {
            return true;
        }
        let (fx, fy) = self.facing.delta();
        let dot = (dx * fx + dy * fy) as f64;
        let norm = ((dx * dx + dy * dy) as f64).sqrt();
        dot >= norm * self.fov_half_deg.to_radians().cos() - 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub occluders: BTreeSet<Pos>,
    #[serde(default)]
    pub objects: BTreeMap<String, Pos>,
    #[serde(default)]
    pub hazards: BTreeSet<Pos>,
    #[serde(default)]
    pub agents: Vec<AgentPose>,
    /// Objects out of sight inside a container, invisible from anywhere.
    #[serde(default)]
    pub concealed: BTreeSet<String>,
}

impl WorldState {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            occluders: BTreeSet::new(),
            objects: BTreeMap::new(),
            hazards: BTreeSet::new(),
            agents: Vec::new(),
            concealed: BTreeSet::new(),
        }
    }

    pub fn inside(&self, p: Pos) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("world", "width and height must be positive"));
        }
        if let Some(p) = self.occluders.iter().chain(&self.hazards).find(|p| !self.inside(**p)) {
            return Err(Error::param("world", format!("cell ({}, {}) is off the grid", p.x, p.y)));
        }
        for (name, p) in &self.objects {
            if !self.inside(*p) || self.occluders.contains(p) {
                return Err(Error::param("objects", format!("`{name}` must sit on a free cell")));
            }
        }
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            a.validate()?;
            if !self.inside(a.position) || self.occluders.contains(&a.position) {
                return Err(Error::param("agents", format!("`{}` must stand on a free cell", a.id)));
            }
            if !ids.insert(a.id.as_str()) {
                return Err(Error::Duplicate {
                    kind: "agent",
                    name: a.id.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn agent(&self, id: &str) -> Result<&AgentPose> {
        self.agents.iter().find(|a| a.id == id).ok_or_else(|| Error::Unknown {
            kind: "agent",
            name: id.into(),
            registered: self.agents.iter().map(|a| a.id.as_str()).collect::<Vec<_>>().join(", "),
        })
    }

    pub fn agent_mut(&mut self, id: &str) -> Result<&mut AgentPose> {
        let registered = self.agents.iter().map(|a| a.id.clone()).collect::<Vec<_>>().join(", ");
        self.agents.iter_mut().find(|a| a.id == id).ok_or(Error::Unknown {
            kind: "agent",
            name: id.into(),
            registered,
        })
    }

    pub fn cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Pos::new(x, y)))
    }

    /// Row-major cell index.
    pub fn index(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    pub fn pos_of(&self, i: usize) -> Option<Pos> {
        (i < self.width * self.height).then(|| Pos::new(i % self.width, i / self.width))
    }

    /// True when no occluder interior lies between the two cell centres.
    pub fn line_of_sight(&self, from: Pos, to: Pos) -> bool {
        traverse(from, to).all(|c| c == to || !self.occluders.contains(&c))
    }
}

/// Cells whose interior the centre-to-centre segment crosses, after `from`.
///
/// Integer grid walk: the next vertical and horizontal cell boundaries are
/// compared by cross-multiplication, and an exact corner crossing steps
/// diagonally without entering either side cell.
fn traverse(from: Pos, to: Pos) -> impl Iterator<Item = Pos> {
    let dx = to.x as i64 - from.x as i64;
    let dy = to.y as i64 - from.y as i64;
    let (nx, ny) = (dx.abs(), dy.abs());
    let (sx, sy) = (dx.signum(), dy.signum());
    let (mut x, mut y) = (from.x as i64, from.y as i64);
    let (mut ix, mut iy) = (0i64, 0i64);
    std::iter::from_fn(move || {
        if ix >= nx && iy >= ny {
            return None;
        }
        let tx = (1 + 2 * ix) * ny;
        let ty = (1 + 2 * iy) * nx;
        if tx == ty {
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        } else if tx < ty {
            x += sx;
            ix += 1;
        } else {
            y += sy;
            iy += 1;
        }
        Some(Pos::new(x as usize, y as usize))
    })
}

/// What one viewer perceives of a world.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Percept {
    pub viewer: String,
    pub cells: BTreeSet<Pos>,
    pub objects: BTreeMap<String, Pos>,
    pub hazards: BTreeSet<Pos>,
    /// Other present agents standing on visible cells.
    pub agents: Vec<String>,
}

impl Percept {
    pub fn sees(&self, p: Pos) -> bool {
        self.cells.contains(&p)
    }
}

/// Visible part of `world` from `viewer`'s pose.
pub fn perspective_transform(world: &WorldState, viewer: &AgentPose) -> Result<Percept> {
    viewer.validate()?;
    if !world.inside(viewer.position) {
        return Err(Error::param(
            "viewer",
            format!("({}, {}) is off the grid", viewer.position.x, viewer.position.y),
        ));
    }
    let mut out = Percept {
        viewer: viewer.id.clone(),
        ..Percept::default()
    };
    if !viewer.present {
        return Ok(out);
    }
    out.cells = world
        .cells()
        .filter(|&c| viewer.in_cone(c) && world.line_of_sight(viewer.position, c))
        .collect();
    out.objects = world
        .objects
        .iter()
        .filter(|(k, p)| out.cells.contains(p) && !world.concealed.contains(*k))
        .map(|(k, p)| (k.clone(), *p))
        .collect();
    out.hazards = world.hazards.intersection(&out.cells).copied().collect();
    out.agents = world
        .agents
        .iter()
        .filter(|a| a.id != viewer.id && a.present && out.cells.contains(&a.position))
        .map(|a| a.id.clone())
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i64>;

    /// Liang-Barsky clip of the centre segment against the open square of
    /// `o`, in exact rationals.
    fn crosses_interior(a: Pos, b: Pos, o: Pos) -> bool {
        let p0 = [Q::from_integer(a.x as i64), Q::from_integer(a.y as i64)];
        let d = [Q::from_integer(b.x as i64 - a.x as i64), Q::from_integer(b.y as i64 - a.y as i64)];
        let half = Q::new(1, 2);
        let lo = [Q::from_integer(o.x as i64) - half, Q::from_integer(o.y as i64) - half];
        let hi = [Q::from_integer(o.x as i64) + half, Q::from_integer(o.y as i64) + half];
        let (mut t0, mut t1) = (Q::from_integer(0), Q::from_integer(1));
        for k in 0..2 {
            if d[k] == Q::from_integer(0) {
                if !(p0[k] > lo[k] && p0[k] < hi[k]) {
                    return false;
                }
                continue;
            }
            let (mut ta, mut tb) = ((lo[k] - p0[k]) / d[k], (hi[k] - p0[k]) / d[k]);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
        t0 < t1
    }

    fn oracle(world: &WorldState, v: &AgentPose) -> BTreeSet<Pos> {
        if !v.present {
            return BTreeSet::new();
        }
        let (fx, fy) = v.facing.delta();
        world
            .cells()
            .filter(|&c| {
                let dx = c.x as f64 - v.position.x as f64;
                let dy = c.y as f64 - v.position.y as f64;
                let cone = (dx == 0.0 && dy == 0.0) || {
                    let ang = (dy.atan2(dx) - (fy as f64).atan2(fx as f64)).abs();
                    let ang = ang.min(2.0 * std::f64::consts::PI - ang).to_degrees();
                    ang <= v.fov_half_deg + 1e-9
                };
                cone && world
                    .occluders
                    .iter()
                    .filter(|&&o| o != c && o != v.position)
                    .all(|&o| !crosses_interior(v.position, c, o))
            })
            .collect()
    }

    fn world(n: usize, occ: &[Pos]) -> WorldState {
        let mut w = WorldState::new(n, n);
        w.occluders.extend(occ.iter().copied());
        w
    }

    #[test]
    fn open_half_plane_is_visible() {
        let w = world(5, &[]);
        let v = AgentPose::new("a", Pos::new(2, 2), Facing::East, 90.0);
        let p = perspective_transform(&w, &v).unwrap();
        let expect: BTreeSet<Pos> = w.cells().filter(|c| c.x >= 2).collect();
        assert_eq!(p.cells, expect);
    }

    #[test]
    fn object_behind_an_occluder_is_hidden() {
        let mut w = world(5, &[Pos::new(2, 0)]);
        w.objects.insert("ball".into(), Pos::new(4, 0));
        let v = AgentPose::new("a", Pos::new(0, 0), Facing::East, 90.0);
        let p = perspective_transform(&w, &v).unwrap();
        assert!(p.objects.is_empty());
        assert!(p.sees(Pos::new(2, 0)));
        assert!(!p.sees(Pos::new(3, 0)));
    }

    #[test]
    fn absent_viewer_sees_nothing() {
        let w = world(4, &[]);
        let mut v = AgentPose::new("a", Pos::new(0, 0), Facing::East, 180.0);
        v.present = false;
        assert!(perspective_transform(&w, &v).unwrap().cells.is_empty());
    }

    #[test]
    fn off_grid_viewer_is_rejected() {
        let w = world(4, &[]);
        let v = AgentPose::new("a", Pos::new(4, 0), Facing::East, 90.0);
        assert!(perspective_transform(&w, &v).is_err());
        let v = AgentPose::new("a", Pos::new(0, 0), Facing::East, 0.0);
        assert!(perspective_transform(&w, &v).is_err());
    }

    #[test]
    fn corner_grazing_does_not_block() {
        // diagonal neighbours of the segment's corner point
        let w = world(3, &[Pos::new(1, 0), Pos::new(0, 1)]);
        assert!(w.line_of_sight(Pos::new(0, 0), Pos::new(1, 1)));
        assert!(!w.line_of_sight(Pos::new(0, 0), Pos::new(2, 0)));
    }

    #[test]
    fn five_by_five_single_occluder_matches_ray_cast() {
        let w = world(5, &[Pos::new(2, 1)]);
        for c in w.cells().filter(|c| *c != Pos::new(2, 1)) {
            for f in Facing::ALL {
                for h in [45.0, 90.0, 180.0] {
                    let v = AgentPose::new("a", c, f, h);
                    assert_eq!(perspective_transform(&w, &v).unwrap().cells, oracle(&w, &v));
                }
            }
        }
    }

    #[test]
    fn percept_lists_visible_agents() {
        let mut w = world(4, &[]);
        w.agents.push(AgentPose::new("a", Pos::new(0, 0), Facing::East, 90.0));
        w.agents.push(AgentPose::new("b", Pos::new(3, 0), Facing::West, 90.0));
        w.validate().unwrap();
        let p = perspective_transform(&w, &w.agents[0]).unwrap();
        assert_eq!(p.agents, vec!["b".to_string()]);
    }

    fn arb_world() -> impl Strategy<Value = (WorldState, AgentPose)> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(wd, ht)| {
            let cell = (0..wd, 0..ht).prop_map(|(x, y)| Pos::new(x, y));
            (
                Just((wd, ht)),
                prop::collection::vec(cell.clone(), 0..=2),
                cell,
                prop::sample::select(Facing::ALL.to_vec()),
                prop::sample::select(vec![30.0, 45.0, 60.0, 90.0, 135.0, 180.0]),
            )
                .prop_map(|((wd, ht), occ, at, f, h)| {
                    let mut w = WorldState::new(wd, ht);
                    w.occluders.extend(occ.into_iter().filter(|o| *o != at));
                    (w, AgentPose::new("v", at, f, h))
                })
        })
    }

    proptest! {
        #[test]
        fn matches_ray_cast_oracle((w, v) in arb_world()) {
            prop_assert_eq!(perspective_transform(&w, &v).unwrap().cells, oracle(&w, &v));
        }

        #[test]
        fn line_of_sight_is_symmetric((w, v) in arb_world(), tx in 0usize..6, ty in 0usize..6) {
            let t = Pos::new(tx % w.width, ty % w.height);
            prop_assert_eq!(w.line_of_sight(v.position, t), w.line_of_sight(t, v.position));
        }
    }
}
