//! Multi-room ordered-target grid environment.
//!
//! The world is a `rows x cols` lattice of square rooms connected by door
//! gaps. A fixed sequence of colored objects is scattered over the rooms;
//! interacting with an object emits a `touch <color> <kind>` event, and the
//! completion flag of target k is set only when targets 1..k-1 are already
//! done. Reaching the end of the sequence pays the single sparse reward.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruction::{Instruction, Walkthrough};

use super::{Action, Cell, EnvState, StepResult};

pub const OBJECT_KINDS: [&str; 5] = ["ball", "box", "cone", "disc", "star"];
pub const COLORS: [&str; 5] = ["red", "blue", "green", "yellow", "purple"];

/// One ordered target: object kind, color, and the room it lives in
/// (room index is row-major).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub kind: String,
    pub color: String,
    pub room: usize,
}

impl Target {
    pub fn event(&self) -> String {
        format!("touch {} {}", self.color, self.kind)
    }

    pub fn instruction_text(&self) -> String {
        format!("touch the {} {}", self.color, self.kind)
    }
}

/// Generation parameters plus the ordered target list. The concrete layout
/// (door gaps, target cells, start cell) is derived deterministically from
/// `seed`, so equal configs always build identical worlds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSeqConfig {
    pub rows: usize,
    pub cols: usize,
    /// Interior cells per room side.
    pub room_size: usize,
    pub targets: Vec<Target>,
    pub seed: u64,
    pub max_steps: usize,
}

impl GridSeqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows < 1 || self.cols < 1 {
            return Err(Error::Config("grid needs at least one room row and column".into()));
        }
        if self.room_size < 3 {
            return Err(Error::Config("room_size must be at least 3".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("at least one target required".into()));
        }
        let rooms = self.rows * self.cols;
        for t in &self.targets {
            if t.room >= rooms {
                return Err(Error::Config(format!("target room {} out of range", t.room)));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Generate a solvable layout. Identical arguments produce a bitwise-equal
/// config; the object/color/room assignment comes from RNG stream 0 of the
/// seed and the cell-level layout from stream 1.
pub fn generate_gridseq(
    seed: u64,
    rows: usize,
    cols: usize,
    room_size: usize,
    num_targets: usize,
) -> Result<GridSeqConfig> {
    if num_targets < 1 {
        return Err(Error::Generation("num_targets must be at least 1".into()));
    }
    if rows < 1 || cols < 1 || room_size < 3 {
        return Err(Error::Generation("grid dimensions must be positive, room_size >= 3".into()));
    }
    let rooms = rows * cols;
    let combos = OBJECT_KINDS.len() * COLORS.len();
    if num_targets > combos {
        return Err(Error::Generation(format!(
            "cannot place {num_targets} distinct targets, only {combos} kind/color combinations"
        )));
    }
    // room 0 loses one cell to the start position
    if num_targets > rooms * (room_size * room_size) - 1 {
        return Err(Error::Generation("too many targets for the available cells".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut combo_pool: Vec<(usize, usize)> = (0..OBJECT_KINDS.len())
        .flat_map(|k| (0..COLORS.len()).map(move |c| (k, c)))
        .collect();
    combo_pool.shuffle(&mut rng);

    let mut room_load = vec![0usize; rooms];
    let capacity = |room: usize, load: usize| {
        let cells = room_size * room_size - usize::from(room == 0);
        load < cells
    };
    let targets = combo_pool
        .into_iter()
        .take(num_targets)
        .map(|(k, c)| {
            let mut room = rng.gen_range(0..rooms);
            let mut tries = 0;
            while !capacity(room, room_load[room]) {
                room = (room + 1) % rooms;
                tries += 1;
                if tries > rooms {
                    return Err(Error::Generation("no room has a free cell left".into()));
                }
            }
            room_load[room] += 1;
            Ok(Target { kind: OBJECT_KINDS[k].into(), color: COLORS[c].into(), room })
        })
        .collect::<Result<Vec<_>>>()?;

    let config =
        GridSeqConfig { rows, cols, room_size, targets, seed, max_steps: 500 };
    // building validates reachability of every target
    let env = GridSeqEnv::new(&config)?;
    super::solver::solve_gridseq(&env, seed)
        .ok_or_else(|| Error::Generation("generated layout is not solvable".into()))?;
    Ok(config)
}

/// Derived cell-level layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Layout {
    width: i32,
    height: i32,
    /// Row-major walkability mask.
    walkable: Vec<bool>,
    start: Cell,
    /// Target cells in instruction order.
    target_cells: Vec<Cell>,
}

fn derive_layout(cfg: &GridSeqConfig) -> Result<Layout> {
    let span = cfg.room_size as i32 + 1;
    let width = cfg.cols as i32 * span + 1;
    let height = cfg.rows as i32 * span + 1;
    let idx = |x: i32, y: i32| (y * width + x) as usize;

    let mut walkable = vec![false; (width * height) as usize];
    for y in 0..height {
        for x in 0..width {
            let interior = x % span != 0 && y % span != 0;
            walkable[idx(x, y)] = interior;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    // one door gap per shared wall keeps the room graph connected
    for r in 0..cfg.rows as i32 {
        for c in 0..cfg.cols as i32 {
            if c + 1 < cfg.cols as i32 {
                let x = (c + 1) * span;
                let y = r * span + 1 + rng.gen_range(0..cfg.room_size as i32);
                walkable[idx(x, y)] = true;
            }
            if r + 1 < cfg.rows as i32 {
                let y = (r + 1) * span;
                let x = c * span + 1 + rng.gen_range(0..cfg.room_size as i32);
                walkable[idx(x, y)] = true;
            }
        }
    }

    let start = (1, 1);
    let mut used = vec![start];
    let mut target_cells = Vec::with_capacity(cfg.targets.len());
    for target in &cfg.targets {
        let (rr, rc) = (target.room / cfg.cols, target.room % cfg.cols);
        let x0 = rc as i32 * span + 1;
        let y0 = rr as i32 * span + 1;
        let mut candidates: Vec<Cell> = (0..cfg.room_size as i32)
            .flat_map(|dy| (0..cfg.room_size as i32).map(move |dx| (x0 + dx, y0 + dy)))
            .filter(|c| !used.contains(c))
            .collect();
        if candidates.is_empty() {
            return Err(Error::Generation(format!("room {} has no free cell", target.room)));
        }
        candidates.shuffle(&mut rng);
        let cell = candidates[0];
        used.push(cell);
        target_cells.push(cell);
    }

    Ok(Layout { width, height, walkable, start, target_cells })
}

/// A live grid-sequence environment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSeqEnv {
    config: GridSeqConfig,
    layout: Layout,
    state: EnvState,
}

impl GridSeqEnv {
    pub fn new(config: &GridSeqConfig) -> Result<Self> {
        config.validate()?;
        let layout = derive_layout(config)?;
        let state = EnvState::fresh(layout.start, config.targets.len());
        let env = Self { config: config.clone(), layout, state };
        // every target must sit on a reachable cell
        let reach = super::solver::reachable_cells(&env.passability(), env.layout.start);
        for (i, cell) in env.layout.target_cells.iter().enumerate() {
            if !reach.contains(cell) {
                return Err(Error::Generation(format!("target {} unreachable", i + 1)));
            }
        }
        Ok(env)
    }

    pub fn config(&self) -> &GridSeqConfig {
        &self.config
    }

    pub fn reset(&mut self, _seed: u64) -> EnvState {
        // dynamics are deterministic; the seed parameter is accepted for
        // interface uniformity only
        self.state = EnvState::fresh(self.layout.start, self.config.targets.len());
        self.state.clone()
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn goal_reached(&self) -> bool {
        self.state.flags.iter().all(|&f| f)
    }

    pub fn max_steps(&self) -> usize {
        self.config.max_steps
    }

    pub fn grid_size(&self) -> (i32, i32) {
        (self.layout.width, self.layout.height)
    }

    pub fn target_cells(&self) -> Vec<(usize, Cell)> {
        self.layout.target_cells.iter().enumerate().map(|(i, c)| (i + 1, *c)).collect()
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for y in 0..self.layout.height {
            for x in 0..self.layout.width {
                if self.layout.walkable[(y * self.layout.width + x) as usize] {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn inventory_vocab(&self) -> Vec<String> {
        Vec::new()
    }

    pub(crate) fn passability(&self) -> super::solver::Passability {
        super::solver::Passability {
            width: self.layout.width,
            height: self.layout.height,
            walkable: self.layout.walkable.clone(),
            hazards: Vec::new(),
        }
    }

    pub fn default_walkthrough(&self) -> Walkthrough {
        Walkthrough::new(
            self.config
                .targets
                .iter()
                .enumerate()
                .map(|(i, t)| Instruction {
                    index: i + 1,
                    text: t.instruction_text(),
                    events: vec![t.event()],
                })
                .collect(),
        )
        .expect("non-empty target list")
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.state.done {
            return Err(Error::Usage("cannot step a finished episode".into()));
        }
        let mut events = Vec::new();
        let mut target_hits = Vec::new();
        let mut completed = None;
        let mut reward = 0.0;

        match action {
            Action::Up | Action::Down | Action::Left | Action::Right => {
                let (dx, dy) = action.delta().unwrap();
                let next = (self.state.position.0 + dx, self.state.position.1 + dy);
                if self.is_walkable(next) {
                    self.state.position = next;
                }
            }
            Action::Interact => {
                if let Some(k) = self
                    .layout
                    .target_cells
                    .iter()
                    .position(|&c| c == self.state.position)
                    .map(|i| i + 1)
                {
                    events.push(self.config.targets[k - 1].event());
                    target_hits.push(k);
                    // ordered completion: k only fires after 1..k-1
                    if self.state.next_required() == k {
                        self.state.flags[k - 1] = true;
                        completed = Some(k);
                        if self.goal_reached() {
                            self.state.done = true;
                            reward = 1.0;
                        }
                    }
                }
            }
            Action::Noop => {}
        }

        self.state.t += 1;
        if self.state.t >= self.config.max_steps {
            self.state.done = true;
        }

        Ok(StepResult {
            state: self.state.clone(),
            reward,
            events,
            done: self.state.done,
            target_hits,
            completed,
        })
    }

    fn is_walkable(&self, cell: Cell) -> bool {
        cell.0 >= 0
            && cell.1 >= 0
            && cell.0 < self.layout.width
            && cell.1 < self.layout.height
            && self.layout.walkable[(cell.1 * self.layout.width + cell.0) as usize]
    }

    /// Plain-text map: `#` wall, `.` floor, digits target order, `A` agent.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for y in 0..self.layout.height {
            for x in 0..self.layout.width {
                let cell = (x, y);
                let ch = if cell == self.state.position {
                    'A'
                } else if let Some(i) = self.layout.target_cells.iter().position(|&c| c == cell) {
                    char::from_digit((i as u32 + 1) % 10, 10).unwrap()
                } else if self.is_walkable(cell) {
                    '.'
                } else {
                    '#'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}
