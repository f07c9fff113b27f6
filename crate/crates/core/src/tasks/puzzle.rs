use std::collections::BTreeSet;

use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::board::{BoardSpec, BoardState, Cell, CubeId, Cube, Placement, Color, BoardError};

/// Seed reserved for the training puzzle.
pub const TRAINING_SEED: u64 = 0;

/// Constraints every puzzle of a session shares, so that all tasks carry
/// the same complexity certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleSet {
    /// Sum over the four moves of the Manhattan distance from a cube's
    /// corner to its target.
    pub total_distance: u32,
    /// Minimum Manhattan distance of any single move.
    pub min_step_distance: u32,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self { total_distance: 22, min_step_distance: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CubeCell {
    pub cube: CubeId,
    pub cell: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub cube: CubeId,
    pub target: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Certificate {
    pub total_distance: u32,
    /// Whether each step's target touches an already placed cube.
    pub adjacency: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuzzleSpec {
    pub id: u32,
    pub seed: u64,
    pub columns: u8,
    pub rows: u8,
    /// The cube that starts already in place.
    pub initial: CubeCell,
    /// Corner each movable cube starts on.
    pub starts: Vec<CubeCell>,
    pub solution: Vec<Step>,
    pub complexity: Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PuzzleError {
    #[error("rule set cannot be satisfied on a {columns}x{rows} board")]
    Unsatisfiable { columns: u8, rows: u8 },
    #[error("board too small: {0}")]
    BoardTooSmall(String),
}

pub const MOVABLE: usize = 4;

/// Generates the puzzle for `seed`: cube 1 sits on the board's centre cell,
/// cubes 2..=5 start on the corners in a seed-dependent order, and the four
/// moves are found by a seeded depth-first search over the rule set.
pub fn generate_puzzle(seed: u64, board: &BoardSpec, rules: &RuleSet) -> Result<PuzzleSpec, PuzzleError> {
    if board.columns < 3 || board.rows < 3 {
        return Err(PuzzleError::BoardTooSmall(format!("{}x{}", board.columns, board.rows)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = board.center_cell();
    let mut corners = board.corners();
    corners.shuffle(&mut rng);
    let starts: Vec<CubeCell> = corners
        .iter()
        .enumerate()
        .map(|(i, &cell)| CubeCell { cube: CubeId(i as u8 + 2), cell })
        .collect();

    let mut search = Search {
        board,
        rules,
        rng: &mut rng,
        placed: vec![start],
        moved: [false; MOVABLE],
        starts: &starts,
        steps: Vec::with_capacity(MOVABLE),
    };
    if !search.run(0) {
        return Err(PuzzleError::Unsatisfiable { columns: board.columns, rows: board.rows });
    }
    let solution = search.steps;
    let initial = CubeCell { cube: CubeId(1), cell: start };
    let complexity = certificate(&initial, &starts, &solution);
    Ok(PuzzleSpec {
        id: seed as u32,
        seed,
        columns: board.columns,
        rows: board.rows,
        initial,
        starts,
        solution,
        complexity,
    })
}

struct Search<'a> {
    board: &'a BoardSpec,
    rules: &'a RuleSet,
    rng: &'a mut ChaCha8Rng,
    placed: Vec<Cell>,
    moved: [bool; MOVABLE],
    starts: &'a [CubeCell],
    steps: Vec<Step>,
}

impl Search<'_> {
    fn max_step(&self) -> u32 {
        (self.board.columns - 1 + self.board.rows - 1) as u32
    }

    fn run(&mut self, spent: u32) -> bool {
        let left = MOVABLE - self.steps.len();
        if left == 0 {
            return spent == self.rules.total_distance;
        }
        let mut candidates = Vec::new();
        for (i, s) in self.starts.iter().enumerate() {
            if self.moved[i] {
                continue;
            }
            for target in self.frontier() {
                let d = s.cell.manhattan(&target);
                if d < self.rules.min_step_distance {
                    continue;
                }
                let after = spent + d;
                let rest = (left - 1) as u32;
                if after + rest * self.rules.min_step_distance > self.rules.total_distance
                    || after + rest * self.max_step() < self.rules.total_distance
                {
                    continue;
                }
                candidates.push((i, target, d));
            }
        }
        candidates.shuffle(self.rng);
        for (i, target, d) in candidates {
            self.moved[i] = true;
            self.placed.push(target);
            self.steps.push(Step { cube: self.starts[i].cube, target });
            if self.run(spent + d) {
                return true;
            }
            self.steps.pop();
            self.placed.pop();
            self.moved[i] = false;
        }
        false
    }

    /// Free cells edge-adjacent to a placed cube and not on an unmoved start corner.
    fn frontier(&self) -> Vec<Cell> {
        let occupied: BTreeSet<Cell> = self
            .placed
            .iter()
            .copied()
            .chain(self.starts.iter().zip(self.moved).filter(|(_, m)| !m).map(|(s, _)| s.cell))
            .collect();
        let mut out = BTreeSet::new();
        for p in &self.placed {
            for (dc, dr) in [(-1i16, 0i16), (1, 0), (0, -1), (0, 1)] {
                let (c, r) = (p.col as i16 + dc, p.row as i16 + dr);
                if c < 0 || r < 0 || c >= self.board.columns as i16 || r >= self.board.rows as i16 {
                    continue;
                }
                let cell = Cell::new(c as u8, r as u8);
                if !occupied.contains(&cell) {
                    out.insert(cell);
                }
            }
        }
        out.into_iter().collect()
    }
}

fn certificate(initial: &CubeCell, starts: &[CubeCell], solution: &[Step]) -> Certificate {
    let mut placed = vec![initial.cell];
    let mut total = 0;
    let mut adjacency = Vec::with_capacity(solution.len());
    for step in solution {
        if let Some(s) = starts.iter().find(|s| s.cube == step.cube) {
            total += s.cell.manhattan(&step.target);
        }
        adjacency.push(placed.iter().any(|p| p.is_edge_adjacent(&step.target)));
        placed.push(step.target);
    }
    Certificate { total_distance: total, adjacency }
}

impl PuzzleSpec {
    /// Recomputes the complexity certificate from the placements.
    pub fn recompute_certificate(&self) -> Certificate {
        certificate(&self.initial, &self.starts, &self.solution)
    }

    pub fn same_complexity(&self, other: &PuzzleSpec) -> bool {
        self.complexity == other.complexity
    }

    /// Board with every cube at its starting cell.
    pub fn initial_board(&self, spec: BoardSpec) -> Result<BoardState, BoardError> {
        let mut cubes = vec![Cube { id: self.initial.cube, color: Some(Color::PALETTE[0]), place: Placement::At(self.initial.cell) }];
        for (i, s) in self.starts.iter().enumerate() {
            cubes.push(Cube { id: s.cube, color: Color::PALETTE.get(i + 1).copied(), place: Placement::At(s.cell) });
        }
        BoardState::new(spec, cubes)
    }

    /// Where `cube` belongs once `progress` steps are done.
    pub fn expected_cell(&self, cube: CubeId, progress: usize) -> Option<Cell> {
        if cube == self.initial.cube {
            return Some(self.initial.cell);
        }
        if let Some(step) = self.solution.iter().take(progress).find(|s| s.cube == cube) {
            return Some(step.target);
        }
        self.starts.iter().find(|s| s.cube == cube).map(|s| s.cell)
    }

    /// Number of leading solution steps already satisfied on `board`.
    pub fn progress_on(&self, board: &BoardState) -> usize {
        self.solution
            .iter()
            .take_while(|s| board.cube(s.cube).and_then(|c| c.cell()) == Some(s.target))
            .count()
    }

    pub fn is_solved(&self, board: &BoardState) -> bool {
        self.progress_on(board) == self.solution.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    StartCell,
    CornerStarts,
    CubesCovered,
    Adjacency,
    DistinctTargets,
    NoConflict,
    Distance,
    Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCheck {
    pub rule: Rule,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<RuleCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, rule: Rule) -> Option<&RuleCheck> {
        self.checks.iter().find(|c| c.rule == rule)
    }
}

/// Checks every rule independently and reports each outcome.
pub fn validate_puzzle(p: &PuzzleSpec, rules: &RuleSet) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |rule, passed: bool, detail: String| checks.push(RuleCheck { rule, passed, detail });

    let center = Cell::new(p.columns / 2, p.rows / 2);
    push(Rule::StartCell, p.initial.cell == center, format!("first cube at {}, expected {center}", p.initial.cell));

    let corners: BTreeSet<Cell> = if p.columns > 0 && p.rows > 0 {
        let (c, r) = (p.columns - 1, p.rows - 1);
        [Cell::new(0, 0), Cell::new(c, 0), Cell::new(0, r), Cell::new(c, r)].into_iter().collect()
    } else {
        BTreeSet::new()
    };
    let start_cells: BTreeSet<Cell> = p.starts.iter().map(|s| s.cell).collect();
    push(
        Rule::CornerStarts,
        p.starts.len() == MOVABLE && start_cells == corners,
        format!("{} starts on {} distinct corner cells", p.starts.len(), start_cells.intersection(&corners).count()),
    );

    let start_cubes: BTreeSet<CubeId> = p.starts.iter().map(|s| s.cube).collect();
    let step_cubes: Vec<CubeId> = p.solution.iter().map(|s| s.cube).collect();
    let step_set: BTreeSet<CubeId> = step_cubes.iter().copied().collect();
    push(
        Rule::CubesCovered,
        p.solution.len() == MOVABLE && step_set.len() == MOVABLE && step_set == start_cubes,
        format!("{} steps over {} distinct movable cubes", p.solution.len(), step_set.len()),
    );

    let mut placed = vec![p.initial.cell];
    let mut non_adjacent = Vec::new();
    for (i, s) in p.solution.iter().enumerate() {
        if !placed.iter().any(|c| c.is_edge_adjacent(&s.target)) {
            non_adjacent.push(i + 1);
        }
        placed.push(s.target);
    }
    push(Rule::Adjacency, non_adjacent.is_empty(), format!("steps not adjacent to placed cubes: {non_adjacent:?}"));

    let targets: BTreeSet<Cell> = p.solution.iter().map(|s| s.target).collect();
    let in_bounds = p.solution.iter().all(|s| s.target.col < p.columns && s.target.row < p.rows);
    push(
        Rule::DistinctTargets,
        targets.len() == p.solution.len() && !targets.contains(&p.initial.cell) && in_bounds,
        format!("{} distinct targets for {} steps", targets.len(), p.solution.len()),
    );

    let mut conflicts = Vec::new();
    for (i, s) in p.solution.iter().enumerate() {
        let moved: BTreeSet<CubeId> = p.solution[..i].iter().map(|s| s.cube).collect();
        if p.starts.iter().any(|st| st.cell == s.target && !moved.contains(&st.cube) && st.cube != s.cube) {
            conflicts.push(i + 1);
        }
    }
    push(Rule::NoConflict, conflicts.is_empty(), format!("steps landing on an occupied start: {conflicts:?}"));

    let dists: Vec<u32> = p
        .solution
        .iter()
        .map(|s| p.starts.iter().find(|st| st.cube == s.cube).map_or(0, |st| st.cell.manhattan(&s.target)))
        .collect();
    let total: u32 = dists.iter().sum();
    push(
        Rule::Distance,
        total == rules.total_distance && dists.iter().all(|d| *d >= rules.min_step_distance),
        format!("step distances {dists:?} (total {total}, required {} with min {})", rules.total_distance, rules.min_step_distance),
    );

    let recomputed = p.recompute_certificate();
    push(Rule::Certificate, recomputed == p.complexity, format!("recomputed {recomputed:?}"));

    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WorkspaceVolume;

    fn spec() -> BoardSpec {
        BoardSpec::standard(&WorkspaceVolume::standard())
    }

    #[test]
    fn generated_puzzle_passes_every_rule() {
        let rules = RuleSet::default();
        let p = generate_puzzle(5, &spec(), &rules).unwrap();
        let report = validate_puzzle(&p, &rules);
        assert!(report.all_passed(), "{report:#?}");
        assert_eq!(p.complexity.total_distance, rules.total_distance);
    }

    #[test]
    fn same_seed_same_puzzle() {
        let rules = RuleSet::default();
        assert_eq!(generate_puzzle(3, &spec(), &rules), generate_puzzle(3, &spec(), &rules));
    }

    #[test]
    fn detached_target_fails_adjacency() {
        let rules = RuleSet::default();
        let mut p = generate_puzzle(2, &spec(), &rules).unwrap();
        p.solution[0].target = Cell::new(0, 2);
        let report = validate_puzzle(&p, &rules);
        assert!(!report.check(Rule::Adjacency).unwrap().passed);
    }

    #[test]
    fn expected_cells_follow_progress() {
        let p = generate_puzzle(1, &spec(), &RuleSet::default()).unwrap();
        let s0 = p.solution[0];
        let start = p.starts.iter().find(|s| s.cube == s0.cube).unwrap().cell;
        assert_eq!(p.expected_cell(s0.cube, 0), Some(start));
        assert_eq!(p.expected_cell(s0.cube, 1), Some(s0.target));
        assert_eq!(p.expected_cell(CubeId(1), 3), Some(p.initial.cell));
        let board = p.initial_board(spec()).unwrap();
        assert_eq!(p.progress_on(&board), 0);
    }
}
