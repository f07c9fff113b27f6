//! Checkerboard workspace: cubes on a grid, single selection, pick-and-drop.
//!
//! All mutating operations validate first and only then write, so a
//! rejected operation leaves the state untouched.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Role;
use crate::geometry::{Aabb, Point, RigidMap, Vector, WorkspaceVolume, ray};

/// Number of cubes on a puzzle board.
pub const CUBE_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CubeId(pub u8);

impl fmt::Display for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: u8,
    pub row: u8,
}

impl Cell {
    pub const fn new(col: u8, row: u8) -> Self {
        Self { col, row }
    }

    pub fn manhattan(&self, other: &Cell) -> u32 {
        (self.col.abs_diff(other.col) + self.row.abs_diff(other.row)) as u32
    }

    pub fn is_edge_adjacent(&self, other: &Cell) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red = 1,
    Green = 2,
    Blue = 3,
    Yellow = 4,
    Purple = 5,
}

/// What the assembler sees instead of a cube's color.
pub const NEUTRAL_GRAY: Rgb = Rgb(128, 128, 128);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Color {
    pub const PALETTE: [Color; CUBE_COUNT] = [Color::Red, Color::Green, Color::Blue, Color::Yellow, Color::Purple];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Color> {
        Self::PALETTE.into_iter().find(|c| c.code() == code)
    }

    pub fn rgb(self) -> Rgb {
        match self {
            Color::Red => Rgb(220, 40, 40),
            Color::Green => Rgb(40, 180, 60),
            Color::Blue => Rgb(40, 80, 220),
            Color::Yellow => Rgb(235, 210, 40),
            Color::Purple => Rgb(140, 50, 170),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    At(Cell),
    Held,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub id: CubeId,
    /// `None` on replicas that are not allowed to know the color.
    pub color: Option<Color>,
    pub place: Placement,
}

impl Cube {
    pub fn cell(&self) -> Option<Cell> {
        match self.place {
            Placement::At(c) => Some(c),
            Placement::Held => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoardError {
    #[error("unknown cube {0}")]
    UnknownCube(CubeId),
    #[error("already holding a cube")]
    AlreadyHolding,
    #[error("nothing selected")]
    NothingSelected,
    #[error("nothing held")]
    NothingHeld,
    #[error("cell {0} is occupied")]
    CellOccupied(Cell),
    #[error("cell {0} is outside the board")]
    OutOfBounds(Cell),
    #[error("invalid board: {0}")]
    Invalid(String),
}

/// Grid layout. Columns run along +x, rows along +z (row 0 nearest the instructor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardSpec {
    pub columns: u8,
    pub rows: u8,
    pub cell_size: f64,
    pub cube_edge: f64,
    /// Centre of cell (0, 0) on the volume floor.
    pub origin: Point,
}

impl BoardSpec {
    /// 8×5 cells of 8 cm with 6 cm cubes, centred on the volume floor.
    pub fn standard(volume: &WorkspaceVolume) -> Self {
        Self::centered(volume, 8, 5, 0.08, 0.06)
    }

    pub fn centered(volume: &WorkspaceVolume, columns: u8, rows: u8, cell_size: f64, cube_edge: f64) -> Self {
        let origin = Point::new(
            -(columns as f64 - 1.0) * cell_size / 2.0,
            volume.floor_y(),
            -(rows as f64 - 1.0) * cell_size / 2.0,
        );
        Self { columns, rows, cell_size, cube_edge, origin }
    }

    pub fn validate(&self, volume: &WorkspaceVolume) -> Result<(), BoardError> {
        if self.columns < 3 || self.rows < 3 {
            return Err(BoardError::Invalid(format!("board must be at least 3x3, got {}x{}", self.columns, self.rows)));
        }
        if !(self.cell_size > 0.0 && self.cube_edge > 0.0 && self.cube_edge <= self.cell_size) {
            return Err(BoardError::Invalid("cube edge must be positive and fit a cell".into()));
        }
        let half = self.cell_size / 2.0;
        let far = self.cell_center(Cell::new(self.columns - 1, self.rows - 1));
        let lo = self.origin - Vector::new(half, 0.0, half);
        let hi = far + Vector::new(half, 0.0, half);
        let eps = 1e-9;
        if lo.x < -volume.width() / 2.0 - eps
            || hi.x > volume.width() / 2.0 + eps
            || lo.z < -volume.depth() / 2.0 - eps
            || hi.z > volume.depth() / 2.0 + eps
        {
            return Err(BoardError::Invalid("board footprint does not fit the volume".into()));
        }
        Ok(())
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.col < self.columns && cell.row < self.rows
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |row| (0..self.columns).map(move |col| Cell::new(col, row)))
    }

    pub fn corners(&self) -> [Cell; 4] {
        let (c, r) = (self.columns - 1, self.rows - 1);
        [Cell::new(0, 0), Cell::new(c, 0), Cell::new(0, r), Cell::new(c, r)]
    }

    pub fn center_cell(&self) -> Cell {
        Cell::new(self.columns / 2, self.rows / 2)
    }

    pub fn cell_center(&self, cell: Cell) -> Point {
        self.origin + Vector::new(cell.col as f64 * self.cell_size, 0.0, cell.row as f64 * self.cell_size)
    }

    /// Centre of a cube resting on `cell`.
    pub fn cube_center(&self, cell: Cell) -> Point {
        self.cell_center(cell) + Vector::new(0.0, self.cube_edge / 2.0, 0.0)
    }

    /// One thin box per cell at cube-centre height, used to find the cell under a pointer ray.
    pub fn tiles(&self) -> Vec<(Cell, Aabb)> {
        let half = self.cell_size / 2.0;
        let thick = 1e-4;
        self.cells()
            .map(|cell| {
                let c = self.cube_center(cell);
                (cell, Aabb::new(c - Vector::new(half, thick, half), c + Vector::new(half, thick, half)))
            })
            .collect()
    }

    /// Cell under a pointer ray given in the frame `rendering` maps the board into.
    pub fn pointed_cell(&self, origin: &Point, dir: &Vector, rendering: &RigidMap) -> Option<Cell> {
        let back = rendering.inverse();
        let (o, d) = (back.apply_point(origin), back.apply_vector(dir));
        let tiles = self.tiles();
        let boxes: Vec<Aabb> = tiles.iter().map(|(_, b)| *b).collect();
        ray::cast(&o, &d, &boxes).map(|h| tiles[h.index].0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let floor = self.origin.y;
        let mut s = *self;
        s.cell_size *= factor;
        s.cube_edge *= factor;
        s.origin = Point::new(self.origin.x * factor, floor, self.origin.z * factor);
        s
    }

    pub fn translated(&self, dx: f64, dz: f64) -> Self {
        let mut s = *self;
        s.origin += Vector::new(dx, 0.0, dz);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardState {
    pub spec: BoardSpec,
    cubes: Vec<Cube>,
    selection: Option<CubeId>,
    held: Option<CubeId>,
    highlight: Option<CubeId>,
}

impl BoardState {
    pub fn new(spec: BoardSpec, cubes: Vec<Cube>) -> Result<Self, BoardError> {
        let s = Self { spec, cubes, selection: None, held: None, highlight: None };
        s.check_invariants().map_err(BoardError::Invalid)?;
        if s.cubes.iter().any(|c| c.place == Placement::Held) {
            return Err(BoardError::Invalid("a fresh board cannot have a held cube".into()));
        }
        Ok(s)
    }

    /// Cubes `1..=n` with palette colors at the given cells.
    pub fn with_cells(spec: BoardSpec, cells: &[Cell]) -> Result<Self, BoardError> {
        let cubes = cells
            .iter()
            .enumerate()
            .map(|(i, &cell)| Cube {
                id: CubeId(i as u8 + 1),
                color: Color::PALETTE.get(i).copied(),
                place: Placement::At(cell),
            })
            .collect();
        Self::new(spec, cubes)
    }

    /// Rebuilds a state from replicated parts; validates every invariant.
    pub fn from_parts(
        spec: BoardSpec,
        cubes: Vec<Cube>,
        selection: Option<CubeId>,
        held: Option<CubeId>,
        highlight: Option<CubeId>,
    ) -> Result<Self, BoardError> {
        let s = Self { spec, cubes, selection, held, highlight };
        s.check_invariants().map_err(BoardError::Invalid)?;
        Ok(s)
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn selection(&self) -> Option<CubeId> {
        self.selection
    }

    pub fn held(&self) -> Option<CubeId> {
        self.held
    }

    pub fn highlight(&self) -> Option<CubeId> {
        self.highlight
    }

    pub fn cube(&self, id: CubeId) -> Option<&Cube> {
        self.cubes.iter().find(|c| c.id == id)
    }

    pub fn cube_at(&self, cell: Cell) -> Option<&Cube> {
        self.cubes.iter().find(|c| c.place == Placement::At(cell))
    }

    pub fn is_idle(&self) -> bool {
        self.selection.is_none() && self.held.is_none() && self.highlight.is_none()
    }

    /// Positions of every cube, in id order.
    pub fn layout(&self) -> Vec<(CubeId, Placement)> {
        let mut v: Vec<_> = self.cubes.iter().map(|c| (c.id, c.place)).collect();
        v.sort();
        v
    }

    /// Copy with all colors stripped, as sent to the assembler.
    pub fn redacted(&self) -> Self {
        let mut s = self.clone();
        for c in &mut s.cubes {
            c.color = None;
        }
        s
    }

    /// Colors as drawn for `role`: true colors for the instructor, neutral gray for the assembler.
    pub fn render_view(&self, role: Role) -> Vec<(CubeId, Rgb)> {
        self.cubes
            .iter()
            .map(|c| {
                let rgb = match (role, c.color) {
                    (Role::Instructor, Some(color)) => color.rgb(),
                    _ => NEUTRAL_GRAY,
                };
                (c.id, rgb)
            })
            .collect()
    }

    pub fn select(&mut self, id: CubeId) -> Result<(), BoardError> {
        if self.cube(id).is_none() {
            return Err(BoardError::UnknownCube(id));
        }
        if self.held.is_some() {
            return Err(BoardError::AlreadyHolding);
        }
        self.selection = Some(id);
        self.highlight = Some(id);
        Ok(())
    }

    pub fn deselect(&mut self) -> Result<(), BoardError> {
        if self.held.is_some() {
            return Err(BoardError::AlreadyHolding);
        }
        if self.selection.is_none() {
            return Err(BoardError::NothingSelected);
        }
        self.selection = None;
        self.highlight = None;
        Ok(())
    }

    pub fn pick(&mut self) -> Result<(), BoardError> {
        if self.held.is_some() {
            return Err(BoardError::AlreadyHolding);
        }
        let id = self.selection.ok_or(BoardError::NothingSelected)?;
        let cube = self.cubes.iter_mut().find(|c| c.id == id).ok_or(BoardError::UnknownCube(id))?;
        cube.place = Placement::Held;
        self.held = Some(id);
        Ok(())
    }

    pub fn drop_at(&mut self, cell: Cell) -> Result<(), BoardError> {
        let id = self.held.ok_or(BoardError::NothingHeld)?;
        if !self.spec.in_bounds(cell) {
            return Err(BoardError::OutOfBounds(cell));
        }
        if self.cube_at(cell).is_some() {
            return Err(BoardError::CellOccupied(cell));
        }
        let cube = self.cubes.iter_mut().find(|c| c.id == id).ok_or(BoardError::UnknownCube(id))?;
        cube.place = Placement::At(cell);
        self.held = None;
        self.selection = None;
        self.highlight = None;
        Ok(())
    }

    /// Axis-aligned boxes of the cubes resting on the grid.
    pub fn scene(&self) -> Vec<(CubeId, Aabb)> {
        self.cubes
            .iter()
            .filter_map(|c| c.cell().map(|cell| (c.id, Aabb::cube(self.spec.cube_center(cell), self.spec.cube_edge))))
            .collect()
    }

    /// Cube hit by a pointer ray given in the frame `rendering` maps the board into.
    pub fn pointed_cube(&self, origin: &Point, dir: &Vector, rendering: &RigidMap) -> Option<CubeId> {
        let back = rendering.inverse();
        let (o, d) = (back.apply_point(origin), back.apply_vector(dir));
        let scene = self.scene();
        let boxes: Vec<Aabb> = scene.iter().map(|(_, b)| *b).collect();
        ray::cast(&o, &d, &boxes).map(|h| scene[h.index].0)
    }

    /// Cell under a pointer ray given in the frame `rendering` maps the board into.
    pub fn pointed_cell(&self, origin: &Point, dir: &Vector, rendering: &RigidMap) -> Option<Cell> {
        self.spec.pointed_cell(origin, dir, rendering)
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        let mut ids = std::collections::BTreeSet::new();
        let mut cells = std::collections::BTreeSet::new();
        let mut colors = std::collections::BTreeSet::new();
        if self.cubes.len() > CUBE_COUNT {
            return Err(format!("{} cubes, at most {CUBE_COUNT} allowed", self.cubes.len()));
        }
        for c in &self.cubes {
            if !ids.insert(c.id) {
                return Err(format!("duplicate cube id {}", c.id));
            }
            if let Some(color) = c.color
                && !colors.insert(color) {
                    return Err(format!("duplicate color {color:?}"));
                }
            match c.place {
                Placement::At(cell) => {
                    if !self.spec.in_bounds(cell) {
                        return Err(format!("cube {} out of bounds at {cell}", c.id));
                    }
                    if !cells.insert(cell) {
                        return Err(format!("two cubes share cell {cell}"));
                    }
                }
                Placement::Held => {
                    if self.held != Some(c.id) {
                        return Err(format!("cube {} is off-grid but not held", c.id));
                    }
                }
            }
        }
        if let Some(h) = self.held {
            if self.selection != Some(h) {
                return Err("held cube must be the selection".into());
            }
            if self.cube(h).map(|c| c.place) != Some(Placement::Held) {
                return Err("held cube is still on the grid".into());
            }
        }
        for id in [self.selection, self.highlight].into_iter().flatten() {
            if self.cube(id).is_none() {
                return Err(format!("reference to missing cube {id}"));
            }
        }
        Ok(())
    }
}
