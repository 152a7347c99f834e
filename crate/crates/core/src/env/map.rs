//! Map specification and the ASCII map-file parser.
//!
//! ```text
//! name basesWorkers8x8A
//! size 8 8
//! stockpile 5
//! maxticks 200
//! r5 . . . . . . .
//! ...
//! ```

use std::collections::HashSet;
use std::fmt;

use super::MapError;

/// Largest accepted width or height.
pub const MAX_DIMENSION: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    P0,
    P1,
}

impl Player {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::P0 => Player::P1,
            Player::P1 => Player::P0,
        }
    }

    pub fn from_index(i: usize) -> Option<Player> {
        match i {
            0 => Some(Player::P0),
            1 => Some(Player::P1),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnitKind {
    Base,
    Barracks,
    Worker,
    Light,
}

impl UnitKind {
    pub const ALL: [UnitKind; 4] = [
        UnitKind::Base,
        UnitKind::Barracks,
        UnitKind::Worker,
        UnitKind::Light,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn max_hp(self) -> u32 {
        match self {
            UnitKind::Base => 10,
            UnitKind::Barracks => 4,
            UnitKind::Worker => 1,
            UnitKind::Light => 4,
        }
    }

    pub fn attack_damage(self) -> u32 {
        match self {
            UnitKind::Worker => 1,
            UnitKind::Light => 2,
            UnitKind::Base | UnitKind::Barracks => 0,
        }
    }

    /// Production cost; `None` for kinds that cannot be produced.
    pub fn cost(self) -> Option<u32> {
        match self {
            UnitKind::Worker => Some(1),
            UnitKind::Light => Some(2),
            UnitKind::Barracks => Some(5),
            UnitKind::Base => None,
        }
    }

    pub fn is_mobile(self) -> bool {
        matches!(self, UnitKind::Worker | UnitKind::Light)
    }

    /// Map-file letter.
    pub fn glyph(self) -> char {
        match self {
            UnitKind::Base => 'b',
            UnitKind::Barracks => 'k',
            UnitKind::Worker => 'w',
            UnitKind::Light => 'l',
        }
    }

    fn from_glyph(c: char) -> Option<UnitKind> {
        match c {
            'b' => Some(UnitKind::Base),
            'k' => Some(UnitKind::Barracks),
            'w' => Some(UnitKind::Worker),
            'l' => Some(UnitKind::Light),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub fn new(x: usize, y: usize) -> Self {
        Pos { x, y }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    Wall,
    Resource(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InitialUnit {
    pub player: Player,
    pub kind: UnitKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    /// Row-major, `cells[y * width + x]`.
    pub cells: Vec<Cell>,
    pub initial_units: Vec<InitialUnit>,
    pub initial_stockpile: u32,
    pub max_ticks: u32,
}

impl MapSpec {
    pub fn cell_index(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    pub fn cell(&self, p: Pos) -> Cell {
        self.cells[self.cell_index(p)]
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn total_resources(&self) -> u64 {
        self.cells
            .iter()
            .map(|c| match c {
                Cell::Resource(a) => u64::from(*a),
                _ => 0,
            })
            .sum()
    }

    pub fn resource_cells(&self) -> impl Iterator<Item = (Pos, u32)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| match c {
                Cell::Resource(a) => Some((Pos::new(i % self.width, i / self.width), *a)),
                _ => None,
            })
    }

    /// Checks the structural invariants every constructed map must hold.
    pub fn validate(&self) -> Result<(), MapError> {
        let invalid = |m: String| Err(MapError::Invalid(m));
        if self.width == 0
            || self.height == 0
            || self.width > MAX_DIMENSION
            || self.height > MAX_DIMENSION
        {
            return invalid(format!(
                "dimensions {}x{} outside 1..={MAX_DIMENSION}",
                self.width, self.height
            ));
        }
        if self.cells.len() != self.width * self.height {
            return invalid(format!(
                "cell count {} does not match {}x{}",
                self.cells.len(),
                self.width,
                self.height
            ));
        }
        if self.max_ticks == 0 {
            return invalid("maxticks must be at least 1".into());
        }
        if self.cells.iter().any(|c| matches!(c, Cell::Resource(0))) {
            return invalid("resource cells must hold a positive amount".into());
        }
        let mut seen = HashSet::new();
        for u in &self.initial_units {
            if u.pos.x >= self.width || u.pos.y >= self.height {
                return invalid(format!("unit at {} is out of bounds", u.pos));
            }
            if !seen.insert(u.pos) {
                return invalid(format!("two units share cell {}", u.pos));
            }
            if self.cell(u.pos) != Cell::Empty {
                return invalid(format!("unit at {} stands on a non-empty cell", u.pos));
            }
        }
        for p in [Player::P0, Player::P1] {
            if !self.initial_units.iter().any(|u| u.player == p) {
                return invalid(format!("player {p} owns no units"));
            }
        }
        Ok(())
    }

    /// Parses the ASCII map format.
    pub fn parse(text: &str) -> Result<MapSpec, MapError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));

        let mut header = |key: &str| -> Result<(usize, Vec<String>), MapError> {
            let (no, line) = lines.next().ok_or(MapError::Parse {
                line: 0,
                message: format!("missing `{key}` header"),
            })?;
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some(k) if k == key => Ok((no, parts.map(str::to_owned).collect())),
                _ => Err(MapError::Parse {
                    line: no,
                    message: format!("expected `{key}` header, found `{line}`"),
                }),
            }
        };

        let (no, name) = header("name")?;
        let name = match name.as_slice() {
            [n] => n.clone(),
            _ => return Err(parse_err(no, "`name` takes exactly one identifier")),
        };
        let (no, size) = header("size")?;
        let (width, height) = match size.as_slice() {
            [w, h] => (parse_num::<usize>(no, w)?, parse_num::<usize>(no, h)?),
            _ => return Err(parse_err(no, "`size` takes a width and a height")),
        };
        if width == 0 || height == 0 || width > MAX_DIMENSION || height > MAX_DIMENSION {
            return Err(parse_err(
                no,
                &format!("size {width}x{height} outside 1..={MAX_DIMENSION}"),
            ));
        }
        let (no, stock) = header("stockpile")?;
        let initial_stockpile = match stock.as_slice() {
            [s] => parse_num::<u32>(no, s)?,
            _ => return Err(parse_err(no, "`stockpile` takes one integer")),
        };
        let (no, ticks) = header("maxticks")?;
        let max_ticks = match ticks.as_slice() {
            [t] => parse_num::<u32>(no, t)?,
            _ => return Err(parse_err(no, "`maxticks` takes one integer")),
        };
        if max_ticks == 0 {
            return Err(parse_err(no, "maxticks must be at least 1"));
        }

        let mut cells = Vec::with_capacity(width * height);
        let mut initial_units = Vec::new();
        for y in 0..height {
            let (no, line) = lines.next().ok_or_else(|| MapError::Parse {
                line: 5 + y,
                message: format!("missing grid row {y} (expected {height} rows)"),
            })?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != width {
                return Err(parse_err(
                    no,
                    &format!("grid row {y} has {} tokens, expected {width}", tokens.len()),
                ));
            }
            for (x, tok) in tokens.into_iter().enumerate() {
                let (cell, unit) = parse_token(no, tok)?;
                cells.push(cell);
                if let Some((player, kind)) = unit {
                    initial_units.push(InitialUnit {
                        player,
                        kind,
                        pos: Pos::new(x, y),
                    });
                }
            }
        }
        for (no, line) in lines {
            if !line.trim().is_empty() {
                return Err(parse_err(no, "unexpected content after the grid"));
            }
        }

        let map = MapSpec {
            name,
            width,
            height,
            cells,
            initial_units,
            initial_stockpile,
            max_ticks,
        };
        map.validate().map_err(|e| match e {
            MapError::Invalid(m) => MapError::Parse {
                line: 5,
                message: m,
            },
            other => other,
        })?;
        Ok(map)
    }

    /// Serializes back into the map-file format.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "name {}\nsize {} {}\nstockpile {}\nmaxticks {}\n",
            self.name, self.width, self.height, self.initial_stockpile, self.max_ticks
        );
        for y in 0..self.height {
            let row: Vec<String> = (0..self.width)
                .map(|x| {
                    let p = Pos::new(x, y);
                    if let Some(u) = self.initial_units.iter().find(|u| u.pos == p) {
                        format!("{}{}", u.kind.glyph(), u.player.index())
                    } else {
                        match self.cell(p) {
                            Cell::Empty => ".".into(),
                            Cell::Wall => "#".into(),
                            Cell::Resource(a) => format!("r{a}"),
                        }
                    }
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

fn parse_err(line: usize, message: &str) -> MapError {
    MapError::Parse {
        line,
        message: message.to_owned(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, MapError> {
    s.parse()
        .map_err(|_| parse_err(line, &format!("`{s}` is not a valid non-negative integer")))
}

type Token = (Cell, Option<(Player, UnitKind)>);

fn parse_token(line: usize, tok: &str) -> Result<Token, MapError> {
    match tok {
        "." => return Ok((Cell::Empty, None)),
        "#" => return Ok((Cell::Wall, None)),
        _ => {}
    }
    let mut chars = tok.chars();
    let head = chars.next().unwrap_or(' ');
    let rest = chars.as_str();
    if head == 'r' {
        let amount: u32 = rest
            .parse()
            .map_err(|_| parse_err(line, &format!("bad resource token `{tok}`")))?;
        if amount == 0 {
            return Err(parse_err(line, "resource amount must be positive"));
        }
        return Ok((Cell::Resource(amount), None));
    }
    match (UnitKind::from_glyph(head), rest) {
        (Some(kind), "0") => Ok((Cell::Empty, Some((Player::P0, kind)))),
        (Some(kind), "1") => Ok((Cell::Empty, Some((Player::P1, kind)))),
        _ => Err(parse_err(line, &format!("unknown glyph `{tok}`"))),
    }
}
