//! Flat discrete action space for a single unit decision.
//!
//! Index 0 is `Noop`; indices `1..=28` enumerate `(kind, direction)` pairs in
//! kind-major order, so `index = 1 + 4 * kind + direction`.

use std::fmt;

use super::EnvError;

/// Number of discrete actions available to a unit.
pub const ACTION_COUNT: usize = 29;

/// Cardinal directions.  `y` grows southward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    /// Expansion and tie-break order used everywhere in the crate.
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn offset(self) -> (i32, i32) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Direction::North => 'N',
            Direction::East => 'E',
            Direction::South => 'S',
            Direction::West => 'W',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Move,
    Harvest,
    Return,
    Attack,
    ProduceWorker,
    ProduceLight,
    ProduceBarracks,
}

impl ActionKind {
    pub const ALL: [ActionKind; 7] = [
        ActionKind::Move,
        ActionKind::Harvest,
        ActionKind::Return,
        ActionKind::Attack,
        ActionKind::ProduceWorker,
        ActionKind::ProduceLight,
        ActionKind::ProduceBarracks,
    ];

    fn name(self) -> &'static str {
        match self {
            ActionKind::Move => "move",
            ActionKind::Harvest => "harvest",
            ActionKind::Return => "return",
            ActionKind::Attack => "attack",
            ActionKind::ProduceWorker => "produce_worker",
            ActionKind::ProduceLight => "produce_light",
            ActionKind::ProduceBarracks => "produce_barracks",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Noop,
    Unit { kind: ActionKind, dir: Direction },
}

impl Action {
    pub fn new(kind: ActionKind, dir: Direction) -> Self {
        Action::Unit { kind, dir }
    }

    pub fn index(self) -> usize {
        match self {
            Action::Noop => 0,
            Action::Unit { kind, dir } => 1 + 4 * kind as usize + dir.index(),
        }
    }

    pub fn from_index(index: usize) -> Result<Self, EnvError> {
        match index {
            0 => Ok(Action::Noop),
            i if i < ACTION_COUNT => {
                let k = (i - 1) / 4;
                let d = (i - 1) % 4;
                Ok(Action::Unit {
                    kind: ActionKind::ALL[k],
                    dir: Direction::ALL[d],
                })
            }
            i => Err(EnvError::ActionOutOfRange(i)),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Noop => write!(f, "noop"),
            Action::Unit { kind, dir } => write!(f, "{}_{}", kind.name(), dir.glyph()),
        }
    }
}

/// Legality bitset over the 29 action indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ActionMask(u32);

impl ActionMask {
    pub const NOOP_ONLY: ActionMask = ActionMask(1);

    pub fn from_bits(bits: u32) -> Self {
        ActionMask(bits & ((1 << ACTION_COUNT) - 1))
    }

    pub fn from_bools(flags: &[bool]) -> Self {
        let mut bits = 0u32;
        for (i, &f) in flags.iter().enumerate().take(ACTION_COUNT) {
            if f {
                bits |= 1 << i;
            }
        }
        ActionMask(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn set(&mut self, index: usize) {
        debug_assert!(index < ACTION_COUNT);
        self.0 |= 1 << index;
    }

    pub fn is_legal(self, index: usize) -> bool {
        index < ACTION_COUNT && self.0 & (1 << index) != 0
    }

    pub fn allows(self, action: Action) -> bool {
        self.is_legal(action.index())
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn legal_indices(self) -> impl Iterator<Item = usize> {
        (0..ACTION_COUNT).filter(move |&i| self.0 & (1 << i) != 0)
    }

    pub fn to_bools(self) -> Vec<bool> {
        (0..ACTION_COUNT).map(|i| self.is_legal(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_layout_is_kind_major() {
        assert_eq!(Action::Noop.index(), 0);
        assert_eq!(Action::new(ActionKind::Move, Direction::North).index(), 1);
        assert_eq!(Action::new(ActionKind::Move, Direction::West).index(), 4);
        assert_eq!(
            Action::new(ActionKind::Harvest, Direction::North).index(),
            5
        );
        assert_eq!(
            Action::new(ActionKind::ProduceBarracks, Direction::West).index(),
            28
        );
    }

    #[test]
    fn decode_encode_identity() {
        for i in 0..ACTION_COUNT {
            assert_eq!(Action::from_index(i).unwrap().index(), i);
        }
        assert!(Action::from_index(ACTION_COUNT).is_err());
    }

    #[test]
    fn mask_bools_round_trip() {
        let mut m = ActionMask::default();
        m.set(0);
        m.set(7);
        m.set(28);
        assert_eq!(ActionMask::from_bools(&m.to_bools()), m);
        assert_eq!(m.legal_indices().collect::<Vec<_>>(), vec![0, 7, 28]);
    }
}
