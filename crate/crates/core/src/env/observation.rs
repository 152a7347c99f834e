use super::map::{Cell, Player, Pos, UnitKind};
use super::state::{GameState, UnitId};

/// Per-cell feature planes, in layout order.
pub const PLANES: usize = 11;

const PLANE_OWN: usize = 4;
const PLANE_ENEMY: usize = 5;
const PLANE_HP: usize = 6;
const PLANE_CARRY: usize = 7;
const PLANE_RESOURCE: usize = 8;
const PLANE_WALL: usize = 9;
const PLANE_ACTIVE: usize = 10;

pub fn observation_len(width: usize, height: usize) -> usize {
    PLANES * width * height + 3
}

/// Plane-major encoding `[plane][y][x]` followed by three scalars: own
/// stockpile / 10, opponent stockpile / 10, tick / max_ticks.
///
/// Planes 0..4 one-hot the unit kind, then owner flags relative to
/// `perspective`, hp fraction, carrying flag, resource amount / 10, wall flag
/// and the marker for `active`.
pub fn encode_observation(
    state: &GameState,
    perspective: Player,
    active: Option<UnitId>,
    out: &mut Vec<f64>,
) {
    let map = state.map();
    let cells = map.cell_count();
    out.clear();
    out.resize(observation_len(map.width, map.height), 0.0);
    let at = |plane: usize, p: Pos| plane * cells + p.y * map.width + p.x;

    for (i, c) in map.cells.iter().enumerate() {
        let p = Pos::new(i % map.width, i / map.width);
        match c {
            Cell::Wall => out[at(PLANE_WALL, p)] = 1.0,
            Cell::Resource(_) => {
                out[at(PLANE_RESOURCE, p)] = f64::from(state.resource_at(p)) / 10.0
            }
            Cell::Empty => {}
        }
    }
    for u in state.units() {
        out[at(u.kind.index(), u.pos)] = 1.0;
        let owner = if u.player == perspective {
            PLANE_OWN
        } else {
            PLANE_ENEMY
        };
        out[at(owner, u.pos)] = 1.0;
        out[at(PLANE_HP, u.pos)] = f64::from(u.hp) / f64::from(u.kind.max_hp());
        if u.kind == UnitKind::Worker && u.carrying > 0 {
            out[at(PLANE_CARRY, u.pos)] = 1.0;
        }
        if Some(u.id) == active {
            out[at(PLANE_ACTIVE, u.pos)] = 1.0;
        }
    }
    let base = PLANES * cells;
    out[base] = f64::from(state.stockpile(perspective)) / 10.0;
    out[base + 1] = f64::from(state.stockpile(perspective.opponent())) / 10.0;
    out[base + 2] = f64::from(state.tick()) / f64::from(map.max_ticks);
}
