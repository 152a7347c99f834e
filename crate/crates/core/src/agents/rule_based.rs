//! Priority-ladder scripted AI with BFS movement.

use crate::env::{Action, ActionKind, ActionMask, Direction, GameState, Pos, Unit, UnitKind};

use super::pathfind::bfs_first_step;

pub const WORKER_CAP: usize = 4;

pub fn rule_based_act(state: &GameState, unit: &Unit) -> Action {
    let mask = state.mask_for(unit);
    match unit.kind {
        UnitKind::Worker => worker(state, unit, mask),
        UnitKind::Light => attack_adjacent(mask).unwrap_or_else(|| toward_enemy(state, unit, mask)),
        UnitKind::Base => {
            let stock = state.stockpile(unit.player);
            let can_afford = UnitKind::Worker.cost().is_some_and(|c| stock >= c);
            if can_afford && state.count_kind(unit.player, UnitKind::Worker) < WORKER_CAP {
                produce(mask, ActionKind::ProduceWorker)
            } else {
                Action::Noop
            }
        }
        UnitKind::Barracks => produce(mask, ActionKind::ProduceLight),
    }
}

fn worker(state: &GameState, unit: &Unit, mask: ActionMask) -> Action {
    if let Some(a) = attack_adjacent(mask) {
        return a;
    }
    let me = unit.player;
    let is_own_base = |p: Pos| {
        state
            .occupant(p)
            .is_some_and(|o| o.player == me && o.kind == UnitKind::Base)
    };
    if unit.carrying > 0 {
        if let Some(a) = first_legal(mask, ActionKind::Return) {
            return a;
        }
        // A worker with nowhere to deliver falls through to the combat rules.
        if state.count_kind(me, UnitKind::Base) > 0 {
            return move_toward(state, unit, mask, is_own_base);
        }
    } else {
        if let Some(a) = first_legal(mask, ActionKind::Harvest) {
            return a;
        }
        let path = bfs_first_step(state, unit.pos, |p| state.resource_at(p) > 0);
        if path.is_reachable() {
            return step_along(mask, path.first_step);
        }
    }
    let barracks_cost = UnitKind::Barracks.cost().unwrap_or(u32::MAX);
    if state.stockpile(me) >= barracks_cost && state.count_kind(me, UnitKind::Barracks) == 0 {
        if let Some(a) = first_legal(mask, ActionKind::ProduceBarracks) {
            return a;
        }
    }
    toward_enemy(state, unit, mask)
}

fn attack_adjacent(mask: ActionMask) -> Option<Action> {
    first_legal(mask, ActionKind::Attack)
}

fn toward_enemy(state: &GameState, unit: &Unit, mask: ActionMask) -> Action {
    let me = unit.player;
    move_toward(state, unit, mask, |p| {
        state.occupant(p).is_some_and(|o| o.player != me)
    })
}

fn move_toward(
    state: &GameState,
    unit: &Unit,
    mask: ActionMask,
    goal: impl Fn(Pos) -> bool,
) -> Action {
    step_along(mask, bfs_first_step(state, unit.pos, goal).first_step)
}

fn step_along(mask: ActionMask, dir: Option<Direction>) -> Action {
    match dir {
        Some(d) => {
            let a = Action::new(ActionKind::Move, d);
            if mask.allows(a) {
                a
            } else {
                Action::Noop
            }
        }
        None => Action::Noop,
    }
}

fn produce(mask: ActionMask, kind: ActionKind) -> Action {
    first_legal(mask, kind).unwrap_or(Action::Noop)
}

/// First legal action of `kind` in N, E, S, W order.
fn first_legal(mask: ActionMask, kind: ActionKind) -> Option<Action> {
    Direction::ALL
        .into_iter()
        .map(|d| Action::new(kind, d))
        .find(|a| mask.allows(*a))
}
