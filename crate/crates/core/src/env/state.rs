//! Game state and the rule engine.
//!
//! A tick runs in three phases: every P0 unit acts in id order, every P1
//! unit acts in id order, then the tick resolves. Moves, harvests and
//! returns take effect immediately, so later units see earlier ones. Attacks
//! and production are declared during the phases and settle at resolution:
//! all declared damage lands, dead units are removed, new units spawn into
//! the cells reserved for them.

use std::sync::Arc;

use super::action::{Action, ActionKind, ActionMask, Direction};
use super::map::{Cell, MapSpec, Player, Pos, UnitKind};
use super::EnvError;

pub type UnitId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unit {
    pub id: UnitId,
    pub player: Player,
    pub kind: UnitKind,
    pub pos: Pos,
    pub hp: u32,
    pub carrying: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Terminal {
    Ongoing,
    Winner(Player),
    Draw,
}

impl Terminal {
    pub fn is_over(self) -> bool {
        self != Terminal::Ongoing
    }
}

/// Side effects of one applied action, used for reward shaping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActionEvent {
    pub harvested: bool,
    pub returned: bool,
    pub produced: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct PendingAttack {
    target: UnitId,
    damage: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct PendingSpawn {
    player: Player,
    kind: UnitKind,
    pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameState {
    map: Arc<MapSpec>,
    tick: u32,
    /// Sorted by id; spawned units always receive the next id.
    units: Vec<Unit>,
    next_id: UnitId,
    stockpile: [u32; 2],
    resources: Vec<u32>,
    occupancy: Vec<Option<UnitId>>,
    reserved: Vec<bool>,
    pending_attacks: Vec<PendingAttack>,
    pending_spawns: Vec<PendingSpawn>,
    produced_cost: u64,
    /// Cargo lost with workers killed while carrying.
    destroyed_cargo: u64,
    learner: Player,
    pub(crate) queue: Vec<UnitId>,
    pub(crate) active_cursor: usize,
    rng_seed: u64,
    terminal: Terminal,
}

impl GameState {
    /// Initial state for `map`. Unit ids follow the map's row-major order.
    pub fn new(map: Arc<MapSpec>, seed: u64, learner: Player) -> Result<Self, EnvError> {
        map.validate()?;
        let units = map
            .initial_units
            .iter()
            .enumerate()
            .map(|(i, u)| Unit {
                id: i as UnitId,
                player: u.player,
                kind: u.kind,
                pos: u.pos,
                hp: u.kind.max_hp(),
                carrying: 0,
            })
            .collect();
        let stockpile = [map.initial_stockpile; 2];
        let mut st = GameState::blank(map, seed, learner, stockpile);
        st.place_units(units)?;
        Ok(st)
    }

    fn blank(map: Arc<MapSpec>, seed: u64, learner: Player, stockpile: [u32; 2]) -> Self {
        let n = map.cell_count();
        let resources = map
            .cells
            .iter()
            .map(|c| match c {
                Cell::Resource(a) => *a,
                _ => 0,
            })
            .collect();
        GameState {
            tick: 0,
            units: Vec::new(),
            next_id: 0,
            stockpile,
            resources,
            occupancy: vec![None; n],
            reserved: vec![false; n],
            pending_attacks: Vec::new(),
            pending_spawns: Vec::new(),
            produced_cost: 0,
            destroyed_cargo: 0,
            learner,
            queue: Vec::new(),
            active_cursor: 0,
            rng_seed: seed,
            terminal: Terminal::Ongoing,
            map,
        }
    }

    fn place_units(&mut self, mut units: Vec<Unit>) -> Result<(), EnvError> {
        units.sort_by_key(|u| u.id);
        for u in &units {
            if u.pos.x >= self.map.width || u.pos.y >= self.map.height {
                return Err(EnvError::Contract(format!("unit {} out of bounds", u.id)));
            }
            let ci = self.map.cell_index(u.pos);
            if self.occupancy[ci].is_some() {
                return Err(EnvError::Contract(format!("two units at {}", u.pos)));
            }
            self.occupancy[ci] = Some(u.id);
        }
        self.next_id = units.last().map_or(0, |u| u.id + 1);
        self.units = units;
        Ok(())
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn map_arc(&self) -> &Arc<MapSpec> {
        &self.map
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn units_of(&self, player: Player) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.player == player)
    }

    pub fn unit(&self, id: UnitId) -> Option<&Unit> {
        self.units
            .binary_search_by_key(&id, |u| u.id)
            .ok()
            .map(|i| &self.units[i])
    }

    pub fn stockpile(&self, player: Player) -> u32 {
        self.stockpile[player.index()]
    }

    pub fn resource_at(&self, p: Pos) -> u32 {
        self.resources[self.map.cell_index(p)]
    }

    pub fn is_wall(&self, p: Pos) -> bool {
        self.map.cell(p) == Cell::Wall
    }

    pub fn occupant(&self, p: Pos) -> Option<&Unit> {
        self.occupancy[self.map.cell_index(p)].and_then(|id| self.unit(id))
    }

    pub fn is_reserved(&self, p: Pos) -> bool {
        self.reserved[self.map.cell_index(p)]
    }

    /// A cell a unit could move or spawn into right now.
    pub fn is_free(&self, p: Pos) -> bool {
        let i = self.map.cell_index(p);
        self.map.cells[i] != Cell::Wall
            && self.resources[i] == 0
            && self.occupancy[i].is_none()
            && !self.reserved[i]
    }

    pub fn neighbor(&self, p: Pos, dir: Direction) -> Option<Pos> {
        let (dx, dy) = dir.offset();
        let nx = p.x as i64 + i64::from(dx);
        let ny = p.y as i64 + i64::from(dy);
        self.map
            .in_bounds(nx, ny)
            .then(|| Pos::new(nx as usize, ny as usize))
    }

    pub fn terminal(&self) -> Terminal {
        self.terminal
    }

    pub fn is_ongoing(&self) -> bool {
        self.terminal == Terminal::Ongoing
    }

    pub fn learner(&self) -> Player {
        self.learner
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn active_cursor(&self) -> usize {
        self.active_cursor
    }

    /// The learner unit whose decision is pending, if the game is ongoing.
    pub fn active_unit(&self) -> Option<&Unit> {
        if !self.is_ongoing() {
            return None;
        }
        self.queue
            .get(self.active_cursor)
            .and_then(|&id| self.unit(id))
    }

    /// Units of `player` of `kind`, counting spawns still pending this tick.
    pub fn count_kind(&self, player: Player, kind: UnitKind) -> usize {
        self.units_of(player).filter(|u| u.kind == kind).count()
            + self
                .pending_spawns
                .iter()
                .filter(|s| s.player == player && s.kind == kind)
                .count()
    }

    pub fn live_count(&self, player: Player) -> usize {
        self.units_of(player).count()
    }

    /// Resources still on the map, carried, stockpiled, spent on units, or
    /// lost with killed carriers. Constant over any game.
    pub fn conserved_total(&self) -> u64 {
        let on_map: u64 = self.resources.iter().map(|&a| u64::from(a)).sum();
        let carried: u64 = self.units.iter().map(|u| u64::from(u.carrying)).sum();
        let stock: u64 = self.stockpile.iter().map(|&s| u64::from(s)).sum();
        on_map + carried + stock + self.produced_cost + self.destroyed_cargo
    }

    pub fn destroyed_cargo(&self) -> u64 {
        self.destroyed_cargo
    }

    /// Legality mask for a unit, which must be live and belong to `player`.
    pub fn legal_actions(&self, player: Player, id: UnitId) -> Result<ActionMask, EnvError> {
        let unit = self.unit(id).ok_or(EnvError::DeadUnit(id))?;
        if unit.player != player {
            return Err(EnvError::ForeignUnit { unit: id, player });
        }
        Ok(self.mask_for(unit))
    }

    /// Legality mask without the ownership check.
    pub fn mask_for(&self, unit: &Unit) -> ActionMask {
        let mut mask = ActionMask::NOOP_ONLY;
        if !self.is_ongoing() {
            return mask;
        }
        let stock = self.stockpile(unit.player);
        for dir in Direction::ALL {
            let Some(target) = self.neighbor(unit.pos, dir) else {
                continue;
            };
            let free = self.is_free(target);
            let occupant = self.occupant(target);
            let mut allow = |kind: ActionKind| mask.set(Action::new(kind, dir).index());

            if unit.kind.is_mobile() && free {
                allow(ActionKind::Move);
            }
            if unit.kind == UnitKind::Worker {
                if unit.carrying == 0 && self.resource_at(target) > 0 {
                    allow(ActionKind::Harvest);
                }
                if unit.carrying > 0
                    && occupant.is_some_and(|o| o.player == unit.player && o.kind == UnitKind::Base)
                {
                    allow(ActionKind::Return);
                }
            }
            if unit.kind.attack_damage() > 0 && occupant.is_some_and(|o| o.player != unit.player) {
                allow(ActionKind::Attack);
            }
            if free {
                let (kind, product) = match unit.kind {
                    UnitKind::Base => (ActionKind::ProduceWorker, UnitKind::Worker),
                    UnitKind::Barracks => (ActionKind::ProduceLight, UnitKind::Light),
                    UnitKind::Worker => (ActionKind::ProduceBarracks, UnitKind::Barracks),
                    UnitKind::Light => continue,
                };
                if product.cost().is_some_and(|c| stock >= c) {
                    allow(kind);
                }
            }
        }
        mask
    }

    /// Applies one unit's action. Illegal actions are rejected, never coerced.
    pub(crate) fn apply(&mut self, id: UnitId, action: Action) -> Result<ActionEvent, EnvError> {
        if !self.is_ongoing() {
            return Err(EnvError::GameOver);
        }
        let unit = self.unit(id).ok_or(EnvError::DeadUnit(id))?.clone();
        if !self.mask_for(&unit).allows(action) {
            return Err(EnvError::IllegalAction { unit: id, action });
        }
        let mut event = ActionEvent::default();
        let Action::Unit { kind, dir } = action else {
            return Ok(event);
        };
        // Legality guarantees an in-bounds neighbor.
        let target = self
            .neighbor(unit.pos, dir)
            .expect("legal directional action has a neighbor");
        let ti = self.map.cell_index(target);
        let idx = self.index_of(id);
        match kind {
            ActionKind::Move => {
                let from = self.map.cell_index(unit.pos);
                self.occupancy[from] = None;
                self.occupancy[ti] = Some(id);
                self.units[idx].pos = target;
            }
            ActionKind::Harvest => {
                self.resources[ti] -= 1;
                self.units[idx].carrying = 1;
                event.harvested = true;
            }
            ActionKind::Return => {
                self.units[idx].carrying = 0;
                self.stockpile[unit.player.index()] += 1;
                event.returned = true;
            }
            ActionKind::Attack => {
                let target_id = self.occupancy[ti].expect("legal attack has a target");
                self.pending_attacks.push(PendingAttack {
                    target: target_id,
                    damage: unit.kind.attack_damage(),
                });
            }
            ActionKind::ProduceWorker | ActionKind::ProduceLight | ActionKind::ProduceBarracks => {
                let product = match kind {
                    ActionKind::ProduceWorker => UnitKind::Worker,
                    ActionKind::ProduceLight => UnitKind::Light,
                    _ => UnitKind::Barracks,
                };
                let cost = product.cost().expect("producible kind has a cost");
                self.stockpile[unit.player.index()] -= cost;
                self.produced_cost += u64::from(cost);
                self.reserved[ti] = true;
                self.pending_spawns.push(PendingSpawn {
                    player: unit.player,
                    kind: product,
                    pos: target,
                });
                event.produced = true;
            }
        }
        Ok(event)
    }

    /// Settles declared attacks and production, then advances the tick.
    pub(crate) fn resolve_tick(&mut self) {
        for atk in std::mem::take(&mut self.pending_attacks) {
            if let Ok(i) = self.units.binary_search_by_key(&atk.target, |u| u.id) {
                let u = &mut self.units[i];
                u.hp = u.hp.saturating_sub(atk.damage);
            }
        }
        let map = Arc::clone(&self.map);
        let occupancy = &mut self.occupancy;
        let destroyed = &mut self.destroyed_cargo;
        self.units.retain(|u| {
            if u.hp == 0 {
                occupancy[map.cell_index(u.pos)] = None;
                *destroyed += u64::from(u.carrying);
                false
            } else {
                true
            }
        });
        for spawn in std::mem::take(&mut self.pending_spawns) {
            let ci = map.cell_index(spawn.pos);
            self.reserved[ci] = false;
            let id = self.next_id;
            self.next_id += 1;
            self.occupancy[ci] = Some(id);
            self.units.push(Unit {
                id,
                player: spawn.player,
                kind: spawn.kind,
                pos: spawn.pos,
                hp: spawn.kind.max_hp(),
                carrying: 0,
            });
        }
        self.tick += 1;
        let alive0 = self.live_count(Player::P0);
        let alive1 = self.live_count(Player::P1);
        self.terminal = match (alive0, alive1) {
            (0, 0) => Terminal::Draw,
            (_, 0) => Terminal::Winner(Player::P0),
            (0, _) => Terminal::Winner(Player::P1),
            _ if self.tick >= self.map.max_ticks => Terminal::Draw,
            _ => Terminal::Ongoing,
        };
    }

    /// Ids of `player`'s units at this instant, in id order.
    pub(crate) fn unit_ids(&self, player: Player) -> Vec<UnitId> {
        self.units_of(player).map(|u| u.id).collect()
    }

    fn index_of(&self, id: UnitId) -> usize {
        self.units
            .binary_search_by_key(&id, |u| u.id)
            .expect("unit id present")
    }

    /// Builds a state from explicit units, bypassing the map's unit list.
    /// Either side may be empty; the learner queue is primed for tick 0.
    pub fn from_parts(
        map: Arc<MapSpec>,
        units: Vec<Unit>,
        stockpile: [u32; 2],
        learner: Player,
    ) -> Result<Self, EnvError> {
        let mut st = GameState::blank(map, 0, learner, stockpile);
        st.place_units(units)?;
        st.queue = st.unit_ids(learner);
        Ok(st)
    }
}
