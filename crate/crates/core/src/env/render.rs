use std::fmt::Write;

use super::map::{Cell, Player, Pos};
use super::state::GameState;

/// Renders the board with map-file tokens, one per cell, plus a status line.
pub fn render_ascii(state: &GameState) -> String {
    let map = state.map();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "tick {}/{} stock P0={} P1={} {:?}",
        state.tick(),
        map.max_ticks,
        state.stockpile(Player::P0),
        state.stockpile(Player::P1),
        state.terminal()
    );
    for y in 0..map.height {
        let row: Vec<String> = (0..map.width)
            .map(|x| {
                let p = Pos::new(x, y);
                let tok = if let Some(u) = state.occupant(p) {
                    format!("{}{}", u.kind.glyph(), u.player.index())
                } else {
                    match map.cell(p) {
                        Cell::Wall => "#".to_owned(),
                        Cell::Resource(_) if state.resource_at(p) > 0 => {
                            format!("r{}", state.resource_at(p))
                        }
                        _ => ".".to_owned(),
                    }
                };
                format!("{tok:<3}")
            })
            .collect();
        let _ = writeln!(out, "{}", row.concat().trim_end());
    }
    out
}
