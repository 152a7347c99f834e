use std::collections::VecDeque;

use crate::env::{Direction, GameState, Pos};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathfindResult {
    /// First move of a shortest path; `None` when unreachable or already there.
    pub first_step: Option<Direction>,
    /// `None` when no goal cell is reachable.
    pub distance: Option<u32>,
}

impl PathfindResult {
    pub const UNREACHABLE: PathfindResult = PathfindResult {
        first_step: None,
        distance: None,
    };

    pub fn is_reachable(&self) -> bool {
        self.distance.is_some()
    }
}

/// Breadth-first search from `from` to the nearest cell satisfying `goal`.
///
/// Only free cells are expanded; goal cells may be occupied and are entered
/// but never expanded. Neighbors are expanded N, E, S, W, so among goals at
/// equal distance the first discovered wins.
pub fn bfs_first_step(state: &GameState, from: Pos, goal: impl Fn(Pos) -> bool) -> PathfindResult {
    if goal(from) {
        return PathfindResult {
            first_step: None,
            distance: Some(0),
        };
    }
    let map = state.map();
    let mut seen = vec![false; map.cell_count()];
    seen[map.cell_index(from)] = true;
    let mut frontier: VecDeque<(Pos, Direction, u32)> = VecDeque::new();

    let mut expand = |p: Pos,
                      first: Option<Direction>,
                      dist: u32,
                      frontier: &mut VecDeque<(Pos, Direction, u32)>|
     -> Option<PathfindResult> {
        for dir in Direction::ALL {
            let Some(n) = state.neighbor(p, dir) else {
                continue;
            };
            let ni = map.cell_index(n);
            if seen[ni] {
                continue;
            }
            seen[ni] = true;
            let first = first.unwrap_or(dir);
            if goal(n) {
                return Some(PathfindResult {
                    first_step: Some(first),
                    distance: Some(dist + 1),
                });
            }
            if state.is_free(n) {
                frontier.push_back((n, first, dist + 1));
            }
        }
        None
    };

    if let Some(hit) = expand(from, None, 0, &mut frontier) {
        return hit;
    }
    while let Some((p, first, dist)) = frontier.pop_front() {
        if let Some(hit) = expand(p, Some(first), dist, &mut frontier) {
            return hit;
        }
    }
    PathfindResult::UNREACHABLE
}
