use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::env::{
    observation_len, play_game, ActionKind, Cell, Direction, MapSpec, Player, Pos, UnitKind,
};
use crate::net::NetConfig;

fn unit(id: u32, player: Player, kind: UnitKind, x: usize, y: usize) -> Unit {
    Unit {
        id,
        player,
        kind,
        pos: Pos::new(x, y),
        hp: kind.max_hp(),
        carrying: 0,
    }
}

fn grid(w: usize, h: usize, walls: &[(usize, usize)]) -> Arc<MapSpec> {
    let mut text = format!("name g\nsize {w} {h}\nstockpile 0\nmaxticks 100\n");
    for y in 0..h {
        let row: Vec<&str> = (0..w)
            .map(|x| {
                if (x, y) == (w - 1, 0) {
                    "w0"
                } else if (x, y) == (w - 1, h - 1) {
                    "w1"
                } else if walls.contains(&(x, y)) {
                    "#"
                } else {
                    "."
                }
            })
            .collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    Arc::new(MapSpec::parse(&text).unwrap())
}

fn state(map: Arc<MapSpec>, units: Vec<Unit>, stock: [u32; 2]) -> GameState {
    GameState::from_parts(map, units, stock, Player::P0).unwrap()
}

#[test]
fn bfs_on_empty_grid() {
    let s = state(
        grid(6, 6, &[]),
        vec![unit(0, Player::P1, UnitKind::Worker, 5, 5)],
        [0, 0],
    );
    let r = bfs_first_step(&s, Pos::new(0, 0), |p| p == Pos::new(0, 3));
    assert_eq!(r.distance, Some(3));
    assert_eq!(r.first_step, Some(Direction::South));
    let r = bfs_first_step(&s, Pos::new(2, 2), |p| p == Pos::new(2, 2));
    assert_eq!(r.distance, Some(0));
    assert_eq!(r.first_step, None);
}

#[test]
fn bfs_reports_unreachable_goals() {
    let walls = [(1, 0), (0, 1), (1, 2), (2, 1)];
    let s = state(
        grid(5, 5, &walls),
        vec![unit(0, Player::P1, UnitKind::Worker, 4, 4)],
        [0, 0],
    );
    let r = bfs_first_step(&s, Pos::new(4, 3), |p| p == Pos::new(1, 1));
    assert_eq!(r, PathfindResult::UNREACHABLE);
    assert!(!r.is_reachable());
}

#[test]
fn bfs_tie_break_follows_direction_order() {
    let s = state(
        grid(5, 5, &[]),
        vec![unit(0, Player::P1, UnitKind::Worker, 4, 4)],
        [0, 0],
    );
    // Goals east and south at equal distance: east is expanded first.
    let r = bfs_first_step(&s, Pos::new(2, 2), |p| {
        p == Pos::new(3, 3) || p == Pos::new(1, 3)
    });
    assert_eq!(r.distance, Some(2));
    assert_eq!(r.first_step, Some(Direction::East));
}

/// Dijkstra with unit weights over the same passability rule: only free
/// cells are traversed, goal cells may be entered regardless.
fn dijkstra(s: &GameState, from: Pos, goal: &dyn Fn(Pos) -> bool) -> Option<u32> {
    let m = s.map();
    let mut dist = vec![u32::MAX; m.cell_count()];
    let mut heap = BinaryHeap::new();
    dist[m.cell_index(from)] = 0;
    heap.push(Reverse((0u32, from.x, from.y)));
    while let Some(Reverse((d, x, y))) = heap.pop() {
        let p = Pos::new(x, y);
        if d > dist[m.cell_index(p)] {
            continue;
        }
        if goal(p) {
            return Some(d);
        }
        if p != from && !s.is_free(p) {
            continue;
        }
        let (xi, yi) = (x as i64, y as i64);
        for (nx, ny) in [(xi, yi - 1), (xi + 1, yi), (xi, yi + 1), (xi - 1, yi)] {
            if !m.in_bounds(nx, ny) {
                continue;
            }
            let n = Pos::new(nx as usize, ny as usize);
            if !(goal(n) || s.is_free(n)) {
                continue;
            }
            let ni = m.cell_index(n);
            if d + 1 < dist[ni] {
                dist[ni] = d + 1;
                heap.push(Reverse((d + 1, n.x, n.y)));
            }
        }
    }
    None
}

#[test]
fn bfs_distance_matches_dijkstra_on_random_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let walls: Vec<(usize, usize)> = (0..12)
            .flat_map(|y| (0..12).map(move |x| (x, y)))
            .filter(|&(x, y)| (x, y) != (11, 0) && (x, y) != (11, 11))
            .filter(|_| rng.random_bool(0.3))
            .collect();
        let m = grid(12, 12, &walls);
        let open: Vec<Pos> = m
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Cell::Empty)
            .map(|(i, _)| Pos::new(i % 12, i / 12))
            .filter(|&p| p != Pos::new(11, 11))
            .collect();
        let mut units = vec![unit(0, Player::P1, UnitKind::Worker, 11, 11)];
        for (k, p) in open.iter().enumerate().skip(3).step_by(17) {
            units.push(unit(k as u32 + 1, Player::P1, UnitKind::Worker, p.x, p.y));
        }
        units.sort_by_key(|u| u.id);
        let s = state(Arc::clone(&m), units, [0, 0]);
        let from = open[rng.random_range(0..open.len())];
        let goals: Vec<Pos> = (0..rng.random_range(1..4))
            .map(|_| open[rng.random_range(0..open.len())])
            .collect();
        let goal = |p: Pos| goals.contains(&p);
        let bfs = bfs_first_step(&s, from, goal);
        assert_eq!(
            bfs.distance,
            dijkstra(&s, from, &goal),
            "from {from} to {goals:?}"
        );
        if let (Some(d), Some(dir)) = (bfs.distance, bfs.first_step) {
            // The first step really starts a shortest path.
            let next = s.neighbor(from, dir).unwrap();
            assert!(goal(next) || s.is_free(next));
            assert_eq!(dijkstra(&s, next, &goal), Some(d - 1));
        } else {
            assert!(bfs.distance.is_none() || bfs.distance == Some(0));
        }
    }
}

#[test]
fn worker_walks_toward_resource() {
    let text = "name r\nsize 6 6\nstockpile 0\nmaxticks 50\n. . . . . r4\n. . . . . .\n. . . . . .\n. . . . . .\n. . . . . .\nw0 . . . . w1\n";
    let m = Arc::new(MapSpec::parse(text).unwrap());
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Worker, 5, 3),
            unit(1, Player::P1, UnitKind::Worker, 0, 5),
        ],
        [0, 0],
    );
    let w = s.unit(0).unwrap().clone();
    assert_eq!(
        rule_based_act(&s, &w),
        Action::new(ActionKind::Move, Direction::North)
    );
}

#[test]
fn rule_ladder_examples() {
    let m = grid(6, 6, &[]);
    // Base with no stockpile does nothing.
    let s = state(
        Arc::clone(&m),
        vec![
            unit(0, Player::P0, UnitKind::Base, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 5, 5),
        ],
        [0, 0],
    );
    assert_eq!(rule_based_act(&s, s.unit(0).unwrap()), Action::Noop);
    // With a stockpile it produces north first.
    let s = state(
        Arc::clone(&m),
        vec![
            unit(0, Player::P0, UnitKind::Base, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 5, 5),
        ],
        [3, 0],
    );
    assert_eq!(
        rule_based_act(&s, s.unit(0).unwrap()),
        Action::new(ActionKind::ProduceWorker, Direction::North)
    );
    // Adjacent enemy: a worker attacks before anything else.
    let s = state(
        Arc::clone(&m),
        vec![
            unit(0, Player::P0, UnitKind::Worker, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 2, 3),
        ],
        [9, 0],
    );
    assert_eq!(
        rule_based_act(&s, s.unit(0).unwrap()),
        Action::new(ActionKind::Attack, Direction::South)
    );
    // No resources and enough stock: build barracks.
    let s = state(
        Arc::clone(&m),
        vec![
            unit(0, Player::P0, UnitKind::Worker, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 5, 5),
        ],
        [5, 0],
    );
    assert_eq!(
        rule_based_act(&s, s.unit(0).unwrap()),
        Action::new(ActionKind::ProduceBarracks, Direction::North)
    );
    // Lights chase the nearest enemy.
    let s = state(
        Arc::clone(&m),
        vec![
            unit(0, Player::P0, UnitKind::Light, 0, 0),
            unit(1, Player::P1, UnitKind::Worker, 0, 4),
        ],
        [0, 0],
    );
    assert_eq!(
        rule_based_act(&s, s.unit(0).unwrap()),
        Action::new(ActionKind::Move, Direction::South)
    );
    // Barracks produce lights when affordable.
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Barracks, 0, 0),
            unit(1, Player::P1, UnitKind::Worker, 5, 5),
        ],
        [2, 0],
    );
    assert_eq!(
        rule_based_act(&s, s.unit(0).unwrap()),
        Action::new(ActionKind::ProduceLight, Direction::East)
    );
}

#[test]
fn carrying_worker_returns_to_base() {
    let m = grid(6, 6, &[]);
    let mut w = unit(1, Player::P0, UnitKind::Worker, 3, 1);
    w.carrying = 1;
    let s = state(
        Arc::clone(&m),
        vec![
            unit(0, Player::P0, UnitKind::Base, 1, 1),
            w.clone(),
            unit(2, Player::P1, UnitKind::Worker, 5, 5),
        ],
        [0, 0],
    );
    assert_eq!(
        rule_based_act(&s, s.unit(1).unwrap()),
        Action::new(ActionKind::Move, Direction::West)
    );
    w.pos = Pos::new(2, 1);
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Base, 1, 1),
            w,
            unit(2, Player::P1, UnitKind::Worker, 5, 5),
        ],
        [0, 0],
    );
    assert_eq!(
        rule_based_act(&s, s.unit(1).unwrap()),
        Action::new(ActionKind::Return, Direction::West)
    );
}

#[test]
fn scripted_agents() {
    let m = grid(5, 5, &[]);
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Worker, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 4, 4),
        ],
        [0, 0],
    );
    let w = s.unit(0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        assert_eq!(
            scripted_act(ScriptedKind::Passive, &s, w, &mut rng),
            Action::Noop
        );
    }
    let a = scripted_act(
        ScriptedKind::Random,
        &s,
        w,
        &mut ChaCha8Rng::seed_from_u64(5),
    );
    let b = scripted_act(
        ScriptedKind::Random,
        &s,
        w,
        &mut ChaCha8Rng::seed_from_u64(5),
    );
    assert_eq!(a, b);

    // A boxed-in base has only noop.
    let m = grid(3, 3, &[(0, 1), (2, 1), (1, 0)]);
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Base, 1, 1),
            unit(1, Player::P1, UnitKind::Worker, 1, 2),
        ],
        [0, 0],
    );
    let base = s.unit(0).unwrap();
    for _ in 0..10 {
        assert_eq!(
            scripted_act(ScriptedKind::Random, &s, base, &mut rng),
            Action::Noop
        );
    }
}

fn net_for(map: &MapSpec) -> NetConfig {
    let mut cfg = NetConfig::new(observation_len(map.width, map.height));
    cfg.hidden_sizes = vec![8];
    cfg
}

#[test]
fn zero_checkpoint_agent_picks_noop() {
    let m = grid(5, 5, &[]);
    let params = Arc::new(PolicyParameters::zeros(net_for(&m)).unwrap());
    let agent = CheckpointAgent::new(params, observation_len(5, 5)).unwrap();
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Worker, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 4, 4),
        ],
        [0, 0],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = s.unit(0).unwrap();
    assert_eq!(agent.act(&s, w, &mut rng), Action::Noop);
}

#[test]
fn hand_built_checkpoint_agent_prefers_move_east() {
    let m = grid(5, 5, &[]);
    let mut params = PolicyParameters::zeros(net_for(&m)).unwrap();
    let head_bias = params.policy_tensor_range().end - 1;
    let east = Action::new(ActionKind::Move, Direction::East).index();
    params.tensors_mut()[head_bias][east] = 5.0;
    let agent = CheckpointAgent::new(Arc::new(params), observation_len(5, 5)).unwrap();
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Worker, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 4, 4),
        ],
        [0, 0],
    );
    let w = s.unit(0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        agent.act(&s, w, &mut rng),
        Action::new(ActionKind::Move, Direction::East)
    );
    assert_eq!(agent.act(&s, w, &mut rng), agent.act(&s, w, &mut rng));
    // East blocked: falls back to the best legal action.
    let s = state(
        grid(5, 5, &[(3, 2)]),
        vec![
            unit(0, Player::P0, UnitKind::Worker, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 4, 4),
        ],
        [0, 0],
    );
    assert_eq!(agent.act(&s, s.unit(0).unwrap(), &mut rng), Action::Noop);
}

#[test]
fn checkpoint_agent_rejects_wrong_input_width() {
    let m = grid(5, 5, &[]);
    let params = Arc::new(PolicyParameters::zeros(net_for(&m)).unwrap());
    assert!(CheckpointAgent::new(params, observation_len(6, 6)).is_err());
}

#[test]
fn masked_argmax_ties_and_masking() {
    let mask = ActionMask::from_bools(&[true, true, false, true]);
    assert_eq!(masked_argmax(&[0.0, 0.0, 9.0, 0.0], mask), 0);
    assert_eq!(masked_argmax(&[0.0, 1.0, 9.0, 1.0], mask), 1);
}

#[test]
fn every_agent_is_legal_on_ten_thousand_states() {
    let m = crate::experiment::resolve_map("TwoBasesBarracks").unwrap();
    let init = PolicyParameters::init(net_for(&m), 3).unwrap();
    let ckpt = CheckpointAgent::new(Arc::new(init), observation_len(m.width, m.height)).unwrap();
    let agents: Vec<Box<dyn Agent>> = vec![
        Box::new(RuleBased),
        Box::new(Scripted(ScriptedKind::Random)),
        Box::new(Scripted(ScriptedKind::Passive)),
        Box::new(Scripted(ScriptedKind::UniformLogits)),
        Box::new(ckpt),
    ];
    let drivers = [
        Scripted(ScriptedKind::Random),
        Scripted(ScriptedKind::Random),
    ];
    let mut checked = 0;
    let mut game = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    while checked < 10_000 {
        let mut r0 = ChaCha8Rng::seed_from_u64(game);
        let mut r1 = ChaCha8Rng::seed_from_u64(game + 1000);
        play_game(
            Arc::clone(&m),
            game,
            [&drivers[0], &drivers[1]],
            [&mut r0, &mut r1],
            |s| {
                if !s.is_ongoing() {
                    return;
                }
                for u in s.units() {
                    let mask = s.mask_for(u);
                    for a in &agents {
                        let act = a.act(s, u, &mut rng);
                        assert!(
                            mask.allows(act),
                            "{} chose illegal {act} for {u:?}",
                            a.name()
                        );
                        let again = a.act(s, u, &mut ChaCha8Rng::seed_from_u64(1));
                        let again2 = a.act(s, u, &mut ChaCha8Rng::seed_from_u64(1));
                        assert_eq!(again, again2);
                    }
                    checked += 1;
                }
            },
        )
        .unwrap();
        game += 1;
    }
}

#[test]
fn base_agent_proposals() {
    let m = grid(5, 5, &[]);
    let s = state(
        m,
        vec![
            unit(0, Player::P0, UnitKind::Worker, 2, 2),
            unit(1, Player::P1, UnitKind::Worker, 2, 3),
        ],
        [0, 0],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = s.unit(0).unwrap();
    let rb = BaseAgent::Deterministic(Arc::new(RuleBased));
    assert_eq!(
        rb.propose(&s, w, &mut rng),
        Some(Action::new(ActionKind::Attack, Direction::South).index())
    );
    assert_eq!(BaseAgent::UniformLogits.propose(&s, w, &mut rng), None);
    assert_eq!(BaseAgent::UniformLogits.name(), "uniform_logits");
}
