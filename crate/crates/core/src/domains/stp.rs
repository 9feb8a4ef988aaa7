//! N×N sliding-tile puzzle. The goal has the blank in the top-left corner
//! followed by tiles 1..N²−1 in row-major order. Actions move the blank.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Encode, DOWN, LEFT, RIGHT, UP};
use crate::model::FeatureTensor;
use crate::search::{Child, Domain, StateKey};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StpState {
    /// `tiles[cell]` is the tile at `cell`; 0 is the blank.
    pub tiles: Vec<u8>,
    pub blank: usize,
}

impl StpState {
    pub fn goal(n: usize) -> Self {
        StpState {
            tiles: (0..(n * n) as u8).collect(),
            blank: 0,
        }
    }

    pub fn from_tiles(tiles: Vec<u8>) -> Result<Self> {
        let cells = tiles.len();
        let n = (cells as f64).sqrt().round() as usize;
        if n < 2 || n * n != cells {
            return Err(Error::config(format!(
                "{cells} tiles do not form a square board"
            )));
        }
        let mut seen = vec![false; cells];
        for &t in &tiles {
            let t = t as usize;
            if t >= cells || seen[t] {
                return Err(Error::config("tiles are not a permutation of 0..N²"));
            }
            seen[t] = true;
        }
        let blank = tiles.iter().position(|&t| t == 0).unwrap();
        Ok(StpState { tiles, blank })
    }

    pub fn size(&self) -> usize {
        (self.tiles.len() as f64).sqrt().round() as usize
    }

    /// Target cell of the blank for `action`, if on the board.
    fn blank_target(&self, action: usize) -> Option<usize> {
        let n = self.size();
        let (r, c) = (self.blank / n, self.blank % n);
        match action {
            UP if r > 0 => Some(self.blank - n),
            DOWN if r + 1 < n => Some(self.blank + n),
            LEFT if c > 0 => Some(self.blank - 1),
            RIGHT if c + 1 < n => Some(self.blank + 1),
            _ => None,
        }
    }

    pub fn apply(&self, action: usize) -> Option<StpState> {
        let to = self.blank_target(action)?;
        let mut next = self.clone();
        next.tiles.swap(self.blank, to);
        next.blank = to;
        Some(next)
    }

    pub fn is_goal(&self) -> bool {
        self.tiles.iter().enumerate().all(|(i, &t)| t as usize == i)
    }

    /// Sum of Manhattan distances of tiles to their goal cells.
    pub fn manhattan(&self) -> usize {
        let n = self.size();
        self.tiles
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t != 0)
            .map(|(cell, &t)| {
                let t = t as usize;
                (cell / n).abs_diff(t / n) + (cell % n).abs_diff(t % n)
            })
            .sum()
    }
}

/// Parity test for reachability of the goal.
pub fn is_solvable(state: &StpState) -> bool {
    let n = state.size();
    let tiles: Vec<u8> = state.tiles.iter().copied().filter(|&t| t != 0).collect();
    let mut inversions = 0usize;
    for i in 0..tiles.len() {
        for j in i + 1..tiles.len() {
            if tiles[i] > tiles[j] {
                inversions += 1;
            }
        }
    }
    if n % 2 == 1 {
        inversions.is_multiple_of(2)
    } else {
        (inversions + state.blank / n).is_multiple_of(2)
    }
}

fn opposite(action: usize) -> usize {
    match action {
        UP => DOWN,
        DOWN => UP,
        LEFT => RIGHT,
        _ => LEFT,
    }
}

/// Random walk from the goal that never immediately undoes a move.
pub fn random_walk(n: usize, steps: usize, rng: &mut impl Rng) -> StpState {
    let mut state = StpState::goal(n);
    let mut last: Option<usize> = None;
    for _ in 0..steps {
        let moves: Vec<usize> = (0..4)
            .filter(|&a| Some(opposite(a)) != last && state.blank_target(a).is_some())
            .collect();
        let a = *moves.choose(rng).unwrap();
        state = state.apply(a).unwrap();
        last = Some(a);
    }
    state
}

/// Training problems by random walks with lengths drawn from `walk_len`.
pub fn generate_train(
    n: usize,
    count: usize,
    walk_len: (usize, usize),
    seed: u64,
) -> Vec<StpState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(walk_len.0..=walk_len.1);
            random_walk(n, len, &mut rng)
        })
        .collect()
}

/// Uniform random permutations kept only when solvable.
pub fn generate_test(n: usize, count: usize, seed: u64) -> Vec<StpState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut tiles: Vec<u8> = (0..(n * n) as u8).collect();
        tiles.shuffle(&mut rng);
        let s = StpState::from_tiles(tiles).unwrap();
        if is_solvable(&s) {
            out.push(s);
        }
    }
    out
}

/// One problem per nonblank line, tiles separated by whitespace.
pub fn parse_problems(text: &str) -> Result<Vec<StpState>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tiles: Vec<u8> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u8>()
                    .map_err(|e| Error::parse(i + 1, format!("bad tile {t:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let state = StpState::from_tiles(tiles).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if let Some(first) = out.first() {
            let first: &StpState = first;
            if first.tiles.len() != state.tiles.len() {
                return Err(Error::parse(i + 1, "board size differs from first problem"));
            }
        }
        out.push(state);
    }
    Ok(out)
}

pub fn serialize_problems(problems: &[StpState]) -> String {
    let mut out = String::new();
    for p in problems {
        let line: Vec<String> = p.tiles.iter().map(|t| t.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Lehmer rank of a permutation of `0..len`.
fn rank(tiles: &[u8]) -> usize {
    let n = tiles.len();
    let mut r = 0;
    for i in 0..n {
        let smaller = tiles[i + 1..].iter().filter(|&&t| t < tiles[i]).count();
        r = r * (n - i) + smaller;
    }
    r
}

/// Exact goal distances of every reachable state of a small board, by
/// breadth-first search backwards from the goal.
#[derive(Clone, Debug)]
pub struct ExactDistances {
    n: usize,
    dist: Vec<u8>,
}

impl ExactDistances {
    pub const UNREACHABLE: u8 = u8::MAX;

    /// Only practical for n ≤ 3.
    pub fn new(n: usize) -> Self {
        let cells = n * n;
        let size: usize = (1..=cells).product();
        let mut dist = vec![Self::UNREACHABLE; size];
        let goal = StpState::goal(n);
        dist[rank(&goal.tiles)] = 0;
        let mut queue = std::collections::VecDeque::from([goal]);
        while let Some(s) = queue.pop_front() {
            let d = dist[rank(&s.tiles)];
            for a in 0..4 {
                if let Some(t) = s.apply(a) {
                    let r = rank(&t.tiles);
                    if dist[r] == Self::UNREACHABLE {
                        dist[r] = d + 1;
                        queue.push_back(t);
                    }
                }
            }
        }
        ExactDistances { n, dist }
    }

    pub fn get(&self, state: &StpState) -> Option<u8> {
        debug_assert_eq!(state.size(), self.n);
        let d = self.dist[rank(&state.tiles)];
        (d != Self::UNREACHABLE).then_some(d)
    }

    pub fn reachable(&self) -> usize {
        self.dist
            .iter()
            .filter(|&&d| d != Self::UNREACHABLE)
            .count()
    }
}

/// One sliding-tile problem.
#[derive(Clone, Debug)]
pub struct SlidingTile {
    pub initial: StpState,
}

impl SlidingTile {
    pub fn new(initial: StpState) -> Self {
        SlidingTile { initial }
    }

    pub fn size(&self) -> usize {
        self.initial.size()
    }
}

impl Domain for SlidingTile {
    type State = StpState;

    fn initial_state(&self) -> StpState {
        self.initial.clone()
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn expand(&self, state: &StpState) -> Vec<Child<StpState>> {
        (0..4)
            .filter_map(|a| state.apply(a).map(|s| Child::new(a, s)))
            .collect()
    }

    fn is_solution(&self, state: &StpState) -> bool {
        state.is_goal()
    }

    fn state_key(&self, state: &StpState) -> StateKey {
        state.tiles.clone()
    }
}

impl Encode for SlidingTile {
    fn feature_shape(&self) -> (usize, usize, usize) {
        let n = self.size();
        (n, n, n * n)
    }

    fn encode(&self, state: &StpState) -> FeatureTensor {
        let n = self.size();
        let mut t = FeatureTensor::zeros(n, n, n * n);
        for (cell, &tile) in state.tiles.iter().enumerate() {
            t.set(cell / n, cell % n, tile as usize, 1.0);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_blank_has_two_children() {
        let d = SlidingTile::new(StpState::goal(3));
        let kids = d.expand(&d.initial_state());
        assert_eq!(
            kids.iter().map(|c| c.action).collect::<Vec<_>>(),
            vec![DOWN, RIGHT]
        );
    }

    #[test]
    fn move_counts_between_two_and_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = SlidingTile::new(StpState::goal(5));
        for _ in 0..200 {
            let s = random_walk(5, rng.gen_range(0..40), &mut rng);
            let k = d.expand(&s).len();
            assert!((2..=4).contains(&k));
        }
    }

    #[test]
    fn empty_walk_is_goal() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = random_walk(4, 0, &mut rng);
        assert!(s.is_goal());
        assert!(is_solvable(&s));
    }

    #[test]
    fn walks_are_solvable() {
        for n in 2..=5 {
            for s in generate_train(n, 50, (0, 60), n as u64) {
                assert!(is_solvable(&s));
            }
        }
    }

    #[test]
    fn single_swap_is_unsolvable() {
        let mut s = StpState::goal(4);
        s.tiles.swap(1, 2);
        assert!(!is_solvable(&s));
        let mut s = StpState::goal(3);
        s.tiles.swap(1, 2);
        assert!(!is_solvable(&s));
    }

    #[test]
    fn single_move_keys_differ() {
        let d = SlidingTile::new(StpState::goal(3));
        let s = d.initial_state();
        let t = s.apply(RIGHT).unwrap();
        assert_ne!(d.state_key(&s), d.state_key(&t));
        assert_eq!(d.state_key(&s), d.state_key(&s.clone()));
    }

    #[test]
    fn encoding_planes_are_one_hot() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_walk(5, 30, &mut rng);
        let d = SlidingTile::new(s.clone());
        let t = d.encode(&s);
        assert_eq!(t.shape(), (5, 5, 25));
        for tile in 0..25 {
            assert_eq!(t.plane_count(tile), 1);
        }
        let cell = s.tiles.iter().position(|&x| x == 7).unwrap();
        assert_eq!(t.get(cell / 5, cell % 5, 7), 1.0);
    }

    #[test]
    fn parse_round_trip() {
        let probs = generate_test(4, 10, 5);
        let text = serialize_problems(&probs);
        assert_eq!(parse_problems(&text).unwrap(), probs);
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = parse_problems("0 1 2 3\n0 1 1 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_problems("0 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn reproducible_generation() {
        assert_eq!(
            generate_train(5, 20, (50, 1000), 7),
            generate_train(5, 20, (50, 1000), 7)
        );
    }
}
