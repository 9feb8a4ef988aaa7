//! Color-separation puzzle on an n×n grid of cells. A line runs over the
//! (n+1)×(n+1) lattice from the bottom-left vertex to the exit without
//! revisiting a vertex; at the exit, every region of cells bounded by the
//! line must hold bullets of a single color. Empty cells are ignored.
//!
//! Coordinates are (x, y) with y growing upwards; cell (x, y) has lower-left
//! corner at vertex (x, y). The text format is described in
//! `docs/witness_format.md`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{split_levels, Encode, DOWN, LEFT, RIGHT, UP};
use crate::model::FeatureTensor;
use crate::search::{Child, Domain, StateKey};
use crate::{Error, Result};

pub const COLOR_CODES: [char; 5] = ['.', 'r', 'g', 'b', 'y'];
pub const NUM_COLORS: usize = 4;
/// Side of the square image every puzzle is embedded in.
pub const IMAGE_SIZE: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WitnessState {
    /// Vertex indices `y * (n + 1) + x`, starting at the entrance.
    pub path: Vec<u8>,
    pub visited: u64,
}

impl WitnessState {
    pub fn tip(&self) -> usize {
        *self.path.last().unwrap() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessPuzzle {
    pub id: String,
    /// Cells per side.
    pub n: usize,
    /// Color per cell, index `y * n + x`; 0 is empty.
    pub cells: Vec<u8>,
    pub exit: (usize, usize),
}

impl WitnessPuzzle {
    pub fn new(
        id: impl Into<String>,
        n: usize,
        cells: Vec<u8>,
        exit: (usize, usize),
    ) -> Result<Self> {
        if n == 0 || n + 1 > IMAGE_SIZE {
            return Err(Error::config(format!(
                "grid size {n} outside 1..={}",
                IMAGE_SIZE - 1
            )));
        }
        if cells.len() != n * n || cells.iter().any(|&c| c as usize > NUM_COLORS) {
            return Err(Error::config("bad cell colors"));
        }
        if exit.0 > n || exit.1 > n || exit == (0, 0) {
            return Err(Error::config(format!("bad exit {exit:?}")));
        }
        Ok(WitnessPuzzle {
            id: id.into(),
            n,
            cells,
            exit,
        })
    }

    /// The 4×4 puzzle with exit at the middle of the right side.
    pub fn standard(id: impl Into<String>, cells: Vec<u8>) -> Result<Self> {
        Self::new(id, 4, cells, (4, 2))
    }

    fn side(&self) -> usize {
        self.n + 1
    }

    pub fn vertex(&self, x: usize, y: usize) -> usize {
        y * self.side() + x
    }

    fn xy(&self, v: usize) -> (usize, usize) {
        (v % self.side(), v / self.side())
    }

    fn exit_vertex(&self) -> usize {
        self.vertex(self.exit.0, self.exit.1)
    }

    fn neighbor(&self, v: usize, action: usize) -> Option<usize> {
        let (x, y) = self.xy(v);
        let s = self.side();
        match action {
            UP if y + 1 < s => Some(v + s),
            DOWN if y > 0 => Some(v - s),
            LEFT if x > 0 => Some(v - 1),
            RIGHT if x + 1 < s => Some(v + 1),
            _ => None,
        }
    }

    /// Region id per cell after cutting along the path edges.
    pub fn regions(&self, path: &[u8]) -> Vec<usize> {
        let n = self.n;
        // blocked_h[y * n + x]: edge (x, y)-(x+1, y); blocked_v[x * n + y]: edge (x, y)-(x, y+1).
        let mut blocked_h = vec![false; n * (n + 1)];
        let mut blocked_v = vec![false; n * (n + 1)];
        for w in path.windows(2) {
            let (a, b) = (self.xy(w[0] as usize), self.xy(w[1] as usize));
            if a.1 == b.1 {
                blocked_h[a.1 * n + a.0.min(b.0)] = true;
            } else {
                blocked_v[a.0 * n + a.1.min(b.1)] = true;
            }
        }
        let mut region = vec![usize::MAX; n * n];
        let mut next = 0;
        for start in 0..n * n {
            if region[start] != usize::MAX {
                continue;
            }
            region[start] = next;
            let mut stack = vec![start];
            while let Some(c) = stack.pop() {
                let (x, y) = (c % n, c / n);
                let mut push = |other: usize, blocked: bool| {
                    if !blocked && region[other] == usize::MAX {
                        region[other] = next;
                        stack.push(other);
                    }
                };
                if x + 1 < n {
                    push(c + 1, blocked_v[(x + 1) * n + y]);
                }
                if x > 0 {
                    push(c - 1, blocked_v[x * n + y]);
                }
                if y + 1 < n {
                    push(c + n, blocked_h[(y + 1) * n + x]);
                }
                if y > 0 {
                    push(c - n, blocked_h[y * n + x]);
                }
            }
            next += 1;
        }
        region
    }

    /// True if every region holds at most one bullet color.
    pub fn separates(&self, path: &[u8]) -> bool {
        let region = self.regions(path);
        let mut color = vec![0u8; self.n * self.n];
        for (cell, &r) in region.iter().enumerate() {
            let c = self.cells[cell];
            if c == 0 {
                continue;
            }
            if color[r] == 0 {
                color[r] = c;
            } else if color[r] != c {
                return false;
            }
        }
        true
    }

    pub fn state_from_path(&self, vertices: &[(usize, usize)]) -> Option<WitnessState> {
        let mut state = self.initial_state();
        for w in vertices.windows(2) {
            if w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1) != 1 {
                return None;
            }
        }
        if vertices.first() != Some(&(0, 0)) {
            return None;
        }
        for &(x, y) in &vertices[1..] {
            if x > self.n || y > self.n {
                return None;
            }
            let v = self.vertex(x, y);
            if state.visited & (1 << v) != 0 {
                return None;
            }
            state.path.push(v as u8);
            state.visited |= 1 << v;
        }
        Some(state)
    }

    pub fn render(&self) -> Vec<String> {
        let mut out = vec![format!("exit {} {}", self.exit.0, self.exit.1)];
        for y in (0..self.n).rev() {
            out.push(
                (0..self.n)
                    .map(|x| COLOR_CODES[self.cells[y * self.n + x] as usize])
                    .collect(),
            );
        }
        out
    }

    fn parse(id: &str, rows: &[&str], first_line: usize) -> Result<WitnessPuzzle> {
        let header = rows[0].split_whitespace().collect::<Vec<_>>();
        let exit = match header.as_slice() {
            ["exit", x, y] => match (x.parse(), y.parse()) {
                (Ok(x), Ok(y)) => (x, y),
                _ => return Err(Error::parse(first_line, "bad exit coordinates")),
            },
            _ => return Err(Error::parse(first_line, "expected `exit <x> <y>`")),
        };
        let grid: Vec<&str> = rows[1..].iter().map(|r| r.trim()).collect();
        let n = grid.len();
        let mut cells = vec![0u8; n * n];
        for (i, row) in grid.iter().enumerate() {
            let line = first_line + 1 + i;
            if row.chars().count() != n {
                return Err(Error::parse(line, format!("expected {n} cells")));
            }
            let y = n - 1 - i;
            for (x, ch) in row.chars().enumerate() {
                let color = COLOR_CODES
                    .iter()
                    .position(|&c| c == ch)
                    .ok_or_else(|| Error::parse(line, format!("unknown color {ch:?}")))?;
                cells[y * n + x] = color as u8;
            }
        }
        WitnessPuzzle::new(id, n, cells, exit).map_err(|e| Error::parse(first_line, e.to_string()))
    }
}

pub fn parse_puzzles(text: &str) -> Result<Vec<WitnessPuzzle>> {
    split_levels(text)
        .into_iter()
        .map(|(id, line, rows)| WitnessPuzzle::parse(&id, &rows, line))
        .collect()
}

pub fn serialize_puzzles(puzzles: &[WitnessPuzzle]) -> String {
    let mut out = String::new();
    for p in puzzles {
        out.push_str(&format!("; {}\n", p.id));
        for row in p.render() {
            out.push_str(&row);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Random self-avoiding path from the entrance to `exit`.
fn random_path(p: &WitnessPuzzle, rng: &mut impl Rng) -> WitnessState {
    let exit = p.exit_vertex();
    loop {
        let mut s = p.initial_state();
        loop {
            if s.tip() == exit {
                return s;
            }
            let kids = p.expand(&s);
            match kids.choose(rng) {
                Some(c) => s = c.state.clone(),
                None => break,
            }
        }
    }
}

/// Puzzles solvable by construction: a random line is drawn first, then
/// each region gets a random color and each cell keeps a bullet with
/// probability `bullet_prob`.
pub fn generate(
    n: usize,
    exit: (usize, usize),
    count: usize,
    bullet_prob: f64,
    seed: u64,
) -> Result<Vec<WitnessPuzzle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut p = WitnessPuzzle::new(i.to_string(), n, vec![0; n * n], exit)?;
        let path = random_path(&p, &mut rng);
        let region = p.regions(&path.path);
        let n_regions = region.iter().max().map_or(0, |m| m + 1);
        let colors: Vec<u8> = (0..n_regions)
            .map(|_| rng.gen_range(1..=NUM_COLORS as u8))
            .collect();
        for (cell, &r) in region.iter().enumerate() {
            if rng.gen_bool(bullet_prob) {
                p.cells[cell] = colors[r];
            }
        }
        out.push(p);
    }
    Ok(out)
}

impl Domain for WitnessPuzzle {
    type State = WitnessState;

    fn initial_state(&self) -> WitnessState {
        WitnessState {
            path: vec![0],
            visited: 1,
        }
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn expand(&self, state: &WitnessState) -> Vec<Child<WitnessState>> {
        let tip = state.tip();
        (0..4)
            .filter_map(|a| {
                let v = self.neighbor(tip, a)?;
                if state.visited & (1 << v) != 0 {
                    return None;
                }
                let mut next = state.clone();
                next.path.push(v as u8);
                next.visited |= 1 << v;
                Some(Child::new(a, next))
            })
            .collect()
    }

    fn is_solution(&self, state: &WitnessState) -> bool {
        state.tip() == self.exit_vertex() && self.separates(&state.path)
    }

    fn state_key(&self, state: &WitnessState) -> StateKey {
        state.path.clone()
    }
}

impl Encode for WitnessPuzzle {
    fn feature_shape(&self) -> (usize, usize, usize) {
        (IMAGE_SIZE, IMAGE_SIZE, 9)
    }

    /// Planes 0-3: bullet colors; 4: entrance; 5: exit; 6: line vertices;
    /// 7: cells without bullets; 8: tip. Image row is y.
    fn encode(&self, state: &WitnessState) -> FeatureTensor {
        let mut t = FeatureTensor::zeros(IMAGE_SIZE, IMAGE_SIZE, 9);
        for y in 0..self.n {
            for x in 0..self.n {
                match self.cells[y * self.n + x] {
                    0 => t.set(y, x, 7, 1.0),
                    c => t.set(y, x, c as usize - 1, 1.0),
                }
            }
        }
        t.set(0, 0, 4, 1.0);
        t.set(self.exit.1, self.exit.0, 5, 1.0);
        for &v in &state.path {
            let (x, y) = self.xy(v as usize);
            t.set(y, x, 6, 1.0);
        }
        let (x, y) = self.xy(state.tip());
        t.set(y, x, 8, 1.0);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty4() -> WitnessPuzzle {
        WitnessPuzzle::standard("e", vec![0; 16]).unwrap()
    }

    #[test]
    fn corner_with_visited_neighbor_has_one_child() {
        let p = empty4();
        // Path (0,0)->(1,0)->(1,1)->(0,1); tip (0,1) has neighbors (0,0) visited, (0,2), (1,1) visited.
        let s = p
            .state_from_path(&[(0, 0), (1, 0), (1, 1), (0, 1)])
            .unwrap();
        assert_eq!(p.expand(&s).len(), 1);
        // Corner (0,0) start: two neighbors; after moving right to (1,0) then
        // back up-left is prevented by self-avoidance at the corner.
        let s = p
            .state_from_path(&[(0, 0), (0, 1), (1, 1), (1, 0)])
            .unwrap();
        let kids = p.expand(&s);
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].action, RIGHT);
    }

    #[test]
    fn splitting_colors_is_required() {
        // Red at (0,0), green at (3,3); straight line along the bottom then up
        // the right side leaves both in one region.
        let mut cells = vec![0; 16];
        cells[0] = 1;
        cells[15] = 2;
        let p = WitnessPuzzle::standard("s", cells).unwrap();
        let around = p
            .state_from_path(&[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (4, 1), (4, 2)])
            .unwrap();
        assert!(!p.is_solution(&around));
        let cut = p
            .state_from_path(&[(0, 0), (0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (4, 2)])
            .unwrap();
        assert!(p.is_solution(&cut));
    }

    #[test]
    fn empty_puzzle_any_exit_path_solves() {
        let p = empty4();
        let s = p
            .state_from_path(&[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (4, 1), (4, 2)])
            .unwrap();
        assert!(p.is_solution(&s));
    }

    #[test]
    fn tip_plane_is_one_hot() {
        let p = generate(4, (4, 2), 1, 0.6, 1).unwrap().remove(0);
        let s = p.state_from_path(&[(0, 0), (0, 1), (1, 1)]).unwrap();
        let t = p.encode(&s);
        assert_eq!(t.shape(), (8, 8, 9));
        assert_eq!(t.plane_count(8), 1);
        assert_eq!(t.get(1, 1, 8), 1.0);
        assert_eq!(t.plane_count(6), 3);
        let bullets: usize = (0..4).map(|c| t.plane_count(c)).sum();
        assert_eq!(bullets + t.plane_count(7), 16);
    }

    #[test]
    fn generated_round_trip_and_solvable() {
        let puzzles = generate(4, (4, 2), 20, 0.5, 11).unwrap();
        let text = serialize_puzzles(&puzzles);
        assert_eq!(parse_puzzles(&text).unwrap(), puzzles);
        for p in &puzzles {
            assert!(crate::search::bfs_search(
                p,
                &crate::search::Uninformed,
                crate::evaluators::EvaluatorKind::LevinTs,
                crate::search::SearchBudget::unlimited(),
                1
            )
            .unwrap()
            .solved());
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_puzzles("; 0\nexit 4 2\nrrrr\nrrr\nrrrr\nrrrr\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse_puzzles("; 0\nexit 4 2\nrrrr\nrrxr\nrrrr\nrrrr\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse_puzzles("; 0\nentry 1 1\n.\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
