//! Sokoban levels in Boxoban text format.
//!
//! A move into a wall, or a push against a wall or another box, leaves the
//! state unchanged; such children are still generated.

use super::{split_levels, Encode, DOWN, LEFT, RIGHT, UP};
use crate::model::FeatureTensor;
use crate::search::{Child, Domain, StateKey};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SokobanState {
    pub avatar: u16,
    /// Sorted cell indices.
    pub boxes: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SokobanLevel {
    pub id: String,
    pub height: usize,
    pub width: usize,
    pub walls: Vec<bool>,
    pub goals: Vec<bool>,
    pub initial: SokobanState,
}

impl SokobanLevel {
    fn step(&self, cell: usize, action: usize) -> Option<usize> {
        let (r, c) = (cell / self.width, cell % self.width);
        let next = match action {
            UP if r > 0 => cell - self.width,
            DOWN if r + 1 < self.height => cell + self.width,
            LEFT if c > 0 => cell - 1,
            RIGHT if c + 1 < self.width => cell + 1,
            _ => return None,
        };
        (!self.walls[next]).then_some(next)
    }

    pub fn apply(&self, state: &SokobanState, action: usize) -> SokobanState {
        let Some(to) = self.step(state.avatar as usize, action) else {
            return state.clone();
        };
        match state.boxes.binary_search(&(to as u16)) {
            Err(_) => SokobanState {
                avatar: to as u16,
                boxes: state.boxes.clone(),
            },
            Ok(i) => match self.step(to, action) {
                Some(beyond) if state.boxes.binary_search(&(beyond as u16)).is_err() => {
                    let mut boxes = state.boxes.clone();
                    boxes[i] = beyond as u16;
                    boxes.sort_unstable();
                    SokobanState {
                        avatar: to as u16,
                        boxes,
                    }
                }
                _ => state.clone(),
            },
        }
    }

    /// Parses a single level's rows. `first_line` is used in errors.
    pub fn parse(id: &str, rows: &[&str], first_line: usize) -> Result<SokobanLevel> {
        let height = rows.len();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        if height == 0 || width == 0 {
            return Err(Error::parse(first_line, "empty level"));
        }
        let cells = height * width;
        if cells > u16::MAX as usize {
            return Err(Error::parse(first_line, "level too large"));
        }
        let mut walls = vec![false; cells];
        let mut goals = vec![false; cells];
        let mut boxes = Vec::new();
        let mut avatar = None;
        for (r, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                let i = r * width + c;
                match ch {
                    '#' => walls[i] = true,
                    ' ' | '-' | '_' => {}
                    '.' => goals[i] = true,
                    '$' => boxes.push(i as u16),
                    '*' => {
                        boxes.push(i as u16);
                        goals[i] = true;
                    }
                    '@' | '+' => {
                        if avatar.replace(i as u16).is_some() {
                            return Err(Error::parse(first_line + r, "more than one avatar"));
                        }
                        goals[i] = ch == '+';
                    }
                    other => {
                        return Err(Error::parse(
                            first_line + r,
                            format!("unknown symbol {other:?}"),
                        ))
                    }
                }
            }
        }
        let Some(avatar) = avatar else {
            return Err(Error::parse(first_line, "level has no avatar"));
        };
        let n_goals = goals.iter().filter(|&&g| g).count();
        if boxes.len() != n_goals {
            return Err(Error::parse(
                first_line,
                format!("{} boxes but {} goals", boxes.len(), n_goals),
            ));
        }
        boxes.sort_unstable();
        Ok(SokobanLevel {
            id: id.to_string(),
            height,
            width,
            walls,
            goals,
            initial: SokobanState { avatar, boxes },
        })
    }

    /// Rows of the level with `state` drawn in.
    pub fn render(&self, state: &SokobanState) -> Vec<String> {
        (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(|c| {
                        let i = r * self.width + c;
                        let has_box = state.boxes.binary_search(&(i as u16)).is_ok();
                        match (
                            self.walls[i],
                            state.avatar as usize == i,
                            has_box,
                            self.goals[i],
                        ) {
                            (true, ..) => '#',
                            (_, true, _, true) => '+',
                            (_, true, _, false) => '@',
                            (_, _, true, true) => '*',
                            (_, _, true, false) => '$',
                            (_, _, _, true) => '.',
                            _ => ' ',
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn num_boxes(&self) -> usize {
        self.initial.boxes.len()
    }

    pub fn num_goals(&self) -> usize {
        self.goals.iter().filter(|&&g| g).count()
    }
}

/// Parses a Boxoban file: levels separated by `; <id>` lines.
pub fn parse_levels(text: &str) -> Result<Vec<SokobanLevel>> {
    split_levels(text)
        .into_iter()
        .map(|(id, line, rows)| SokobanLevel::parse(&id, &rows, line))
        .collect()
}

pub fn serialize_levels(levels: &[SokobanLevel]) -> String {
    let mut out = String::new();
    for level in levels {
        out.push_str(&format!("; {}\n", level.id));
        for row in level.render(&level.initial) {
            out.push_str(&row);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

impl Domain for SokobanLevel {
    type State = SokobanState;

    fn initial_state(&self) -> SokobanState {
        self.initial.clone()
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn expand(&self, state: &SokobanState) -> Vec<Child<SokobanState>> {
        (0..4)
            .map(|a| Child::new(a, self.apply(state, a)))
            .collect()
    }

    fn is_solution(&self, state: &SokobanState) -> bool {
        state.boxes.iter().all(|&b| self.goals[b as usize])
    }

    fn state_key(&self, state: &SokobanState) -> StateKey {
        let mut key = Vec::with_capacity(2 * (state.boxes.len() + 1));
        key.extend_from_slice(&state.avatar.to_le_bytes());
        for b in &state.boxes {
            key.extend_from_slice(&b.to_le_bytes());
        }
        key
    }
}

impl Encode for SokobanLevel {
    fn feature_shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, 4)
    }

    /// Planes: wall, avatar, box, goal.
    fn encode(&self, state: &SokobanState) -> FeatureTensor {
        let mut t = FeatureTensor::zeros(self.height, self.width, 4);
        for i in 0..self.height * self.width {
            let (r, c) = (i / self.width, i % self.width);
            if self.walls[i] {
                t.set(r, c, 0, 1.0);
            }
            if self.goals[i] {
                t.set(r, c, 3, 1.0);
            }
        }
        let a = state.avatar as usize;
        t.set(a / self.width, a % self.width, 1, 1.0);
        for &b in &state.boxes {
            let b = b as usize;
            t.set(b / self.width, b % self.width, 2, 1.0);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "; 7\n#####\n#@$.#\n#####\n";

    #[test]
    fn push_onto_goal_solves() {
        let level = &parse_levels(SMALL).unwrap()[0];
        assert_eq!(level.id, "7");
        let s = level.initial_state();
        assert!(!level.is_solution(&s));
        let t = level.apply(&s, RIGHT);
        assert!(level.is_solution(&t));
        // The box is now against a wall and cannot move further.
        assert_eq!(level.apply(&t, RIGHT), t);
    }

    #[test]
    fn wall_move_returns_same_state() {
        let level = &parse_levels(SMALL).unwrap()[0];
        let s = level.initial_state();
        let kids = level.expand(&s);
        assert_eq!(kids.len(), 4);
        assert_eq!(level.state_key(&kids[DOWN].state), level.state_key(&s));
        assert_eq!(level.state_key(&kids[UP].state), level.state_key(&s));
    }

    #[test]
    fn count_mismatch_is_parse_error() {
        let err = parse_levels("; a\n#####\n#@$ #\n#####\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn box_order_does_not_change_key() {
        let level = &parse_levels("; x\n######\n#@$$ #\n# .. #\n######\n").unwrap()[0];
        let a = SokobanState {
            avatar: 7,
            boxes: vec![8, 9],
        };
        let mut b = a.clone();
        b.boxes.reverse();
        b.boxes.sort_unstable();
        assert_eq!(level.state_key(&a), level.state_key(&b));
    }

    #[test]
    fn render_round_trip() {
        let text = "; 1\n#####\n#+*$#\n#   #\n#####\n\n";
        let levels = parse_levels(text).unwrap();
        assert_eq!(serialize_levels(&levels), text);
    }

    #[test]
    fn wall_plane_marks_walls() {
        let level = &parse_levels(SMALL).unwrap()[0];
        let t = level.encode(&level.initial);
        assert_eq!(t.plane_count(0), level.walls.iter().filter(|&&w| w).count());
        assert_eq!(t.plane_count(1), 1);
        assert_eq!(t.plane_count(2), 1);
        assert_eq!(t.plane_count(3), 1);
    }
}
