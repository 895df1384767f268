use crate::error::{Error, Result};
use crate::imaging::Pixel;
use crate::segmentation::MassMask;

// Clockwise on screen (rows grow downward), starting west.
const MOORE: [(i64, i64); 8] =
    [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)];

fn direction_index(dr: i64, dc: i64) -> usize {
    MOORE.iter().position(|&d| d == (dr, dc)).expect("unit 8-neighbour offset")
}

/// Closed boundary path of a mask, counterclockwise as displayed (rows down).
/// The last point is adjacent to the first; it is not repeated.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Pixel>,
}

impl Contour {
    pub fn points(&self) -> &[Pixel] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(x, y) = (col, row)` as floats.
    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.col as f64, p.row as f64)).collect()
    }
}

/// Moore-neighbour boundary tracing with Jacob's stopping rule.
pub fn trace_contour(mask: &MassMask) -> Result<Contour> {
    let start = mask
        .pixels()
        .next()
        .ok_or_else(|| Error::DegenerateMask("empty mask".into()))?;
    let step = |p: Pixel, dir: usize| -> (i64, i64) {
        (p.row as i64 + MOORE[dir].0, p.col as i64 + MOORE[dir].1)
    };
    // Scan order guarantees the west neighbour of the first pixel is background.
    let next_from = |cur: Pixel, back_dir: usize| -> Option<(Pixel, usize)> {
        for k in 1..=8 {
            let dir = (back_dir + k) % 8;
            let (r, c) = step(cur, dir);
            if mask.get_signed(r, c) {
                let next = Pixel::new(r as usize, c as usize);
                let (br, bc) = step(cur, (dir + 7) % 8);
                let back = direction_index(br - r, bc - c);
                return Some((next, back));
            }
        }
        None
    };

    let mut clockwise = vec![start];
    let Some((first, first_back)) = next_from(start, 0) else {
        return Err(Error::DegenerateMask("single-pixel mask has no boundary path".into()));
    };
    let (mut cur, mut back) = (first, first_back);
    let limit = 4 * mask.width() * mask.height() + 8;
    loop {
        if cur == start {
            let (nxt, _) = next_from(cur, back).expect("start has a neighbour");
            if nxt == first {
                break;
            }
        }
        clockwise.push(cur);
        let (nxt, nback) = next_from(cur, back).expect("boundary pixel has a neighbour");
        cur = nxt;
        back = nback;
        if clockwise.len() > limit {
            return Err(Error::DegenerateMask("boundary trace did not close".into()));
        }
    }
    if clockwise.len() < 4 {
        return Err(Error::DegenerateMask(format!(
            "boundary has {} points, need >= 4",
            clockwise.len()
        )));
    }
    let mut points = Vec::with_capacity(clockwise.len());
    points.push(clockwise[0]);
    points.extend(clockwise[1..].iter().rev());
    Ok(Contour { points })
}
