//! Outer-boundary tracing along pixel edges (crack following).

use super::{BinaryMask, Polygon};
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Traces the outer boundary of the component containing the first
/// foreground pixel in raster order.
///
/// Pixel `(x, y)` covers `[x, x+1] × [y, y+1]`; vertices are lattice corners,
/// emitted only where the boundary turns, so collinear runs are merged. The
/// foreground is kept on the left of the walk, which yields a positive
/// shoelace area. Diagonal contacts are not followed (4-connectivity), so the
/// result is simple whenever the mask came from [`BinaryMask::isolate_largest`].
pub fn trace_boundary(mask: &BinaryMask) -> Result<Polygon> {
    let w = mask.width() as isize;
    let h = mask.height() as isize;
    let start = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .find(|&(x, y)| mask.get(x, y))
        .ok_or(Error::EmptyForeground)?;

    if !has_solid_block(mask) {
        return Err(Error::ThinComponent);
    }

    // Walk starts on the top edge of the start pixel heading +x.
    let origin = (start.0, start.1);
    let start_dir: (isize, isize) = (1, 0);
    let mut corner = origin;
    let mut dir = start_dir;
    let mut vertices = vec![Point::new(origin.0 as f64, origin.1 as f64)];
    let limit = 4 * (mask.width() + 1) * (mask.height() + 1);
    for _ in 0..limit {
        corner = (corner.0 + dir.0, corner.1 + dir.1);
        let next = turn(mask, corner, dir);
        if corner == origin && next == start_dir {
            break;
        }
        if next != dir {
            vertices.push(Point::new(corner.0 as f64, corner.1 as f64));
        }
        dir = next;
    }
    Polygon::new(vertices)
}

/// Chooses the next direction at lattice corner `c` after travelling along `d`.
fn turn(mask: &BinaryMask, c: (isize, isize), d: (isize, isize)) -> (isize, isize) {
    // Pixel whose top-left corner is `c` offset into the quadrant given by
    // the signs of `v`.
    let px = |v: (isize, isize)| -> bool {
        let x = if v.0 > 0 { c.0 } else { c.0 - 1 };
        let y = if v.1 > 0 { c.1 } else { c.1 - 1 };
        mask.get(x, y)
    };
    let left = (-d.1, d.0);
    let right = (d.1, -d.0);
    let ahead_left = px((d.0 + left.0, d.1 + left.1));
    let ahead_right = px((d.0 + right.0, d.1 + right.1));
    if !ahead_left {
        left
    } else if ahead_right {
        right
    } else {
        d
    }
}

fn has_solid_block(mask: &BinaryMask) -> bool {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    (0..h - 1).any(|y| {
        (0..w - 1).any(|x| mask.get(x, y) && mask.get(x + 1, y) && mask.get(x, y + 1) && mask.get(x + 1, y + 1))
    })
}
