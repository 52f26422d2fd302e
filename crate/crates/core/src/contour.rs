//! Marching-squares contours of label maps and scalar level sets.

use std::collections::HashMap;

use crate::grid::{Field, Grid2D, ScalarField};
use crate::linalg::Vec2;

/// A polyline in pixel coordinates (`x` = column, `y` = row).
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<Vec2>,
    pub closed: bool,
    /// Region label the contour bounds, when extracted from a label map.
    pub label: Option<u32>,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let open: f64 = self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        match (self.closed, self.points.first(), self.points.last()) {
            (true, Some(a), Some(b)) => open + (*a - *b).norm(),
            _ => open,
        }
    }
}

// Edge ids: 2*i for the horizontal edge (x,y)-(x+1,y), 2*i+1 for the vertical edge (x,y)-(x,y+1).
fn h_edge(grid: Grid2D, x: usize, y: usize) -> usize {
    2 * grid.index(x, y)
}

fn v_edge(grid: Grid2D, x: usize, y: usize) -> usize {
    2 * grid.index(x, y) + 1
}

/// Contours of `{v ≥ level}` by marching squares with linear interpolation.
///
/// Cells for which `skip_cell(x, y)` holds (top-left corner `(x, y)`) emit nothing.
/// Chains that end on the grid border are returned open; all others are closed.
pub fn iso_contours_masked(field: &ScalarField, level: f64, skip_cell: impl Fn(usize, usize) -> bool) -> Vec<Polyline> {
    let grid = field.grid();
    let (w, h) = (grid.width(), grid.height());
    let v = |x: usize, y: usize| field.get(x, y);
    let inside = |x: usize, y: usize| v(x, y) >= level;

    let mut vertex: HashMap<usize, Vec2> = HashMap::new();
    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut point_on = |id: usize, (x0, y0): (usize, usize), (x1, y1): (usize, usize)| {
        vertex.entry(id).or_insert_with(|| {
            let (a, b) = (v(x0, y0), v(x1, y1));
            let t = if a == b { 0.5 } else { ((level - a) / (b - a)).clamp(0.0, 1.0) };
            Vec2::new(x0 as f64 + t * (x1 as f64 - x0 as f64), y0 as f64 + t * (y1 as f64 - y0 as f64))
        });
        id
    };

    for y in 0..h - 1 {
        for x in 0..w - 1 {
            if skip_cell(x, y) {
                continue;
            }
            let tl = inside(x, y);
            let tr = inside(x + 1, y);
            let br = inside(x + 1, y + 1);
            let bl = inside(x, y + 1);
            if tl == tr && tr == br && br == bl {
                continue;
            }
            let top = (tl != tr).then(|| point_on(h_edge(grid, x, y), (x, y), (x + 1, y)));
            let bottom = (bl != br).then(|| point_on(h_edge(grid, x, y + 1), (x, y + 1), (x + 1, y + 1)));
            let left = (tl != bl).then(|| point_on(v_edge(grid, x, y), (x, y), (x, y + 1)));
            let right = (tr != br).then(|| point_on(v_edge(grid, x + 1, y), (x + 1, y), (x + 1, y + 1)));
            let crossings: Vec<usize> = [top, right, bottom, left].into_iter().flatten().collect();
            let mut segs: Vec<(usize, usize)> = Vec::with_capacity(2);
            if crossings.len() == 2 {
                segs.push((crossings[0], crossings[1]));
            } else {
                // saddle: isolate the two corners whose state differs from the cell centre
                let centre = 0.25 * (v(x, y) + v(x + 1, y) + v(x + 1, y + 1) + v(x, y + 1)) >= level;
                let (t, r, b, l) = (top.unwrap(), right.unwrap(), bottom.unwrap(), left.unwrap());
                if tl != centre {
                    segs.push((t, l));
                    segs.push((r, b));
                } else {
                    segs.push((t, r));
                    segs.push((b, l));
                }
            }
            for (a, b) in segs {
                links.entry(a).or_default().push(b);
                links.entry(b).or_default().push(a);
            }
        }
    }

    let mut ids: Vec<usize> = links.keys().copied().collect();
    ids.sort_unstable();
    let mut used: HashMap<usize, bool> = HashMap::new();
    let mut out = Vec::new();
    let walk = |start: usize, used: &mut HashMap<usize, bool>| {
        let mut chain = vec![start];
        used.insert(start, true);
        let mut cur = start;
        loop {
            let next = links[&cur].iter().copied().find(|n| !used.get(n).copied().unwrap_or(false));
            match next {
                Some(n) => {
                    used.insert(n, true);
                    chain.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        let closed = chain.len() > 2 && links[&cur].contains(&start);
        Polyline { points: chain.iter().map(|id| vertex[id]).collect(), closed, label: None }
    };
    // open chains first, starting from their endpoints
    for &id in &ids {
        if links[&id].len() == 1 && !used.get(&id).copied().unwrap_or(false) {
            out.push(walk(id, &mut used));
        }
    }
    for &id in &ids {
        if !used.get(&id).copied().unwrap_or(false) {
            out.push(walk(id, &mut used));
        }
    }
    out
}

pub fn iso_contours(field: &ScalarField, level: f64) -> Vec<Polyline> {
    iso_contours_masked(field, level, |_, _| false)
}

/// Region boundaries of a label map.
///
/// Every label except the largest one present is traced, which covers every
/// boundary between two labels exactly once for two-label maps.
pub fn extract_contours(labels: &Field<u32>) -> Vec<Polyline> {
    extract_contours_masked(labels, |_, _| false)
}

pub fn extract_contours_masked(labels: &Field<u32>, skip_cell: impl Fn(usize, usize) -> bool) -> Vec<Polyline> {
    let mut present: Vec<u32> = labels.values().to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &k in &present[..present.len() - 1] {
        let indicator = labels.map(|l| if l == k { 1.0 } else { 0.0 });
        for mut p in iso_contours_masked(&indicator, 0.5, &skip_cell) {
            p.label = Some(k);
            out.push(p);
        }
    }
    out
}
