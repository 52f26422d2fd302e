//! Regular pixel grids and the per-pixel fields defined on them.
//!
//! Storage is row-major with `x` the column and `y` the row, origin at the
//! top-left pixel. Grid spacing is one pixel in both directions.

use crate::error::{Error, Result};
use crate::linalg::{Spd2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid2D {
    width: usize,
    height: usize,
}

impl Grid2D {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::GridTooSmall { width, height });
        }
        Ok(Grid2D { width, height })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> Pixel {
        Pixel { x: index % self.width, y: index / self.width }
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// Index of `(x + dx, y + dy)` if it falls inside the grid.
    #[inline]
    pub fn offset(&self, index: usize, dx: i64, dy: i64) -> Option<usize> {
        let x = (index % self.width) as i64 + dx;
        let y = (index / self.width) as i64 + dy;
        if self.contains(x, y) {
            Some(y as usize * self.width + x as usize)
        } else {
            None
        }
    }

    /// Checked conversion of signed coordinates into a pixel.
    pub fn checked_pixel(&self, x: i64, y: i64) -> Result<Pixel> {
        if self.contains(x, y) {
            Ok(Pixel { x: x as usize, y: y as usize })
        } else {
            Err(Error::OutOfGrid { x, y, width: self.width, height: self.height })
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (0..self.len()).map(move |i| self.pixel(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub x: usize,
    pub y: usize,
}

impl Pixel {
    pub const fn new(x: usize, y: usize) -> Self {
        Pixel { x, y }
    }

    pub fn as_vec(self) -> Vec2 {
        Vec2::new(self.x as f64, self.y as f64)
    }
}

/// Per-pixel data of type `T` on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid2D,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type VectorField2 = Field<Vec2>;
pub type SpdTensorField = Field<Spd2>;

impl<T: Copy> Field<T> {
    pub fn new(grid: Grid2D, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Field { grid, values })
    }

    pub fn filled(grid: Grid2D, value: T) -> Self {
        Field { grid, values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for y in 0..grid.height() {
            for x in 0..grid.width() {
                values.push(f(x, y));
            }
        }
        Field { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[self.grid.index(x, y)]
    }

    #[inline]
    pub fn at(&self, p: Pixel) -> T {
        self.values[self.grid.index(p.x, p.y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        let i = self.grid.index(x, y);
        self.values[i] = v;
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: Copy, V: Copy>(&self, other: &Field<U>, f: impl Fn(T, U) -> V) -> Result<Field<V>> {
        if self.grid != other.grid {
            return Err(Error::SizeMismatch { expected: self.grid.len(), got: other.grid.len() });
        }
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}

impl ScalarField {
    /// `‖f‖_∞` over finite values.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl SpdTensorField {
    /// Builds a tensor field, rejecting any pixel that is not positive definite.
    pub fn new_spd(grid: Grid2D, values: Vec<Spd2>) -> Result<Self> {
        let field = Field::new(grid, values)?;
        field.check_positive_definite()?;
        Ok(field)
    }

    pub fn check_positive_definite(&self) -> Result<()> {
        match self.values.iter().position(|m| !m.is_positive_definite()) {
            Some(i) => {
                let p = self.grid.pixel(i);
                Err(Error::NotPositiveDefinite { x: p.x, y: p.y })
            }
            None => Ok(()),
        }
    }
}

/// Gradient by central differences in the interior and one-sided differences on the border.
pub fn central_gradient(f: &ScalarField) -> VectorField2 {
    let grid = f.grid();
    let (w, h) = (grid.width(), grid.height());
    let v = f.values();
    Field::from_fn(grid, |x, y| {
        let i = y * w + x;
        let dx = if x == 0 {
            v[i + 1] - v[i]
        } else if x == w - 1 {
            v[i] - v[i - 1]
        } else {
            0.5 * (v[i + 1] - v[i - 1])
        };
        let dy = if y == 0 {
            v[i + w] - v[i]
        } else if y == h - 1 {
            v[i] - v[i - w]
        } else {
            0.5 * (v[i + w] - v[i - w])
        };
        Vec2::new(dx, dy)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_tiny() {
        assert!(Grid2D::new(1, 5).is_err());
        assert!(Grid2D::new(2, 2).is_ok());
    }

    #[test]
    fn field_size_checked() {
        let g = Grid2D::new(3, 2).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 5]).is_err());
        let f = ScalarField::from_fn(g, |x, y| (10 * y + x) as f64);
        assert_eq!(f.get(2, 1), 12.0);
        assert_eq!(g.pixel(5), Pixel::new(2, 1));
    }

    #[test]
    fn offsets_respect_border() {
        let g = Grid2D::new(4, 3).unwrap();
        assert_eq!(g.offset(0, -1, 0), None);
        assert_eq!(g.offset(0, 1, 1), Some(5));
        assert_eq!(g.offset(11, 1, 0), None);
    }

    #[test]
    fn spd_field_validation() {
        let g = Grid2D::new(2, 2).unwrap();
        let mut vals = vec![Spd2::IDENTITY; 4];
        assert!(SpdTensorField::new_spd(g, vals.clone()).is_ok());
        vals[3] = Spd2::new(1.0, 2.0, 1.0);
        assert_eq!(SpdTensorField::new_spd(g, vals), Err(Error::NotPositiveDefinite { x: 1, y: 1 }));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = Grid2D::new(5, 4).unwrap();
        let f = ScalarField::filled(g, 3.5);
        assert!(central_gradient(&f).values().iter().all(|v| *v == Vec2::ZERO));
    }

    #[test]
    fn gradient_of_affine_is_exact() {
        let g = Grid2D::new(6, 5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| 2.0 * x as f64 + 3.0 * y as f64);
        let grad = central_gradient(&f);
        // one-sided differences are exact for affine data too
        for v in grad.values() {
            assert!((v.x - 2.0).abs() < 1e-12 && (v.y - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_quadratic_interior() {
        let g = Grid2D::new(8, 3).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (x * x) as f64);
        let grad = central_gradient(&f);
        for y in 0..3 {
            for x in 1..7 {
                assert_eq!(grad.get(x, y).x, 2.0 * x as f64);
            }
        }
    }
}
