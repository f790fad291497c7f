use crate::{ImgError, Result};

/// A grayscale image on a 2-D grid, row-major, intensities in `[0, 1]`.
///
/// Pixel centers sit at integer coordinates; `(0, 0)` is the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    /// Creates a raster from row-major data. Every value must be finite and
    /// `width * height` must be positive and match `data.len()`.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImgError::InvalidArgument(format!(
                "empty raster {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(ImgError::DimensionMismatch(format!(
                "{}x{} raster needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(ImgError::InvalidArgument(format!(
                "non-finite pixel value {v}"
            )));
        }
        Ok(Raster {
            width,
            height,
            data,
        })
    }

    /// Constant-valued raster.
    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Raster::new(width, height, vec![value; width * height])
    }

    /// Builds a raster by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = v;
    }

    /// Sample with edge replication for out-of-range integer coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Bilinear interpolation at a real-valued position, edge-replicated.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    }

    /// True when the real-valued position lies inside the pixel grid.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64
    }

    /// Crops the axis-aligned window `[x0, x0+w) x [y0, y0+h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Raster> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(ImgError::InvalidArgument(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        Raster::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Half-resolution downsample: 2x2 box average, odd trailing row/column
    /// folded into the last cell.
    pub fn downsample_half(&self) -> Raster {
        let w = (self.width + 1) / 2;
        let h = (self.height + 1) / 2;
        Raster::from_fn(w, h, |x, y| {
            let x0 = 2 * x;
            let y0 = 2 * y;
            let x1 = (x0 + 1).min(self.width - 1);
            let y1 = (y0 + 1).min(self.height - 1);
            0.25 * (self.get(x0, y0) + self.get(x1, y0) + self.get(x0, y1) + self.get(x1, y1))
        })
        .expect("downsample of a valid raster is valid")
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Root-mean-square difference against another raster of the same size.
    pub fn rms_diff(&self, other: &Raster) -> f64 {
        assert_eq!(self.width, other.width);
        assert_eq!(self.height, other.height);
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (sum / self.data.len() as f64).sqrt()
    }
}

/// Per-pixel displacement field `(u, v)` in pixels, same grid as its raster.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    width: usize,
    height: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(width: usize, height: usize) -> Self {
        VectorField {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
        }
    }

    pub fn new(width: usize, height: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != width * height || v.len() != width * height {
            return Err(ImgError::DimensionMismatch(format!(
                "field components must each hold {} values",
                width * height
            )));
        }
        if u.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(ImgError::InvalidArgument(
                "non-finite displacement".into(),
            ));
        }
        Ok(VectorField {
            width,
            height,
            u,
            v,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, du: f64, dv: f64) {
        let i = y * self.width + x;
        self.u[i] = du;
        self.v[i] = dv;
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn u_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn v_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    /// Negated field.
    pub fn negate(&self) -> VectorField {
        VectorField {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|c| -c).collect(),
            v: self.v.iter().map(|c| -c).collect(),
        }
    }

    /// Upsamples to `(width, height)` with bilinear interpolation, scaling
    /// displacements by the resolution ratio.
    pub fn upsample_to(&self, width: usize, height: usize) -> VectorField {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        let mut out = VectorField::zeros(width, height);
        let ur = Raster::new(self.width, self.height, self.u.clone()).expect("valid");
        let vr = Raster::new(self.width, self.height, self.v.clone()).expect("valid");
        for y in 0..height {
            for x in 0..width {
                let fx = x as f64 / sx;
                let fy = y as f64 / sy;
                out.set(
                    x,
                    y,
                    ur.sample_bilinear(fx, fy) * sx,
                    vr.sample_bilinear(fx, fy) * sy,
                );
            }
        }
        out
    }
}
