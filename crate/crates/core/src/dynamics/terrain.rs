//! Ground models: flat plane, uniform slope, or a sampled heightfield.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::units::{m_to_mm, mm_to_m};

use super::DynamicsError;

/// Default contact spring stiffness, N/m.
pub const DEFAULT_CONTACT_STIFFNESS: f64 = 5000.0;
/// Default contact normal damping, N·s/m.
pub const DEFAULT_CONTACT_DAMPING: f64 = 50.0;
/// Default tangential viscous coefficient regularizing Coulomb friction,
/// N·s/m.
pub const DEFAULT_TANGENTIAL_DAMPING: f64 = 200.0;

/// Regular grid of heights, centered on the world origin.
///
/// Heights are stored row-major: `heights_m[row * cols + col]`, with `col`
/// indexing x and `row` indexing y. Queries outside the grid clamp to the
/// edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightfield {
    pub cols: usize,
    pub rows: usize,
    pub cell_size_m: f64,
    pub heights_m: Vec<f64>,
}

impl Heightfield {
    pub fn new(
        cols: usize,
        rows: usize,
        cell_size_m: f64,
        heights_m: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        if cols < 2 || rows < 2 {
            return Err(DynamicsError::InvalidTerrain(
                "heightfield needs at least a 2x2 grid".into(),
            ));
        }
        if cell_size_m <= 0.0 {
            return Err(DynamicsError::InvalidTerrain(
                "heightfield cell size must be positive".into(),
            ));
        }
        if heights_m.len() != cols * rows {
            return Err(DynamicsError::InvalidTerrain(format!(
                "heightfield expects {} values, got {}",
                cols * rows,
                heights_m.len()
            )));
        }
        if heights_m.iter().any(|h| !h.is_finite()) {
            return Err(DynamicsError::InvalidTerrain(
                "heightfield contains non-finite heights".into(),
            ));
        }
        Ok(Self {
            cols,
            rows,
            cell_size_m,
            heights_m,
        })
    }

    /// Build a heightfield by sampling `f(x, y) -> height_m` on the grid.
    pub fn from_fn(
        cols: usize,
        rows: usize,
        cell_size_m: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, DynamicsError> {
        let half_x = (cols - 1) as f64 / 2.0;
        let half_y = (rows - 1) as f64 / 2.0;
        let mut heights = Vec::with_capacity(cols * rows);
        for row in 0..rows {
            for col in 0..cols {
                let x = (col as f64 - half_x) * cell_size_m;
                let y = (row as f64 - half_y) * cell_size_m;
                heights.push(f(x, y));
            }
        }
        Self::new(cols, rows, cell_size_m, heights)
    }

    /// Parse the plain-text grid format: a header line `cols rows
    /// cell_size_mm`, then `cols * rows` row-major heights in mm separated
    /// by whitespace.
    pub fn parse(text: &str) -> Result<Self, DynamicsError> {
        let mut tokens = text.split_whitespace();
        let mut header = |name: &str| -> Result<f64, DynamicsError> {
            tokens
                .next()
                .ok_or_else(|| {
                    DynamicsError::InvalidTerrain(format!("heightfield header missing {name}"))
                })?
                .parse::<f64>()
                .map_err(|_| {
                    DynamicsError::InvalidTerrain(format!("heightfield header: bad {name}"))
                })
        };
        let cols = header("cols")? as usize;
        let rows = header("rows")? as usize;
        let cell_size_mm = header("cell_size_mm")?;
        let heights: Result<Vec<f64>, _> = tokens
            .map(|t| {
                t.parse::<f64>().map(mm_to_m).map_err(|_| {
                    DynamicsError::InvalidTerrain(format!("heightfield: bad height value '{t}'"))
                })
            })
            .collect();
        Self::new(cols, rows, mm_to_m(cell_size_mm), heights?)
    }

    pub fn load(path: &Path) -> Result<Self, DynamicsError> {
        let text = fs::read_to_string(path).map_err(|e| {
            DynamicsError::InvalidTerrain(format!("cannot read heightfield {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Serialize to the plain-text grid format (mm).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {}",
            self.cols,
            self.rows,
            m_to_mm(self.cell_size_m)
        );
        for row in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|col| format!("{}", m_to_mm(self.heights_m[row * self.cols + col])))
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Bilinear height and analytic surface normal at a world (x, y).
    pub fn sample(&self, x: f64, y: f64) -> (f64, Vector3<f64>) {
        let half_x = (self.cols - 1) as f64 / 2.0;
        let half_y = (self.rows - 1) as f64 / 2.0;
        let gx = (x / self.cell_size_m + half_x).clamp(0.0, (self.cols - 1) as f64);
        let gy = (y / self.cell_size_m + half_y).clamp(0.0, (self.rows - 1) as f64);
        let c0 = (gx.floor() as usize).min(self.cols - 2);
        let r0 = (gy.floor() as usize).min(self.rows - 2);
        let u = gx - c0 as f64;
        let v = gy - r0 as f64;
        let h = |r: usize, c: usize| self.heights_m[r * self.cols + c];
        let h00 = h(r0, c0);
        let h10 = h(r0, c0 + 1);
        let h01 = h(r0 + 1, c0);
        let h11 = h(r0 + 1, c0 + 1);
        let height = (1.0 - u) * (1.0 - v) * h00 + u * (1.0 - v) * h10
            + (1.0 - u) * v * h01
            + u * v * h11;
        let dz_dx = ((1.0 - v) * (h10 - h00) + v * (h11 - h01)) / self.cell_size_m;
        let dz_dy = ((1.0 - u) * (h01 - h00) + u * (h11 - h10)) / self.cell_size_m;
        let normal = Vector3::new(-dz_dx, -dz_dy, 1.0).normalize();
        (height, normal)
    }
}

/// Shape of the ground.
#[derive(Debug, Clone, PartialEq)]
pub enum TerrainKind {
    Flat,
    /// Plane rising along +x at the given angle.
    Slope { angle_rad: f64 },
    Heightfield(Heightfield),
}

/// Ground model: shape plus contact material parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Terrain {
    pub kind: TerrainKind,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Penalty spring stiffness, N/m.
    pub contact_stiffness: f64,
    /// Normal damping, N·s/m.
    pub contact_damping: f64,
    /// Tangential viscous coefficient, N·s/m.
    pub tangential_damping: f64,
}

impl Terrain {
    pub fn new(kind: TerrainKind, friction: f64) -> Self {
        Self {
            kind,
            friction,
            contact_stiffness: DEFAULT_CONTACT_STIFFNESS,
            contact_damping: DEFAULT_CONTACT_DAMPING,
            tangential_damping: DEFAULT_TANGENTIAL_DAMPING,
        }
    }

    pub fn flat(friction: f64) -> Self {
        Self::new(TerrainKind::Flat, friction)
    }

    pub fn slope(angle_rad: f64, friction: f64) -> Self {
        Self::new(TerrainKind::Slope { angle_rad }, friction)
    }

    pub fn heightfield(hf: Heightfield, friction: f64) -> Self {
        Self::new(TerrainKind::Heightfield(hf), friction)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.friction < 0.0 {
            return Err(DynamicsError::InvalidTerrain(
                "friction must be non-negative".into(),
            ));
        }
        if self.contact_stiffness <= 0.0 {
            return Err(DynamicsError::InvalidTerrain(
                "contact_stiffness must be positive".into(),
            ));
        }
        if self.contact_damping < 0.0 || self.tangential_damping < 0.0 {
            return Err(DynamicsError::InvalidTerrain(
                "damping must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Surface height and outward normal under a world (x, y).
    pub fn surface(&self, x: f64, y: f64) -> (f64, Vector3<f64>) {
        match &self.kind {
            TerrainKind::Flat => (0.0, Vector3::z()),
            TerrainKind::Slope { angle_rad } => {
                let height = angle_rad.tan() * x;
                let normal = Vector3::new(-angle_rad.sin(), 0.0, angle_rad.cos());
                (height, normal)
            }
            TerrainKind::Heightfield(hf) => hf.sample(x, y),
        }
    }

    /// Penetration depth of a point below the surface, measured along the
    /// surface normal. Positive means penetrating.
    pub fn point_penetration(&self, p: &Point3<f64>) -> (f64, Vector3<f64>) {
        let (height, normal) = self.surface(p.x, p.y);
        let surface_point = Point3::new(p.x, p.y, height);
        let depth = (surface_point - p).dot(&normal);
        (depth, normal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_surface_is_zero_with_up_normal() {
        let t = Terrain::flat(0.8);
        let (h, n) = t.surface(3.0, -2.0);
        assert_eq!(h, 0.0);
        assert_eq!(n, Vector3::z());
    }

    #[test]
    fn slope_height_and_normal() {
        let angle = 15.0_f64.to_radians();
        let t = Terrain::slope(angle, 0.8);
        let (h, n) = t.surface(1.0, 0.0);
        assert_relative_eq!(h, angle.tan(), epsilon = 1e-12);
        assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(n.z, angle.cos(), epsilon = 1e-12);
        // A point on the plane has zero penetration.
        let (pen, _) = t.point_penetration(&Point3::new(1.0, 5.0, angle.tan()));
        assert_relative_eq!(pen, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn heightfield_text_round_trip() {
        let text = "3 2 100\n0 10 20\n5 15 25\n";
        let hf = Heightfield::parse(text).unwrap();
        assert_eq!(hf.cols, 3);
        assert_eq!(hf.rows, 2);
        assert_relative_eq!(hf.cell_size_m, 0.1);
        assert_relative_eq!(hf.heights_m[1], 0.010);
        let hf2 = Heightfield::parse(&hf.to_text()).unwrap();
        assert_eq!(hf, hf2);
    }

    #[test]
    fn heightfield_rejects_bad_shapes() {
        assert!(Heightfield::parse("2 2 100\n1 2 3").is_err());
        assert!(Heightfield::parse("1 2 100\n1 2").is_err());
        assert!(Heightfield::parse("2 2 0\n1 2 3 4").is_err());
    }

    #[test]
    fn heightfield_bilinear_interpolates_and_clamps() {
        // Plane z = x sampled on a grid reproduces itself between nodes.
        let hf = Heightfield::from_fn(5, 5, 0.1, |x, _| x).unwrap();
        let (h, n) = hf.sample(0.05, 0.03);
        assert_relative_eq!(h, 0.05, epsilon = 1e-12);
        assert_relative_eq!(n.x, -n.z * 1.0, epsilon = 1e-12);
        // Far outside the grid the edge value holds.
        let (h_out, _) = hf.sample(10.0, 0.0);
        assert_relative_eq!(h_out, 0.2, epsilon = 1e-12);
    }
}
