use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraMount {
    /// Fixed top-down view of `fov_rect`.
    #[default]
    Overhead,
    /// Top-down view of a `fov_rect`-sized window centered on the tool.
    Wrist,
}

/// Orthographic top-down camera. Pixel (0, 0) is the bottom-left corner of
/// the view and maps to `displacement` in robot coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub displacement: [f64; 3],
    pub fov_rect: Rect,
    pub resolution: [u32; 2],
    pub dropout_prob: f64,
    pub noise_sigma: f64,
    #[serde(default)]
    pub mount: CameraMount,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid camera: {0}")]
pub struct CameraError(pub String);

impl CameraModel {
    /// Overhead camera whose image covers `fov` at `px_per_mm` resolution.
    pub fn overhead(fov: Rect, px_per_mm: f64) -> Self {
        Self {
            displacement: [fov.min.x, fov.min.y, 0.0],
            fov_rect: fov,
            resolution: [
                (fov.width() * px_per_mm).round() as u32,
                (fov.height() * px_per_mm).round() as u32,
            ],
            dropout_prob: 0.0,
            noise_sigma: 0.0,
            mount: CameraMount::Overhead,
        }
    }

    pub fn with_noise(mut self, noise_sigma: f64, dropout_prob: f64) -> Self {
        self.noise_sigma = noise_sigma;
        self.dropout_prob = dropout_prob;
        self
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let f = &self.fov_rect;
        if !(f.width() > 0.0 && f.height() > 0.0) {
            return Err(CameraError("fov_rect must have positive area".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(CameraError("dropout_prob must be in [0, 1)".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(CameraError("noise_sigma must be non-negative".into()));
        }
        if self.resolution[0] == 0 || self.resolution[1] == 0 {
            return Err(CameraError("resolution must be positive".into()));
        }
        if (f.min.x - self.displacement[0]).abs() > 1e-9 || (f.min.y - self.displacement[1]).abs() > 1e-9 {
            return Err(CameraError("fov_rect must start at the displacement".into()));
        }
        Ok(())
    }

    /// Millimeters per pixel along x and y.
    pub fn scale(&self) -> (f64, f64) {
        (
            self.fov_rect.width() / f64::from(self.resolution[0]),
            self.fov_rect.height() / f64::from(self.resolution[1]),
        )
    }

    /// The camera as positioned for the current tool point.
    pub fn placed_at(&self, ee: [f64; 3]) -> CameraModel {
        match self.mount {
            CameraMount::Overhead => self.clone(),
            CameraMount::Wrist => {
                let f = Rect::from_center(
                    Point2::new(ee[0], ee[1]),
                    self.fov_rect.width() / 2.0,
                    self.fov_rect.height() / 2.0,
                );
                CameraModel {
                    displacement: [f.min.x, f.min.y, self.displacement[2]],
                    fov_rect: f,
                    ..self.clone()
                }
            }
        }
    }
}

/// Image pixel to robot millimeters: scale, then add the displacement.
pub fn project_to_robot(px: Point2, camera: &CameraModel) -> Point2 {
    let (sx, sy) = camera.scale();
    Point2::new(px.x * sx + camera.displacement[0], px.y * sy + camera.displacement[1])
}

pub fn unproject_to_image(p: Point2, camera: &CameraModel) -> Point2 {
    let (sx, sy) = camera.scale();
    Point2::new((p.x - camera.displacement[0]) / sx, (p.y - camera.displacement[1]) / sy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_addition_case() {
        let cam = CameraModel::overhead(Rect::new(Point2::new(100.0, 50.0), Point2::new(400.0, 350.0)), 1.0);
        cam.validate().unwrap();
        assert_eq!(project_to_robot(Point2::new(10.0, 20.0), &cam), Point2::new(110.0, 70.0));
        let ident = CameraModel::overhead(Rect::new(Point2::new(0.0, 0.0), Point2::new(640.0, 480.0)), 1.0);
        assert_eq!(project_to_robot(Point2::new(3.5, 7.25), &ident), Point2::new(3.5, 7.25));
    }

    #[test]
    fn wrist_mount_follows_tool() {
        let mut cam = CameraModel::overhead(Rect::new(Point2::new(0.0, 0.0), Point2::new(200.0, 100.0)), 2.0);
        cam.mount = CameraMount::Wrist;
        let placed = cam.placed_at([300.0, -40.0, 90.0]);
        placed.validate().unwrap();
        assert_eq!(placed.fov_rect.center(), Point2::new(300.0, -40.0));
        assert_eq!(placed.scale(), cam.scale());
    }

    #[test]
    fn rejects_bad_parameters() {
        let good = CameraModel::overhead(Rect::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0)), 1.0);
        assert!(good.clone().with_noise(0.0, 1.0).validate().is_err());
        let mut shifted = good;
        shifted.displacement[0] = 3.0;
        assert!(shifted.validate().is_err());
    }
}
