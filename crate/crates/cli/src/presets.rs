//! Named boundary-condition presets.

use std::f64::consts::PI;
use std::sync::Arc;

use anyhow::{anyhow, bail, Result};
use qlab_core::el::plate_bc;
use qlab_core::grid::{radial_bc, BoundaryValues};
use qlab_core::vec3::{self, Vec3};
use qlab_core::{Grid, QTensor, SNField, Shape};

pub const NAMES: &str = "hybrid-orthogonal, hybrid-parallel(angle), radial(s0)";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// `e_x` at `x = 0`, `e_z` at the far plate.
    HybridOrthogonal,
    /// Both plates along `(cos a, 0, sin a)`.
    HybridParallel { angle: f64 },
    /// `s0 x/|x|` on a disk or ball.
    Radial,
}

/// Parses `name` or `name(arg)`. The argument of `radial(s0)` overrides
/// `--s0`, that of `hybrid-parallel(angle)` overrides `--angle`.
pub fn parse(text: &str, angle: Option<f64>, s0: Option<f64>) -> Result<(Preset, Option<f64>)> {
    let text = text.trim();
    let (name, arg) = match text.split_once('(') {
        Some((name, tail)) => {
            let inner = tail
                .strip_suffix(')')
                .ok_or_else(|| anyhow!("preset '{text}': missing ')'"))?;
            let v: f64 = inner
                .trim()
                .parse()
                .map_err(|_| anyhow!("preset '{text}': '{inner}' is not a number"))?;
            (name.trim(), Some(v))
        }
        None => (text, None),
    };
    match name {
        "hybrid-orthogonal" if arg.is_none() => Ok((Preset::HybridOrthogonal, s0)),
        "hybrid-parallel" => Ok((
            Preset::HybridParallel {
                angle: arg.or(angle).unwrap_or(0.0),
            },
            s0,
        )),
        "radial" => {
            let s0 = arg
                .or(s0)
                .ok_or_else(|| anyhow!("the radial preset needs --s0 (or radial(s0))"))?;
            Ok((Preset::Radial, Some(s0)))
        }
        _ => bail!("unknown boundary preset '{text}' (valid: {NAMES})"),
    }
}

impl Preset {
    fn plates(self) -> Option<(Vec3<f64>, Vec3<f64>)> {
        match self {
            Preset::HybridOrthogonal => Some(([1.0, 0.0, 0.0], [0.0, 0.0, 1.0])),
            Preset::HybridParallel { angle } => {
                let n = [angle.cos(), 0.0, angle.sin()];
                Some((n, n))
            }
            Preset::Radial => None,
        }
    }

    pub fn check_domain(self, shape: &Shape<f64>) -> Result<()> {
        match (self, shape) {
            (Preset::Radial, Shape::Disk { .. } | Shape::Ball { .. }) => Ok(()),
            (Preset::Radial, _) => bail!("the radial preset needs a disk or ball domain"),
            (_, Shape::Interval { .. }) => Ok(()),
            _ => bail!("hybrid presets are defined on interval domains"),
        }
    }

    pub fn tensor_bc(self, grid: &Grid<f64>, s0: f64) -> Result<BoundaryValues<f64, QTensor<f64>>> {
        match self.plates() {
            Some((a, b)) => Ok(plate_bc(
                grid,
                QTensor::uniaxial(s0, &a)?,
                QTensor::uniaxial(s0, &b)?,
            )?),
            None => Ok(radial_bc(s0, grid)?),
        }
    }

    /// Start for the `(s, n)` flow: on intervals the director turns at
    /// constant speed between the plates, on curved domains it is radial
    /// with `s = s0 (r/R)^2`.
    pub fn sn_start(self, grid: Arc<Grid<f64>>, s0: f64) -> Result<SNField<f64>> {
        let radius = grid.spec().radius();
        let length = match grid.spec().shape {
            Shape::Interval { length } => length,
            _ => 1.0,
        };
        let plates = self.plates();
        let field = SNField::from_fn(grid, |x| match plates {
            Some((a, b)) => (s0, turn(&a, &b, x[0] / length)),
            None => {
                let r = vec3::norm(x);
                let big_r = radius.unwrap_or(1.0);
                let n = if r == 0.0 {
                    [0.0, 0.0, 1.0]
                } else {
                    vec3::scale(x, 1.0 / r)
                };
                (s0 * (r / big_r).min(1.0).powi(2), n)
            }
        })?;
        Ok(field)
    }
}

/// Unit vector a fraction `t` of the way from `a` to `b` along the shorter
/// great circle (lines, so `b` may be flipped).
fn turn(a: &Vec3<f64>, b: &Vec3<f64>, t: f64) -> Vec3<f64> {
    let b = if vec3::dot(a, b) < 0.0 {
        vec3::scale(b, -1.0)
    } else {
        *b
    };
    let angle = vec3::dot(a, &b).clamp(-1.0, 1.0).acos();
    if angle < 1e-12 {
        return *a;
    }
    let perp = vec3::normalize(&vec3::sub(&b, &vec3::scale(a, angle.cos()))).unwrap_or(*a);
    let phi = (t * angle).clamp(0.0, PI);
    vec3::add(&vec3::scale(a, phi.cos()), &vec3::scale(&perp, phi.sin()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names() {
        assert_eq!(
            parse("hybrid-orthogonal", None, None).unwrap().0,
            Preset::HybridOrthogonal
        );
        assert_eq!(
            parse("hybrid-parallel(0.5)", Some(0.1), None).unwrap().0,
            Preset::HybridParallel { angle: 0.5 }
        );
        assert_eq!(
            parse("radial(1.2)", None, None).unwrap(),
            (Preset::Radial, Some(1.2))
        );
        assert!(parse("radial", None, None).is_err());
        let msg = parse("helical", None, None).unwrap_err().to_string();
        assert!(msg.contains("hybrid-orthogonal") && msg.contains("radial(s0)"));
    }

    #[test]
    fn turn_ends_on_the_plates() {
        let (a, b) = ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert_eq!(turn(&a, &b, 0.0), a);
        assert!(vec3::norm(&vec3::sub(&turn(&a, &b, 1.0), &b)) < 1e-15);
    }
}
