//! Axisymmetric domains described by a level set φ(x₁, ρ) < 0 in the
//! meridian half-plane ρ = |x'| ≥ 0.

use serde::{Deserialize, Serialize};

use crate::error::GreensError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    /// Axial coordinate of the centre; the centre lies on the x₁ axis.
    pub center: f64,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: f64, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn phi(&self, x: f64, rho: f64) -> f64 {
        (x - self.center).hypot(rho) - self.radius
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// A dumbbell lobe: the ball whose diameter is the axis interval [a, b].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lobe {
    pub a: f64,
    pub b: f64,
}

impl Lobe {
    pub fn ball(&self) -> Ball {
        Ball::new(0.5 * (self.a + self.b), 0.5 * (self.b - self.a))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Ball(Ball),
    Dumbbell { lobes: Vec<Lobe>, eta: f64 },
    DisjointUnion { balls: Vec<Ball> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Spatial dimension N.
    pub n: usize,
    #[serde(flatten)]
    pub kind: DomainKind,
}

/// Polynomial smooth minimum with blending width k. Nondecreasing in a
/// and b, nonincreasing in k, and equal to min(a, b) when |a - b| ≥ k.
fn smin(a: f64, b: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return a.min(b);
    }
    let h = (k - (a - b).abs()).max(0.0) / k;
    a.min(b) - h * h * k * 0.25
}

impl DomainSpec {
    pub fn ball(n: usize, center: f64, radius: f64) -> Self {
        DomainSpec { n, kind: DomainKind::Ball(Ball::new(center, radius)) }
    }

    pub fn unit_ball(n: usize) -> Self {
        Self::ball(n, 0.0, 1.0)
    }

    pub fn disjoint_union(n: usize, balls: Vec<Ball>) -> Self {
        DomainSpec { n, kind: DomainKind::DisjointUnion { balls } }
    }

    /// Equally spaced unit lobes with gap `gap` between consecutive lobes.
    pub fn unit_lobes(count: usize, gap: f64) -> Vec<Lobe> {
        (0..count)
            .map(|i| {
                let a = i as f64 * (2.0 + gap);
                Lobe { a, b: a + 2.0 }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), GreensError> {
        if self.n < 3 {
            return Err(GreensError::InvalidDomain(format!("dimension {} < 3", self.n)));
        }
        let check_balls = |balls: &[Ball]| -> Result<(), GreensError> {
            if balls.is_empty() {
                return Err(GreensError::InvalidDomain("no components".into()));
            }
            for b in balls {
                if !(b.radius > 0.0) || !b.center.is_finite() {
                    return Err(GreensError::InvalidDomain(format!("bad ball {b:?}")));
                }
            }
            for w in balls.windows(2) {
                if w[0].interval().1 >= w[1].interval().0 {
                    return Err(GreensError::InvalidDomain(
                        "components must be ordered along the axis and disjoint".into(),
                    ));
                }
            }
            Ok(())
        };
        match &self.kind {
            DomainKind::Ball(b) => check_balls(std::slice::from_ref(b)),
            DomainKind::DisjointUnion { balls } => check_balls(balls),
            DomainKind::Dumbbell { lobes, eta } => {
                for l in lobes {
                    if !(l.b > l.a) {
                        return Err(GreensError::InvalidDomain(format!("empty lobe {l:?}")));
                    }
                }
                let balls: Vec<Ball> = lobes.iter().map(Lobe::ball).collect();
                check_balls(&balls)?;
                if !(*eta >= 0.0) {
                    return Err(GreensError::InvalidDomain(format!("negative neck radius {eta}")));
                }
                if balls.iter().any(|b| *eta >= b.radius) {
                    return Err(GreensError::InvalidDomain(
                        "neck radius must be smaller than every lobe radius".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Balls making up the domain (the lobes, for a dumbbell).
    pub fn balls(&self) -> Vec<Ball> {
        match &self.kind {
            DomainKind::Ball(b) => vec![*b],
            DomainKind::DisjointUnion { balls } => balls.clone(),
            DomainKind::Dumbbell { lobes, .. } => lobes.iter().map(Lobe::ball).collect(),
        }
    }

    /// Connected components. A dumbbell with a positive neck is one
    /// component; with eta = 0 it falls apart into its lobes.
    pub fn components(&self) -> Vec<DomainSpec> {
        match &self.kind {
            DomainKind::Ball(_) => vec![self.clone()],
            DomainKind::Dumbbell { eta, .. } if *eta > 0.0 => vec![self.clone()],
            _ => self.balls().into_iter().map(|b| DomainSpec { n: self.n, kind: DomainKind::Ball(b) }).collect(),
        }
    }

    /// A dumbbell with zero neck is the disjoint union of its lobes.
    pub fn normalized(&self) -> DomainSpec {
        match &self.kind {
            DomainKind::Dumbbell { eta, .. } if *eta == 0.0 => {
                DomainSpec::disjoint_union(self.n, self.balls())
            }
            _ => self.clone(),
        }
    }

    pub fn phi(&self, x: f64, rho: f64) -> f64 {
        match &self.kind {
            DomainKind::Ball(b) => b.phi(x, rho),
            DomainKind::DisjointUnion { balls } => {
                balls.iter().map(|b| b.phi(x, rho)).fold(f64::INFINITY, f64::min)
            }
            DomainKind::Dumbbell { lobes, eta } => {
                let lobe = lobes.iter().map(|l| l.ball().phi(x, rho)).fold(f64::INFINITY, f64::min);
                if *eta <= 0.0 {
                    return lobe;
                }
                let c0 = lobes[0].ball().center;
                let c1 = lobes[lobes.len() - 1].ball().center;
                let dx = if x < c0 { c0 - x } else if x > c1 { x - c1 } else { 0.0 };
                let neck = dx.hypot(rho) - eta;
                // Fillet width equal to the neck radius.
                smin(lobe, neck, *eta)
            }
        }
    }

    pub fn contains(&self, x: f64, rho: f64) -> bool {
        self.phi(x, rho) < 0.0
    }

    /// Axial extent and maximal ρ of a bounding box.
    pub fn bounding_box(&self) -> (f64, f64, f64) {
        let balls = self.balls();
        let lo = balls.iter().map(|b| b.interval().0).fold(f64::INFINITY, f64::min);
        let hi = balls.iter().map(|b| b.interval().1).fold(f64::NEG_INFINITY, f64::max);
        let rmax = balls.iter().map(|b| b.radius).fold(0.0, f64::max);
        (lo, hi, rmax)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi, rmax) = self.bounding_box();
        (hi - lo).max(2.0 * rmax)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("domain serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Distance from an axis point to the boundary, exact for balls and
    /// unions of balls.
    pub fn axis_boundary_distance(&self, x: f64) -> Option<f64> {
        match &self.kind {
            DomainKind::Ball(b) => Some(b.radius - (x - b.center).abs()),
            DomainKind::DisjointUnion { balls } => balls
                .iter()
                .find(|b| (x - b.center).abs() < b.radius)
                .map(|b| b.radius - (x - b.center).abs()),
            DomainKind::Dumbbell { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smin_is_monotone_in_width() {
        assert!(smin(0.1, 0.2, 0.3) <= smin(0.1, 0.2, 0.2));
        assert_eq!(smin(0.1, 0.5, 0.3), 0.1);
    }

    #[test]
    fn dumbbell_contains_neck_midpoint() {
        let d = DomainSpec {
            n: 4,
            kind: DomainKind::Dumbbell { lobes: DomainSpec::unit_lobes(2, 0.5), eta: 0.2 },
        };
        d.validate().unwrap();
        assert!(d.contains(2.25, 0.1));
        assert!(!d.contains(2.25, 0.3));
    }

    #[test]
    fn overlapping_lobes_rejected() {
        let d = DomainSpec {
            n: 4,
            kind: DomainKind::Dumbbell { lobes: vec![Lobe { a: 0.0, b: 2.0 }, Lobe { a: 1.0, b: 3.0 }], eta: 0.1 },
        };
        assert!(d.validate().is_err());
    }
}
