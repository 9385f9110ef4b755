use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{player::DEFAULT_CHEAT_TOLERANCE, HostStrategy, NotepadPolicy};
use crate::engine::PrizeState;
use crate::hilbert::{
    cross, inner, orthogonal_complement_vector, DensityOperator, Mat3, StateVector,
};

fn default_samples() -> usize {
    2000
}

fn default_bandwidth() -> f64 {
    0.01
}

/// What a Bayesian player assumes about the host, used to form the
/// posterior state of the prize given the announced door.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HostModel {
    /// Unitarily invariant prize; closed form `p/3 + 2(1−p−q)/3`.
    Haar,
    /// Finite catalog; posterior by enumeration.
    FiniteSet { vectors: Vec<StateVector>, weights: Vec<f64> },
    /// Real prize; the announced door determines it.
    RealVector,
    /// Anything else: draw preparations from the host and weight each by how
    /// close its door would be to the announced one.
    Simulated {
        host: Box<HostStrategy>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_bandwidth")]
        bandwidth: f64,
    },
}

impl HostModel {
    pub fn of(host: &HostStrategy) -> HostModel {
        match host {
            HostStrategy::Haar
            | HostStrategy::Entangled {
                policy: NotepadPolicy::TransposeOfPlayerTriple,
            } => HostModel::Haar,
            HostStrategy::RealVector => HostModel::RealVector,
            HostStrategy::Axes { .. }
            | HostStrategy::FiniteSet(_)
            | HostStrategy::Entangled {
                policy: NotepadPolicy::FixedPovm(_),
            } => {
                let catalog = host.catalog().expect("these hosts have catalogs");
                HostModel::FiniteSet {
                    vectors: catalog.vectors().to_vec(),
                    weights: catalog.probabilities().to_vec(),
                }
            }
            other => HostModel::Simulated {
                host: Box::new(other.clone()),
                samples: default_samples(),
                bandwidth: default_bandwidth(),
            },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            HostModel::Haar => "haar",
            HostModel::FiniteSet { .. } => "finite",
            HostModel::RealVector => "real",
            HostModel::Simulated { .. } => "simulated",
        }
    }

    /// Posterior prize state given the first choice and the announced door,
    /// or `None` when the model assigns the announcement zero likelihood.
    pub fn posterior<R: Rng + ?Sized>(
        &self,
        phi: Option<&StateVector>,
        chi: &StateVector,
        rng: &mut R,
    ) -> Option<DensityOperator> {
        match self {
            HostModel::Haar => {
                let q = chi.projector();
                let rest = Mat3::identity() - q.matrix();
                let m = match phi {
                    Some(phi) => {
                        let p = *phi.projector().matrix();
                        p.scale(1.0 / 3.0) + (rest - p).scale(2.0 / 3.0)
                    }
                    None => rest.scale(0.5),
                };
                DensityOperator::normalized(m).ok()
            }
            HostModel::FiniteSet { vectors, weights } => {
                let consistent = |psi: &StateVector| inner(chi.as_vec(), psi.as_vec()).norm() < DEFAULT_CHEAT_TOLERANCE;
                let on_phi = |psi: &StateVector| phi.is_some_and(|phi| phi.same_ray(psi, 1e-12));
                // A vector on the player's ray leaves the door free, so it
                // explains any particular door with zero likelihood next to
                // a vector that forces it.
                let mut m = Mat3::zeros();
                for (psi, &w) in vectors.iter().zip(weights) {
                    if consistent(psi) && !on_phi(psi) {
                        m += psi.projector().matrix().scale(w);
                    }
                }
                if m.trace().re <= 0.0 {
                    for (psi, &w) in vectors.iter().zip(weights) {
                        if consistent(psi) {
                            m += psi.projector().matrix().scale(w);
                        }
                    }
                }
                DensityOperator::normalized(m).ok()
            }
            HostModel::RealVector => {
                let v = chi.as_vec();
                let re = v.map(|z| crate::hilbert::Complex64::new(z.re, 0.0));
                let im = v.map(|z| crate::hilbert::Complex64::new(z.im, 0.0));
                let psi = StateVector::new(cross(&re, &im)).ok()?;
                Some(DensityOperator::pure(&psi))
            }
            HostModel::Simulated {
                host,
                samples,
                bandwidth,
            } => {
                let mut m = Mat3::zeros();
                let mut total = 0.0;
                for _ in 0..*samples {
                    let PrizeState::Pure(psi) = host.prepare(rng).prize else {
                        return None;
                    };
                    let mismatch = match phi {
                        Some(phi) => match orthogonal_complement_vector(phi, &psi) {
                            Ok(door) => 1.0 - door.overlap(chi),
                            Err(_) => continue,
                        },
                        None => chi.overlap(&psi),
                    };
                    let w = (-mismatch / bandwidth).exp();
                    m += psi.projector().matrix().scale(w);
                    total += w;
                }
                if total <= 0.0 {
                    return None;
                }
                DensityOperator::normalized(m).ok()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RandomStream;

    #[test]
    fn haar_posterior_is_one_third_on_the_first_door() {
        let mut rng = RandomStream::new(1, 0);
        let rho = HostModel::Haar
            .posterior(Some(&StateVector::basis(0)), &StateVector::basis(1), &mut rng)
            .unwrap();
        assert!((rho.expectation(&StateVector::basis(0).projector()) - 1.0 / 3.0).abs() < 1e-15);
        assert!(rho.expectation(&StateVector::basis(1).projector()).abs() < 1e-15);
        assert!((rho.expectation(&StateVector::basis(2).projector()) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn finite_posterior_singles_out_the_forced_vector() {
        let mut rng = RandomStream::new(2, 0);
        let model = HostModel::of(&HostStrategy::axes());
        let phi = StateVector::real(1.0, 1.0, 1.0).unwrap();
        let chi = StateVector::real(0.0, 1.0, -1.0).unwrap();
        let rho = model.posterior(Some(&phi), &chi, &mut rng).unwrap();
        assert!(rho.top_eigenvector().same_ray(&StateVector::basis(0), 1e-12));
    }

    #[test]
    fn finite_posterior_with_prize_on_first_door() {
        let mut rng = RandomStream::new(3, 0);
        let model = HostModel::of(&HostStrategy::axes());
        let rho = model
            .posterior(Some(&StateVector::basis(0)), &StateVector::basis(1), &mut rng)
            .unwrap();
        // e3 forces door e2 exactly; e1 leaves the door free.
        assert!(rho.top_eigenvector().same_ray(&StateVector::basis(2), 1e-12));
    }

    #[test]
    fn real_posterior_is_the_cross_product() {
        let mut rng = RandomStream::new(4, 0);
        let phi = StateVector::from_components([
            crate::hilbert::c(1.0, 0.0),
            crate::hilbert::c(0.0, 1.0),
            crate::hilbert::c(0.0, 0.0),
        ])
        .unwrap();
        let psi = StateVector::real(0.3, -0.5, 0.8).unwrap();
        let chi = orthogonal_complement_vector(&phi, &psi).unwrap();
        let rho = HostModel::RealVector.posterior(Some(&phi), &chi, &mut rng).unwrap();
        assert!(rho.top_eigenvector().same_ray(&psi, 1e-12));
    }
}
