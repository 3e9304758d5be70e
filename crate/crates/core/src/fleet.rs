//! Fleet composition: how many vehicles of each type cover the demand.
//!
//! The continuous relaxation `sum(x_i * c_i) = n` is solved with a Newton
//! iteration using the least-norm step. Vehicle counts must be integers, so
//! [`integerize`] then picks the integer plan with minimal slack, breaking
//! ties by fewest vehicles and then by the lexicographically smallest count
//! vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleType {
    pub id: usize,
    pub capacity: u32,
    /// `None` means unbounded.
    pub max_count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub types: Vec<VehicleType>,
}

impl FleetSpec {
    /// Unbounded fleet with one type per capacity, ids assigned in order.
    pub fn unbounded(capacities: &[u32]) -> Self {
        FleetSpec {
            types: capacities
                .iter()
                .enumerate()
                .map(|(id, &capacity)| VehicleType {
                    id,
                    capacity,
                    max_count: None,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.types.is_empty() {
            return Err(Error::InvalidParameter("fleet has no vehicle types".into()));
        }
        for (i, t) in self.types.iter().enumerate() {
            if t.capacity == 0 {
                return Err(Error::InvalidParameter(format!(
                    "vehicle type {} has zero capacity",
                    t.id
                )));
            }
            if t.max_count == Some(0) {
                return Err(Error::InvalidParameter(format!(
                    "vehicle type {} has zero max_count",
                    t.id
                )));
            }
            if self.types[..i].iter().any(|o| o.id == t.id) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate vehicle type id {}",
                    t.id
                )));
            }
        }
        Ok(())
    }

    pub fn capacities(&self) -> Vec<u32> {
        self.types.iter().map(|t| t.capacity).collect()
    }

    pub fn get(&self, type_id: usize) -> Option<&VehicleType> {
        self.types.iter().find(|t| t.id == type_id)
    }

    /// Total capacity if every type is bounded.
    pub fn bounded_capacity(&self) -> Option<u64> {
        self.types
            .iter()
            .map(|t| t.max_count.map(|m| m as u64 * t.capacity as u64))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCount {
    pub type_id: usize,
    pub capacity: u32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FleetPlan {
    pub counts: Vec<TypeCount>,
    pub total_capacity: u64,
    pub slack: u64,
}

/// One concrete vehicle: the `index`-th vehicle of type `type_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleRef {
    pub type_id: usize,
    pub index: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vehicle {
    #[serde(flatten)]
    pub id: VehicleRef,
    pub capacity: u32,
}

impl FleetPlan {
    pub fn count_vector(&self) -> Vec<u32> {
        self.counts.iter().map(|c| c.count).collect()
    }

    pub fn vehicle_count(&self) -> u64 {
        self.counts.iter().map(|c| c.count as u64).sum()
    }

    /// Every planned vehicle, ordered by type then index.
    pub fn vehicles(&self) -> Vec<Vehicle> {
        self.counts
            .iter()
            .flat_map(|c| {
                (0..c.count).map(move |index| Vehicle {
                    id: VehicleRef {
                        type_id: c.type_id,
                        index,
                    },
                    capacity: c.capacity,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Starting point; the zero vector when `None`.
    pub x0: Option<Vec<f64>>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            epsilon: 1e-9,
            max_iterations: 50,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn capacity_sum(x: &[f64], caps: &[f64]) -> f64 {
    x.iter().zip(caps).map(|(a, b)| a * b).sum()
}

/// Solves `sum(x_i * c_i) - n = 0` by Newton iteration.
///
/// The Jacobian is the constant row `c`, so the step is the minimum-norm
/// solution of the linearized equation: `d = -F(x) * c / (c . c)`.
pub fn newton_solve(n: u64, spec: &FleetSpec, cfg: &NewtonConfig) -> Result<NewtonSolution> {
    spec.validate()?;
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidParameter(
            "max_iterations must be >= 1".into(),
        ));
    }
    let caps: Vec<f64> = spec.types.iter().map(|t| t.capacity as f64).collect();
    let mut x = match &cfg.x0 {
        Some(x0) if x0.len() != caps.len() => {
            return Err(Error::InvalidParameter(format!(
                "x0 has length {}, expected {}",
                x0.len(),
                caps.len()
            )))
        }
        Some(x0) => x0.clone(),
        None => vec![0.0; caps.len()],
    };
    let jj: f64 = caps.iter().map(|c| c * c).sum();
    let target = n as f64;

    let mut iterations = 0;
    loop {
        let residual = capacity_sum(&x, &caps) - target;
        if residual.abs() <= cfg.epsilon {
            return Ok(NewtonSolution {
                x,
                iterations,
                residual,
            });
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual,
                last_iterate: x,
            });
        }
        let scale = -residual / jj;
        for (xi, ci) in x.iter_mut().zip(&caps) {
            *xi += scale * ci;
        }
        iterations += 1;
    }
}

const UNREACHABLE: u32 = u32::MAX;

/// Rounds a real fleet vector to the best integer plan covering `n`.
pub fn integerize(x_star: &[f64], n: u64, spec: &FleetSpec) -> Result<FleetPlan> {
    spec.validate()?;
    if x_star.len() != spec.types.len() {
        return Err(Error::InvalidParameter(format!(
            "x* has length {}, expected {}",
            x_star.len(),
            spec.types.len()
        )));
    }
    if x_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("x* must be finite".into()));
    }
    // Negative components are clamped to zero; the integer plan itself is
    // fixed by the slack/count/lexicographic objective.
    let _relaxed: Vec<f64> = x_star.iter().map(|v| v.max(0.0)).collect();

    if let Some(avail) = spec.bounded_capacity() {
        if avail < n {
            return Err(Error::InsufficientFleet {
                available: avail,
                demand: n,
            });
        }
    }

    let caps: Vec<u64> = spec.types.iter().map(|t| t.capacity as u64).collect();
    let cmax = *caps.iter().max().expect("validated non-empty");
    // Any optimal plan loses coverage when one vehicle is removed, so its
    // capacity lies in [n, n + cmax).
    let limit = (n + cmax) as usize;
    let t = caps.len();

    let bound = |i: usize| -> u64 {
        let natural = n.div_ceil(caps[i]);
        match spec.types[i].max_count {
            Some(m) => natural.min(m as u64),
            None => natural,
        }
    };

    // fewest[i][s]: fewest vehicles of types i.. summing exactly to s.
    let mut fewest = vec![vec![UNREACHABLE; limit]; t + 1];
    fewest[t][0] = 0;
    for i in (0..t).rev() {
        let c = caps[i] as usize;
        let b = bound(i);
        let (head, tail) = fewest.split_at_mut(i + 1);
        let (cur, next) = (&mut head[i], &tail[0]);
        if spec.types[i].max_count.is_none() {
            for s in 0..limit {
                let mut best = next[s];
                if s >= c && cur[s - c] != UNREACHABLE {
                    best = best.min(cur[s - c] + 1);
                }
                cur[s] = best;
            }
        } else {
            for s in 0..limit {
                let mut best = UNREACHABLE;
                for k in 0..=b {
                    let used = k as usize * c;
                    if used > s {
                        break;
                    }
                    let r = next[s - used];
                    if r != UNREACHABLE {
                        best = best.min(r + k as u32);
                    }
                }
                cur[s] = best;
            }
        }
    }

    let total = (n as usize..limit)
        .find(|&s| fewest[0][s] != UNREACHABLE)
        .ok_or(Error::InsufficientFleet {
            available: spec.bounded_capacity().unwrap_or(u64::MAX),
            demand: n,
        })?;

    let mut counts = Vec::with_capacity(t);
    let mut remaining_sum = total;
    let mut remaining_vehicles = fewest[0][total];
    for i in 0..t {
        let c = caps[i] as usize;
        let k = (0..=bound(i) as u32)
            .find(|&k| {
                let used = k as usize * c;
                used <= remaining_sum
                    && k <= remaining_vehicles
                    && fewest[i + 1][remaining_sum - used] == remaining_vehicles - k
            })
            .expect("reconstruction follows a reachable state");
        remaining_sum -= k as usize * c;
        remaining_vehicles -= k;
        counts.push(TypeCount {
            type_id: spec.types[i].id,
            capacity: spec.types[i].capacity,
            count: k,
        });
    }
    debug_assert_eq!(remaining_sum, 0);

    Ok(FleetPlan {
        counts,
        total_capacity: total as u64,
        slack: total as u64 - n,
    })
}

/// Newton relaxation followed by integerization.
pub fn plan_fleet(n: u64, spec: &FleetSpec, cfg: &NewtonConfig) -> Result<FleetPlan> {
    let relaxed = newton_solve(n, spec, cfg)?;
    log::debug!(
        "newton converged in {} iteration(s), residual {:e}",
        relaxed.iterations,
        relaxed.residual
    );
    integerize(&relaxed.x, n, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NewtonConfig {
        NewtonConfig::default()
    }

    #[test]
    fn zero_clients_need_no_iteration() {
        let s = newton_solve(0, &FleetSpec::unbounded(&[4, 6]), &cfg()).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn single_type_exact_division() {
        let s = newton_solve(12, &FleetSpec::unbounded(&[4]), &cfg()).unwrap();
        assert_eq!(s.x, vec![3.0]);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn least_norm_step_two_types() {
        let s = newton_solve(10, &FleetSpec::unbounded(&[4, 6]), &cfg()).unwrap();
        // 10 * (4, 6) / 52
        assert!((s.x[0] - 0.769_230_769_230_769_3).abs() < 1e-12);
        assert!((s.x[1] - 1.153_846_153_846_153_7).abs() < 1e-12);
        assert!((4.0 * s.x[0] + 6.0 * s.x[1] - 10.0).abs() <= 1e-9);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn arbitrary_start_still_converges_in_one_step() {
        let c = NewtonConfig {
            x0: Some(vec![5.0, -2.0, 1.0]),
            ..cfg()
        };
        let s = newton_solve(23, &FleetSpec::unbounded(&[4, 6, 8]), &c).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.residual.abs() <= 1e-9);
    }

    #[test]
    fn exhausted_iterations_carry_last_iterate() {
        let c = NewtonConfig {
            max_iterations: 1,
            epsilon: 1e-300,
            x0: Some(vec![0.1]),
        };
        // 1/3 is not representable so a residual above 1e-300 survives.
        match newton_solve(1, &FleetSpec::unbounded(&[3]), &c) {
            Err(Error::NoConvergence { last_iterate, .. }) => assert_eq!(last_iterate.len(), 1),
            Ok(s) => assert!(s.residual.abs() <= 1e-300),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn bad_config_rejected() {
        let spec = FleetSpec::unbounded(&[4]);
        let c = NewtonConfig {
            epsilon: 0.0,
            ..cfg()
        };
        assert!(newton_solve(3, &spec, &c).is_err());
        let c = NewtonConfig {
            x0: Some(vec![0.0, 0.0]),
            ..cfg()
        };
        assert!(newton_solve(3, &spec, &c).is_err());
        assert!(FleetSpec::unbounded(&[]).validate().is_err());
        assert!(FleetSpec::unbounded(&[0]).validate().is_err());
    }

    #[test]
    fn integerize_examples() {
        let p = integerize(&[3.0], 12, &FleetSpec::unbounded(&[4])).unwrap();
        assert_eq!((p.count_vector(), p.slack), (vec![3], 0));

        let p = integerize(&[0.77, 1.15], 10, &FleetSpec::unbounded(&[4, 6])).unwrap();
        assert_eq!((p.count_vector(), p.slack), (vec![1, 1], 0));

        let p = integerize(&[1.4], 7, &FleetSpec::unbounded(&[5])).unwrap();
        assert_eq!(
            (p.count_vector(), p.slack, p.total_capacity),
            (vec![2], 3, 10)
        );
    }

    #[test]
    fn plan_fleet_examples() {
        let p = plan_fleet(0, &FleetSpec::unbounded(&[4, 6]), &cfg()).unwrap();
        assert_eq!((p.count_vector(), p.slack), (vec![0, 0], 0));
        assert!(p.vehicles().is_empty());

        let p = plan_fleet(10, &FleetSpec::unbounded(&[4, 6]), &cfg()).unwrap();
        assert_eq!(p.count_vector(), vec![1, 1]);

        // Enumeration: 24 = 3 x 8 is the only three-vehicle plan with slack 1.
        let p = plan_fleet(23, &FleetSpec::unbounded(&[4, 6, 8]), &cfg()).unwrap();
        assert_eq!((p.count_vector(), p.slack), (vec![0, 0, 3], 1));
    }

    #[test]
    fn bounded_fleet() {
        let spec = FleetSpec {
            types: vec![
                VehicleType {
                    id: 0,
                    capacity: 10,
                    max_count: Some(1),
                },
                VehicleType {
                    id: 1,
                    capacity: 3,
                    max_count: Some(2),
                },
            ],
        };
        let p = integerize(&[0.0, 0.0], 15, &spec).unwrap();
        assert_eq!((p.count_vector(), p.slack), (vec![1, 2], 1));

        match integerize(&[0.0, 0.0], 17, &spec) {
            Err(Error::InsufficientFleet {
                available: 16,
                demand: 17,
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vehicles_expand_in_type_order() {
        let p = plan_fleet(10, &FleetSpec::unbounded(&[4, 6]), &cfg()).unwrap();
        let v = p.vehicles();
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].id.type_id, v[0].capacity), (0, 4));
        assert_eq!((v[1].id.type_id, v[1].capacity), (1, 6));
    }
}
