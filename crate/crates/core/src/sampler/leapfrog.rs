use crate::model::LogDensity;
use crate::Real;

/// Position, momentum and the cached density at the position.
#[derive(Debug, Clone, PartialEq)]
pub struct LeapfrogState<T> {
    pub z: Vec<T>,
    pub m: Vec<T>,
    pub value: T,
    pub grad: Vec<T>,
}

impl<T: Real> LeapfrogState<T> {
    pub fn new<M: LogDensity<T> + ?Sized>(target: &M, z: Vec<T>, m: Vec<T>) -> Self {
        let mut grad = vec![T::zero(); z.len()];
        let value = target.value_and_grad(&z, &mut grad);
        LeapfrogState { z, m, value, grad }
    }

    /// `1/2 m^T M^{-1} m - log p(z)`.
    pub fn energy(&self, mass: Option<&[T]>) -> T {
        kinetic_energy(&self.m, mass) - self.value
    }
}

#[inline(always)]
pub(crate) fn kinetic_term<T: Real>(m: T, mass: Option<T>) -> T {
    match mass {
        Some(k) => m * m / k,
        None => m * m,
    }
}

pub fn kinetic_energy<T: Real>(m: &[T], mass: Option<&[T]>) -> T {
    let mut acc = T::zero();
    for (p, &mp) in m.iter().enumerate() {
        acc = acc + kinetic_term(mp, mass.map(|k| k[p]));
    }
    T::cast(0.5) * acc
}

#[inline(always)]
pub(crate) fn drift<T: Real>(z: T, m: T, eps: T, mass: Option<T>) -> T {
    match mass {
        Some(k) => z + eps * m / k,
        None => z + eps * m,
    }
}

/// One leapfrog step: half kick, drift, fresh gradient, half kick.
pub fn leapfrog_step<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    step_size: T,
    state: &mut LeapfrogState<T>,
    mass: Option<&[T]>,
) {
    let half = T::cast(0.5) * step_size;
    for p in 0..state.z.len() {
        state.m[p] = state.m[p] + half * state.grad[p];
        state.z[p] = drift(state.z[p], state.m[p], step_size, mass.map(|k| k[p]));
    }
    state.value = target.value_and_grad(&state.z, &mut state.grad);
    for p in 0..state.z.len() {
        state.m[p] = state.m[p] + half * state.grad[p];
    }
}

/// `steps` leapfrog steps.
pub fn integrate<T: Real, M: LogDensity<T> + ?Sized>(
    target: &M,
    step_size: T,
    steps: usize,
    state: &mut LeapfrogState<T>,
    mass: Option<&[T]>,
) {
    for _ in 0..steps {
        leapfrog_step(target, step_size, state, mass);
    }
}

/// A `P x lanes` tile of chains advanced together. Element-wise arithmetic
/// is the same as in [`leapfrog_step`].
pub(crate) struct Tile<T> {
    pub lanes: usize,
    pub z: Vec<T>,
    pub m: Vec<T>,
    pub grad: Vec<T>,
    pub value: Vec<T>,
}

impl<T: Real> Tile<T> {
    pub fn leapfrog<M: LogDensity<T> + ?Sized>(
        &mut self,
        target: &M,
        step_size: T,
        mass: Option<&[T]>,
    ) {
        let half = T::cast(0.5) * step_size;
        let lanes = self.lanes;
        for p in 0..target.dim() {
            let k = mass.map(|k| k[p]);
            let row = p * lanes..(p + 1) * lanes;
            let (z, m, g) = (&mut self.z[row.clone()], &mut self.m[row.clone()], &self.grad[row]);
            for b in 0..lanes {
                m[b] = m[b] + half * g[b];
                z[b] = drift(z[b], m[b], step_size, k);
            }
        }
        target.value_and_grad_lanes(&self.z, lanes, &mut self.value, &mut self.grad);
        for (m, &g) in self.m.iter_mut().zip(&self.grad) {
            *m = *m + half * g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianTarget;

    #[test]
    fn one_step_on_standard_normal() {
        let t = GaussianTarget::<f64>::standard(1);
        let mut s = LeapfrogState::new(&t, vec![1.0], vec![0.0]);
        leapfrog_step(&t, 0.1, &mut s, None);
        assert!((s.z[0] - 0.995).abs() < 1e-15);
        assert!((s.m[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn mass_of_two_halves_the_drift() {
        let t = GaussianTarget::<f64>::standard(3);
        let z0 = vec![0.0; 3];
        let m0 = vec![1.0, -2.0, 0.5];
        let mut unit = LeapfrogState::new(&t, z0.clone(), m0.clone());
        let mut heavy = LeapfrogState::new(&t, z0, m0);
        leapfrog_step(&t, 0.2, &mut unit, None);
        leapfrog_step(&t, 0.2, &mut heavy, Some(&[2.0, 2.0, 2.0]));
        for p in 0..3 {
            assert_eq!(heavy.z[p], 0.5 * unit.z[p]);
        }
    }

    #[test]
    fn tile_matches_single_chain_bitwise() {
        let t = GaussianTarget::<f32>::with_scales(&[0.5, 2.0]);
        let starts = [([0.3f32, -1.0], [0.7f32, 0.1]), ([1.5, 0.2], [-0.4, 1.1])];
        let mass = [1.5f32, 0.25];
        let mut tile = Tile {
            lanes: 2,
            z: vec![0.3, 1.5, -1.0, 0.2],
            m: vec![0.7, -0.4, 0.1, 1.1],
            grad: vec![0.0; 4],
            value: vec![0.0; 2],
        };
        t.value_and_grad_lanes(&tile.z.clone(), 2, &mut tile.value, &mut tile.grad);
        for _ in 0..5 {
            tile.leapfrog(&t, 0.3, Some(&mass));
        }
        for (b, (z, m)) in starts.iter().enumerate() {
            let mut s = LeapfrogState::new(&t, z.to_vec(), m.to_vec());
            integrate(&t, 0.3, 5, &mut s, Some(&mass));
            for p in 0..2 {
                assert_eq!(s.z[p].to_bits(), tile.z[p * 2 + b].to_bits());
                assert_eq!(s.m[p].to_bits(), tile.m[p * 2 + b].to_bits());
            }
            assert_eq!(s.value.to_bits(), tile.value[b].to_bits());
        }
    }
}
