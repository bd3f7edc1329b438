//! Direct solver for the weighted 5/7-point Dirichlet Laplacian on the full
//! interior of a lattice, by separable sine transforms.
//!
//! The operator is the graph Laplacian `(Kx)_i = Σ_axis w_axis (2x_i − x_{i+e} − x_{i−e})`
//! with zero values beyond the interior. Used to precondition the minimizer
//! and to build its harmonic starting guess.

use alloc::vec;
use alloc::vec::Vec;

use crate::lattice::GridDomain;
use crate::math;

/// Lines at least this long use the FFT path when the `fft` feature is on.
#[cfg(feature = "fft")]
const FFT_THRESHOLD: usize = 16;

#[derive(Clone)]
pub struct DirichletLaplacian {
    dim: usize,
    interior: [usize; 3],
    weights: [f64; 3],
    sines: [Vec<f64>; 3],
    #[cfg(feature = "fft")]
    plans: [Option<std::sync::Arc<dyn rustfft::Fft<f64>>>; 3],
    eigenvalues: Vec<f64>,
    scale: f64,
}

impl core::fmt::Debug for DirichletLaplacian {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DirichletLaplacian")
            .field("dim", &self.dim)
            .field("interior", &self.interior)
            .field("weights", &self.weights)
            .finish()
    }
}

impl DirichletLaplacian {
    /// Operator on the interior nodes of `domain` with per-axis edge weights.
    pub fn new(domain: &GridDomain, weights: [f64; 3]) -> Self {
        let dim = domain.dim();
        let mut interior = [1usize; 3];
        for (axis, n) in domain.nodes_per_axis().iter().enumerate() {
            interior[axis] = n - 2;
        }
        let mut sines: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        #[cfg(feature = "fft")]
        let mut plans: [Option<std::sync::Arc<dyn rustfft::Fft<f64>>>; 3] = [None, None, None];
        let mut scale = 1.0;
        for axis in 0..dim {
            let n = interior[axis];
            let denom = (n + 1) as f64;
            scale *= 2.0 / denom;
            #[cfg(feature = "fft")]
            if n >= FFT_THRESHOLD {
                plans[axis] = Some(rustfft::FftPlanner::new().plan_fft_forward(2 * (n + 1)));
                continue;
            }
            let mut table = vec![0.0; n * n];
            for j in 0..n {
                for k in 0..n {
                    table[j * n + k] = math::sin(core::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / denom);
                }
            }
            sines[axis] = table;
        }
        let total: usize = interior.iter().product();
        let mut eigenvalues = Vec::with_capacity(total);
        for i in 0..interior[0] {
            for j in 0..interior[1] {
                for k in 0..interior[2] {
                    let idx = [i, j, k];
                    let mut lambda = 0.0;
                    for axis in 0..dim {
                        let s = math::sin(
                            core::f64::consts::PI * (idx[axis] + 1) as f64 / (2.0 * (interior[axis] + 1) as f64),
                        );
                        lambda += weights[axis] * 4.0 * s * s;
                    }
                    eigenvalues.push(lambda);
                }
            }
        }
        DirichletLaplacian {
            dim,
            interior,
            weights,
            sines,
            #[cfg(feature = "fft")]
            plans,
            eigenvalues,
            scale,
        }
    }

    pub fn interior_shape(&self) -> [usize; 3] {
        self.interior
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Unnormalized DST-I along one axis through the odd extension of length `2(n+1)`.
    #[cfg(feature = "fft")]
    fn transform_axis_fft(&self, data: &mut [f64], axis: usize, plan: &dyn rustfft::Fft<f64>) {
        use rustfft::num_complex::Complex;
        let n = self.interior[axis];
        let inner: usize = self.interior[axis + 1..].iter().product();
        let outer: usize = self.interior[..axis].iter().product();
        let len = 2 * (n + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * n * inner + i;
                buf[0] = Complex::new(0.0, 0.0);
                buf[n + 1] = Complex::new(0.0, 0.0);
                for k in 0..n {
                    let v = data[base + k * inner];
                    buf[k + 1] = Complex::new(v, 0.0);
                    buf[len - 1 - k] = Complex::new(-v, 0.0);
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for k in 0..n {
                    data[base + k * inner] = -0.5 * buf[k + 1].im;
                }
            }
        }
    }

    fn transform_axis(&self, data: &mut [f64], axis: usize, scratch: &mut Vec<f64>) {
        #[cfg(feature = "fft")]
        if let Some(plan) = &self.plans[axis] {
            self.transform_axis_fft(data, axis, plan.as_ref());
            return;
        }
        let n = self.interior[axis];
        let inner: usize = self.interior[axis + 1..].iter().product();
        let outer: usize = self.interior[..axis].iter().product();
        let table = &self.sines[axis];
        scratch.resize(n * inner, 0.0);
        for o in 0..outer {
            let block = &mut data[o * n * inner..(o + 1) * n * inner];
            if inner == 1 {
                for (j, out) in scratch.iter_mut().enumerate() {
                    let row = &table[j * n..(j + 1) * n];
                    *out = row.iter().zip(block.iter()).map(|(s, x)| s * x).sum();
                }
            } else {
                scratch.iter_mut().for_each(|v| *v = 0.0);
                for j in 0..n {
                    let out = &mut scratch[j * inner..(j + 1) * inner];
                    for k in 0..n {
                        let s = table[j * n + k];
                        let src = &block[k * inner..(k + 1) * inner];
                        for (a, b) in out.iter_mut().zip(src) {
                            *a += s * b;
                        }
                    }
                }
            }
            block.copy_from_slice(scratch);
        }
    }

    /// Solves `K x = rhs` in place (interior layout, row-major).
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        assert_eq!(rhs.len(), self.len());
        let mut scratch = Vec::new();
        for axis in 0..self.dim {
            self.transform_axis(rhs, axis, &mut scratch);
        }
        for (v, lambda) in rhs.iter_mut().zip(&self.eigenvalues) {
            *v /= lambda;
        }
        for axis in 0..self.dim {
            self.transform_axis(rhs, axis, &mut scratch);
        }
        for v in rhs.iter_mut() {
            *v *= self.scale;
        }
    }

    /// Applies `K` (interior layout).
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.interior;
        let strides = [n[1] * n[2], n[2], 1];
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = [i, j, k];
                    let flat = i * strides[0] + j * strides[1] + k;
                    let mut acc = 0.0;
                    for axis in 0..self.dim {
                        let w = self.weights[axis];
                        acc += 2.0 * w * x[flat];
                        if idx[axis] > 0 {
                            acc -= w * x[flat - strides[axis]];
                        }
                        if idx[axis] + 1 < n[axis] {
                            acc -= w * x[flat + strides[axis]];
                        }
                    }
                    y[flat] = acc;
                }
            }
        }
    }
}

/// Interior node ordering helpers shared by the minimizer.
pub(crate) fn interior_to_node(domain: &GridDomain, idx: [usize; 3]) -> usize {
    let mut m = idx;
    for mi in m.iter_mut().take(domain.dim()) {
        *mi += 1;
    }
    domain.node_index(m)
}

/// Discrete harmonic function (5/7-point, weights `1/h²`) on the full grid
/// with the boundary-node values of `values`; interior entries are replaced.
pub fn harmonic_fill(domain: &GridDomain, values: &mut [f64]) {
    let dim = domain.dim();
    let mut weights = [0.0; 3];
    for (axis, h) in domain.spacing().iter().enumerate() {
        weights[axis] = 1.0 / (h * h);
    }
    let op = DirichletLaplacian::new(domain, weights);
    let shape = op.interior_shape();
    let mut rhs = vec![0.0; op.len()];
    let mut flat = 0;
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                let idx = [i, j, k];
                let node = domain.node_multi_index(interior_to_node(domain, idx));
                let mut acc = 0.0;
                for axis in 0..dim {
                    for step in [-1isize, 1] {
                        let mut nb = node;
                        nb[axis] = (nb[axis] as isize + step) as usize;
                        if domain.is_boundary_node(nb) {
                            acc += weights[axis] * values[domain.node_index(nb)];
                        }
                    }
                }
                rhs[flat] = acc;
                flat += 1;
            }
        }
    }
    op.solve_in_place(&mut rhs);
    let mut flat = 0;
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                values[interior_to_node(domain, [i, j, k])] = rhs[flat];
                flat += 1;
            }
        }
    }
}
