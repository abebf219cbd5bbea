//! Single-qubit gate algebra: Haar sampling and the ZYZ angle form.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// A 2×2 single-qubit unitary, row-major.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SingleQubitGate {
    pub m: [[Complex64; 2]; 2],
}

impl SingleQubitGate {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        SingleQubitGate {
            m: [[one, zero], [zero, one]],
        }
    }

    /// Reconstructs the SU(2) matrix from ZYZ Euler angles (φ, θ, λ):
    /// U = Rz(φ) · Ry(θ) · Rz(λ), global phase dropped.
    pub fn from_zyz(angles: [f64; 3]) -> Self {
        let [phi, theta, lambda] = angles;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = |x: f64| Complex64::from_polar(1.0, x);
        SingleQubitGate {
            m: [
                [c * e(-(phi + lambda) / 2.0), -s * e(-(phi - lambda) / 2.0)],
                [s * e((phi - lambda) / 2.0), c * e((phi + lambda) / 2.0)],
            ],
        }
    }

    /// Extracts ZYZ Euler angles; the global phase is discarded.
    pub fn to_zyz(&self) -> [f64; 3] {
        let det = self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0];
        let alpha = det.arg() / 2.0;
        let strip = Complex64::from_polar(1.0, -alpha);
        let v00 = strip * self.m[0][0];
        let v10 = strip * self.m[1][0];
        let (c, s) = (v00.norm(), v10.norm());
        let theta = 2.0 * s.atan2(c);
        const EPS: f64 = 1e-12;
        if s <= EPS {
            // theta ≈ 0: only φ + λ is defined
            [-2.0 * v00.arg(), theta, 0.0]
        } else if c <= EPS {
            // theta ≈ π: only φ − λ is defined
            [v10.arg(), theta, -v10.arg()]
        } else {
            let a00 = v00.arg(); // −(φ + λ)/2
            let a10 = v10.arg(); // (φ − λ)/2
            [a10 - a00, theta, -a10 - a00]
        }
    }

    pub fn adjoint(&self) -> Self {
        SingleQubitGate {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    /// Max-abs deviation of U†U from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let a = self.adjoint();
        let mut dev: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut x = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    x += a.m[i][k] * self.m[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((x - expect).norm());
            }
        }
        dev
    }
}

/// Draws a Haar-random single-qubit unitary (modulo global phase).
///
/// A 2×2 complex-Gaussian (Ginibre) matrix is orthonormalized column by
/// column with the R-diagonal kept real positive, which pushes the Gaussian
/// measure onto the Haar measure.
pub fn sample_haar_single_qubit<R: Rng + ?Sized>(rng: &mut R) -> SingleQubitGate {
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for row in &mut g {
        for x in row.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *x = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    // Gram-Schmidt on columns
    let n0 = (g[0][0].norm_sqr() + g[1][0].norm_sqr()).sqrt();
    let q00 = g[0][0] / n0;
    let q10 = g[1][0] / n0;
    let r01 = q00.conj() * g[0][1] + q10.conj() * g[1][1];
    let p0 = g[0][1] - r01 * q00;
    let p1 = g[1][1] - r01 * q10;
    let n1 = (p0.norm_sqr() + p1.norm_sqr()).sqrt();
    SingleQubitGate {
        m: [[q00, p0 / n1], [q10, p1 / n1]],
    }
}

/// Haar draw already reduced to its ZYZ angle triple.
pub fn sample_haar_angles<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    sample_haar_single_qubit(rng).to_zyz()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let u = sample_haar_single_qubit(&mut rng);
            assert!(u.unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn zyz_round_trip_reproduces_su2_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let u = sample_haar_single_qubit(&mut rng);
            let v = SingleQubitGate::from_zyz(u.to_zyz());
            // compare after stripping u's global phase
            let det = u.m[0][0] * u.m[1][1] - u.m[0][1] * u.m[1][0];
            let strip = Complex64::from_polar(1.0, -det.arg() / 2.0);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (strip * u.m[i][j] - v.m[i][j]).norm() < 1e-12,
                        "entry ({i},{j}) mismatch"
                    );
                }
            }
        }
    }

    #[test]
    fn reconstruction_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let v = SingleQubitGate::from_zyz(sample_haar_angles(&mut rng));
            assert!(v.unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn axis_aligned_edge_cases() {
        // θ = 0 (diagonal) and θ = π (antidiagonal) gates
        for u in [
            SingleQubitGate::from_zyz([0.7, 0.0, 0.0]),
            SingleQubitGate::from_zyz([0.4, std::f64::consts::PI, -0.4]),
            SingleQubitGate::identity(),
        ] {
            let v = SingleQubitGate::from_zyz(u.to_zyz());
            for i in 0..2 {
                for j in 0..2 {
                    assert!((u.m[i][j] - v.m[i][j]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn haar_first_moment_of_top_left_entry() {
        // E |U00|^2 = 1/2 over the Haar measure
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_haar_single_qubit(&mut rng).m[0][0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean |U00|^2 = {mean}");
    }
}
