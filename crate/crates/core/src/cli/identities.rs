//! Randomized checks of the pointwise tensor identities.

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{
    bulk_derivative, bulk_energy, cancellation_residual, corotation, ericksen_stress, sym_antisym,
    MaterialConstants, Mat3, QTensor, Vec3,
};

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub name: &'static str,
    pub samples: usize,
    pub failures: usize,
    /// Largest relative error seen.
    pub worst: f64,
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn random_q(rng: &mut impl Rng) -> QTensor {
    QTensor(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

pub fn random_mat(rng: &mut impl Rng) -> Mat3 {
    Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_material(rng: &mut impl Rng) -> MaterialConstants {
    MaterialConstants {
        a: rng.gen_range(-1.0..1.0),
        b: rng.gen_range(0.0..2.0),
        c: rng.gen_range(0.1..2.0),
        gamma: 1.0,
        mu: 1.0,
    }
}

/// `max_c |∂f_b/∂q_c (finite difference) − ∂f_b/∂Q : B_c| / ‖∂f_b/∂Q‖` over
/// the orthonormal basis `B_c`.
pub fn bulk_gradient_error(q: &QTensor, mc: &MaterialConstants) -> f64 {
    let eps = 1e-5;
    let exact = bulk_derivative(q, mc);
    let scale = exact.norm().max(1e-12);
    QTensor::basis()
        .iter()
        .map(|b| {
            let fd = (bulk_energy(&(*q + *b * eps), mc) - bulk_energy(&(*q - *b * eps), mc)) / (2.0 * eps);
            (fd - exact.ddot(b)).abs() / scale
        })
        .fold(0.0, f64::max)
}

fn check(name: &'static str, samples: usize, tolerance: f64, mut err: impl FnMut() -> f64) -> IdentityReport {
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let e = err();
        worst = worst.max(e);
        if !(e <= tolerance) {
            failures += 1;
        }
    }
    IdentityReport { name, samples, failures, worst, tolerance }
}

pub fn run_identities(samples: usize, seed: u64) -> Vec<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    out.push(check("corotation/stress cancellation", samples, 1e-12, || {
        let (q, h, g) = (random_q(&mut rng), random_q(&mut rng), random_mat(&mut rng));
        let scale = q.norm() * h.norm() * g.norm();
        cancellation_residual(&q, &h, &g).abs() / scale
    }));
    out.push(check("bulk gradient vs finite difference", samples, 1e-6, || {
        let q = random_q(&mut rng);
        let q = q * (1.0 / q.norm());
        bulk_gradient_error(&q, &random_material(&mut rng))
    }));
    out.push(check("corotation preserves |Q|", samples, 1e-13, || {
        let q = random_q(&mut rng);
        let (_, sig) = sym_antisym(&random_mat(&mut rng));
        let s = corotation(&sig, &q).expect("antisymmetric input");
        s.ddot(&q).abs() / (q.norm_sq() * sig.norm())
    }));
    out.push(check("Ericksen stress symmetry", samples, 1e-14, || {
        let g = [random_q(&mut rng), random_q(&mut rng), random_q(&mut rng)];
        let t = ericksen_stress(&g);
        (t - t.transpose()).amax() / t.amax().max(1e-300)
    }));
    out.push(check("bulk energy frame invariance", samples, 1e-12, || {
        let q = random_q(&mut rng);
        let mc = random_material(&mut rng);
        let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = Rotation3::from_scaled_axis(axis * 3.0).into_inner();
        let rotated = QTensor::from_mat(&(r * q.to_mat() * r.transpose()));
        let f = bulk_energy(&q, &mc);
        (bulk_energy(&rotated, &mc) - f).abs() / f.abs().max(q.norm_sq())
    }));
    out.push(check("matrix round trip", samples, 1e-15, || {
        let q = random_q(&mut rng);
        (QTensor::from_mat(&q.to_mat()) - q).norm() / q.norm()
    }));
    out
}
