//! Kronecker-structured filters: a 36-tap filter `w = w1 ⊗ w2` built from
//! two 6-tap sub-filters, and the lifted covariances the alternating
//! updates work with.
//!
//! ```text
//! cargo run --example kronecker
//! ```

use num_complex::Complex64 as C64;
use online_iva::numerics::{congruence, kron, lift_left, lift_right, quad_form, CMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn main() -> online_iva::Result<()> {
    let (m1, m2) = (6, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w1 = random_vec(&mut rng, m1);
    let w2 = random_vec(&mut rng, m2);
    let w = kron(&w1, &w2);
    println!("{} free coefficients describe a {}-tap filter", m1 + m2, w.len());

    // A Hermitian positive definite covariance V = A Aᴴ + I.
    let a = CMat::from_fn(m1 * m2, m1 * m2, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut v = a.matmul(&a.adjoint())?;
    for k in 0..m1 * m2 {
        v[(k, k)] += 1.0;
    }

    // With one factor fixed, the quadratic form in the other is governed by
    // a small congruence of V.
    let v1 = congruence(&lift_left(&w2, m1), &v)?;
    let v2 = congruence(&lift_right(&w1, m2), &v)?;
    println!("wᴴ V w               = {:.6}", quad_form(&v, &w));
    println!("w1ᴴ (Δ1ᴴ V Δ1) w1    = {:.6}  ({m1}x{m1} matrix)", quad_form(&v1, &w1));
    println!("w2ᴴ (Δ2ᴴ V Δ2) w2    = {:.6}  ({m2}x{m2} matrix)", quad_form(&v2, &w2));
    Ok(())
}
