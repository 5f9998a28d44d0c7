//! Instances of the decisional problem behind the index's pseudorandomness:
//! given `I_ij = g^(b_j a_i)`, tell `F_ij = g^(b_j a_i / c_j)` from uniform.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::crypto::{
    generator_exp, group_exp, perm_inverse, reduce_to_scalar, scalar_inv, scalar_mul, CryptoError, PermSecretKey,
    PrimeOrderGroup, Scalar,
};

pub struct DAceInstance<G: PrimeOrderGroup> {
    pub m: usize,
    pub n: usize,
    pub a: Vec<Scalar<G>>,
    /// Chain values reduced into the scalar field, one per column.
    pub b: Vec<Scalar<G>>,
    pub c: Vec<Scalar<G>>,
    /// `m x n`, row-major.
    pub i: Vec<Vec<G::Element>>,
    pub f: Vec<Vec<G::Element>>,
    pub v: u8,
}

/// Holds the group and permutation key shared across instances.
pub struct DAceGenerator<G: PrimeOrderGroup> {
    pub group: G,
    pub sk: PermSecretKey,
}

impl<G: PrimeOrderGroup> DAceGenerator<G> {
    pub fn new(group: G, sk: PermSecretKey) -> Self {
        DAceGenerator { group, sk }
    }

    /// `v = 0` builds the structured case, `v = 1` the uniform one. A chain
    /// value reducing to zero is reported so the caller can regenerate.
    pub fn generate(&self, m: usize, n: usize, v: u8, seed: u64) -> Result<DAceInstance<G>, CryptoError> {
        assert!(m >= 1 && n >= 1 && v <= 1, "m, n >= 1 and v in {{0, 1}}");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        self.generate_with(m, n, v, &mut rng)
    }

    pub fn generate_with<R: RngCore + CryptoRng>(
        &self,
        m: usize,
        n: usize,
        v: u8,
        rng: &mut R,
    ) -> Result<DAceInstance<G>, CryptoError> {
        let g = &self.group;
        let a: Vec<Scalar<G>> = (0..m).map(|_| Scalar::random(g, rng)).collect();
        let c: Vec<Scalar<G>> = (0..n).map(|_| Scalar::random(g, rng)).collect();
        let mut chain = self.sk.public().sample_nontrivial(rng);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            chain = perm_inverse(&self.sk, &chain)?;
            b.push(reduce_to_scalar(g, &chain)?);
        }
        let mut i = Vec::with_capacity(m);
        let mut f = Vec::with_capacity(m);
        for a_i in &a {
            let mut row_i = Vec::with_capacity(n);
            let mut row_f = Vec::with_capacity(n);
            for (b_j, c_j) in b.iter().zip(&c) {
                let ba = scalar_mul(g, b_j, a_i);
                row_i.push(generator_exp(g, &ba));
                row_f.push(if v == 0 {
                    generator_exp(g, &scalar_mul(g, &ba, &scalar_inv(g, c_j)))
                } else {
                    g.random_element(rng)
                });
            }
            i.push(row_i);
            f.push(row_f);
        }
        Ok(DAceInstance { m, n, a, b, c, i, f, v })
    }
}

/// True iff `F_ij^(c_j) = I_ij` for every cell.
pub fn dace_verify_real<G: PrimeOrderGroup>(group: &G, inst: &DAceInstance<G>) -> bool {
    inst.i.iter().zip(&inst.f).all(|(row_i, row_f)| {
        row_i.iter().zip(row_f).zip(&inst.c).all(|((i, f), c)| group_exp(group, f, c) == *i)
    })
}
