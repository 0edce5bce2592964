//! Generated point sets: ordered node lists `x_k = frac(k * zeta)` for
//! `k = 1..n`, with exact integer arithmetic in the rational case.
//!
//! Nodes form an ordered list with duplicates retained, because the
//! least-squares matrix has exactly `n` rows indexed by `k`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::search::is_prime_u64;

/// Continuous generator `zeta` with components in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousGenerator {
    zeta: Vec<f64>,
}

impl ContinuousGenerator {
    pub fn new(zeta: Vec<f64>) -> Result<Self> {
        if zeta.is_empty() {
            return Err(Error::InvalidParameter("generator must have d >= 1 components".into()));
        }
        for (j, z) in zeta.iter().enumerate() {
            if !(*z >= 0.0 && *z < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "zeta_{} = {z} outside [0, 1)",
                    j + 1
                )));
            }
        }
        Ok(Self { zeta })
    }

    pub fn components(&self) -> &[f64] {
        &self.zeta
    }

    pub fn d(&self) -> usize {
        self.zeta.len()
    }
}

/// Rational generator `z / N` with prime `N` and `1 <= z_j <= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalGenerator {
    z: Vec<u64>,
    modulus: u64,
}

impl RationalGenerator {
    pub fn new(z: Vec<u64>, modulus: u64) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::InvalidParameter("generator must have d >= 1 components".into()));
        }
        if !is_prime_u64(modulus) {
            return Err(Error::NotPrime(modulus));
        }
        for (j, zj) in z.iter().enumerate() {
            if *zj == 0 || *zj > modulus {
                return Err(Error::InvalidParameter(format!(
                    "z_{} = {zj} outside {{1..{modulus}}}",
                    j + 1
                )));
            }
        }
        Ok(Self { z, modulus })
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn d(&self) -> usize {
        self.z.len()
    }
}

/// Where a node list came from; drives exact-phase assembly and CSV fields.
#[derive(Debug, Clone)]
pub enum Provenance {
    Continuous { zeta: Vec<f64> },
    /// `wrapped` flags n > N, where the node sequence starts repeating.
    Rational { z: Vec<u64>, modulus: u64, wrapped: bool },
}

/// Ordered list of `n` nodes in `[0, 1)^d`, indexed `k = 1..n`.
#[derive(Debug, Clone)]
pub struct NodeList {
    nodes: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl NodeList {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn d(&self) -> usize {
        self.nodes.first().map_or(0, Vec::len)
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn node(&self, k0: usize) -> &[f64] {
        &self.nodes[k0]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Exact numerators `k * z_j mod N` of node `k` (1-based), when rational.
    pub fn rational_numerators(&self, k: u64) -> Option<Vec<u64>> {
        match &self.provenance {
            Provenance::Rational { z, modulus, .. } => Some(
                z.iter()
                    .map(|&zj| ((k as u128 * zj as u128) % *modulus as u128) as u64)
                    .collect(),
            ),
            Provenance::Continuous { .. } => None,
        }
    }

    /// CSV: header `k,x_1,...,x_d`; rational provenance appends the exact
    /// fields `num_1,...,num_d,N`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let d = self.d();
        let mut header = String::from("k");
        for j in 1..=d {
            header.push_str(&format!(",x_{j}"));
        }
        let rational = matches!(self.provenance, Provenance::Rational { .. });
        if rational {
            for j in 1..=d {
                header.push_str(&format!(",num_{j}"));
            }
            header.push_str(",N");
        }
        writeln!(out, "{header}")?;
        for (idx, x) in self.nodes.iter().enumerate() {
            let k = (idx + 1) as u64;
            let mut row = k.to_string();
            for xj in x {
                row.push_str(&format!(",{xj:.16e}"));
            }
            if let Provenance::Rational { modulus, .. } = &self.provenance {
                for num in self.rational_numerators(k).unwrap() {
                    row.push_str(&format!(",{num}"));
                }
                row.push_str(&format!(",{modulus}"));
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }
}

/// Fractional part of `k * zeta` with a compensated product so the node error
/// stays below 1e-14 even for k up to 10^6: the fused multiply-add recovers
/// the rounding error of `k * zeta` exactly.
fn frac_mul(k: u64, zeta: f64) -> f64 {
    let kf = k as f64;
    let p = kf * zeta;
    let e = kf.mul_add(zeta, -p);
    let mut f = p.fract() + e;
    if f >= 1.0 {
        f -= 1.0;
    } else if f < 0.0 {
        f += 1.0;
    }
    f
}

/// The generated set `{ frac(k * zeta) : k = 1..n }` as an ordered list.
pub fn build_generated_set(gen: &ContinuousGenerator, n: usize) -> Result<NodeList> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nodes = (1..=n as u64)
        .map(|k| gen.components().iter().map(|&z| frac_mul(k, z)).collect())
        .collect();
    Ok(NodeList {
        nodes,
        provenance: Provenance::Continuous { zeta: gen.components().to_vec() },
    })
}

/// The rational generated set `{ frac(k * z / N) : k = 1..n }`, exact in
/// integer arithmetic.
pub fn build_rational_generated_set(gen: &RationalGenerator, n: usize) -> Result<NodeList> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let modulus = gen.modulus();
    let nodes = (1..=n as u64)
        .map(|k| {
            gen.z()
                .iter()
                .map(|&zj| {
                    let num = (k as u128 * zj as u128) % modulus as u128;
                    num as f64 / modulus as f64
                })
                .collect()
        })
        .collect();
    Ok(NodeList {
        nodes,
        provenance: Provenance::Rational {
            z: gen.z().to_vec(),
            modulus,
            wrapped: n as u64 > modulus,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_fractional_parts() {
        let g = ContinuousGenerator::new(vec![0.5]).unwrap();
        let nodes = build_generated_set(&g, 3).unwrap();
        assert_eq!(nodes.nodes(), &[vec![0.5], vec![0.0], vec![0.5]]);

        let g = ContinuousGenerator::new(vec![0.3, 0.9]).unwrap();
        let nodes = build_generated_set(&g, 1).unwrap();
        assert_eq!(nodes.nodes(), &[vec![0.3, 0.9]]);
    }

    #[test]
    fn irrational_generator_stays_in_unit_cube() {
        // The generator from the two-dimensional illustration.
        let g = ContinuousGenerator::new(vec![2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0]).unwrap();
        let nodes = build_generated_set(&g, 20).unwrap();
        assert_eq!(nodes.n(), 20);
        for x in nodes.nodes() {
            assert!(x.iter().all(|&c| (0.0..1.0).contains(&c)));
        }
        // k=1 is the generator itself.
        assert_eq!(nodes.node(0), g.components());
    }

    #[test]
    fn frac_mul_accuracy_large_k() {
        // Against 128-bit fixed-point reference for k up to 10^6.
        let zeta = std::f64::consts::FRAC_1_SQRT_2;
        for k in [1u64, 997, 65536, 999_983, 1_000_000] {
            let got = frac_mul(k, zeta);
            // Reference: represent zeta exactly as a dyadic rational
            // (f64 mantissa), multiply in integers, reduce mod 2^s.
            let bits = zeta.to_bits();
            let exp = ((bits >> 52) & 0x7ff) as i64 - 1075;
            let mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
            // k * mant * 2^exp mod 1, with -exp > 52 so the product fits i128
            let prod = k as u128 * mant as u128;
            let shift = (-exp) as u32;
            let frac_bits = prod & ((1u128 << shift) - 1);
            let reference = frac_bits as f64 / (1u128 << shift) as f64;
            assert!(
                (got - reference).abs() < 1e-14,
                "k={k}: got {got}, reference {reference}"
            );
        }
    }

    #[test]
    fn rational_five_point_lattice() {
        let g = RationalGenerator::new(vec![1], 5).unwrap();
        let nodes = build_rational_generated_set(&g, 5).unwrap();
        let xs: Vec<f64> = nodes.nodes().iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![0.2, 0.4, 0.6, 0.8, 0.0]);
        match nodes.provenance() {
            Provenance::Rational { wrapped, .. } => assert!(!wrapped),
            _ => panic!("expected rational provenance"),
        }
    }

    #[test]
    fn rational_nodes_exact_sevenths() {
        let g = RationalGenerator::new(vec![3, 4], 7).unwrap();
        let nodes = build_rational_generated_set(&g, 7).unwrap();
        for (idx, x) in nodes.nodes().iter().enumerate() {
            let k = (idx + 1) as u64;
            for (j, &zj) in [3u64, 4].iter().enumerate() {
                let num = (k * zj) % 7;
                assert_eq!(x[j], num as f64 / 7.0, "k={k}, j={j}");
            }
        }
    }

    #[test]
    fn continuous_matches_rational_for_equal_generator() {
        let n_mod = 9973u64;
        let z = vec![123u64, 4567];
        let rg = RationalGenerator::new(z.clone(), n_mod).unwrap();
        let cg = ContinuousGenerator::new(
            z.iter().map(|&zj| zj as f64 / n_mod as f64).collect(),
        )
        .unwrap();
        let rn = build_rational_generated_set(&rg, 500).unwrap();
        let cn = build_generated_set(&cg, 500).unwrap();
        for (a, b) in rn.nodes().iter().zip(cn.nodes()) {
            for (x, y) in a.iter().zip(b) {
                let diff = (x - y).abs();
                let wrapped = (1.0 - diff).abs(); // 0 vs 1-ulp wraparound
                assert!(diff < 1e-12 || wrapped < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn translation_structure() {
        let g = ContinuousGenerator::new(vec![0.377, 0.911]).unwrap();
        let nodes = build_generated_set(&g, 50).unwrap();
        for k in 0..nodes.n() - 1 {
            for j in 0..2 {
                let mut diff = nodes.node(k + 1)[j] - nodes.node(k)[j] - g.components()[j];
                while diff < -0.5 {
                    diff += 1.0;
                }
                while diff > 0.5 {
                    diff -= 1.0;
                }
                assert!(diff.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn group_closure_for_full_rational_cycle() {
        // For prime N and the full k range with the origin adjoined, the
        // node multiset is closed under addition mod 1.
        for n_mod in [5u64, 13, 31] {
            let g = RationalGenerator::new(vec![2 % n_mod + 1, n_mod - 1], n_mod).unwrap();
            let nodes = build_rational_generated_set(&g, n_mod as usize).unwrap();
            let mut set: Vec<Vec<u64>> = (1..=n_mod)
                .map(|k| nodes.rational_numerators(k).unwrap())
                .collect();
            set.push(vec![0, 0]);
            set.sort();
            set.dedup();
            for a in &set {
                for b in &set {
                    let sum: Vec<u64> =
                        a.iter().zip(b).map(|(x, y)| (x + y) % n_mod).collect();
                    assert!(set.binary_search(&sum).is_ok());
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_generators() {
        assert!(ContinuousGenerator::new(vec![1.0]).is_err());
        assert!(ContinuousGenerator::new(vec![-0.1]).is_err());
        assert!(RationalGenerator::new(vec![1], 6).is_err());
        assert!(RationalGenerator::new(vec![0], 5).is_err());
        assert!(RationalGenerator::new(vec![6], 5).is_err());
    }
}
