//! Brute-force check of the shortest-word guarantee of the Rz search.
//!
//! The oracle enumerates every word over {H, S, Sdg, T, Tdg} level by level,
//! merging words whose unitaries coincide up to a global phase, and reports
//! the first level that contains a unitary within tolerance of the target.

use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use qnoise::compile::approx_rz;

type M = [C64; 4];

fn mul(a: &M, b: &M) -> M {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn letters() -> [M; 5] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let phase = |t: f64| C64::from_polar(1.0, t);
    let q = std::f64::consts::FRAC_PI_4;
    [
        [h, h, h, -h],
        [o, z, z, phase(2.0 * q)],
        [o, z, z, phase(-2.0 * q)],
        [o, z, z, phase(q)],
        [o, z, z, phase(-q)],
    ]
}

/// Max-abs entry distance after aligning the global phase via `Tr[b† a]`.
fn distance(a: &M, b: &M) -> f64 {
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum();
    let ph = if overlap.norm() < 1e-300 { C64::new(1.0, 0.0) } else { overlap / overlap.norm() };
    a.iter().zip(b).map(|(x, y)| (x - ph * y).norm()).fold(0.0, f64::max)
}

/// Phase-normalised, rounded entries used to merge equal unitaries.
fn key(m: &M) -> [i64; 8] {
    let pivot = m.iter().copied().find(|x| x.norm() > 1e-6).unwrap();
    let ph = pivot.conj() / pivot.norm();
    let mut k = [0i64; 8];
    for (i, x) in m.iter().enumerate() {
        let y = x * ph;
        k[2 * i] = (y.re * 1e8).round() as i64;
        k[2 * i + 1] = (y.im * 1e8).round() as i64;
    }
    k
}

fn rz(theta: f64) -> M {
    let z = C64::new(0.0, 0.0);
    [C64::from_polar(1.0, -theta / 2.0), z, z, C64::from_polar(1.0, theta / 2.0)]
}

/// Shortest word length reaching `eps`, searching up to `max_len` letters.
fn oracle_min_length(theta: f64, eps: f64, max_len: usize) -> Option<usize> {
    let target = rz(theta);
    let id = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    if distance(&id, &target) <= eps {
        return Some(0);
    }
    let gens = letters();
    let mut seen: HashSet<[i64; 8]> = HashSet::from([key(&id)]);
    let mut frontier = vec![id];
    for len in 1..=max_len {
        let mut next = Vec::new();
        for u in &frontier {
            for g in &gens {
                let v = mul(g, u);
                if seen.insert(key(&v)) {
                    if distance(&v, &target) <= eps {
                        return Some(len);
                    }
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    None
}

#[test]
fn search_returns_the_shortest_word() {
    let cases = [
        (0.3, 0.3),
        (1.0, 0.25),
        (-2.0, 0.2),
        (std::f64::consts::PI / 8.0, 0.15),
        (2.5, 0.15),
        (0.7, 0.1),
        (-0.4, 0.1),
        (std::f64::consts::PI / 30.0, 0.08),
    ];
    for (theta, eps) in cases {
        let found = approx_rz(theta, eps).unwrap();
        let expected = oracle_min_length(theta, eps, 16)
            .unwrap_or_else(|| panic!("oracle found nothing for θ={theta}, ε={eps}"));
        assert_eq!(found.len(), expected, "θ={theta}, ε={eps}");

        // Recompute the returned word's error independently (time order).
        let gens = letters();
        let mut u = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        for l in &found.letters {
            u = mul(&gens[*l as usize], &u);
        }
        let err = distance(&u, &rz(theta));
        assert!((err - found.error).abs() < 1e-9, "θ={theta}: {err} vs {}", found.error);
        assert!(err <= eps);
    }
}
