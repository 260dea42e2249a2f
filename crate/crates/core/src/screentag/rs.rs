//! Reed–Solomon over GF(256) with generator roots α⁰ … α^(ec−1), the QR
//! convention. Codewords are stored highest-degree coefficient first.

use thiserror::Error;

use super::gf256;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RsError {
    #[error("uncorrectable codeword")]
    Uncorrectable,
    #[error("invalid code parameters: {0}")]
    BadParameters(&'static str),
}

/// Generator polynomial ∏ (x − αⁱ), highest degree first, leading 1 included.
pub fn generator(ec_count: usize) -> Vec<u8> {
    let mut g = vec![1u8];
    for i in 0..ec_count {
        let root = gf256::exp(i as i32);
        let mut next = vec![0u8; g.len() + 1];
        for (j, &c) in g.iter().enumerate() {
            next[j] ^= c;
            next[j + 1] ^= gf256::mul(c, root);
        }
        g = next;
    }
    g
}

/// EC bytes: remainder of `data(x)·x^ec` divided by the generator.
pub fn rs_encode(data: &[u8], ec_count: usize) -> Vec<u8> {
    assert!(
        !data.is_empty() && ec_count >= 2 && data.len() + ec_count <= 255,
        "invalid RS parameters"
    );
    let g = generator(ec_count);
    let mut rem = vec![0u8; ec_count];
    for &d in data {
        let factor = d ^ rem[0];
        rem.rotate_left(1);
        rem[ec_count - 1] = 0;
        if factor != 0 {
            for (r, &gc) in rem.iter_mut().zip(&g[1..]) {
                *r ^= gf256::mul(gc, factor);
            }
        }
    }
    rem
}

/// Evaluates a highest-degree-first polynomial at `x`.
fn eval_be(poly: &[u8], x: u8) -> u8 {
    poly.iter().fold(0, |acc, &c| gf256::mul(acc, x) ^ c)
}

/// Evaluates a lowest-degree-first polynomial at `x`.
fn eval_le(poly: &[u8], x: u8) -> u8 {
    poly.iter().rev().fold(0, |acc, &c| gf256::mul(acc, x) ^ c)
}

fn syndromes(codeword: &[u8], ec_count: usize) -> Vec<u8> {
    (0..ec_count)
        .map(|j| eval_be(codeword, gf256::exp(j as i32)))
        .collect()
}

/// Corrects up to `ec_count / 2` byte errors and returns the data part.
///
/// Syndromes, Berlekamp–Massey for the error locator, Chien search for the
/// positions and Forney for the magnitudes; the corrected word is checked
/// against fresh syndromes before it is returned.
pub fn rs_decode(codeword: &[u8], ec_count: usize) -> Result<Vec<u8>, RsError> {
    if codeword.len() <= ec_count || codeword.len() > 255 {
        return Err(RsError::BadParameters(
            "codeword length must exceed ec_count and be at most 255",
        ));
    }
    let n = codeword.len();
    let synd = syndromes(codeword, ec_count);
    if synd.iter().all(|&s| s == 0) {
        return Ok(codeword[..n - ec_count].to_vec());
    }

    // Berlekamp–Massey, polynomials lowest degree first
    let mut lambda = vec![1u8];
    let mut prev = vec![1u8];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut b = 1u8;
    for k in 0..ec_count {
        let mut delta = synd[k];
        for i in 1..=l.min(lambda.len() - 1) {
            delta ^= gf256::mul(lambda[i], synd[k - i]);
        }
        if delta == 0 {
            m += 1;
            continue;
        }
        let coef = gf256::div(delta, b);
        let mut next = lambda.clone();
        if next.len() < prev.len() + m {
            next.resize(prev.len() + m, 0);
        }
        for (i, &p) in prev.iter().enumerate() {
            next[i + m] ^= gf256::mul(coef, p);
        }
        if 2 * l <= k {
            prev = lambda;
            l = k + 1 - l;
            b = delta;
            m = 1;
        } else {
            m += 1;
        }
        lambda = next;
    }
    while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
        lambda.pop();
    }
    let errors = lambda.len() - 1;
    if errors == 0 || errors != l || 2 * errors > ec_count {
        return Err(RsError::Uncorrectable);
    }

    // Chien search: position p holds the coefficient of x^(n-1-p)
    let mut positions = Vec::with_capacity(errors);
    for p in 0..n {
        let power = (n - 1 - p) as i32;
        if eval_le(&lambda, gf256::exp(-power)) == 0 {
            positions.push(p);
        }
    }
    if positions.len() != errors {
        return Err(RsError::Uncorrectable);
    }

    // Ω(x) = S(x)·Λ(x) mod x^ec
    let mut omega = vec![0u8; ec_count];
    for (i, &s) in synd.iter().enumerate() {
        for (j, &lc) in lambda.iter().enumerate() {
            if i + j < ec_count {
                omega[i + j] ^= gf256::mul(s, lc);
            }
        }
    }
    // formal derivative: odd-degree terms survive in characteristic 2
    let deriv: Vec<u8> = lambda
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
        .collect();

    let mut fixed = codeword.to_vec();
    for &p in &positions {
        let power = (n - 1 - p) as i32;
        let x = gf256::exp(power);
        let x_inv = gf256::exp(-power);
        let denom = eval_le(&deriv, x_inv);
        if denom == 0 {
            return Err(RsError::Uncorrectable);
        }
        let magnitude = gf256::mul(x, gf256::div(eval_le(&omega, x_inv), denom));
        fixed[p] ^= magnitude;
    }
    if syndromes(&fixed, ec_count).iter().any(|&s| s != 0) {
        return Err(RsError::Uncorrectable);
    }
    Ok(fixed[..n - ec_count].to_vec())
}
