//! Algebraic sponge over the base field of the curve.
//!
//! A Poseidon-style permutation (x^5 S-box, width 5, rate 4, 8 full rounds
//! and 60 partial rounds) with round constants and a Cauchy MDS matrix
//! derived from fixed tags. The capacity lane is initialised from the shape
//! of the input (its length and which entries are points), so inputs of
//! different lengths or kinds never share a starting state.
//!
//! Scalars embed into the base field directly, points contribute their
//! affine `(u, v)` coordinates. The squeezed base-field element is reduced
//! into `F_t`.

use std::sync::LazyLock;

use ff::Field;

use super::field::{Base, Element, Scalar};
use super::hash::blake2b_512;
use super::CryptoError;

const WIDTH: usize = 5;
const RATE: usize = WIDTH - 1;
const FULL_ROUNDS: usize = 8;
const PARTIAL_ROUNDS: usize = 60;
const ROUNDS: usize = FULL_ROUNDS + PARTIAL_ROUNDS;

type Matrix = [[Base; WIDTH]; WIDTH];

struct Params {
    round_constants: Vec<[Base; WIDTH]>,
    mds: Matrix,
    fast: FastPartial,
}

/// Partial rounds rewritten so each one costs a sparse matrix instead of
/// the dense MDS. The dense part of `M` only touches lanes `1..WIDTH`,
/// which commute with a lane-0 S-box, so it is deferred round to round and
/// applied once at the end.
struct FastPartial {
    constants: Vec<[Base; WIDTH]>,
    /// Per round: first row of the sparse factor, then its lane-0 column.
    rows: Vec<[Base; WIDTH]>,
    cols: Vec<[Base; RATE]>,
    deferred: [[Base; RATE]; RATE],
}

fn invert(m: &[[Base; RATE]; RATE]) -> [[Base; RATE]; RATE] {
    let mut a = *m;
    let mut inv = [[Base::ZERO; RATE]; RATE];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Base::ONE;
    }
    for col in 0..RATE {
        let pivot = (col..RATE).find(|&r| !bool::from(a[r][col].is_zero())).expect("invertible block");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let f = a[col][col].invert().unwrap();
        for c in 0..RATE {
            a[col][c] *= f;
            inv[col][c] *= f;
        }
        for r in 0..RATE {
            if r != col {
                let g = a[r][col];
                for c in 0..RATE {
                    let (x, y) = (g * a[col][c], g * inv[col][c]);
                    a[r][c] -= x;
                    inv[r][c] -= y;
                }
            }
        }
    }
    inv
}

fn mul_vec(m: &[[Base; RATE]; RATE], v: &[Base]) -> [Base; RATE] {
    let mut out = [Base::ZERO; RATE];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| *a * b).sum();
    }
    out
}

fn fast_partial(mds: &Matrix, round_constants: &[[Base; WIDTH]]) -> FastPartial {
    let mut deferred = [[Base::ZERO; RATE]; RATE];
    for (i, row) in deferred.iter_mut().enumerate() {
        row[i] = Base::ONE;
    }
    let (mut constants, mut rows, mut cols) = (Vec::new(), Vec::new(), Vec::new());
    for rc in round_constants {
        // constants seen through the deferred block: P^-1 c
        let mut c = [rc[0]; WIDTH];
        c[1..].copy_from_slice(&mul_vec(&invert(&deferred), &rc[1..]));
        constants.push(c);

        // N = M * diag(1, P), split as diag(1, N_hat) * sparse
        let mut n = *mds;
        for (i, row) in n.iter_mut().enumerate() {
            for j in 0..RATE {
                row[j + 1] = (0..RATE).map(|k| mds[i][k + 1] * deferred[k][j]).sum();
            }
        }
        let mut n_hat = [[Base::ZERO; RATE]; RATE];
        for (i, row) in n_hat.iter_mut().enumerate() {
            row.copy_from_slice(&n[i + 1][1..]);
        }
        let w: Vec<Base> = (1..WIDTH).map(|i| n[i][0]).collect();
        rows.push(n[0]);
        cols.push(mul_vec(&invert(&n_hat), &w));
        deferred = n_hat;
    }
    FastPartial { constants, rows, cols, deferred }
}

static PARAMS: LazyLock<Params> = LazyLock::new(|| {
    let round_constants: Vec<[Base; WIDTH]> = (0..ROUNDS)
        .map(|r| {
            let mut row = [Base::ZERO; WIDTH];
            for (i, c) in row.iter_mut().enumerate() {
                let mut msg = b"citadel/sponge/round-constant".to_vec();
                msg.extend_from_slice(&(r as u32).to_le_bytes());
                msg.extend_from_slice(&(i as u32).to_le_bytes());
                *c = Base::from_bytes_wide(&blake2b_512(&msg));
            }
            row
        })
        .collect();

    // Cauchy matrix 1 / (x_i + y_j) with x_i = i, y_j = WIDTH + j: every
    // square submatrix is invertible.
    let mut mds = [[Base::ZERO; WIDTH]; WIDTH];
    for (i, row) in mds.iter_mut().enumerate() {
        for (j, m) in row.iter_mut().enumerate() {
            let denom = Base::from((i + WIDTH + j) as u64);
            *m = denom.invert().unwrap();
        }
    }
    let half = FULL_ROUNDS / 2;
    let fast = fast_partial(&mds, &round_constants[half..half + PARTIAL_ROUNDS]);
    Params { round_constants, mds, fast }
});

#[inline]
fn sbox(x: &mut Base) {
    let x2 = x.square();
    let x4 = x2.square();
    *x *= x4;
}

fn full_round(state: &mut [Base; WIDTH], rc: &[Base; WIDTH], mds: &Matrix) {
    for (s, c) in state.iter_mut().zip(rc) {
        *s += c;
        sbox(s);
    }
    let mut next = [Base::ZERO; WIDTH];
    for (n, row) in next.iter_mut().zip(mds) {
        *n = row.iter().zip(state.iter()).map(|(m, s)| *m * s).sum();
    }
    *state = next;
}

fn permute(state: &mut [Base; WIDTH]) {
    let params = &*PARAMS;
    let fast = &params.fast;
    let half = FULL_ROUNDS / 2;
    for rc in &params.round_constants[..half] {
        full_round(state, rc, &params.mds);
    }
    for ((c, row), col) in fast.constants.iter().zip(&fast.rows).zip(&fast.cols) {
        for (s, c) in state.iter_mut().zip(c) {
            *s += c;
        }
        sbox(&mut state[0]);
        let x0 = state[0];
        state[0] = row.iter().zip(state.iter()).map(|(m, s)| *m * s).sum();
        for (s, w) in state[1..].iter_mut().zip(col) {
            *s += *w * x0;
        }
    }
    let tail = mul_vec(&fast.deferred, &state[1..]);
    state[1..].copy_from_slice(&tail);
    for rc in &params.round_constants[half + PARTIAL_ROUNDS..] {
        full_round(state, rc, &params.mds);
    }
}

fn shape_tag(inputs: &[Element]) -> Base {
    let mut msg = b"citadel/sponge/shape".to_vec();
    msg.extend_from_slice(&(inputs.len() as u64).to_le_bytes());
    msg.extend(inputs.iter().map(Element::tag));
    Base::from_bytes_wide(&blake2b_512(&msg))
}

fn lanes(inputs: &[Element]) -> Vec<Base> {
    let mut out = Vec::with_capacity(inputs.len() * 2);
    for e in inputs {
        match e {
            Element::Scalar(s) => out.push(s.to_base()),
            Element::Point(p) => {
                let (u, v) = p.coordinates();
                out.push(u);
                out.push(v);
            }
        }
    }
    out
}

fn reduce_to_scalar(x: Base) -> Scalar {
    let mut wide = [0u8; 64];
    wide[..32].copy_from_slice(&x.to_bytes());
    Scalar::from_bytes_wide(&wide)
}

/// Hashes a non-empty list of scalars and points to a scalar.
pub fn hash_sponge(inputs: &[Element]) -> Result<Scalar, CryptoError> {
    if inputs.is_empty() {
        return Err(CryptoError::EmptyHashInput);
    }
    let mut state = [Base::ZERO; WIDTH];
    state[0] = shape_tag(inputs);
    for chunk in lanes(inputs).chunks(RATE) {
        for (s, x) in state[1..].iter_mut().zip(chunk) {
            *s += x;
        }
        permute(&mut state);
    }
    Ok(reduce_to_scalar(state[1]))
}

/// [`hash_sponge`] for call sites whose input list is never empty.
pub(crate) fn sponge(inputs: &[Element]) -> Scalar {
    hash_sponge(inputs).expect("sponge input is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::generator_g;

    fn s(v: u64) -> Element {
        Element::from(v)
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(hash_sponge(&[]), Err(CryptoError::EmptyHashInput)));
    }

    #[test]
    fn deterministic() {
        let a = hash_sponge(&[s(1), s(2), s(3)]).unwrap();
        let b = hash_sponge(&[s(1), s(2), s(3)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn length_separated() {
        let x = s(77);
        assert_ne!(hash_sponge(&[x]).unwrap(), hash_sponge(&[x, s(0)]).unwrap());
        // an all-zero tail is padding-ambiguous without the shape tag
        assert_ne!(hash_sponge(&[s(0)]).unwrap(), hash_sponge(&[s(0), s(0)]).unwrap());
    }

    #[test]
    fn order_sensitive() {
        assert_ne!(hash_sponge(&[s(3), s(4)]).unwrap(), hash_sponge(&[s(4), s(3)]).unwrap());
    }

    #[test]
    fn point_differs_from_its_coordinates_as_scalars() {
        // (u, v) of the generator reduced into scalars hash differently
        // because the shape tag records which inputs are points.
        let g = generator_g();
        let (u, v) = g.coordinates();
        let as_scalar = |b: Base| {
            let mut wide = [0u8; 64];
            wide[..32].copy_from_slice(&b.to_bytes());
            Element::Scalar(Scalar::from_bytes_wide(&wide))
        };
        assert_ne!(hash_sponge(&[Element::Point(g)]).unwrap(), hash_sponge(&[as_scalar(u), as_scalar(v)]).unwrap());
    }

    #[test]
    fn multi_block_inputs_absorb_every_lane() {
        let base: Vec<Element> = (0..9).map(s).collect();
        let h = hash_sponge(&base).unwrap();
        for i in 0..base.len() {
            let mut m = base.clone();
            m[i] = s(1000 + i as u64);
            assert_ne!(hash_sponge(&m).unwrap(), h, "lane {i} ignored");
        }
    }

    /// Textbook round structure, used to check the sparse rewrite.
    fn permute_dense(state: &mut [Base; WIDTH]) {
        let params = &*PARAMS;
        let half = FULL_ROUNDS / 2;
        for (r, rc) in params.round_constants.iter().enumerate() {
            for (s, c) in state.iter_mut().zip(rc.iter()) {
                *s += c;
            }
            if r < half || r >= half + PARTIAL_ROUNDS {
                state.iter_mut().for_each(sbox);
            } else {
                sbox(&mut state[0]);
            }
            let mut next = [Base::ZERO; WIDTH];
            for (i, n) in next.iter_mut().enumerate() {
                for (j, s) in state.iter().enumerate() {
                    *n += params.mds[i][j] * s;
                }
            }
            *state = next;
        }
    }

    #[test]
    fn sparse_partial_rounds_match_dense() {
        let mut state = [Base::ZERO; WIDTH];
        for trial in 0..8u64 {
            for (i, s) in state.iter_mut().enumerate() {
                *s += Base::from(trial * 31 + i as u64 + 1).square();
            }
            let mut a = state;
            let mut b = state;
            permute(&mut a);
            permute_dense(&mut b);
            assert_eq!(a, b);
            state = a;
        }
    }

    #[test]
    fn mds_is_invertible() {
        // determinant over the base field via Gaussian elimination
        let mut m = PARAMS.mds;
        for col in 0..WIDTH {
            let pivot = (col..WIDTH).find(|&r| !bool::from(m[r][col].is_zero())).expect("singular");
            m.swap(col, pivot);
            let inv = m[col][col].invert().unwrap();
            let pivot_row = m[col];
            for row in m.iter_mut().skip(col + 1) {
                let f = row[col] * inv;
                for (x, p) in row.iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
}
