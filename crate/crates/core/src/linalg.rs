//! Dense complex matrix helpers: matrix exponential, norms, block restriction.

use ndarray::{Array2, Axis};

use crate::torus::C64;

pub type CMatrix = Array2<C64>;
pub type RMatrix = Array2<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

pub fn from_real(a: &Array2<f64>) -> CMatrix {
    a.mapv(|x| C64::new(x, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

/// Sub-matrix on rows and columns `idx` (in the given order).
pub fn restrict(a: &CMatrix, idx: &[usize]) -> CMatrix {
    a.select(Axis(0), idx).select(Axis(1), idx)
}

/// Frobenius norm of `a − 1`.
pub fn identity_deviation(a: &CMatrix) -> f64 {
    frobenius(&(a - &identity(a.nrows())))
}

fn one_norm(a: &CMatrix) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot vanishes.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "solve requires a square matrix");
    assert_eq!(n, b.nrows(), "right-hand side row count");
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let (piv, piv_abs) = (col..n)
            .map(|r| (r, lu[[r, col]].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs == 0.0 || !piv_abs.is_finite() {
            return None;
        }
        if piv != col {
            for j in 0..n {
                lu.swap([col, j], [piv, j]);
            }
            for j in 0..x.ncols() {
                x.swap([col, j], [piv, j]);
            }
        }
        let p = lu[[col, col]];
        for r in (col + 1)..n {
            let f = lu[[r, col]] / p;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let v = lu[[col, j]];
                lu[[r, j]] -= f * v;
            }
            for j in 0..x.ncols() {
                let v = x[[col, j]];
                x[[r, j]] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let p = lu[[col, col]];
        for j in 0..x.ncols() {
            let mut s = x[[col, j]];
            for k in (col + 1)..n {
                s -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = s / p;
        }
    }
    Some(x)
}

// Higham (2005) Padé degrees and their backward-error thresholds.
const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

fn pade_coeffs(degree: usize) -> &'static [f64] {
    match degree {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17_297_280.0,
            8_648_640.0,
            1_995_840.0,
            277_200.0,
            25_200.0,
            1512.0,
            56.0,
            1.0,
        ],
        9 => &[
            17_643_225_600.0,
            8_821_612_800.0,
            2_075_673_600.0,
            302_702_400.0,
            30_270_240.0,
            2_162_160.0,
            110_880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64_764_752_532_480_000.0,
            32_382_376_266_240_000.0,
            7_771_770_303_897_600.0,
            1_187_353_796_428_800.0,
            129_060_195_264_000.0,
            10_559_470_521_600.0,
            670_442_572_800.0,
            33_522_128_640.0,
            1_323_241_920.0,
            40_840_800.0,
            960_960.0,
            16_380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("unsupported Padé degree {degree}"),
    }
}

fn scaled(a: &CMatrix, s: f64) -> CMatrix {
    a.mapv(|z| z * s)
}

fn pade_low(a: &CMatrix, degree: usize) -> (CMatrix, CMatrix) {
    let b = pade_coeffs(degree);
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut pow = identity(n);
    let mut u_inner = scaled(&pow, b[1]);
    let mut v = scaled(&pow, b[0]);
    for j in (2..=degree).step_by(2) {
        pow = pow.dot(&a2);
        v = v + scaled(&pow, b[j]);
        if j + 1 <= degree {
            u_inner = u_inner + scaled(&pow, b[j + 1]);
        }
    }
    (a.dot(&u_inner), v)
}

fn pade_13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let b = pade_coeffs(13);
    let n = a.nrows();
    let id = identity(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let w1 = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let w2 = w1.dot(&a6)
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(&id, b[1]);
    let u = a.dot(&w2);
    let z1 = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = z1.dot(&a6)
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&id, b[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with a degree-adaptive Padé
/// approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return CMatrix::zeros((0, 0));
    }
    if n == 1 {
        return Array2::from_elem((1, 1), a[[0, 0]].exp());
    }
    let norm = one_norm(a);
    if norm == 0.0 {
        return identity(n);
    }
    let finish = |(u, v): (CMatrix, CMatrix), squarings: u32| {
        let num = &v + &u;
        let den = &v - &u;
        let mut r = solve(&den, &num).expect("Padé denominator is nonsingular within theta");
        for _ in 0..squarings {
            r = r.dot(&r);
        }
        r
    };
    for &(degree, theta) in &THETA {
        if norm <= theta {
            return finish(pade_low(a, degree), 0);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a_s = scaled(a, 0.5f64.powi(s as i32));
    finish(pade_13(&a_s), s)
}

/// Per-step rule for ordered exponentials along a path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// `exp(A(t_mid) h)`, second order.
    #[default]
    Midpoint,
    /// Two-point Gauss–Legendre Magnus expansion, fourth order.
    Magnus4,
}

/// Gauss nodes `½ ∓ √3/6` on the unit step.
pub const GAUSS_NODES: [f64; 2] = [0.5 - 0.288_675_134_594_812_9, 0.5 + 0.288_675_134_594_812_9];

/// Fourth-order Magnus exponent from `a1 = A(t₁)h`, `a2 = A(t₂)h` at the Gauss nodes.
pub fn magnus4(a1: &CMatrix, a2: &CMatrix) -> CMatrix {
    let mut omega = (a1 + a2).mapv(|z| z * 0.5);
    omega.scaled_add(C64::new(3f64.sqrt() / 12.0, 0.0), &commutator(a2, a1));
    omega
}

/// Time-ordered product `E_N ⋯ E_2 E_1` of `exp(G_j)`, first generator acting first.
pub fn ordered_exponential<I>(n: usize, generators: I) -> CMatrix
where
    I: IntoIterator<Item = CMatrix>,
{
    generators
        .into_iter()
        .fold(identity(n), |acc, g| expm(&g).dot(&acc))
}
