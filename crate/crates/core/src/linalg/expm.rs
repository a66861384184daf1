//! Dense matrix exponential (Padé scaling and squaring) and its use for
//! propagating a vector to many times at once.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::Inverse;

use crate::{Error, Result, C64};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Maximum column sum.
pub fn one_norm(a: &Array2<C64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled_add(acc: &mut Array2<C64>, a: &Array2<C64>, c: f64) {
    acc.zip_mut_with(a, |x, y| *x += y * c);
}

fn eye_times(n: usize, c: f64) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(c, 0.0))
}

/// `(V − U)⁻¹ (V + U)`.
fn pade_quotient(u: Array2<C64>, v: Array2<C64>) -> Result<Array2<C64>> {
    let q = &v - &u;
    let p = &v + &u;
    Ok(q.inv()?.dot(&p))
}

fn pade_low(a: &Array2<C64>, b: &[f64]) -> Result<Array2<C64>> {
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut even = eye_times(n, b[0]);
    let mut odd = eye_times(n, b[1]);
    let mut power = a2.clone();
    let mut k = 2;
    while k < b.len() {
        scaled_add(&mut even, &power, b[k]);
        scaled_add(&mut odd, &power, b[k + 1]);
        k += 2;
        if k < b.len() {
            power = power.dot(&a2);
        }
    }
    pade_quotient(a.dot(&odd), even)
}

fn pade_13(a: &Array2<C64>) -> Result<Array2<C64>> {
    let b = &B13;
    let n = a.nrows();
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let mut inner_u = a6.mapv(|z| z * b[13]);
    scaled_add(&mut inner_u, &a4, b[11]);
    scaled_add(&mut inner_u, &a2, b[9]);
    let mut u = a6.dot(&inner_u);
    scaled_add(&mut u, &a6, b[7]);
    scaled_add(&mut u, &a4, b[5]);
    scaled_add(&mut u, &a2, b[3]);
    u += &eye_times(n, b[1]);
    let u = a.dot(&u);

    let mut inner_v = a6.mapv(|z| z * b[12]);
    scaled_add(&mut inner_v, &a4, b[10]);
    scaled_add(&mut inner_v, &a2, b[8]);
    let mut v = a6.dot(&inner_v);
    scaled_add(&mut v, &a6, b[6]);
    scaled_add(&mut v, &a4, b[4]);
    scaled_add(&mut v, &a2, b[2]);
    v += &eye_times(n, b[0]);

    pade_quotient(u, v)
}

/// `exp(A)` by Padé approximation of degree 3–13 with scaling and squaring.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let norm = one_norm(a);
    for &(m, theta) in &THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(a, b);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.mapv(|z| z * 2f64.powi(-s));
    let mut r = pade_13(&scaled)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Largest `‖A h‖₁` allowed for the base step of [`propagate_many`].
const BASE_STEP_NORM: f64 = 0.5;

/// `exp(A t_k) x` for every `t_k`, sharing one exponential.
///
/// With `h = max(t)/2^b` and `b` chosen so that `‖A h‖₁ ≤ 1/2`, each time is
/// split as `t_k = m_k h + r_k` with `|r_k| ≤ h/2`. `P = exp(Ah)` is squared
/// `b` times and each vector collects the powers selected by the binary
/// digits of `m_k`; vectors needing the same power move together as one
/// matrix product. The remainder `exp(A r_k)` is applied by a Taylor series,
/// so no time is rounded.
pub fn propagate_many(a: &Array2<C64>, x: &Array1<C64>, times: &[f64]) -> Result<Vec<Array1<C64>>> {
    propagate_many_conserving(a, x, times, None)
}

/// A conserved linear functional `ℓᵀ exp(At) = ℓᵀ`. Round-off drift along it
/// is returned to component `sink`, which must have `ℓ[sink] ≠ 0`.
#[derive(Clone, Debug)]
pub struct Conserved {
    pub left: Array1<C64>,
    pub sink: usize,
}

impl Conserved {
    fn restore(&self, p: &mut Array2<C64>) {
        let mut defect = self.left.dot(&*p);
        defect -= &self.left;
        let w = self.left[self.sink];
        p.row_mut(self.sink).scaled_add(-1.0 / w, &defect);
    }

    fn restore_columns(&self, block: &mut Array2<C64>, x: &Array1<C64>) {
        let target = self.left.dot(x);
        let w = self.left[self.sink];
        for mut col in block.columns_mut() {
            let defect = self.left.dot(&col) - target;
            col[self.sink] -= defect / w;
        }
    }
}

/// As [`propagate_many`], for a generator with a conserved functional
/// (the trace, for a Liouvillian). Every squaring re-imposes it, so
/// round-off cannot accumulate along it over long ladders.
pub fn propagate_many_conserving(
    a: &Array2<C64>,
    x: &Array1<C64>,
    times: &[f64],
    conserved: Option<&Conserved>,
) -> Result<Vec<Array1<C64>>> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidGrid("propagation times must be finite and >= 0".into()));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let mut out: Vec<Array1<C64>> = vec![x.clone(); times.len()];
    if t_max == 0.0 {
        return Ok(out);
    }
    let norm = one_norm(a);
    let bits = ((norm * t_max / BASE_STEP_NORM).log2().ceil()).clamp(0.0, 62.0) as u32;
    let h = t_max / (1u64 << bits) as f64;
    let counts: Vec<u64> = times.iter().map(|t| (t / h).round() as u64).collect();
    let remainders: Vec<f64> = times
        .iter()
        .zip(&counts)
        .map(|(t, &m)| t - m as f64 * h)
        .collect();
    let n = a.nrows();

    // Taylor series for the remainders, all columns at once.
    let mut block = Array2::<C64>::zeros((n, times.len()));
    for k in 0..times.len() {
        block.column_mut(k).assign(x);
    }
    let mut term = block.clone();
    let x_norm = x.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 1..=60 {
        term = a.dot(&term);
        for (k, mut col) in term.columns_mut().into_iter().enumerate() {
            let f = remainders[k] / j as f64;
            col.mapv_inplace(|z| z * f);
        }
        block += &term;
        let size = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if size <= 1e-18 * x_norm {
            break;
        }
    }
    if let Some(c) = conserved {
        c.restore_columns(&mut block, x);
    }
    for (k, v) in out.iter_mut().enumerate() {
        v.assign(&block.column(k));
    }

    let top = counts.iter().copied().max().unwrap_or(0);
    let mut power = expm(&a.mapv(|z| z * h))?;
    if let Some(c) = conserved {
        c.restore(&mut power);
    }
    let mut bit = 0;
    while bit < 64 && (1u64 << bit) <= top {
        let members: Vec<usize> = (0..counts.len())
            .filter(|&k| counts[k] >> bit & 1 == 1)
            .collect();
        if !members.is_empty() {
            let mut chunk = Array2::<C64>::zeros((n, members.len()));
            for (c, &k) in members.iter().enumerate() {
                chunk.column_mut(c).assign(&out[k]);
            }
            let moved = power.dot(&chunk);
            for (c, &k) in members.iter().enumerate() {
                out[k].assign(&moved.column(c));
            }
        }
        bit += 1;
        if bit < 64 && (1u64 << bit) <= top {
            power = power.dot(&power);
            if let Some(c) = conserved {
                c.restore(&mut power);
            }
        }
    }
    Ok(out)
}
