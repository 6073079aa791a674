//! Matrix exponential of small dense matrices.

pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn matvec(a: &Mat3, x: &[f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for i in 0..3 {
        y[i] = (0..3).map(|k| a[i][k] * x[k]).sum();
    }
    y
}

fn scale(a: &Mat3, s: f64) -> Mat3 {
    a.map(|r| r.map(|x| x * s))
}

fn add(a: &Mat3, b: &Mat3, sb: f64) -> Mat3 {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] += sb * b[i][j];
        }
    }
    c
}

fn norm1(a: &Mat3) -> f64 {
    (0..3)
        .map(|j| (0..3).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `p X = q` by Gaussian elimination with partial pivoting.
fn solve(p: &Mat3, q: &Mat3) -> Mat3 {
    let mut a = *p;
    let mut b = *q;
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..3 {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    let mut x = [[0.0; 3]; 3];
    for k in 0..3 {
        for row in (0..3).rev() {
            let s: f64 = (row + 1..3).map(|j| a[row][j] * x[j][k]).sum();
            x[row][k] = (b[row][k] - s) / a[row][row];
        }
    }
    x
}

// Diagonal Pade [8/8] coefficients c_j = (16-j)! 8! / (16! j! (8-j)!).
const PADE8: [f64; 9] = {
    let mut c = [1.0; 9];
    let mut j = 1;
    while j < 9 {
        c[j] = c[j - 1] * (9 - j) as f64 / ((17 - j) * j) as f64;
        j += 1;
    }
    c
};

/// `exp(a)` by scaling and squaring with a diagonal [8/8] Pade approximant.
/// The matrix is scaled to 1-norm at most 1/2, where the approximant's
/// relative truncation error is below 1e-20.
pub fn expm(a: &Mat3) -> Mat3 {
    let nrm = norm1(a);
    if nrm == 0.0 {
        return IDENTITY;
    }
    let s = if nrm > 0.5 { (nrm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = scale(a, 0.5f64.powi(s));
    let mut num = scale(&IDENTITY, PADE8[0]);
    let mut den = scale(&IDENTITY, PADE8[0]);
    let mut pow = IDENTITY;
    for (j, c) in PADE8.iter().enumerate().skip(1) {
        pow = matmul(&pow, &x);
        num = add(&num, &pow, *c);
        den = add(&den, &pow, if j % 2 == 0 { *c } else { -*c });
    }
    let mut r = solve(&den, &num);
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}
