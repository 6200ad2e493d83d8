#![allow(dead_code)]

use adkl::chem::{parse_smiles, MolGraph};
use adkl::num::{Activation, Matrix, MlpParams};

pub fn corpus64() -> Vec<&'static str> {
    include_str!("../data/corpus64.smi").split_whitespace().collect()
}

pub fn corpus64_graphs() -> Vec<MolGraph> {
    corpus64().iter().map(|s| parse_smiles(s).unwrap()).collect()
}

/// Gauss-Jordan inverse with partial pivoting, plus ln|det|.
pub fn dense_inverse(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut log_det = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let piv = m[c][c];
        log_det += piv.abs().ln();
        for j in 0..n {
            m[c][j] /= piv;
            inv[c][j] /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for j in 0..n {
                    m[r][j] -= f * m[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    (inv, log_det)
}

pub fn rbf(a: &[f64], b: &[f64], l: f64, s: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    s * (-d / (2.0 * l * l)).exp()
}

/// Plain loop forward pass; weights are stored input-major.
pub fn mlp_forward(p: &MlpParams, x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    for layer in &p.layers {
        let w: &Matrix = &layer.weight;
        let mut next = layer.bias.clone();
        for (o, v) in next.iter_mut().enumerate() {
            for (i, c) in cur.iter().enumerate() {
                *v += c * w[(i, o)];
            }
            *v = match layer.activation {
                Activation::Tanh => v.tanh(),
                Activation::Relu => v.max(0.0),
                Activation::Identity => *v,
            };
        }
        cur = next;
    }
    cur
}

pub fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| vdot(r, v)).collect()
}

/// Largest component-wise relative error between two gradients, with the
/// denominator floored at 1e-2.
pub fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(fd)
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(1e-2))
        .fold(0.0, f64::max)
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            v[i] = x[i] + h;
            let up = f(&v);
            v[i] = x[i] - h;
            let down = f(&v);
            v[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub const METHANE_XYZ: &str = "5
gdb 1\t157.7118\t157.70997\t157.70699\t0.\t13.21\t-0.3877\t0.1171\t0.5048\t35.3641\t0.044749\t-40.47893\t-40.476062\t-40.475117\t-40.498597\t6.469\t
C\t-0.0126981359\t 1.0858041578\t 0.0080009958\t-0.535689
H\t 0.002150416\t-0.0060313176\t 0.0019761204\t 0.133921
H\t 1.0117308433\t 1.4637511618\t 0.0002765748\t 0.133922
H\t-0.540815069\t 1.4475266138\t-0.8766437152\t 0.133923
H\t-0.5238136345\t 1.4379326443\t 0.9063972942\t 0.133923
1341.307\t1341.3284\t1341.365\t1562.6731\t1562.7453\t3038.3205\t3151.6034\t3151.6788\t3151.7078
C\tC\t
InChI=1S/CH4/h1H4\tInChI=1S/CH4/h1H4
";
