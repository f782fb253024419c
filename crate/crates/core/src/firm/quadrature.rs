// 8-point Gauss-Legendre rule on [-1, 1]
const NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Nodes and weights of the same rule mapped to `[a, b]`.
pub(crate) fn gauss_legendre_nodes(a: f64, b: f64) -> [(f64, f64); 8] {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a).max(0.0));
    let mut out = [(0.0, 0.0); 8];
    for (i, (x, w)) in NODES.iter().zip(WEIGHTS).enumerate() {
        out[2 * i] = (mid - half * x, w * half);
        out[2 * i + 1] = (mid + half * x, w * half);
    }
    out
}
