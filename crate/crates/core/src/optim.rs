//! Derivative-free minimizers: golden-section search with bracket expansion
//! for the 1-D moment-matching steps, and a Nelder-Mead simplex for likelihoods.

const GOLDEN: f64 = 1.618_033_988_749_895;
const INV_GOLDEN: f64 = 0.618_033_988_749_895;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub fx: f64,
    pub evals: usize,
}

struct Tracked<F> {
    f: F,
    best: (f64, f64),
    evals: usize,
}

impl<F: FnMut(f64) -> f64> Tracked<F> {
    fn eval(&mut self, x: f64) -> f64 {
        let v = (self.f)(x);
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.evals += 1;
        if v < self.best.1 || (v == self.best.1 && x < self.best.0) {
            self.best = (x, v);
        }
        v
    }
}

/// Minimizes `f` on `[lo, hi]`, starting at `start` with a first step of `step`.
///
/// The bracket is grown geometrically downhill (clamped at the bounds) and then
/// shrunk by golden-section search until narrower than `tol`. The best point
/// seen is returned, so a minimum at a bound is reported at that bound.
pub fn golden_section<F: FnMut(f64) -> f64>(
    f: F,
    start: f64,
    step: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> ScalarMin {
    assert!(lo <= hi, "golden_section: empty interval");
    let mut t = Tracked {
        f,
        best: (f64::NAN, f64::INFINITY),
        evals: 0,
    };
    let clamp = |x: f64| x.clamp(lo, hi);
    let step = step.abs().max(tol).min((hi - lo).max(tol));

    let a = clamp(start);
    let fa = t.eval(a);
    let (left, right);
    let up = clamp(a + step);
    let fu = if up != a { t.eval(up) } else { f64::INFINITY };
    let down = clamp(a - step);
    let (mut prev, mut cur, mut fcur) = if fu < fa {
        (a, up, fu)
    } else {
        let fd = if down != a { t.eval(down) } else { f64::INFINITY };
        if fd < fa {
            (a, down, fd)
        } else {
            // a is already bracketed
            left = down.min(up);
            right = down.max(up);
            return refine(&mut t, left, right, tol);
        }
    };
    // expand downhill
    loop {
        let next = clamp(cur + GOLDEN * (cur - prev));
        if next == cur {
            left = prev.min(cur);
            right = prev.max(cur);
            break;
        }
        let fnext = t.eval(next);
        if fnext > fcur {
            left = prev.min(next);
            right = prev.max(next);
            break;
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
    refine(&mut t, left, right, tol)
}

fn refine<F: FnMut(f64) -> f64>(t: &mut Tracked<F>, mut a: f64, mut b: f64, tol: f64) -> ScalarMin {
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut fc = t.eval(c);
    let mut fd = t.eval(d);
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = t.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLDEN * (b - a);
            fd = t.eval(d);
        }
    }
    // endpoints matter when the minimum sits on a bound
    t.eval(a);
    t.eval(b);
    ScalarMin {
        x: t.best.0,
        fx: t.best.1,
        evals: t.evals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ...and the simplex fits in a box of this half-width.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 5000,
            f_tol: 1e-10,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization. Non-finite objective values count as `+inf`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = if worst.is_finite() { worst - best } else { f64::INFINITY };
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol && size <= opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-alpha * gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(-alpha * rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            let fx = eval(&x, &mut evals);
            *vertex = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        fx,
        evals,
        converged,
    }
}
