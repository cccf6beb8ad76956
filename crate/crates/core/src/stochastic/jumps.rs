//! Quantum-jump unravelling of the driven, decaying, dephasing two-level
//! system.
//!
//! Between jumps the unnormalized state evolves under
//! `H_eff = H − (iΓ/2)|e⟩⟨e|`, whose norm is the probability of no emission
//! so far. An emission time is drawn by solving `|ψ(t)|² = r` for uniform
//! `r`; the state then resets to `|g⟩`. Pure dephasing at rate `γ_d` is a
//! second, state-independent channel applying `σz` at Poisson rate `γ_d/2`,
//! which damps the coherence at `γ_d` as in the Bloch equations.
//!
//! The survival curve from `|g⟩` is tabulated once; emission times are
//! bracketed on the table, started from a linear-interpolation guess and
//! refined by bisection to `1e-9·T₁`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::seed::derive_seed;
use super::stream::PhotonStream;
use crate::error::{Error, Result};
use crate::params::TwoLevelParams;

type State = [Complex64; 2];
type Op = [[Complex64; 2]; 2];

const MAX_TABLE: usize = 65_536;
const TABLE_FLOOR: f64 = 1e-15;
const TIME_TOLERANCE: f64 = 1e-9;

fn apply(u: &Op, psi: &State) -> State {
    [u[0][0] * psi[0] + u[0][1] * psi[1], u[1][0] * psi[0] + u[1][1] * psi[1]]
}

fn norm_sq(psi: &State) -> f64 {
    psi[0].norm_sqr() + psi[1].norm_sqr()
}

/// No-jump propagator `exp(−i H_eff t)` in the basis `(g, e)`.
struct NoJump {
    h: Op,
}

impl NoJump {
    fn new(p: &TwoLevelParams) -> Self {
        let half_d = 0.5 * p.detuning;
        let half_om = Complex64::new(0.5 * p.rabi, 0.0);
        NoJump {
            h: [
                [Complex64::new(half_d, 0.0), half_om],
                [half_om, Complex64::new(-half_d, -0.5 * p.gamma())],
            ],
        }
    }

    fn at(&self, t: f64) -> Op {
        // exp(A) for 2×2 A = a₀I + B, tr B = 0, B² = q² I
        let mi = Complex64::new(0.0, -t);
        let a = [
            [mi * self.h[0][0], mi * self.h[0][1]],
            [mi * self.h[1][0], mi * self.h[1][1]],
        ];
        let a0 = 0.5 * (a[0][0] + a[1][1]);
        let b00 = a[0][0] - a0;
        let q2 = b00 * b00 + a[0][1] * a[1][0];
        let q = q2.sqrt();
        let (ch, shc) = if q.norm() < 1e-6 {
            (1.0 + q2 / 2.0 + q2 * q2 / 24.0, 1.0 + q2 / 6.0 + q2 * q2 / 120.0)
        } else {
            (q.cosh(), q.sinh() / q)
        };
        let e = a0.exp();
        [
            [e * (ch + shc * b00), e * shc * a[0][1]],
            [e * shc * a[1][0], e * (ch - shc * b00)],
        ]
    }
}

struct Simulator {
    no_jump: NoJump,
    dt: f64,
    tol: f64,
    /// ψ(k·dt) from the ground state and its squared norm.
    table: Vec<State>,
    survival: Vec<f64>,
    /// `exp(−i H_eff dt 2^j)`.
    doubling: Vec<Op>,
}

impl Simulator {
    fn new(p: &TwoLevelParams) -> Self {
        let no_jump = NoJump::new(p);
        let mut scale = p.t1.min(p.t2);
        if p.rabi > 0.0 {
            scale = scale.min(1.0 / p.rabi);
        }
        if p.detuning != 0.0 {
            scale = scale.min(1.0 / p.detuning.abs());
        }
        let dt = scale / 16.0;
        let step = no_jump.at(dt);
        let mut table = vec![[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]];
        let mut survival = vec![1.0];
        while table.len() < MAX_TABLE && survival[survival.len() - 1] > TABLE_FLOOR {
            let next = apply(&step, &table[table.len() - 1]);
            survival.push(norm_sq(&next));
            table.push(next);
        }
        let doubling = (0..48).map(|j| no_jump.at(dt * 2f64.powi(j))).collect();
        Simulator {
            no_jump,
            dt,
            tol: TIME_TOLERANCE * p.t1,
            table,
            survival,
            doubling,
        }
    }

    /// Time after which `|U(t) ψ|²` first drops to `r`, if that happens
    /// within `limit`. `ψ` is normalized.
    fn first_passage(&self, psi: Option<&State>, r: f64, limit: f64) -> Option<f64> {
        let (mut t, mut base) = match psi {
            None => {
                let k = self.survival.partition_point(|&s| s > r);
                if k == 0 {
                    return Some(0.0);
                }
                if k < self.survival.len() {
                    let lo = (k - 1) as f64 * self.dt;
                    if lo >= limit {
                        return None;
                    }
                    let guess = {
                        let (s0, s1) = (self.survival[k - 1], self.survival[k]);
                        (s0 - r) / (s0 - s1) * self.dt
                    };
                    let hit = lo + self.refine(&self.table[k - 1], r, 0.0, self.dt, guess);
                    return (hit <= limit).then_some(hit);
                }
                let last = self.table.len() - 1;
                (last as f64 * self.dt, self.table[last])
            }
            Some(s) => (0.0, *s),
        };
        // march with doubling steps until the survival falls below r
        let mut j = 0;
        loop {
            if t >= limit {
                return None;
            }
            let span = self.dt * 2f64.powi(j as i32);
            let next = apply(&self.doubling[j], &base);
            let n = norm_sq(&next);
            if n <= r {
                let n0 = norm_sq(&base);
                let guess = (n0 - r) / (n0 - n) * span;
                let hit = t + self.refine(&base, r, 0.0, span, guess);
                return (hit <= limit).then_some(hit);
            }
            t += span;
            base = next;
            if j + 1 < self.doubling.len() {
                j += 1;
            }
        }
    }

    /// Bisection on `[lo, hi]` for `|U(s) base|² = r`, starting from `guess`.
    fn refine(&self, base: &State, r: f64, mut lo: f64, mut hi: f64, guess: f64) -> f64 {
        let above = |s: f64| norm_sq(&apply(&self.no_jump.at(s), base)) > r;
        if guess > lo && guess < hi {
            if above(guess) {
                lo = guess;
            } else {
                hi = guess;
            }
        }
        while hi - lo > self.tol {
            let mid = 0.5 * (lo + hi);
            if above(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn evolve(&self, psi: Option<&State>, t: f64) -> State {
        let start = psi
            .copied()
            .unwrap_or([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        apply(&self.no_jump.at(t), &start)
    }
}

/// Emission times of one quantum-jump trajectory started in the ground
/// state at `t = 0`. Deterministic for a given seed. An undriven emitter
/// returns an empty stream.
pub fn simulate_stream(params: &TwoLevelParams, duration: f64, seed: u64) -> Result<PhotonStream> {
    params.validate()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid("duration", format!("must be positive, got {duration}")));
    }
    let empty = PhotonStream::empty(duration, "A")?.with_seed(seed);
    if params.rabi == 0.0 {
        return Ok(empty);
    }
    let sim = Simulator::new(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = 0.5 * params.pure_dephasing();
    let dephasing = (kappa > 0.0).then(|| Exp::new(kappa).expect("positive rate"));

    let mut times = Vec::new();
    let mut t = 0.0;
    let mut state: Option<State> = None;
    loop {
        let next_flip = match &dephasing {
            Some(d) => t + d.sample(&mut rng),
            None => f64::INFINITY,
        };
        let r = 1.0 - rng.random::<f64>();
        let horizon = next_flip.min(duration) - t;
        match sim.first_passage(state.as_ref(), r, horizon) {
            Some(wait) => {
                t += wait;
                if t >= duration {
                    break;
                }
                if times.last().is_some_and(|&last: &f64| t <= last) {
                    t = f64::from_bits(times[times.len() - 1].to_bits() + 1);
                }
                times.push(t);
                state = None;
            }
            None => {
                if next_flip >= duration {
                    break;
                }
                let mut psi = sim.evolve(state.as_ref(), next_flip - t);
                let n = norm_sq(&psi).sqrt();
                psi = [psi[0] / n, -psi[1] / n];
                state = Some(psi);
                t = next_flip;
            }
        }
    }
    Ok(PhotonStream {
        timestamps: times,
        ..empty
    })
}

/// `count` consecutive, independent segments of `segment_duration` each,
/// simulated in parallel; segment `k` uses `derive_seed(seed, k)`.
pub fn simulate_segments(
    params: &TwoLevelParams,
    segment_duration: f64,
    seed: u64,
    count: usize,
) -> Result<Vec<PhotonStream>> {
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(count.max(1));
    let mut out: Vec<Option<Result<PhotonStream>>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in out.chunks_mut(count.div_ceil(threads).max(1)).enumerate() {
            let base = w * count.div_ceil(threads).max(1);
            scope.spawn(move || {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let k = (base + i) as u64;
                    *slot = Some(simulate_stream(params, segment_duration, derive_seed(seed, k)));
                }
            });
        }
    });
    out.into_iter().map(|s| s.expect("every segment simulated")).collect()
}
