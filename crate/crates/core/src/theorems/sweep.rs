use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Tally;
use crate::softfp::{Format, Fpn};

/// Trials drawn from one random stream.
pub(crate) const CHUNK: u64 = 10_000;

/// Every FPN of `fmt` whose binade lies in `lo..=hi`, both signs, plus zero.
/// Subnormal binades hold fewer numbers; binades below `λ` hold none.
pub(crate) fn fpns_in_window(fmt: Format, lo: i64, hi: i64) -> Vec<Fpn> {
    let p = fmt.p() as i64;
    let mut out = vec![Fpn::zero(fmt)];
    for b in lo..=hi {
        let (ms, e) = if b >= fmt.min_normal_exp() {
            ((1u128 << (p - 1))..(1u128 << p), b - p + 1)
        } else if b >= fmt.e_min_q() as i64 {
            let k = b - fmt.e_min_q() as i64;
            ((1u128 << k)..(1u128 << (k + 1)), fmt.e_min_q() as i64)
        } else {
            continue;
        };
        for m in ms {
            for neg in [false, true] {
                out.push(Fpn::from_parts(fmt, neg, m, e).expect("window inside the format"));
            }
        }
    }
    out
}

/// Closed-form size of [`fpns_in_window`].
pub(crate) fn window_count(fmt: Format, lo: i64, hi: i64) -> u64 {
    let p = fmt.p() as i64;
    let per_binade = |b: i64| -> u64 {
        let k = (b - fmt.e_min_q() as i64).min(p - 1);
        if k < 0 {
            0
        } else {
            1u64 << k
        }
    };
    1 + 2 * (lo..=hi).map(per_binade).sum::<u64>()
}

/// Normal positive FPNs of binade `b`.
pub(crate) fn binade_values(fmt: Format, b: i64) -> Vec<Fpn> {
    let p = fmt.p() as i64;
    ((1u128 << (p - 1))..(1u128 << p))
        .map(|m| Fpn::from_parts(fmt, false, m, b - p + 1).expect("normal binade"))
        .collect()
}

/// Maps `f` over `items` in parallel and merges the tallies in item order.
pub(crate) fn par_tally<T: Sync>(items: &[T], f: impl Fn(usize, &T) -> Tally + Sync) -> Tally {
    let parts: Vec<Tally> = items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    parts.into_iter().fold(Tally::default(), Tally::merge)
}

/// Runs `trials` draws split into fixed-size chunks, each with its own
/// stream of a generator seeded by `seed`, so results do not depend on the
/// thread count. `f(rng, chunk, first_trial, count)`.
pub(crate) fn par_random(
    seed: u64,
    trials: u64,
    f: impl Fn(&mut ChaCha8Rng, u64, u64, u64) -> Tally + Sync,
) -> Tally {
    let chunks: Vec<u64> = (0..trials.div_ceil(CHUNK)).collect();
    par_tally(&chunks, |_, &c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c);
        let first = c * CHUNK;
        f(&mut rng, c, first, CHUNK.min(trials - first))
    })
}

/// A uniformly random normal FPN of a uniformly chosen binade in
/// `lo..=hi`, with a random sign.
pub(crate) fn random_fpn(rng: &mut ChaCha8Rng, fmt: Format, lo: i64, hi: i64) -> Fpn {
    let p = fmt.p();
    let b = rng.random_range(lo..=hi);
    let top = 1u128 << (p - 1);
    let m = top | (rng.random::<u128>() & (top - 1));
    Fpn::from_parts(fmt, rng.random(), m, b - p as i64 + 1).expect("binade inside the format")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn window_enumeration_matches_closed_form() {
        let roomy = Format::new(6, -100, 100).unwrap();
        let tight = Format::new(6, -12, 100).unwrap();
        for (fmt, lo, hi) in [(roomy, -3, 4), (tight, -16, -2), (tight, -12, -12), (tight, -20, -13)] {
            let v = fpns_in_window(fmt, lo, hi);
            assert_eq!(v.len() as u64, window_count(fmt, lo, hi), "{fmt} {lo}..={hi}");
            let distinct: HashSet<_> = v.iter().map(|x| x.to_string()).collect();
            assert_eq!(distinct.len(), v.len());
            assert!(v.iter().all(|x| x.is_zero() || (lo..=hi).contains(&x.binade().unwrap())));
        }
    }

    #[test]
    fn random_chunks_are_thread_independent() {
        let run = || {
            par_random(7, 25_000, |rng, _, _, n| {
                let mut t = Tally::default();
                for _ in 0..n {
                    t.cases += 1;
                    t.seen.insert(rng.random_range(0..1_000_000));
                }
                t
            })
        };
        let a = run();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
        assert_eq!(a.cases, 25_000);
        assert_eq!(a.seen, b.seen);
    }
}
